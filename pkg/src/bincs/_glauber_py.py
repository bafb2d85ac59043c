"""Pure-Python single-site update loop; fallback for ``_glauber_core``.

Works on Python lists inside the loop (numpy scalar indexing is several times
slower) and writes the state back on exit.
"""
from math import exp


def glauber_chunk(x, r, var_adj, coords, uniforms, lam, alpha, inv_sigma2, rss, weight, trace=None):
    xs = x.tolist()
    rs = r.tolist()
    rows = var_adj.tolist()
    nu = var_adj.shape[1]
    out = [] if trace is not None else None
    for j, u in zip(coords.tolist(), uniforms.tolist()):
        xl = xs[j]
        row = rows[j]
        acc = 0.0
        for f in row:
            acc += rs[f]
        h = lam + alpha * inv_sigma2 * (acc + nu * alpha * (xl - 0.5))
        if h >= 0:
            p = 1.0 / (1.0 + exp(-h))
        else:
            e = exp(h)
            p = e / (1.0 + e)
        new = 1 if u < p else 0
        if new != xl:
            delta = alpha * (new - xl)
            for f in row:
                ro = rs[f]
                rn = ro - delta
                rs[f] = rn
                rss += rn * rn - ro * ro
            xs[j] = new
            weight += new - xl
        if out is not None:
            out.append(new)
    x[:] = xs
    r[:] = rs
    if trace is not None:
        trace[:] = out
    return rss, weight


def gather_sum(v, adj, out):
    out[:] = v[adj].sum(axis=1)
