import math

import numpy as np
import pytest

from bincs import _glauber_py, _kernels, channel, glauber, oracle, sensing
from bincs.errors import ParameterError

RHO = 0.25
SIGMA2 = 0.5


def tiny_instance(seed, sigma2=SIGMA2, rho=RHO):
    A = sensing.sample_gallager(sensing.LdpcParams.from_sizes(8, 4, 2), seed=seed)
    rng = np.random.default_rng(seed + 1000)
    x = (rng.random(8) < rho).astype(np.int8)
    y = A.matvec(x) + math.sqrt(sigma2) * rng.standard_normal(4)
    return oracle.TinyInstance(A, y, sigma2, glauber.prior_log_odds(rho))


def test_prior_log_odds():
    assert glauber.prior_log_odds(0.5) == 0.0
    lam = glauber.prior_log_odds(100 / 2 ** 14)
    assert lam == pytest.approx(math.log(100 / (2 ** 14 - 100)), abs=1e-14)
    assert lam == pytest.approx(-5.095, abs=0.005)
    for rho in (0.01, 0.3, 0.77):
        assert glauber.prior_log_odds(rho) + glauber.prior_log_odds(1 - rho) == pytest.approx(0.0, abs=1e-14)
    for rho in (0.0, 1.0):
        with pytest.raises(ParameterError):
            glauber.prior_log_odds(rho)


def test_logistic_extremes():
    assert glauber.logistic(0.0) == 0.5
    assert glauber.logistic(1000.0) == 1.0
    assert glauber.logistic(-1000.0) == 0.0
    assert np.isfinite(glauber.logistic(np.array([-1e308, 1e308]))).all()


@pytest.mark.parametrize("alpha", [1.0, 0.7])
def test_flip_probability_ratio_form_exhaustive(alpha):
    inst = tiny_instance(4)
    A, y = inst.A, inst.y
    for x in oracle.all_states(8):
        st = glauber.init_state(A, y, x, alpha)
        for l in range(8):
            p = glauber.flip_probability(st, A, y, l, SIGMA2, inst.lam, alpha)
            q = glauber.flip_probability_ratio(x, A, y, l, SIGMA2, inst.lam, alpha)
            assert abs(p - q) < 1e-12


def test_soft_output_matches_flip_probability():
    inst = tiny_instance(6)
    x = np.array([1, 0, 0, 1, 0, 1, 0, 0], dtype=np.int8)
    st = glauber.init_state(inst.A, inst.y, x)
    p1 = glauber.soft_output(st, inst.A, SIGMA2, inst.lam)
    ref = [glauber.flip_probability(st, inst.A, inst.y, l, SIGMA2, inst.lam) for l in range(8)]
    np.testing.assert_allclose(p1, ref, atol=1e-12)


def test_flip_probability_high_temperature_limit():
    inst = tiny_instance(1)
    st = glauber.init_state(inst.A, inst.y)
    p = glauber.flip_probability(st, inst.A, inst.y, 3, 1e12, inst.lam)
    assert p == pytest.approx(RHO, abs=1e-9)


def test_flip_probability_noiseless_consistent():
    inst = tiny_instance(2)
    x = np.array([0, 1, 0, 0, 1, 0, 0, 0], dtype=np.int8)
    y = inst.A.matvec(x)
    st = glauber.init_state(inst.A, y, x)
    assert glauber.flip_probability(st, inst.A, y, 1, 1e-4, inst.lam) > 1 - 1e-12
    assert glauber.flip_probability(st, inst.A, y, 0, 1e-4, inst.lam) < 1e-12


def _transition_pairs(inst):
    X = oracle.all_states(8)
    post = oracle.exact_posterior(inst)
    for c, x in enumerate(X):
        st = glauber.init_state(inst.A, inst.y, x)
        for l in range(8):
            c2 = c ^ (1 << l)
            if c2 < c:
                continue
            p1 = glauber.flip_probability(st, inst.A, inst.y, l, inst.sigma2, inst.lam)
            # from c, updating l moves to c2 with prob p(new value)/M
            fwd = (p1 if x[l] == 0 else 1 - p1) / 8
            st2 = glauber.init_state(inst.A, inst.y, X[c2])
            q1 = glauber.flip_probability(st2, inst.A, inst.y, l, inst.sigma2, inst.lam)
            bwd = (q1 if X[c2][l] == 0 else 1 - q1) / 8
            yield post[c] * fwd, post[c2] * bwd


@pytest.mark.parametrize("seed", [0, 7])
def test_detailed_balance(seed):
    inst = tiny_instance(seed)
    for a, b in _transition_pairs(inst):
        assert abs(a - b) <= 1e-10 * max(a, b, 1e-300)


def _chain_codes(inst, steps, seed):
    """State code after every step of one long chain from zero."""
    rng = np.random.default_rng(seed)
    coords = rng.integers(0, 8, size=steps)
    u = rng.random(steps)
    st = glauber.init_state(inst.A, inst.y)
    trace = np.empty(steps, dtype=np.int8)
    glauber.advance(st, inst.A, coords, u, inst.sigma2, inst.lam, trace=trace)
    codes = np.zeros(steps, dtype=np.int64)
    idx = np.arange(steps)
    for bit in range(8):
        hit = np.where(coords == bit, idx, -1)
        last = np.maximum.accumulate(hit)
        val = np.where(last >= 0, trace[np.maximum(last, 0)], 0).astype(np.int64)
        codes |= val << bit
    return codes, st


def test_stationary_law():
    inst = tiny_instance(3)
    codes, st = _chain_codes(inst, 10 ** 6, 99)
    assert oracle.state_codes(st.x)[0] == codes[-1]
    law = oracle.empirical_law(codes[1000:], 256)
    post = oracle.exact_posterior(inst)
    assert oracle.tv_distance(law, post) < 0.02
    marg = law @ oracle.all_states(8)
    np.testing.assert_allclose(marg, oracle.exact_marginals(inst, post), atol=0.02)


def test_unchanged_coordinate_keeps_state_bitwise():
    inst = tiny_instance(5)
    st = glauber.init_state(inst.A, inst.y, np.array([1, 0, 0, 0, 0, 0, 0, 1], dtype=np.int8))
    r0, rss0 = st.residual.copy(), st.rss
    # u = 1 never sets to one, so coordinate 2 stays 0
    glauber.advance(st, inst.A, [2], [1.0 - 1e-16], SIGMA2, inst.lam)
    assert np.array_equal(st.residual, r0) and st.rss == rss0 and st.step == 1


def test_step_matches_recompute(small_matrix):
    x = channel.sample_bernoulli_signal(256, 0.05, seed=1)
    y = small_matrix.matvec(x) + 0.3 * np.random.default_rng(2).standard_normal(32)
    cfg = glauber.GlauberConfig(1, 0.09, glauber.prior_log_odds(0.05))
    st = glauber.init_state(small_matrix, y)
    rng = np.random.default_rng(0)
    for _ in range(2000):
        glauber.step(st, small_matrix, y, cfg, rng)
        r = y - small_matrix.matvec(st.x)
        assert np.max(np.abs(r - st.residual)) < 1e-9
        assert st.rss == pytest.approx(float(r @ r), abs=1e-9)
        assert st.weight == st.x.sum()
    assert st.step == 2000


def test_run_zero_steps_returns_start(small_matrix):
    x0 = channel.sample_bernoulli_signal(256, 0.1, seed=4)
    y = small_matrix.matvec(x0)
    res = glauber.run(small_matrix, y, glauber.GlauberConfig(0, 1.0, -2.0), x0=x0)
    assert np.array_equal(res.x, x0)
    assert res.x is not x0
    assert res.energy == pytest.approx(-2.0 * x0.sum())


def test_run_verify_and_drift():
    A = sensing.sample_gallager(sensing.LdpcParams.from_sizes(1024, 128, 16), seed=0)
    x = channel.sample_bernoulli_signal(1024, 6 / 1024, seed=1)
    y = A.matvec(x) + 0.5 * np.random.default_rng(3).standard_normal(128)
    T = glauber.default_steps(1024)
    res = glauber.run(A, y, glauber.GlauberConfig(T, 0.25, glauber.prior_log_odds(6 / 1024), seed=0, verify=True))
    assert res.max_drift < 1e-8
    assert np.all((res.p1 >= 0) & (res.p1 <= 1))


def test_default_steps():
    assert glauber.default_steps(2 ** 14) == 2_293_760


def test_trajectory_does_not_change_chain(small_matrix):
    x = channel.sample_bernoulli_signal(256, 0.05, seed=8)
    y = small_matrix.matvec(x) + 0.2 * np.random.default_rng(9).standard_normal(32)
    lam = glauber.prior_log_odds(0.05)
    a = glauber.run(small_matrix, y, glauber.GlauberConfig(3000, 0.04, lam, seed=5))
    b = glauber.run(small_matrix, y, glauber.GlauberConfig(3000, 0.04, lam, seed=5, record_trajectory=True,
                                                           trajectory_stride=100), reference=x)
    assert np.array_equal(a.x, b.x)
    tr = b.trajectory
    assert tr.steps[0] == 0 and tr.steps[-1] == 3000
    assert np.all(np.diff(tr.steps) > 0)
    assert tr.energy[-1] == pytest.approx(b.energy, abs=1e-9)
    assert tr.ber[-1] == pytest.approx(np.count_nonzero(b.x != x) / (256 * 0.05))


def test_energy_rises_at_high_temperature(small_matrix):
    # nu=4, s=32: threshold sigma^2 = 31; a dense signal makes x = 0 a poor start
    sigma2 = 40.0
    assert sigma2 > glauber.mixing_threshold(4, 32)
    x = channel.sample_bernoulli_signal(256, 0.5, seed=1)
    y = small_matrix.matvec(x) + math.sqrt(sigma2) * np.random.default_rng(2).standard_normal(32)
    res = glauber.run(small_matrix, y, glauber.GlauberConfig(20_000, sigma2, 0.0, seed=1,
                                                             record_trajectory=True, trajectory_stride=256))
    e = np.array(res.trajectory.energy)
    assert e[len(e) // 2:].mean() >= e[0]


def test_mixing_bound():
    assert glauber.mixing_threshold(16, 128) == 508.0
    assert glauber.mixing_time_bound(508.0, 16, 128, 2 ** 14, 0.01) is None
    assert glauber.mixing_time_bound(100.0, 16, 128, 2 ** 14, 0.01) is None
    want = math.ceil((math.log(100) + math.log(2 ** 14)) * 2 * 2 ** 14)
    assert glauber.mixing_time_bound(1016.0, 16, 128, 2 ** 14, 0.01) == want
    with pytest.raises(ParameterError):
        glauber.mixing_time_bound(1016.0, 16, 128, 2 ** 14, 1.0)


def test_topk():
    assert list(glauber.topk_list(np.eye(8)[5], 1)) == [5]
    assert list(glauber.topk_list(np.full(8, 0.3), 3)) == [0, 1, 2]
    p = np.random.default_rng(0).random(8)
    assert list(glauber.topk_list(p, 4)) == sorted(range(8), key=lambda i: (-p[i], i))[:4]
    with pytest.raises(ParameterError):
        glauber.topk_list(p, 9)


def test_config_validation():
    with pytest.raises(ParameterError):
        glauber.GlauberConfig(-1, 1.0, 0.0)
    with pytest.raises(ParameterError):
        glauber.GlauberConfig(10, 0.0, 0.0)
    with pytest.raises(ParameterError):
        glauber.GlauberConfig(10, 1.0, -math.inf)
    with pytest.raises(ParameterError):
        glauber.GlauberConfig(10, 1.0, 0.0, anneal_from=0.5)


def test_anneal_schedule():
    cfg = glauber.GlauberConfig(1000, 1.0, 0.0, anneal_from=16.0)
    M = 100  # five annealing sweeps
    s = [cfg.sigma2_at_sweep(i, M) for i in range(10)]
    assert s[0] == 16.0
    assert all(a >= b for a, b in zip(s, s[1:]))
    assert s[5:] == [1.0] * 5
    assert s[1] == pytest.approx(16.0 * (1 / 16) ** 0.2)
    plain = glauber.GlauberConfig(1000, 1.0, 0.0)
    assert plain.sigma2_at_sweep(0, M) == 1.0


@pytest.mark.skipif("cython" not in _kernels.BACKENDS, reason="extension not built")
def test_backends_agree(small_matrix):
    x = channel.sample_bernoulli_signal(256, 0.05, seed=3)
    y = small_matrix.matvec(x) + 0.3 * np.random.default_rng(4).standard_normal(32)
    rng = np.random.default_rng(1)
    coords = rng.integers(0, 256, size=20_000)
    u = rng.random(20_000)
    out = []
    for name in ("python", "cython"):
        chunk, gather = _kernels.BACKENDS[name]
        st = glauber.init_state(small_matrix, y)
        tr = np.empty(20_000, dtype=np.int8)
        rss, w = chunk(st.x, st.residual, small_matrix.var_adj, coords, u, -3.0, 1.0, 1 / 0.09,
                       st.rss, st.weight, tr)
        g = np.empty(32)
        gather(np.ascontiguousarray(st.x, dtype=float), small_matrix.factor_adj, g)
        out.append((st.x.copy(), st.residual.copy(), rss, w, tr, g))
    (xa, ra, sa, wa, ta, ga), (xb, rb, sb, wb, tb, gb) = out
    assert np.array_equal(xa, xb) and np.array_equal(ta, tb)
    assert np.array_equal(ra, rb) and sa == sb and wa == wb
    assert np.array_equal(ga, gb)


def test_python_fallback_is_importable():
    assert callable(_glauber_py.glauber_chunk)
    assert _kernels.BACKEND in _kernels.BACKENDS


def test_env_forces_fallback():
    import os
    import subprocess
    import sys
    code = ("import numpy as np; from bincs import _kernels, channel, glauber, sensing;"
            "A = sensing.sample_gallager(sensing.LdpcParams.from_sizes(256, 32, 4), seed=1);"
            "x = channel.sample_bernoulli_signal(256, 0.05, seed=2); y = A.matvec(x) + 0.3;"
            "r = glauber.run(A, y, glauber.GlauberConfig(5000, 0.09, -3.0, seed=4));"
            "print(_kernels.BACKEND, ''.join(map(str, r.x.tolist())), repr(r.energy))")
    outs = {}
    for flag in ("1", ""):
        env = dict(os.environ, BINCS_PURE_PYTHON=flag)
        outs[flag] = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                    check=True).stdout.split()
    assert outs["1"][0] == "python"
    if "cython" in _kernels.BACKENDS:
        assert outs[""][0] == "cython"
        assert outs["1"][1:] == outs[""][1:]
