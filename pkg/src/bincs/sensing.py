"""Sparse {0,1} sensing matrices drawn from Gallager's regular LDPC ensemble.

A matrix is stored twice, once per side of the bipartite graph:
``var_adj[j]`` lists the ``nu`` factors (rows) touching variable ``j`` and
``factor_adj[f]`` lists the ``s`` variables (columns) touching factor ``f``.
Both lists are sorted. Products with ``A`` and ``A.T`` are gathers over
these tables.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import FormatError, NumericalError, ParameterError

__all__ = [
    "LdpcParams",
    "SparseBinaryMatrix",
    "sample_gallager",
    "binary_entropy",
    "expansion_equation",
    "expansion_alpha_star",
    "heuristic_sparsity",
    "dumps",
    "loads",
    "save",
    "load",
]


@dataclass(frozen=True)
class LdpcParams:
    """Sizes and degrees of a biregular bipartite graph.

    ``num_vars`` is M (signal length), ``num_factors`` is n (measurements),
    ``var_degree`` is nu and ``factor_degree`` is s.
    """

    num_vars: int
    num_factors: int
    var_degree: int
    factor_degree: int

    def __post_init__(self):
        M, n, nu, s = self.num_vars, self.num_factors, self.var_degree, self.factor_degree
        for name, v in (("M", M), ("n", n), ("nu", nu), ("s", s)):
            if int(v) != v or v <= 0:
                raise ParameterError(f"{name} must be a positive integer, got {v!r}")
        if nu * M != s * n:
            raise ParameterError(f"edge count mismatch: nu*M = {nu * M} but s*n = {s * n}")
        if M % s:
            raise ParameterError(f"factor degree s={s} must divide M={M}")

    @classmethod
    def from_sizes(cls, M: int, n: int, nu: int) -> "LdpcParams":
        """Derive the factor degree from ``nu*M = s*n``."""
        if n <= 0 or (nu * M) % n:
            raise ParameterError(f"nu*M = {nu * M} is not divisible by n = {n}")
        return cls(M, n, nu, nu * M // n)

    @property
    def num_edges(self) -> int:
        return self.var_degree * self.num_vars

    @property
    def factors_per_round(self) -> int:
        return self.num_vars // self.factor_degree


@dataclass(frozen=True, eq=False)
class SparseBinaryMatrix:
    params: LdpcParams
    var_adj: np.ndarray     # (M, nu) int32, rows sorted
    factor_adj: np.ndarray  # (n, s) int32, rows sorted

    @property
    def shape(self) -> tuple[int, int]:
        return self.params.num_factors, self.params.num_vars

    @property
    def num_edges(self) -> int:
        return self.params.num_edges

    def matvec(self, x) -> np.ndarray:
        """Return ``A @ x`` summing each factor's variables."""
        x = np.asarray(x)
        if x.shape != (self.params.num_vars,):
            raise ParameterError(f"expected vector of length {self.params.num_vars}, got shape {x.shape}")
        out = np.empty(self.params.num_factors)
        _kernels.gather_sum(np.ascontiguousarray(x, dtype=np.float64), self.factor_adj, out)
        return out

    def matvec_transpose(self, r) -> np.ndarray:
        """Return ``A.T @ r`` summing each variable's factors."""
        r = np.asarray(r)
        if r.shape != (self.params.num_factors,):
            raise ParameterError(f"expected vector of length {self.params.num_factors}, got shape {r.shape}")
        out = np.empty(self.params.num_vars)
        _kernels.gather_sum(np.ascontiguousarray(r, dtype=np.float64), self.var_adj, out)
        return out

    def column_energy(self) -> float:
        """Squared norm of every column (all equal for a biregular graph)."""
        return float(self.params.var_degree)

    def to_dense(self) -> np.ndarray:
        n, M = self.shape
        A = np.zeros((n, M), dtype=np.int8)
        rows = np.repeat(np.arange(n), self.params.factor_degree)
        A[rows, self.factor_adj.ravel()] = 1
        return A

    def edges(self) -> set[tuple[int, int]]:
        """Edge set as ``(factor, variable)`` pairs."""
        return {(f, int(v)) for f, row in enumerate(self.factor_adj) for v in row}

    def validate(self) -> None:
        """Check degrees, index ranges, sortedness and transpose consistency."""
        p = self.params
        M, n, nu, s = p.num_vars, p.num_factors, p.var_degree, p.factor_degree
        if self.var_adj.shape != (M, nu) or self.factor_adj.shape != (n, s):
            raise ParameterError("adjacency tables have wrong shape")
        for table, hi, what in ((self.var_adj, n, "factor"), (self.factor_adj, M, "variable")):
            if table.size and (table.min() < 0 or table.max() >= hi):
                raise ParameterError(f"{what} index out of range")
            if np.any(np.diff(table, axis=1) <= 0):
                raise ParameterError("adjacency rows must be strictly increasing")
        from_factors = np.zeros((M, nu), dtype=np.int64)
        fill = np.zeros(M, dtype=np.int64)
        for f, row in enumerate(self.factor_adj):
            for v in row:
                if fill[v] >= nu:
                    raise ParameterError(f"variable {v} has degree > {nu}")
                from_factors[v, fill[v]] = f
                fill[v] += 1
        if np.any(fill != nu):
            raise ParameterError("variable degree violation")
        if not np.array_equal(from_factors, self.var_adj):
            raise ParameterError("var_adj and factor_adj disagree")


def _var_adj_from_factor_adj(factor_adj: np.ndarray, M: int, nu: int) -> np.ndarray:
    n = factor_adj.shape[0]
    flat_f = np.repeat(np.arange(n, dtype=np.int32), factor_adj.shape[1])
    flat_v = factor_adj.ravel()
    order = np.lexsort((flat_f, flat_v))
    counts = np.bincount(flat_v, minlength=M)
    if np.any(counts != nu):
        raise ParameterError("variable degree violation")
    return flat_f[order].reshape(M, nu)


def from_factor_adjacency(params: LdpcParams, factor_adj) -> SparseBinaryMatrix:
    factor_adj = np.sort(np.asarray(factor_adj, dtype=np.int32), axis=1)
    var_adj = _var_adj_from_factor_adj(factor_adj, params.num_vars, params.var_degree)
    A = SparseBinaryMatrix(params, var_adj, factor_adj)
    A.var_adj.setflags(write=False)
    A.factor_adj.setflags(write=False)
    return A


def sample_gallager(params: LdpcParams, seed=None) -> SparseBinaryMatrix:
    """Sample the adjacency matrix of a graph from LDPC(nu, s; M, n).

    Each of the ``nu`` rounds shuffles the variables and cuts the permutation
    into ``M/s`` consecutive blocks of ``s``; block ``i`` of round ``r`` becomes
    factor ``r*M/s + i``.
    """
    rng = np.random.default_rng(seed)
    M, nu, s = params.num_vars, params.var_degree, params.factor_degree
    per_round = params.factors_per_round
    factor_adj = np.empty((params.num_factors, s), dtype=np.int32)
    var_adj = np.empty((M, nu), dtype=np.int32)
    block_ids = np.repeat(np.arange(per_round, dtype=np.int32), s)
    for r in range(nu):
        perm = rng.permutation(M).astype(np.int32)
        factor_adj[r * per_round:(r + 1) * per_round] = np.sort(perm.reshape(per_round, s), axis=1)
        # factor ids grow with the round, so column r keeps var_adj rows sorted
        var_adj[perm, r] = r * per_round + block_ids
    var_adj.setflags(write=False)
    factor_adj.setflags(write=False)
    return SparseBinaryMatrix(params, var_adj, factor_adj)


# ---------------------------------------------------------------------------
# expansion heuristic


def binary_entropy(p: float) -> float:
    """Binary entropy in nats; h(0) = h(1) = 0."""
    if p < 0.0 or p > 1.0:
        raise ParameterError(f"probability out of range: {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)


def expansion_equation(alpha: float, nu: int, s: int) -> float:
    """Left-hand side of the expansion equation whose positive root is alpha*.

    All three terms are linear in the entropy, so the log base is irrelevant.
    """
    return ((nu - 1) / nu * binary_entropy(alpha)
            - binary_entropy(alpha * s / nu) / s
            - alpha * (s / nu) * binary_entropy(nu / s))


def expansion_alpha_star(nu: int, s: int, tol: float = 1e-10) -> float:
    """Positive root of :func:`expansion_equation` in ``(0, nu/s)`` by bisection."""
    if not (2 <= nu < s):
        raise ParameterError(f"need 2 <= nu < s, got nu={nu}, s={s}")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    lo, hi = tol, nu / s - tol
    g_lo, g_hi = expansion_equation(lo, nu, s), expansion_equation(hi, nu, s)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if (g_lo > 0) == (g_hi > 0):
        raise NumericalError(f"no sign change of the expansion equation on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        g_mid = expansion_equation(mid, nu, s)
        if g_mid == 0.0:
            return mid
        if (g_mid > 0) == (g_lo > 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def heuristic_sparsity(alpha_star: float, M: int, nu: int) -> float:
    """Sparsity ``alpha* M / nu`` suggested by the expansion heuristic."""
    return alpha_star * M / nu


# ---------------------------------------------------------------------------
# edge-list text format:
#   M n nu s
#   f: v1 v2 ... vs        (one line per factor, 0-based)


def dumps(A: SparseBinaryMatrix) -> str:
    p = A.params
    buf = io.StringIO()
    buf.write(f"{p.num_vars} {p.num_factors} {p.var_degree} {p.factor_degree}\n")
    for f, row in enumerate(A.factor_adj):
        buf.write(f"{f}: " + " ".join(map(str, row.tolist())) + "\n")
    return buf.getvalue()


def loads(text: str) -> SparseBinaryMatrix:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise FormatError("empty file")
    header = lines[0].split()
    if len(header) != 4:
        raise FormatError(f"header must be 'M n nu s', got {lines[0]!r}")
    try:
        M, n, nu, s = (int(t) for t in header)
    except ValueError:
        raise FormatError(f"non-integer header: {lines[0]!r}") from None
    try:
        params = LdpcParams(M, n, nu, s)
    except ParameterError as exc:
        raise FormatError(f"invalid header: {exc}") from None
    body = lines[1:]
    if len(body) != n:
        raise FormatError(f"expected {n} factor lines, found {len(body)}")
    factor_adj = np.empty((n, s), dtype=np.int64)
    for lineno, line in enumerate(body, start=2):
        head, sep, rest = line.partition(":")
        if not sep:
            raise FormatError(f"line {lineno}: missing ':'")
        try:
            f = int(head)
            vs = [int(t) for t in rest.split()]
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer entry") from None
        if f != lineno - 2:
            raise FormatError(f"line {lineno}: factors must appear in order, got {f}")
        if len(vs) != s or len(set(vs)) != s:
            raise FormatError(f"line {lineno}: factor {f} needs {s} distinct variables")
        if min(vs) < 0 or max(vs) >= M:
            raise FormatError(f"line {lineno}: variable index out of range")
        factor_adj[f] = vs
    try:
        return from_factor_adjacency(params, factor_adj)
    except ParameterError as exc:
        raise FormatError(str(exc)) from None


def save(A: SparseBinaryMatrix, path) -> None:
    Path(path).write_text(dumps(A), encoding="utf-8", newline="\n")


def load(path) -> SparseBinaryMatrix:
    return loads(Path(path).read_text(encoding="utf-8"))
