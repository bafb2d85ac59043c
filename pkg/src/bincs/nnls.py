"""Non-negative least squares by accelerated projected gradient, plus rounding.

Minimizes ``0.5 * ||y - A x||^2`` over ``x >= 0`` with FISTA steps of size
``1/L``. Whenever an accelerated step would increase the objective the
momentum is dropped and a plain projected-gradient step is taken from the
last iterate, so the objective sequence never increases.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class NnlsConfig:
    max_iters: int = 2000
    tol: float = 1e-8         # stop when the relative objective decrease falls below this
    power_iters: int = 50
    lipschitz_safety: float = 1.1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ParameterError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")


@dataclass
class NnlsResult:
    x: np.ndarray
    objective: list = field(default_factory=list)  # 0.5*||y - Ax||^2 per accepted iterate
    iterations: int = 0
    restarts: int = 0


def lipschitz_estimate(A, iters: int = 50, seed: int = 0) -> float:
    """Largest eigenvalue of ``A.T A`` by power iteration."""
    M = A.shape[1]
    v = np.random.default_rng(seed).standard_normal(M)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = A.matvec_transpose(A.matvec(v))
        lam = float(np.linalg.norm(w))
        if lam == 0.0:
            return 0.0
        v = w / lam
    return lam


def nnls_solve(A, y, config: NnlsConfig | None = None) -> NnlsResult:
    cfg = config or NnlsConfig()
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.shape[0],):
        raise ParameterError(f"measurements must have length {A.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise ParameterError("measurements must be finite")
    M = A.shape[1]
    x = np.zeros(M)
    res = NnlsResult(x)

    def objective(r):
        return 0.5 * float(r @ r)

    r = y.copy()
    f = objective(r)
    res.objective.append(f)
    if f == 0.0:
        return res
    L = lipschitz_estimate(A, cfg.power_iters) * cfg.lipschitz_safety
    if L == 0.0:
        return res

    v, t = x, 1.0
    for it in range(1, cfg.max_iters + 1):
        grad_v = -A.matvec_transpose(y - A.matvec(v))
        z = np.maximum(v - grad_v / L, 0.0)
        rz = y - A.matvec(z)
        fz = objective(rz)
        if fz > f:
            # momentum overshot: restart from the current iterate
            res.restarts += 1
            t = 1.0
            z = np.maximum(x + A.matvec_transpose(r) / L, 0.0)
            rz = y - A.matvec(z)
            fz = objective(rz)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        v = z + ((t - 1.0) / t_next) * (z - x)
        t = t_next
        decrease = f - fz
        x, r, f = z, rz, fz
        res.objective.append(f)
        res.iterations = it
        if f == 0.0 or decrease <= cfg.tol * max(f + decrease, np.finfo(float).tiny):
            break
    res.x = x
    return res


def round_binary(v) -> np.ndarray:
    """1 where ``v > 1/2``, else 0 (exactly 1/2 rounds down)."""
    return (np.asarray(v) > 0.5).astype(np.int8)
