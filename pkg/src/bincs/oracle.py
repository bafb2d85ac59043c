"""Exact inference by enumerating {0,1}^M, for M <= 20.

State ``c`` is the integer whose bit ``i`` is coordinate ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

MAX_VARS = 20


@dataclass(frozen=True, eq=False)
class TinyInstance:
    A: object
    y: np.ndarray
    sigma2: float
    lam: float
    alpha: float = 1.0

    def __post_init__(self):
        if self.A.params.num_vars > MAX_VARS:
            raise ParameterError(f"exact enumeration limited to M <= {MAX_VARS}")

    @property
    def num_vars(self) -> int:
        return self.A.params.num_vars


def all_states(M: int) -> np.ndarray:
    """``(2^M, M)`` int8 table; row ``c`` holds the bits of ``c``."""
    if M > MAX_VARS:
        raise ParameterError(f"exact enumeration limited to M <= {MAX_VARS}")
    codes = np.arange(2 ** M, dtype=np.int64)
    return ((codes[:, None] >> np.arange(M)) & 1).astype(np.int8)


def state_codes(xs) -> np.ndarray:
    """Inverse of :func:`all_states` for a batch of binary rows."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.int64))
    return xs @ (1 << np.arange(xs.shape[1], dtype=np.int64))


def log_weights(inst: TinyInstance) -> np.ndarray:
    """Unnormalized log-posterior of every state."""
    X = all_states(inst.num_vars)
    dense = inst.A.to_dense().astype(np.float64)
    resid = np.asarray(inst.y, dtype=np.float64)[None, :] - inst.alpha * X @ dense.T
    return -np.einsum("ij,ij->i", resid, resid) / (2.0 * inst.sigma2) + inst.lam * X.sum(axis=1)


def exact_posterior(inst: TinyInstance) -> np.ndarray:
    lw = log_weights(inst)
    top = lw.max()
    w = np.exp(lw - top)
    return w / w.sum()


def exact_marginals(inst: TinyInstance, posterior=None) -> np.ndarray:
    """``Pr(x_i = 1 | y)`` for every coordinate."""
    p = exact_posterior(inst) if posterior is None else posterior
    return p @ all_states(inst.num_vars)


def exact_bitwise_map(inst: TinyInstance, posterior=None) -> np.ndarray:
    """Per-coordinate posterior maximizer; a marginal of exactly 1/2 gives 0."""
    return (exact_marginals(inst, posterior) > 0.5).astype(np.int8)


def sample_posterior(posterior, size: int, seed=None) -> np.ndarray:
    """Draw state codes from an exact posterior table."""
    rng = np.random.default_rng(seed)
    return rng.choice(posterior.shape[0], size=size, p=posterior)


def tv_distance(p, q) -> float:
    p, q = np.asarray(p, dtype=np.float64), np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ParameterError(f"support mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def empirical_law(codes, num_states: int) -> np.ndarray:
    counts = np.bincount(np.asarray(codes, dtype=np.int64), minlength=num_states)
    return counts / counts.sum()
