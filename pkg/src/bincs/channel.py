"""Signal priors, the noisy linear channel, BER and Eb/N0 bookkeeping."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


def trial_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one work unit, derived from the master seed.

    The stream depends only on ``(master_seed, key)``, so trials can run in any
    order or in parallel and still reproduce.
    """
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key)))


def sample_bernoulli_signal(M: int, rho: float, seed=None) -> np.ndarray:
    """i.i.d. Bernoulli(rho) bits, as int8."""
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")
    rng = np.random.default_rng(seed)
    return (rng.random(M) < rho).astype(np.int8)


@dataclass(frozen=True)
class Measurements:
    y: np.ndarray
    sigma: float
    alpha: float = 1.0


def measure(A, x, sigma: float, alpha: float = 1.0, seed=None) -> Measurements:
    """``y = alpha*A@x + sigma*z`` with ``z`` standard Gaussian.

    ``A`` is anything with a ``matvec`` method. ``x`` may be binary or a vector
    of nonnegative counts.
    """
    if sigma < 0:
        raise ParameterError("sigma must be nonnegative")
    if alpha <= 0:
        raise ParameterError("alpha must be positive")
    clean = alpha * A.matvec(np.asarray(x))
    if sigma == 0:
        return Measurements(clean, 0.0, alpha)
    rng = np.random.default_rng(seed)
    return Measurements(clean + sigma * rng.standard_normal(clean.shape[0]), float(sigma), alpha)


def ber(x, x_hat, k: float) -> float:
    """Number of disagreeing coordinates divided by the expected sparsity ``k``."""
    x, x_hat = np.asarray(x), np.asarray(x_hat)
    if x.shape != x_hat.shape:
        raise ParameterError(f"length mismatch: {x.shape} vs {x_hat.shape}")
    if k <= 0:
        raise ParameterError("k must be positive")
    return float(np.count_nonzero(x != x_hat)) / k


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(v: float) -> float:
    return 10.0 * math.log10(v)


def ebn0_to_sigma(ebn0_db: float, column_energy: float, bits: float) -> float:
    """Noise std giving ``Eb/N0 = E_m / (2 sigma^2 J)`` for column energy E_m and J bits."""
    if column_energy <= 0 or bits <= 0:
        raise ParameterError("column energy and bit count must be positive")
    return math.sqrt(column_energy / (2.0 * bits * db_to_linear(ebn0_db)))


def sigma_to_ebn0(sigma: float, column_energy: float, bits: float) -> float:
    """Inverse of :func:`ebn0_to_sigma`, in dB."""
    if sigma <= 0 or column_energy <= 0 or bits <= 0:
        raise ParameterError("sigma, column energy and bit count must be positive")
    return linear_to_db(column_energy / (2.0 * sigma * sigma * bits))
