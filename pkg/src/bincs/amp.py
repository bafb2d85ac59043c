"""AMP with the Bernoulli posterior-mean denoiser on dense Gaussian matrices."""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import DecodeFailure, ParameterError
from .glauber import logistic, prior_log_odds

PHI_INV_075 = NormalDist().inv_cdf(0.75)
SIGMA_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class DenseGaussianMatrix:
    """i.i.d. N(0, 1/n) entries, so columns have unit energy on average."""

    entries: np.ndarray  # (n, M), C-contiguous
    seed: int | None = None

    @classmethod
    def sample(cls, n: int, M: int, seed=None) -> "DenseGaussianMatrix":
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n, M))
        a *= 1.0 / math.sqrt(n)
        a.setflags(write=False)
        return cls(a, seed)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.shape[1],):
            raise ParameterError(f"expected vector of length {self.shape[1]}")
        return self.entries @ x

    def matvec_transpose(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if r.shape != (self.shape[0],):
            raise ParameterError(f"expected vector of length {self.shape[0]}")
        return r @ self.entries

    def column_energy(self) -> float:
        """Nominal column energy (1 by construction of the ensemble)."""
        return 1.0


def _check(rho, sigma_t):
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")
    if not sigma_t > 0:
        raise ParameterError("sigma_t must be positive")


def denoise(b, rho: float, sigma_t: float) -> np.ndarray:
    """``E[x | x + sigma_t*N(0,1) = b]`` for ``x ~ Bernoulli(rho)``.

    Written as ``logistic(lam + (2b - 1) / (2 sigma_t^2))``, which is the
    two-Gaussian Bayes ratio with the common factor cancelled.
    """
    _check(rho, sigma_t)
    b = np.asarray(b, dtype=np.float64)
    if math.isinf(sigma_t):
        return np.full(b.shape, rho)
    return logistic(prior_log_odds(rho) + (2.0 * b - 1.0) / (2.0 * sigma_t * sigma_t))


def denoise_derivative(b, rho: float, sigma_t: float) -> np.ndarray:
    f = denoise(b, rho, sigma_t)
    if math.isinf(sigma_t):
        return np.zeros_like(f)
    return f * (1.0 - f) / (sigma_t * sigma_t)


def estimate_sigma(r) -> float:
    """``median(|r|) / Phi^{-1}(3/4)``, floored at 1e-12."""
    r = np.asarray(r, dtype=np.float64)
    if r.size == 0:
        raise ParameterError("cannot estimate noise level from an empty residual")
    return max(float(np.median(np.abs(r))) / PHI_INV_075, SIGMA_FLOOR)


@dataclass
class AmpResult:
    x: np.ndarray       # soft iterate
    x_hat: np.ndarray   # rounded at 1/2
    iterations: int
    sigma_history: list
    b: np.ndarray       # last denoiser input


def amp_run(A, y, rho: float, iters: int = 25, tol: float = 1e-8) -> AmpResult:
    """Run AMP from ``x = 0``, ``r = 0``.

    ``r`` carries no information before the first iteration, so that
    iteration denoises with ``sigma_t = inf`` and returns the prior mean.
    The Onsager term is ``r * (1/n) * sum_i f'(b_i)`` summed over all M
    coordinates.
    """
    if iters < 1:
        raise ParameterError("iters must be >= 1")
    y = np.asarray(y, dtype=np.float64)
    n, M = A.shape
    x = np.zeros(M)
    r = np.zeros(n)
    sigmas = []
    b = x
    it = 0
    for it in range(1, iters + 1):
        b = A.matvec_transpose(r) + x
        sigma_t = math.inf if it == 1 else estimate_sigma(r)
        sigmas.append(sigma_t)
        x_new = denoise(b, rho, sigma_t)
        onsager = float(denoise_derivative(b, rho, sigma_t).sum()) / n
        r = y - A.matvec(x_new) + onsager * r
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(r))):
            raise DecodeFailure(f"AMP diverged at iteration {it}")
        delta = float(np.max(np.abs(x_new - x)))
        x = x_new
        if it > 1 and delta < tol:
            break
    return AmpResult(x, (x > 0.5).astype(np.int8), it, sigmas, b)
