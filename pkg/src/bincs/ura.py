"""Three-phase unsourced random access with feedback.

Phase 1: every active user sends the column of ``A`` indexed by its J-bit
message prefix; the receiver returns the k prefixes with the highest
posterior one-probabilities. Phase 2 (feedback of that list) is assumed
free and error-free. Phase 3: each listed user sends its remaining B-J
bits in a private slot of ``n' = (n - n1)/k`` channel uses, whose error
probability comes from the normal approximation instead of simulation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from statistics import NormalDist

import numpy as np

from . import amp, glauber, nnls, sensing
from .channel import db_to_linear, ebn0_to_sigma, linear_to_db, trial_rng
from .errors import InfeasibleError, NumericalError, ParameterError

LOG2E = math.log2(math.e)
PHASE1_DECODERS = ("glauber-zero", "glauber-nnls", "amp")


@dataclass(frozen=True)
class UraConfig:
    k: int                 # active users
    B: int                 # message bits
    J: int                 # prefix bits sent in phase 1 (M = 2^J)
    n: int                 # total channel uses
    n1: int                # phase-1 channel uses
    alpha: float = 1.0     # phase-1 column amplitude
    nu: int = 16           # LDPC variable degree
    target_pupe: float = 0.05
    decoder: str = "glauber-zero"
    steps: int | None = None  # Glauber steps; default 10*M*J
    amp_iters: int = 25

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("need at least one active user")
        if not 0 < self.J < self.B:
            raise ParameterError("need 0 < J < B")
        if not 0 < self.n1 < self.n:
            raise ParameterError("need 0 < n1 < n")
        if (self.n - self.n1) % self.k:
            raise ParameterError(f"n - n1 = {self.n - self.n1} is not divisible by k = {self.k}")
        if not 0 < self.target_pupe < 1:
            raise ParameterError("target_pupe must lie in (0, 1)")
        if self.decoder not in PHASE1_DECODERS:
            raise ParameterError(f"decoder must be one of {PHASE1_DECODERS}")
        if self.k > self.M:
            raise ParameterError("more users than prefixes")
        if self.decoder != "amp":
            self.ldpc_params  # validates degree arithmetic

    @property
    def M(self) -> int:
        return 2 ** self.J

    @property
    def slot_length(self) -> int:
        return (self.n - self.n1) // self.k

    @property
    def ldpc_params(self) -> sensing.LdpcParams:
        return sensing.LdpcParams.from_sizes(self.M, self.n1, self.nu)

    @property
    def column_energy(self) -> float:
        """Phase-1 energy per user: ``alpha^2 nu`` (LDPC) or ``alpha^2`` (Gaussian)."""
        base = 1.0 if self.decoder == "amp" else float(self.nu)
        return self.alpha ** 2 * base


def sample_phase1_matrix(config: UraConfig, seed=None):
    if config.decoder == "amp":
        return amp.DenseGaussianMatrix.sample(config.n1, config.M, seed)
    return sensing.sample_gallager(config.ldpc_params, seed)


@dataclass
class PhaseOneResult:
    prefixes: np.ndarray   # per-user J-bit prefix
    decoded: np.ndarray    # the k-entry list returned to the users
    collided: np.ndarray   # bool per user: another user shares the prefix
    in_list: np.ndarray    # bool per user: prefix appears in the list

    @property
    def errors(self) -> np.ndarray:
        return self.collided | ~self.in_list

    @property
    def error_fraction(self) -> float:
        return float(self.errors.mean())


def _user_flags(prefixes, decoded):
    values, inverse, counts = np.unique(prefixes, return_inverse=True, return_counts=True)
    collided = counts[inverse] > 1
    in_list = np.isin(prefixes, decoded)
    return collided, in_list


def _phase2_deliver(decoded, prefixes, in_list):
    # Feedback is lossless: a user finds its slot iff its prefix is listed.
    slot_of = {int(m): i for i, m in enumerate(decoded)}
    found = np.array([int(p) in slot_of for p in prefixes])
    assert np.array_equal(found, in_list), "phase-2 delivery must be perfect"


def decode_phase1(config: UraConfig, A, y, sigma: float, seed=None) -> np.ndarray:
    """Soft scores for every prefix; the list is their top k."""
    rho = config.k / config.M
    if config.decoder == "amp":
        return amp.amp_run(A, y / config.alpha, rho, config.amp_iters).x
    steps = glauber.default_steps(config.M) if config.steps is None else config.steps
    cfg = glauber.GlauberConfig(steps, sigma * sigma, glauber.prior_log_odds(rho), config.alpha, seed=seed)
    x0 = None
    if config.decoder == "glauber-nnls":
        x0 = nnls.round_binary(nnls.nnls_solve(A, y / config.alpha).x)
    return glauber.run(A, y, cfg, x0=x0).p1


def simulate_phase1(config: UraConfig, A, phase1_ebn0_db: float, seed=None) -> PhaseOneResult:
    """One phase-1 experiment at the given phase-1 Eb/N0."""
    rng = np.random.default_rng(seed)
    k, M = config.k, config.M
    # only the J-bit prefix of each uniform B-bit message enters phase 1
    prefixes = rng.integers(0, M, size=k)
    counts = np.bincount(prefixes, minlength=M)
    sigma = ebn0_to_sigma(phase1_ebn0_db, config.column_energy, config.J)
    y = config.alpha * A.matvec(counts) + sigma * rng.standard_normal(A.shape[0])
    scores = decode_phase1(config, A, y, sigma, seed=rng.integers(2 ** 63))
    decoded = glauber.topk_list(scores, k)
    collided, in_list = _user_flags(prefixes, decoded)
    _phase2_deliver(decoded, prefixes, in_list)
    return PhaseOneResult(prefixes, decoded, collided, in_list)


def estimate_eps1(config: UraConfig, A, phase1_ebn0_db: float, trials: int, seed: int = 0,
                  key: tuple = ()) -> tuple[float, float]:
    """Monte-Carlo phase-1 per-user error and its standard error."""
    if trials < 1:
        raise ParameterError("need at least one trial")
    fr = np.array([simulate_phase1(config, A, phase1_ebn0_db, trial_rng(seed, *key, t)).error_fraction
                   for t in range(trials)])
    stderr = float(fr.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    return float(fr.mean()), stderr


# ---------------------------------------------------------------------------
# finite-blocklength accounting


def awgn_capacity(P: float) -> float:
    """``0.5 * log2(1 + P)`` bits per channel use."""
    if P < 0:
        raise ParameterError("power must be nonnegative")
    return 0.5 * math.log2(1.0 + P)


def awgn_dispersion(P: float) -> float:
    """``P (P + 2) / (2 (P + 1)^2) * log2(e)^2`` in bits^2."""
    if P < 0:
        raise ParameterError("power must be nonnegative")
    return P * (P + 2.0) / (2.0 * (P + 1.0) ** 2) * LOG2E ** 2


def qinv(eps: float) -> float:
    """Inverse Gaussian tail function."""
    if not 0.0 < eps < 1.0:
        raise ParameterError("eps must lie in (0, 1)")
    return NormalDist().inv_cdf(1.0 - eps)


def normal_approx_gap(P: float, bits: float, n_prime: int, eps2: float) -> float:
    """``C(P) - sqrt(V(P)/n') Q^{-1}(eps2) - bits/n'``; zero at the required power."""
    return awgn_capacity(P) - math.sqrt(awgn_dispersion(P) / n_prime) * qinv(eps2) - bits / n_prime


def solve_p_star(bits: float, n_prime: int, eps2: float, lo: float = 1e-6, hi: float = 1e6) -> float:
    """Power at which ``bits`` fit in ``n_prime`` uses with error ``eps2`` (bisection in log P)."""
    if not 0.0 < eps2 <= 0.5:
        raise ParameterError("eps2 must lie in (0, 1/2]")
    if bits <= 0 or n_prime <= 0:
        raise ParameterError("bits and n' must be positive")
    g_lo = normal_approx_gap(lo, bits, n_prime, eps2)
    g_hi = normal_approx_gap(hi, bits, n_prime, eps2)
    if g_lo >= 0 or g_hi <= 0:
        raise NumericalError(f"rate {bits}/{n_prime} has no root in [{lo}, {hi}]")
    a, b = math.log(lo), math.log(hi)
    for _ in range(200):
        mid = 0.5 * (a + b)
        if normal_approx_gap(math.exp(mid), bits, n_prime, eps2) < 0:
            a = mid
        else:
            b = mid
        if b - a < 1e-15:
            break
    return math.exp(0.5 * (a + b))


def total_ebn0(B: int, J: int, n_prime: int, p_star: float, phase1_ebn0: float) -> float:
    """Linear ``(n' P*/2 + J * Eb/N0_phase1) / B``."""
    if B <= 0:
        raise ParameterError("B must be positive")
    return (0.5 * n_prime * p_star + J * phase1_ebn0) / B


# ---------------------------------------------------------------------------
# budget optimization


@dataclass
class BudgetRow:
    k: int
    phase1_ebn0_db: float
    eps1: float
    eps1_stderr: float
    eps2: float
    p_star: float
    total_ebn0_db: float
    feasible: bool

    FIELDS = ("k", "phase1_ebn0_db", "eps1", "eps1_stderr", "eps2", "p_star", "total_ebn0_db", "feasible")


@dataclass
class BudgetResult:
    best: BudgetRow
    rows: list = field(default_factory=list)


def budget_row(config: UraConfig, phase1_ebn0_db: float, eps1: float, eps1_stderr: float) -> BudgetRow:
    eps2 = config.target_pupe - eps1
    if eps2 <= 0:
        return BudgetRow(config.k, phase1_ebn0_db, eps1, eps1_stderr, eps2, math.nan, math.nan, False)
    n_prime = config.slot_length
    p_star = solve_p_star(config.B - config.J, n_prime, min(eps2, 0.5))
    total = total_ebn0(config.B, config.J, n_prime, p_star, db_to_linear(phase1_ebn0_db))
    return BudgetRow(config.k, phase1_ebn0_db, eps1, eps1_stderr, eps2, p_star, linear_to_db(total), True)


def phase1_grid(lo_db: float, hi_db: float, step_db: float = 0.25) -> list[float]:
    count = int(math.floor((hi_db - lo_db) / step_db + 1e-9)) + 1
    return [round(lo_db + i * step_db, 10) for i in range(count)]


def optimize_budget(config: UraConfig, grid, trials: int = 200, seed: int = 0, A=None) -> BudgetResult:
    """Scan phase-1 energies; split the remaining error budget to phase 3; keep the cheapest.

    Every grid point reuses the same sensing matrix. Rows for all grid
    points are returned, infeasible ones included.
    """
    grid = list(grid)
    if not grid:
        raise ParameterError("empty phase-1 energy grid")
    if A is None:
        A = sample_phase1_matrix(config, trial_rng(seed, 0, config.k))
    rows = []
    for i, e_db in enumerate(grid):
        eps1, se = estimate_eps1(config, A, e_db, trials, seed, key=(1, config.k, i))
        rows.append(budget_row(config, e_db, eps1, se))
    feasible = [r for r in rows if r.feasible]
    if not feasible:
        raise InfeasibleError(f"no grid point meets PUPE <= {config.target_pupe} at k={config.k}")
    best = min(feasible, key=lambda r: r.total_ebn0_db)
    return BudgetResult(best, rows)


def with_users(config: UraConfig, k: int) -> UraConfig:
    return replace(config, k=k)
