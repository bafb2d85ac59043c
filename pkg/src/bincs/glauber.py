"""Glauber dynamics (single-site Gibbs sampling) on the binary posterior.

The target is

    Q(x) ∝ exp(-||y - alpha*A@x||^2 / (2 sigma^2) + lam * |x|_1)

on {0,1}^M. The state caches the residual ``y - alpha*A@x`` so one update
only touches the ``nu`` factors of the chosen coordinate. The conditional
probability of a one at coordinate ``l`` is

    logistic(lam + alpha/sigma^2 * sum_{f in F(l)} (r_f + alpha*x_l - alpha/2)),

the difference of the two squared residual norms expanded factor by factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NumericalError, ParameterError

VERIFY_TOL = 1e-8


def prior_log_odds(rho: float) -> float:
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")
    return math.log(rho) - math.log1p(-rho)


def logistic(h):
    """Overflow-free ``1 / (1 + exp(-h))`` for scalars or arrays."""
    h = np.asarray(h, dtype=np.float64)
    return np.exp(-np.logaddexp(0.0, -h))


def default_steps(M: int) -> int:
    """Ten sweeps per bit of coordinate index: ``10 * M * log2(M)``."""
    return int(round(10 * M * math.log2(M)))


def mixing_time_bound(sigma2: float, nu: int, s: int, M: int, eps: float) -> int | None:
    """Path-coupling bound on the steps needed to reach TV distance ``eps``.

    Returns ``None`` when ``4 sigma^2 <= nu (s - 1)``, where the coupling
    argument does not contract.
    """
    if not 0.0 < eps < 1.0:
        raise ParameterError("eps must lie in (0, 1)")
    gap = 4.0 * sigma2 - nu * (s - 1)
    if gap <= 0:
        return None
    return math.ceil((math.log(1.0 / eps) + math.log(M)) * 4.0 * sigma2 * M / gap)


def mixing_threshold(nu: int, s: int) -> float:
    """Smallest noise variance at which the mixing bound applies (exclusive)."""
    return nu * (s - 1) / 4.0


@dataclass(frozen=True)
class GlauberConfig:
    steps: int
    sigma2: float
    lam: float
    alpha: float = 1.0
    anneal_from: float | None = None  # starting sigma^2 of the annealing schedule
    seed: int | None = None
    record_trajectory: bool = False
    trajectory_stride: int | None = None  # default: one sweep (M steps)
    record_states: bool = False
    verify: bool = False

    def __post_init__(self):
        if self.steps < 0:
            raise ParameterError("steps must be nonnegative")
        if not self.sigma2 > 0:
            raise ParameterError("sigma2 must be positive")
        if not math.isfinite(self.lam):
            raise ParameterError("prior log-odds must be finite (use 0 < rho < 1)")
        if self.alpha <= 0:
            raise ParameterError("alpha must be positive")
        if self.anneal_from is not None and self.anneal_from < self.sigma2:
            raise ParameterError("annealing must start at or above sigma2")
        if self.trajectory_stride is not None and self.trajectory_stride <= 0:
            raise ParameterError("trajectory_stride must be positive")

    def sigma2_at_sweep(self, sweep: int, M: int) -> float:
        """Working noise variance during sweep ``sweep`` (steps ``[sweep*M, (sweep+1)*M)``).

        With annealing, sigma^2 decays geometrically from ``anneal_from`` to
        ``sigma2`` over the first half of the run and stays there afterwards.
        """
        if self.anneal_from is None or self.anneal_from == self.sigma2:
            return self.sigma2
        ramp = max(1, math.ceil(self.steps / 2 / M))
        if sweep >= ramp:
            return self.sigma2
        return self.anneal_from * (self.sigma2 / self.anneal_from) ** (sweep / ramp)


@dataclass
class GlauberState:
    x: np.ndarray         # int8, length M
    residual: np.ndarray  # y - alpha*A@x
    rss: float            # ||residual||^2, maintained incrementally
    weight: int           # |x|_1
    step: int = 0

    def energy(self, sigma2: float, lam: float) -> float:
        return -self.rss / (2.0 * sigma2) + lam * self.weight


def init_state(A, y, x0=None, alpha: float = 1.0) -> GlauberState:
    M = A.params.num_vars
    x = np.zeros(M, dtype=np.int8) if x0 is None else np.array(x0, dtype=np.int8)
    if x.shape != (M,):
        raise ParameterError(f"initial state must have length {M}")
    if np.any((x != 0) & (x != 1)):
        raise ParameterError("initial state must be binary")
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.params.num_factors,):
        raise ParameterError(f"measurements must have length {A.params.num_factors}")
    r = y - alpha * A.matvec(x)
    return GlauberState(x, r, float(r @ r), int(x.sum()))


def refresh(state: GlauberState, A, y, alpha: float = 1.0) -> float:
    """Recompute residual and ``rss`` from scratch.

    Returns the largest entrywise correction relative to ``max(1, |y|_inf)``.
    """
    y = np.asarray(y, dtype=np.float64)
    r = y - alpha * A.matvec(state.x)
    scale = max(1.0, float(np.max(np.abs(y), initial=0.0)))
    drift = float(np.max(np.abs(r - state.residual), initial=0.0)) / scale
    state.residual[:] = r
    state.rss = float(r @ r)
    state.weight = int(state.x.sum())
    return drift


def flip_probability(state: GlauberState, A, y, coord: int, sigma2: float, lam: float,
                     alpha: float = 1.0) -> float:
    """``Pr(x_coord = 1 | rest, y)`` from ``y`` and the other coordinates directly."""
    x = state.x
    y = np.asarray(y, dtype=np.float64)
    acc = 0.0
    for f in A.var_adj[coord]:
        others = int(x[A.factor_adj[f]].sum()) - int(x[coord])
        acc += y[f] - alpha / 2.0 - alpha * others
    return float(logistic(lam + alpha / sigma2 * acc))


def flip_probability_ratio(x, A, y, coord: int, sigma2: float, lam: float, alpha: float = 1.0) -> float:
    """Reference ``q1 / (q0 + q1)`` from full residual norms (O(n) per call)."""
    x0 = np.array(x, dtype=np.int8)
    x0[coord] = 0
    x1 = x0.copy()
    x1[coord] = 1
    y = np.asarray(y, dtype=np.float64)
    r0 = y - alpha * A.matvec(x0)
    r1 = y - alpha * A.matvec(x1)
    log_q0 = -(r0 @ r0) / (2.0 * sigma2)
    log_q1 = -(r1 @ r1) / (2.0 * sigma2) + lam
    return float(logistic(log_q1 - log_q0))


def soft_output(state: GlauberState, A, sigma2: float, lam: float, alpha: float = 1.0) -> np.ndarray:
    """Conditional one-probability of every coordinate given the others, in one pass."""
    nu = A.params.var_degree
    acc = state.residual[A.var_adj].sum(axis=1) + nu * alpha * (state.x - 0.5)
    return logistic(lam + alpha / sigma2 * acc)


def advance(state: GlauberState, A, coords, uniforms, sigma2: float, lam: float,
            alpha: float = 1.0, trace=None) -> None:
    """Apply the updates driven by pre-drawn ``coords`` and ``uniforms``.

    Coordinate ``coords[t]`` becomes one iff ``uniforms[t]`` is below its
    conditional one-probability. If ``trace`` is given, ``trace[t]`` receives
    the new value.
    """
    coords = np.ascontiguousarray(coords, dtype=np.int64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    state.rss, state.weight = _kernels.glauber_chunk(
        state.x, state.residual, A.var_adj, coords, uniforms,
        float(lam), float(alpha), 1.0 / sigma2, float(state.rss), int(state.weight), trace)
    state.step += coords.shape[0]


def step(state: GlauberState, A, y, config: GlauberConfig, rng) -> GlauberState:
    """One Glauber update at a uniformly drawn coordinate."""
    M = A.params.num_vars
    coord = rng.integers(0, M, size=1)
    u = rng.random(1)
    sigma2 = config.sigma2_at_sweep(state.step // M, M)
    advance(state, A, coord, u, sigma2, config.lam, config.alpha)
    return state


@dataclass
class Trajectory:
    steps: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    ber: list = field(default_factory=list)
    states: list = field(default_factory=list)

    def append(self, step, energy, ber, x=None):
        self.steps.append(step)
        self.energy.append(energy)
        self.ber.append(ber)
        if x is not None:
            self.states.append(x.copy())


@dataclass
class GlauberResult:
    x: np.ndarray
    p1: np.ndarray
    trajectory: Trajectory | None
    energy: float
    max_drift: float


def run(A, y, config: GlauberConfig, x0=None, reference=None, ber_scale: float | None = None) -> GlauberResult:
    """Run ``config.steps`` Glauber updates from ``x0`` (all-zero by default).

    Randomness is drawn one sweep (M steps) at a time, so the chain does not
    depend on whether a trajectory is recorded. The residual is recomputed
    from scratch after every sweep. Trajectory energies use the target
    ``sigma2``; BER against ``reference`` is normalized by ``ber_scale``
    (default: the expected sparsity implied by ``lam``).
    """
    M = A.params.num_vars
    rng = np.random.default_rng(config.seed)
    y = np.asarray(y, dtype=np.float64)
    state = init_state(A, y, x0, config.alpha)
    sigma2, lam, alpha = config.sigma2, config.lam, config.alpha

    traj = None
    stride = config.trajectory_stride or M
    if config.record_trajectory:
        traj = Trajectory()
        if reference is not None:
            reference = np.asarray(reference)
            if ber_scale is None:
                ber_scale = M * float(logistic(lam))

        def record():
            b = float(np.count_nonzero(state.x != reference)) / ber_scale if reference is not None else math.nan
            traj.append(state.step, state.energy(sigma2, lam), b, state.x if config.record_states else None)

        record()

    max_drift = 0.0
    T = config.steps
    sweep = 0
    while state.step < T:
        start = state.step
        stop = min(start + M, T)
        coords = rng.integers(0, M, size=stop - start)
        uniforms = rng.random(stop - start)
        work_sigma2 = config.sigma2_at_sweep(sweep, M)
        if traj is None:
            advance(state, A, coords, uniforms, work_sigma2, lam, alpha)
        else:
            pos = start
            while pos < stop:
                nxt = min(stop, (pos // stride + 1) * stride)
                advance(state, A, coords[pos - start:nxt - start], uniforms[pos - start:nxt - start],
                        work_sigma2, lam, alpha)
                pos = nxt
                if pos % stride == 0 or pos == T:
                    record()
        drift = refresh(state, A, y, alpha)
        if config.verify and drift > VERIFY_TOL:
            raise NumericalError(f"residual drifted by {drift:.3e} during sweep {sweep}")
        max_drift = max(max_drift, drift)
        sweep += 1

    p1 = soft_output(state, A, sigma2, lam, alpha)
    return GlauberResult(state.x, p1, traj, state.energy(sigma2, lam), max_drift)


def topk_list(p1, k: int) -> np.ndarray:
    """Indices of the ``k`` largest entries of ``p1``; ties go to the smaller index."""
    p1 = np.asarray(p1)
    if k > p1.shape[0] or k < 0:
        raise ParameterError(f"k={k} out of range for {p1.shape[0]} coordinates")
    return np.argsort(-p1, kind="stable")[:k]
