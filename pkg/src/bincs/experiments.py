"""BER sweeps and single-run trajectories over the four decoders.

Every random quantity is drawn from a stream keyed by the master seed and the
work unit's indices, so results do not depend on execution order or on the
number of workers. Within a sweep, the signal and the standard-normal noise
of trial ``t`` at sparsity ``k`` are shared by all Eb/N0 points and decoders
(only the noise scale changes), which keeps BER curves comparable point to
point.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import amp, glauber, nnls, sensing
from .channel import ber, ebn0_to_sigma, sample_bernoulli_signal, trial_rng
from .errors import ParameterError

DECODERS = ("glauber-zero", "glauber-nnls", "nnls", "amp")

# stream tags for trial_rng
_MATRIX, _GAUSS, _SIGNAL, _NOISE, _DECODER = range(5)


@dataclass(frozen=True)
class SweepConfig:
    M: int = 2 ** 14
    n: int = 2 ** 11
    nu: int = 16
    ks: tuple = (50, 100, 200, 300)
    ebn0_db: tuple = (0.0, 1.0, 2.0, 3.0, 4.0)
    trials: int = 100
    decoders: tuple = DECODERS
    seed: int = 0
    steps: int | None = None      # Glauber steps; default 10*M*log2(M)
    amp_iters: int = 25
    nnls_max_iters: int = 2000
    workers: int = 1

    def __post_init__(self):
        bad = set(self.decoders) - set(DECODERS)
        if bad:
            raise ParameterError(f"unknown decoder(s): {sorted(bad)}")
        if self.trials < 0:
            raise ParameterError("trials must be nonnegative")
        if any(k <= 0 or k >= self.M for k in self.ks):
            raise ParameterError("every k must satisfy 0 < k < M")
        self.params  # validates degree arithmetic

    @property
    def params(self) -> sensing.LdpcParams:
        return sensing.LdpcParams.from_sizes(self.M, self.n, self.nu)

    @property
    def bits(self) -> float:
        return math.log2(self.M)


@dataclass
class SweepRow:
    decoder: str
    k: int
    ebn0_db: float
    trials: int
    mean_ber: float
    stderr_ber: float
    mean_runtime_ms: float

    FIELDS = ("decoder", "k", "ebn0_db", "trials", "mean_ber", "stderr_ber", "mean_runtime_ms")


@dataclass
class SweepResult:
    rows: list
    per_trial: dict = field(default_factory=dict)  # (decoder, k, ebn0_db) -> array of BERs

    def curve(self, decoder: str, k: int):
        pts = sorted((r.ebn0_db, r.mean_ber, r.stderr_ber) for r in self.rows if r.decoder == decoder and r.k == k)
        return tuple(np.array(c) for c in zip(*pts)) if pts else (np.array([]),) * 3


def crossing(ebn0_db, bers, level: float = 0.05) -> float:
    """First Eb/N0 at which the BER curve drops to ``level`` (linear interpolation).

    Returns ``nan`` when the curve never reaches the level and ``-inf`` when
    it already starts at or below it.
    """
    ebn0_db, bers = np.asarray(ebn0_db, dtype=float), np.asarray(bers, dtype=float)
    if bers.size == 0:
        return math.nan
    if bers[0] <= level:
        return -math.inf
    for i in range(1, bers.size):
        if bers[i] <= level:
            x0, x1, b0, b1 = ebn0_db[i - 1], ebn0_db[i], bers[i - 1], bers[i]
            return float(x0 + (b0 - level) / (b0 - b1) * (x1 - x0))
    return math.nan


# ---------------------------------------------------------------------------
# worker side

_shared: dict = {}


def _setup(cfg: SweepConfig):
    _shared["cfg"] = cfg
    _shared["A"] = sensing.sample_gallager(cfg.params, trial_rng(cfg.seed, _MATRIX))
    _shared["G"] = (amp.DenseGaussianMatrix.sample(cfg.n, cfg.M, trial_rng(cfg.seed, _GAUSS))
                    if "amp" in cfg.decoders else None)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, 1e3 * (time.perf_counter() - t0)


def _run_unit(unit):
    """All decoders for one ``(k, Eb/N0 index, trial)``; returns {decoder: (ber, ms)}."""
    ki, ei, t = unit
    cfg: SweepConfig = _shared["cfg"]
    A, G = _shared["A"], _shared["G"]
    k, ebn0_db = cfg.ks[ki], cfg.ebn0_db[ei]
    rho = k / cfg.M
    x = sample_bernoulli_signal(cfg.M, rho, trial_rng(cfg.seed, _SIGNAL, k, t))
    z = trial_rng(cfg.seed, _NOISE, k, t).standard_normal(cfg.n)
    out = {}

    sigma = ebn0_to_sigma(ebn0_db, A.column_energy(), cfg.bits)
    y = A.matvec(x) + sigma * z
    steps = glauber.default_steps(cfg.M) if cfg.steps is None else cfg.steps
    lam = glauber.prior_log_odds(rho)
    glauber_seed = trial_rng(cfg.seed, _DECODER, k, ei, t)

    nnls_x, nnls_ms = None, 0.0
    if "nnls" in cfg.decoders or "glauber-nnls" in cfg.decoders:
        sol, nnls_ms = _timed(lambda: nnls.nnls_solve(A, y, nnls.NnlsConfig(max_iters=cfg.nnls_max_iters)).x)
        nnls_x = nnls.round_binary(sol)
        if "nnls" in cfg.decoders:
            out["nnls"] = (ber(x, nnls_x, k), nnls_ms)
    for name, x0 in (("glauber-zero", None), ("glauber-nnls", nnls_x)):
        if name in cfg.decoders:
            gc = glauber.GlauberConfig(steps, sigma * sigma, lam, seed=glauber_seed)
            res, ms = _timed(lambda: glauber.run(A, y, gc, x0=x0))
            out[name] = (ber(x, res.x, k), ms + (nnls_ms if x0 is not None else 0.0))
    if G is not None:
        sigma_g = ebn0_to_sigma(ebn0_db, G.column_energy(), cfg.bits)
        yg = G.matvec(x) + sigma_g * z
        res, ms = _timed(lambda: amp.amp_run(G, yg, rho, cfg.amp_iters))
        out["amp"] = (ber(x, res.x_hat, k), ms)
    return out


def run_ber_sweep(cfg: SweepConfig, progress=None) -> SweepResult:
    units = [(ki, ei, t) for ki in range(len(cfg.ks)) for ei in range(len(cfg.ebn0_db)) for t in range(cfg.trials)]
    if cfg.workers > 1 and units:
        with ProcessPoolExecutor(cfg.workers, initializer=_setup, initargs=(cfg,)) as ex:
            results = list(ex.map(_run_unit, units, chunksize=max(1, len(units) // (8 * cfg.workers))))
    else:
        if units:
            _setup(cfg)
        results = []
        for u in units:
            results.append(_run_unit(u))
            if progress:
                progress(u)
    _shared.clear()

    by_key: dict = {}
    for (ki, ei, _), res in zip(units, results):
        for dec, (b, ms) in res.items():
            by_key.setdefault((dec, ki, ei), []).append((b, ms))
    rows, per_trial = [], {}
    for dec in cfg.decoders:
        for ki, k in enumerate(cfg.ks):
            for ei, e in enumerate(cfg.ebn0_db):
                vals = by_key.get((dec, ki, ei), [])
                if not vals:
                    continue
                b = np.array([v[0] for v in vals])
                ms = np.array([v[1] for v in vals])
                se = float(b.std(ddof=1) / math.sqrt(b.size)) if b.size > 1 else math.nan
                rows.append(SweepRow(dec, k, e, b.size, float(b.mean()), se, float(ms.mean())))
                per_trial[(dec, k, e)] = b
    return SweepResult(rows, per_trial)


# ---------------------------------------------------------------------------
# single trajectory


@dataclass
class TrajectoryRun:
    steps: np.ndarray
    energy: np.ndarray
    ber: np.ndarray
    true_energy: float
    unit: float              # M * log2(M) steps
    final_ber: float
    states: list | None = None
    x_true: np.ndarray | None = None
    y: np.ndarray | None = None


def run_trajectory(M: int = 2 ** 14, n: int = 2 ** 11, nu: int = 16, k: int = 100, ebn0_db: float = 1.0,
                   steps: int | None = None, stride: int | None = None, seed: int = 0,
                   keep_states: bool = False, anneal_from: float | None = None) -> TrajectoryRun:
    """One zero-initialized Glauber run with energy and BER recorded along the way."""
    params = sensing.LdpcParams.from_sizes(M, n, nu)
    A = sensing.sample_gallager(params, trial_rng(seed, _MATRIX))
    rho = k / M
    x = sample_bernoulli_signal(M, rho, trial_rng(seed, _SIGNAL, k, 0))
    sigma = ebn0_to_sigma(ebn0_db, A.column_energy(), math.log2(M))
    y = A.matvec(x) + sigma * trial_rng(seed, _NOISE, k, 0).standard_normal(n)
    steps = glauber.default_steps(M) if steps is None else steps
    lam = glauber.prior_log_odds(rho)
    cfg = glauber.GlauberConfig(steps, sigma * sigma, lam, anneal_from=anneal_from,
                                seed=trial_rng(seed, _DECODER, k, 0, 0), record_trajectory=True,
                                trajectory_stride=stride or M, record_states=keep_states)
    res = glauber.run(A, y, cfg, reference=x, ber_scale=k)
    truth = glauber.init_state(A, y, x)
    tr = res.trajectory
    return TrajectoryRun(np.array(tr.steps), np.array(tr.energy), np.array(tr.ber),
                         truth.energy(sigma * sigma, lam), M * math.log2(M), ber(x, res.x, k),
                         tr.states if keep_states else None, x, y)
