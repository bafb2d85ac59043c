"""Command-line front end.

    bincs gen-matrix --M 16384 --n 2048 --nu 16 --seed 1 -o A.el
    bincs decode --matrix A.el --k 100 --ebn0 2 --decoder glauber-zero
    bincs ber-sweep --preset reduced -o sweep.csv
    bincs trajectory --preset full -o traj.csv
    bincs e2e --k 50 --grid 0:4:0.5 --trials 50

Every subcommand accepts ``--config FILE`` with flat ``key = value`` lines
(keys are flag names with dashes or underscores); flags on the command line
win. Exit status: 0 ok, 2 invalid input, 1 runtime failure.
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
import time

import numpy as np

from . import amp, channel, experiments, glauber, nnls, sensing, ura
from .errors import FormatError, InfeasibleError, NumericalError, ParameterError

SCHEMA = "# schema=1"

PRESETS = {
    "ber-sweep": {
        "full": dict(M=2 ** 14, n=2 ** 11, nu=16, k=[50, 100, 200, 300], trials=100,
                      ebn0=[-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0]),
        "reduced": dict(M=2 ** 10, n=2 ** 7, nu=16, k=[6], trials=100,
                        ebn0=[-2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0],
                        decoders=["glauber-zero"]),
    },
    "trajectory": {
        "full": dict(M=2 ** 14, n=2 ** 11, nu=16, k=100, ebn0=1.0),
    },
}


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    """``a,b,c`` or ``lo:hi:step`` (inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"range must be lo:hi:step, got {text!r}")
        lo, hi, st = map(float, parts)
        if st <= 0 or hi < lo:
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        return ura.phase1_grid(lo, hi, st)
    return [float(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def write_csv(out, header, rows) -> None:
    out.write(SCHEMA + "\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_fmt(v) for v in row) + "\n")


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = open(self.path, "w", encoding="utf-8", newline="\n") if self.path else sys.stdout
        return self.fh

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()
        else:
            self.fh.flush()


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def _matrix_from_args(args) -> sensing.SparseBinaryMatrix:
    if getattr(args, "matrix", None):
        return sensing.load(args.matrix)
    for name in ("M", "n", "nu"):
        if getattr(args, name) is None:
            raise UsageError(f"--{name} is required (or pass --matrix)")
    params = sensing.LdpcParams.from_sizes(args.M, args.n, args.nu)
    return sensing.sample_gallager(params, channel.trial_rng(args.seed, 0))


def cmd_gen_matrix(args) -> int:
    for name in ("M", "n", "nu"):
        if getattr(args, name) is None:
            raise UsageError(f"--{name} is required")
    params = sensing.LdpcParams.from_sizes(args.M, args.n, args.nu)
    A = sensing.sample_gallager(params, args.seed)
    text = sensing.dumps(A)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    nu, s = params.var_degree, params.factor_degree
    if 2 <= nu < s:
        try:
            a = sensing.expansion_alpha_star(nu, s)
        except NumericalError:
            _log(f"edges={params.num_edges} (expansion equation has no root in (0, nu/s))")
        else:
            _log(f"edges={params.num_edges} alpha*={a:.6f} k*={sensing.heuristic_sparsity(a, params.num_vars, nu):.2f}")
    else:
        _log(f"edges={params.num_edges} (expansion heuristic needs 2 <= nu < s)")
    return 0


def cmd_decode(args) -> int:
    A = _matrix_from_args(args)
    M, n = A.params.num_vars, A.params.num_factors
    k = args.k
    if not 0 < k < M:
        raise UsageError("--k must satisfy 0 < k < M")
    rho = k / M
    bits = math.log2(M)
    rows = []
    for t in range(args.trials):
        x = channel.sample_bernoulli_signal(M, rho, channel.trial_rng(args.seed, 2, k, t))
        z = channel.trial_rng(args.seed, 3, k, t).standard_normal(n)
        t0 = time.perf_counter()
        if args.decoder == "amp":
            G = amp.DenseGaussianMatrix.sample(n, M, channel.trial_rng(args.seed, 1))
            sigma = channel.ebn0_to_sigma(args.ebn0, G.column_energy(), bits)
            t0 = time.perf_counter()
            x_hat = amp.amp_run(G, G.matvec(x) + sigma * z, rho, args.amp_iters).x_hat
        else:
            sigma = channel.ebn0_to_sigma(args.ebn0, A.column_energy(), bits)
            y = A.matvec(x) + sigma * z
            x0 = None
            if args.decoder in ("nnls", "glauber-nnls"):
                x0 = nnls.round_binary(nnls.nnls_solve(A, y).x)
            if args.decoder == "nnls":
                x_hat = x0
            else:
                steps = glauber.default_steps(M) if args.steps is None else args.steps
                cfg = glauber.GlauberConfig(steps, sigma * sigma, glauber.prior_log_odds(rho),
                                            anneal_from=args.anneal_from,
                                            seed=channel.trial_rng(args.seed, 4, k, 0, t))
                x_hat = glauber.run(A, y, cfg, x0=x0).x
        ms = 1e3 * (time.perf_counter() - t0)
        rows.append((args.decoder, k, args.ebn0, t, int(x.sum()), int(x_hat.sum()),
                     int(np.count_nonzero(x != x_hat)), channel.ber(x, x_hat, k), ms))
    with _Output(args.output) as out:
        write_csv(out, ("decoder", "k", "ebn0_db", "trial", "true_weight", "est_weight", "errors", "ber",
                        "runtime_ms"), rows)
    return 0


def cmd_ber_sweep(args) -> int:
    cfg = experiments.SweepConfig(
        M=args.M, n=args.n, nu=args.nu, ks=tuple(args.k), ebn0_db=tuple(args.ebn0), trials=args.trials,
        decoders=tuple(args.decoders), seed=args.seed, steps=args.steps, amp_iters=args.amp_iters,
        workers=args.workers)
    total = len(cfg.ks) * len(cfg.ebn0_db) * cfg.trials
    done = [0]

    def progress(_):
        done[0] += 1
        if args.verbose and done[0] % max(1, total // 20) == 0:
            _log(f"{done[0]}/{total} trials")

    res = experiments.run_ber_sweep(cfg, progress)
    with _Output(args.output) as out:
        write_csv(out, experiments.SweepRow.FIELDS,
                  ((getattr(r, f) for f in experiments.SweepRow.FIELDS) for r in res.rows))
    return 0


def cmd_trajectory(args) -> int:
    run = experiments.run_trajectory(M=args.M, n=args.n, nu=args.nu, k=args.k, ebn0_db=args.ebn0,
                                     steps=args.steps, stride=args.stride, seed=args.seed,
                                     keep_states=bool(args.checkpoints), anneal_from=args.anneal_from)
    rows = [(s / run.unit, int(s), e, b, run.true_energy, 0.0) for s, e, b in zip(run.steps, run.energy, run.ber)]
    with _Output(args.output) as out:
        write_csv(out, ("step_mj", "step", "energy", "ber", "true_energy", "true_ber"), rows)
    if args.checkpoints:
        np.savez_compressed(args.checkpoints, steps=run.steps, states=np.array(run.states, dtype=np.int8),
                            x_true=run.x_true, y=run.y)
    return 0


def cmd_e2e(args) -> int:
    rows = []
    for k in args.k:
        cfg = ura.UraConfig(k=k, B=args.B, J=args.J, n=args.n, n1=args.n1, alpha=args.alpha, nu=args.nu,
                            target_pupe=args.target, decoder=args.decoder, steps=args.steps)
        try:
            res = ura.optimize_budget(cfg, args.grid, trials=args.trials, seed=args.seed)
        except InfeasibleError as exc:
            _log(f"k={k}: {exc}")
            continue
        rows.extend(res.rows if args.all_rows else [res.best])
        _log(f"k={k}: best total Eb/N0 {res.best.total_ebn0_db:.3f} dB at phase-1 {res.best.phase1_ebn0_db} dB")
    with _Output(args.output) as out:
        write_csv(out, ura.BudgetRow.FIELDS, ((getattr(r, f) for f in ura.BudgetRow.FIELDS) for r in rows))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bincs", description="Binary compressed sensing experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, output=True):
        sp.add_argument("--config", help="key = value file; command-line flags take precedence")
        sp.add_argument("--seed", type=int, default=0, help="master seed")
        if output:
            sp.add_argument("-o", "--output", help="write CSV here instead of stdout")

    g = sub.add_parser("gen-matrix", help="sample an LDPC sensing matrix")
    common(g)
    g.add_argument("--M", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--nu", type=int)
    g.set_defaults(func=cmd_gen_matrix)

    d = sub.add_parser("decode", help="decode random signals with one decoder")
    common(d)
    d.add_argument("--matrix", help="edge-list file (otherwise sampled from --M/--n/--nu)")
    d.add_argument("--M", type=int)
    d.add_argument("--n", type=int)
    d.add_argument("--nu", type=int)
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--ebn0", type=float, required=True, help="dB")
    d.add_argument("--decoder", choices=experiments.DECODERS, default="glauber-zero")
    d.add_argument("--trials", type=int, default=1)
    d.add_argument("--steps", type=int)
    d.add_argument("--anneal-from", type=float, help="starting sigma^2 for annealing")
    d.add_argument("--amp-iters", type=int, default=25)
    d.set_defaults(func=cmd_decode)

    b = sub.add_parser("ber-sweep", help="BER versus Eb/N0 for several decoders and sparsities")
    common(b)
    b.add_argument("--preset", choices=sorted(PRESETS["ber-sweep"]))
    b.add_argument("--M", type=int, default=2 ** 14)
    b.add_argument("--n", type=int, default=2 ** 11)
    b.add_argument("--nu", type=int, default=16)
    b.add_argument("--k", type=_int_list, default=[50, 100, 200, 300])
    b.add_argument("--ebn0", type=_float_list, default=[0.0, 1.0, 2.0, 3.0, 4.0], help="dB list or lo:hi:step")
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--decoders", type=_str_list, default=list(experiments.DECODERS))
    b.add_argument("--steps", type=int)
    b.add_argument("--amp-iters", type=int, default=25)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("-v", "--verbose", action="store_true")
    b.set_defaults(func=cmd_ber_sweep)

    t = sub.add_parser("trajectory", help="energy and BER along one Glauber run")
    common(t)
    t.add_argument("--preset", choices=sorted(PRESETS["trajectory"]))
    t.add_argument("--M", type=int, default=2 ** 14)
    t.add_argument("--n", type=int, default=2 ** 11)
    t.add_argument("--nu", type=int, default=16)
    t.add_argument("--k", type=int, default=100)
    t.add_argument("--ebn0", type=float, default=1.0)
    t.add_argument("--steps", type=int)
    t.add_argument("--stride", type=int, help="recording stride in steps (default M)")
    t.add_argument("--anneal-from", type=float)
    t.add_argument("--checkpoints", help="save recorded states to this .npz file")
    t.set_defaults(func=cmd_trajectory)

    e = sub.add_parser("e2e", help="minimum total Eb/N0 for the three-phase URA scheme")
    common(e)
    e.add_argument("--k", type=_int_list, default=[25, 50, 100, 150, 200, 250, 300])
    e.add_argument("--B", type=int, default=100)
    e.add_argument("--J", type=int, default=14)
    e.add_argument("--n", type=int, default=29048, help="n - n1 must be divisible by every k")
    e.add_argument("--n1", type=int, default=2048)
    e.add_argument("--alpha", type=float, default=1.0)
    e.add_argument("--nu", type=int, default=16)
    e.add_argument("--target", type=float, default=0.05, help="per-user error target")
    e.add_argument("--decoder", choices=ura.PHASE1_DECODERS, default="glauber-zero")
    e.add_argument("--grid", type=_float_list, default=ura.phase1_grid(-1.0, 5.0, 0.25),
                   help="phase-1 Eb/N0 grid in dB (list or lo:hi:step)")
    e.add_argument("--trials", type=int, default=200)
    e.add_argument("--steps", type=int)
    e.add_argument("--all-rows", action="store_true", help="emit every grid row, not just the optimum")
    e.set_defaults(func=cmd_e2e)
    return p


def _config_defaults(parser, sub_name, path):
    cp = configparser.ConfigParser()
    cp.optionxform = str  # flag names are case-sensitive (--M vs --n)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_string("[config]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    sp = parser._subparsers._group_actions[0].choices[sub_name]
    actions = {a.dest: a for a in sp._actions}
    out = {}
    for key, raw in cp["config"].items():
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        act = actions[dest]
        if act.type is not None:
            out[dest] = act.type(raw)
        elif isinstance(act, argparse._StoreTrueAction):
            out[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            out[dest] = raw
    return out


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    preset = PRESETS.get(args.command, {}).get(getattr(args, "preset", None) or "", {})
    file_vals = _config_defaults(parser, args.command, args.config) if args.config else {}
    if preset or file_vals:
        sp = parser._subparsers._group_actions[0].choices[args.command]
        sp.set_defaults(**{**preset, **file_vals})
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return args.func(args)
    except (UsageError, ParameterError, FormatError, argparse.ArgumentTypeError) as exc:
        _log(f"error: {exc}")
        return 2
    except Exception as exc:  # noqa: BLE001
        _log(f"error: {type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
