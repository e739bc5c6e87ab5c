"""Command-line front end.

Subcommands reproduce the package's benchmark tables and figure datasets and
expose single solver/simulator runs.  All results go to stdout as CSV with a
header row (or JSON with --format json); diagnostics go to stderr.  Exit
codes: 0 success, 2 usage, 3 domain, 4 solver, 5 starvation.
"""

import argparse
import json
import math
import os
import sys

from .channel import ChannelParams, ContentionParams
from .errors import DomainError, PolicyError, SolverError, StarvationError
from .sim import SimConfig, run_replications
from .threshold import (LinearBackoffPolicy, PerfectCsiPolicy, SolverTrace,
                        optimize_backoff, optimize_perfect_csi, phi_linear,
                        solve_perfect_csi, sweep_training_time,
                        throughput_gain, throughput_gain_perfect_csi)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_SOLVER = 4
EXIT_STARVATION = 5


class UsageError(Exception):
    """Bad command-line/config usage not caught by argparse itself."""

DEFAULT_DELTA = 0.1
DEFAULT_PS = math.exp(-1.0)
DEFAULT_X0 = 0.5
DEFAULT_EPS = 1e-6
SEED_ENV_VAR = "DOS_LAB_SEED"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _emit(header: list, rows: list, args) -> None:
    """Write rows as CSV (fixed precision) or JSON to stdout or --out."""
    out = sys.stdout
    close = False
    if getattr(args, "out", None):
        out = open(args.out, "w")
        close = True
    try:
        if getattr(args, "format", "csv") == "json":
            records = [dict(zip(header, row)) for row in rows]
            json.dump(records if len(records) != 1 else records[0], out,
                      indent=2, sort_keys=True)
            out.write("\n")
        else:
            out.write(",".join(header) + "\n")
            for row in rows:
                out.write(",".join(_fmt(v) for v in row) + "\n")
    finally:
        if close:
            out.close()


def _contention(delta: float, p_s: float) -> ContentionParams:
    return ContentionParams.from_ratios(delta=delta, p_s=p_s)


def _channel(rho: float, alpha: float = None, beta: float = None) -> ChannelParams:
    if alpha is not None and beta is not None:
        raise DomainError("give either alpha or beta, not both")
    if beta is not None:
        return ChannelParams(rho=rho, beta=beta)
    return ChannelParams.from_alpha(rho, alpha if alpha is not None else 0.0)


def _trace_rows(trace: SolverTrace) -> list:
    return [(k, x, sigma) for k, x, sigma in trace.iterates]


def cmd_solve_perfect(args) -> int:
    x_star = solve_perfect_csi(args.rho, args.delta, args.ps)
    _emit(["x_star"], [(x_star,)], args)
    return EXIT_OK


def cmd_optimize(args) -> int:
    cont = _contention(args.delta, args.ps)
    ch = _channel(args.rho, args.alpha, args.beta)
    if ch.beta == 0.0:
        trace = optimize_perfect_csi(args.rho, cont, x0=args.x0, eps=args.eps)
    else:
        trace = optimize_backoff(ch, cont, x0=args.x0, eps=args.eps)
    _emit(["k", "x_k", "sigma_k"], _trace_rows(trace), args)
    return EXIT_OK


ROMAN_IDS = {"I": 1, "II": 2, "III": 3, "IV": 4, "1": 1, "2": 2, "3": 3, "4": 4}


def _convergence_table(rows, fixed_rho, fixed_alpha, num_iterate_cols, args):
    cont = _contention(args.delta, args.ps)
    header = ([("rho" if fixed_rho is None else "alpha")]
              + [f"x{k}" for k in range(num_iterate_cols + 1)]
              + ["x_star", "sigma_star"])
    out = []
    for value in rows:
        rho = value if fixed_rho is None else fixed_rho
        alpha = value if fixed_alpha is None else fixed_alpha
        if alpha == 0.0:
            trace = optimize_perfect_csi(rho, cont, x0=args.x0, eps=args.eps)
        else:
            trace = optimize_backoff(ChannelParams.from_alpha(rho, alpha), cont,
                                     x0=args.x0, eps=args.eps)
        xs = trace.x_values
        cells = [xs[k] if k < len(xs) else None for k in range(num_iterate_cols + 1)]
        sigma_star, x_star = trace.final
        out.append((value, *cells, x_star, sigma_star))
    _emit(header, out, args)
    return EXIT_OK


def _gain_table(rows, fixed_rho, fixed_alpha, args):
    cont = _contention(args.delta, args.ps)
    header = [("rho" if fixed_rho is None else "alpha"),
              "x_star", "x_baseline", "gain_percent"]
    out = []
    for value in rows:
        rho = value if fixed_rho is None else fixed_rho
        alpha = value if fixed_alpha is None else fixed_alpha
        if alpha == 0.0:
            x_star, x_l, gain = throughput_gain_perfect_csi(rho, cont)
        else:
            x_star, x_l, gain = throughput_gain(
                ChannelParams.from_alpha(rho, alpha), cont, x0=args.x0, eps=args.eps)
        out.append((value, x_star, x_l, 100.0 * gain))
    _emit(header, out, args)
    return EXIT_OK


def cmd_table(args) -> int:
    table_id = ROMAN_IDS.get(args.id.upper())
    if table_id is None:
        raise DomainError(f"unknown table id {args.id!r} (expected I, II, III or IV)")
    if table_id == 1:
        return _convergence_table([0.5, 1.0, 2.0, 5.0, 10.0], None, 1.0, 3, args)
    if table_id == 2:
        return _convergence_table([0.0, 0.1, 1.0, 2.0, 5.0], 1.0, None, 5, args)
    if table_id == 3:
        return _gain_table([0.5, 1.0, 2.0, 5.0, 10.0, 100.0], None, 1.0, args)
    return _gain_table([0.0, 0.01, 0.1, 1.0, 2.0, 5.0], 0.5, None, args)


def cmd_figure(args) -> int:
    cont = _contention(args.delta, args.ps)
    if args.id == "1":
        ch = _channel(args.rho[0] if args.rho else 1.0,
                      args.alpha[0] if args.alpha else 1.0, None)
        n = args.points
        rows = []
        for i in range(n):
            sigma = i / (n - 1)
            rows.append((sigma, phi_linear(args.x, sigma, ch, cont)))
        _emit(["sigma", "phi"], rows, args)
        return EXIT_OK

    if args.id == "2":
        rhos = args.rho or [0.5, 1.0, 2.0, 5.0, 10.0]
        alphas = args.alpha or [1.0]
        series = [(r, a) for r in rhos for a in alphas]
        sigma_star = {}
        for r, a in series:
            trace = optimize_backoff(ChannelParams.from_alpha(r, a), cont,
                                     x0=args.x0, eps=args.eps)
            sigma_star[(r, a)] = trace.final[0]
        n = args.points
        header = ["x"] + [f"phi_rho{r:g}_alpha{a:g}" for r, a in series]
        rows = []
        for i in range(n):
            x = args.x_max * i / (n - 1)
            row = [x]
            for r, a in series:
                row.append(phi_linear(x, sigma_star[(r, a)],
                                      ChannelParams.from_alpha(r, a), cont))
            rows.append(tuple(row))
        _emit(header, rows, args)
        return EXIT_OK

    if args.id == "3":
        rho = args.rho[0] if args.rho else 1.0
        alphas = args.alpha or [0.1, 0.2, 0.5, 1.0, 2.0, 5.0]
        rows = []
        for a in alphas:
            trace = optimize_backoff(ChannelParams.from_alpha(rho, a), cont,
                                     x0=args.x0, eps=args.eps)
            sigma, x_star = trace.final
            rows.append((a, sigma, x_star))
        _emit(["alpha", "sigma_star", "x_star"], rows, args)
        return EXIT_OK

    if args.id == "4":
        if not args.rho:
            raise UsageError("figure 4 requires at least one --rho")
        if args.T is None:
            raise UsageError("figure 4 requires --T (data slot duration)")
        taus = [args.tau_min * (args.tau_max / args.tau_min) ** (i / (args.tau_points - 1))
                for i in range(args.tau_points)]
        curves = {}
        for r in args.rho:
            points, tau_star = sweep_training_time(r, args.T, taus, args.ps,
                                                   x0=args.x0, eps=args.eps)
            curves[r] = points
            print(f"rho={r:g}: throughput peaks at tau={tau_star:g}", file=sys.stderr)
        header = ["tau"] + [f"x_star_rho{r:g}" for r in args.rho]
        rows = []
        for i, tau in enumerate(taus):
            rows.append(tuple([tau] + [curves[r][i].x_star for r in args.rho]))
        _emit(header, rows, args)
        return EXIT_OK

    raise DomainError(f"unknown figure id {args.id!r}")


def _load_config(path: str, known_keys) -> dict:
    """Flat key=value config; '#' starts a comment; unknown keys are rejected."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, _, text = line.partition("=")
            key = key.strip().replace("-", "_")
            text = text.strip()
            if key not in known_keys:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = text
    return values


_SIMULATE_KEYS = {
    "rho": float, "alpha": float, "beta": float, "delta": float, "ps": float,
    "sigma": float, "threshold": float, "auto_policy": bool, "episodes": int,
    "replications": int, "seed": int, "parallel": bool, "workers": int,
    "max_expected_probes": float, "format": str, "out": str,
}


def _coerce(text: str, kind):
    if kind is bool:
        lowered = text.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"expected a boolean, got {text!r}")
    return kind(text)


def cmd_simulate(args) -> int:
    settings = {}
    if args.config:
        for key, text in _load_config(args.config, _SIMULATE_KEYS).items():
            settings[key] = _coerce(text, _SIMULATE_KEYS[key])
    for key in _SIMULATE_KEYS:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            settings[key] = flag

    def setting(key, default=None):
        return settings.get(key, default)

    if setting("rho") is None:
        raise UsageError("simulate requires --rho (or rho= in the config file)")
    seed = setting("seed")
    if seed is None:
        seed = int(os.environ.get(SEED_ENV_VAR, "0"))
    ch = _channel(setting("rho"), setting("alpha"), setting("beta"))
    cont = _contention(setting("delta", DEFAULT_DELTA), setting("ps", DEFAULT_PS))

    if setting("auto_policy", False):
        if ch.beta == 0.0:
            policy = PerfectCsiPolicy(solve_perfect_csi(ch.rho, cont.delta, cont.p_s))
        else:
            sigma_star, x_star = optimize_backoff(ch, cont).final
            policy = LinearBackoffPolicy(sigma=sigma_star, threshold_x=x_star)
    elif setting("threshold") is not None:
        if ch.beta == 0.0:
            policy = PerfectCsiPolicy(setting("threshold"))
        else:
            if setting("sigma") is None:
                raise UsageError("an explicit noisy-channel policy needs --sigma")
            policy = LinearBackoffPolicy(sigma=setting("sigma"),
                                         threshold_x=setting("threshold"))
    else:
        raise UsageError("choose a policy: --auto-policy or --threshold [--sigma]")

    cfg = SimConfig(
        channel=ch, contention=cont, policy=policy,
        num_transmissions=setting("episodes", 100_000),
        seed=seed,
        num_replications=setting("replications", 1),
        max_expected_probes=setting("max_expected_probes", 1e7),
    )
    report = run_replications(cfg, parallel=setting("parallel", False),
                              max_workers=setting("workers"))
    args.format = setting("format", "csv")
    args.out = setting("out")
    sigma = policy.sigma if isinstance(policy, LinearBackoffPolicy) else None
    header = ["rho", "beta", "sigma", "threshold_x", "episodes", "replications",
              "seed", "empirical_throughput", "ci_halfwidth_95", "outage_fraction",
              "mean_probes_per_transmission", "total_rounds"]
    row = (ch.rho, ch.beta, sigma, policy.threshold_x, cfg.num_transmissions,
           cfg.num_replications, seed, report.empirical_throughput,
           report.ci_halfwidth_95, report.outage_fraction,
           report.mean_probes_per_transmission, report.total_rounds)
    _emit(header, [row], args)
    return EXIT_OK


def _add_common(parser, with_solver_knobs=True):
    parser.add_argument("--delta", type=float, default=DEFAULT_DELTA,
                        help="contention overhead ratio tau/T (default 0.1)")
    parser.add_argument("--ps", type=float, default=DEFAULT_PS,
                        help="successful-contention probability (default exp(-1))")
    if with_solver_knobs:
        parser.add_argument("--x0", type=float, default=DEFAULT_X0,
                            help="initial threshold for the iterative solver")
        parser.add_argument("--eps", type=float, default=DEFAULT_EPS,
                            help="convergence tolerance on successive thresholds")
    parser.add_argument("--out", help="write output to this file instead of stdout")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dos-lab",
        description="Distributed opportunistic scheduling under noisy channel "
                    "estimation: threshold solvers, backoff optimization and a "
                    "renewal-reward simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-perfect", help="optimal threshold under perfect CSI")
    p.add_argument("--rho", type=float, required=True, help="receiver SNR (linear)")
    _add_common(p, with_solver_knobs=False)
    p.set_defaults(func=cmd_solve_perfect)

    p = sub.add_parser("optimize",
                       help="optimal backoff ratio and threshold (iterate trace)")
    p.add_argument("--rho", type=float, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--alpha", type=float, help="normalized error variance")
    group.add_argument("--beta", type=float, help="estimation-error variance")
    _add_common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("table", help="reproduce a benchmark table as CSV")
    p.add_argument("id", help="table id: I (convergence vs SNR), II (convergence "
                              "vs error variance), III (gain vs SNR), IV (gain vs "
                              "error variance)")
    _add_common(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("figure", help="dataset behind a benchmark figure as CSV")
    p.add_argument("id", choices=("1", "2", "3", "4"),
                   help="1: throughput vs backoff ratio; 2: throughput map vs "
                        "threshold; 3: optimal backoff vs error variance; "
                        "4: throughput vs training time")
    p.add_argument("--x", type=float, default=0.1,
                   help="threshold for figure 1 (default 0.1)")
    p.add_argument("--rho", type=float, action="append",
                   help="SNR value (repeatable; figure 4 requires it)")
    p.add_argument("--alpha", type=float, action="append",
                   help="normalized error variance (repeatable)")
    p.add_argument("--T", type=float, help="data slot duration (figure 4)")
    p.add_argument("--tau-min", type=float, default=0.05)
    p.add_argument("--tau-max", type=float, default=8.0)
    p.add_argument("--tau-points", type=int, default=25)
    p.add_argument("--x-max", type=float, default=1.2,
                   help="threshold-axis upper limit for figure 2")
    p.add_argument("--points", type=int, default=201, help="grid resolution")
    _add_common(p)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("simulate", help="Monte Carlo run of the protocol")
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--rho", type=float)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--alpha", type=float)
    group.add_argument("--beta", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--ps", type=float)
    p.add_argument("--sigma", type=float, help="linear backoff ratio")
    p.add_argument("--threshold", type=float, help="stopping threshold")
    p.add_argument("--auto-policy", action="store_true",
                   help="solve for the optimal policy before simulating")
    p.add_argument("--episodes", type=int, help="transmissions per replication")
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int,
                   help=f"RNG seed (falls back to ${SEED_ENV_VAR}, then 0)")
    p.add_argument("--parallel", action="store_true",
                   help="run replications on a thread pool")
    p.add_argument("--workers", type=int)
    p.add_argument("--max-expected-probes", type=float, dest="max_expected_probes")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"))
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, PolicyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except StarvationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STARVATION
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
