"""Command-line entry point: ``tuplewise-clt <subcommand> ...``.

Subcommands::

    sample   write one window of Y, X or X-tilde as CSV (index,value[,mark])
    moment   Monte Carlo E[S(process, h)]^power with a standard error
    oracle   exact reference values (deficit-bound, partial-sum-moment, ...)
    mixing   dependence gap table for two cylinder events over several lags
    verify   run harness suites from a config file

Exit status is 0 on success, 1 when a verification test fails and 2 on a
usage or parameter error.  Stochastic subcommands require ``--seed``.

Cylinder specs use the grammar ``i:(a,b];j:[c,d);marks=0110;len=N``, for
example ``--specA "0:(0.5,inf)" --specB "0:(-inf,-0.3)"``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from . import __version__, oracle
from .construction import canonical_process, sample_x_window, sample_xtilde_window, sample_y_window
from .cylinder import parse_cylinder
from .harness import (
    ConfigError,
    ExperimentConfig,
    OutputError,
    UnknownSuiteError,
    emit_report,
    load_config,
    verify_suite,
)
from .params import ConstructionParams, NumericError, ParameterError
from .rng import MAX_SEED, stream
from .stats import estimate_moment, mixing_gap_table

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_PROCESS_CHOICES = ("y", "x", "xtilde")


class UsageError(Exception):
    """Raised for invalid flag values; reported with the subcommand usage."""


# ---------------------------------------------------------------------------
# argument types


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64 - 1]")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text.replace("_", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonnegative(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    try:
        items = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not items:
        raise argparse.ArgumentTypeError("list must not be empty")
    return items


def _number(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a number such as 0.5 or 1/2, got {text!r}") from None


# ---------------------------------------------------------------------------
# parser


def _common(sub: argparse.ArgumentParser, seed_required: bool) -> None:
    sub.add_argument("--seed", type=_seed, required=seed_required,
                     help="root seed" + ("" if seed_required else " (accepted; this subcommand is deterministic)"))
    sub.add_argument("--json", action="store_true", help="machine-readable output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tuplewise-clt",
        description="Simulate and verify the tuplewise independent non-CLT construction.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True, metavar="{sample,moment,oracle,mixing,verify}")

    s = subs.add_parser("sample", help="write one sampled window as CSV")
    s.add_argument("--process", required=True, choices=_PROCESS_CHOICES)
    s.add_argument("--L", type=int, default=6)
    s.add_argument("--level", type=_nonnegative, required=True)
    s.add_argument("--length", type=_positive, required=True)
    s.add_argument("--p", type=float, default=0.5, help="thinning probability (xtilde only)")
    s.add_argument("--out", help="output CSV path (default: stdout)")
    _common(s, True)

    m = subs.add_parser("moment", help="Monte Carlo moment of a window sum")
    m.add_argument("--process", required=True, choices=_PROCESS_CHOICES)
    m.add_argument("--L", type=int, default=6)
    m.add_argument("--level", type=_nonnegative, required=True)
    m.add_argument("--h", type=_positive, required=True)
    m.add_argument("--power", type=_positive, required=True)
    m.add_argument("--reps", type=_positive, required=True)
    m.add_argument("--p", type=float, default=0.5)
    m.add_argument("--reference", type=_number,
                   help="reference value for the z-score (default: exact value when one is known)")
    m.add_argument("--workers", type=_positive, default=1)
    _common(m, True)

    o = subs.add_parser("oracle", help="exact reference values")
    o.add_argument("--query", required=True, choices=sorted(ORACLE_QUERIES))
    o.add_argument("--L", type=int, default=6)
    o.add_argument("--n", type=_nonnegative, help="level (deficit-bound) or window length (fourth-moment)")
    o.add_argument("--h", type=_positive)
    o.add_argument("--power", type=_positive)
    o.add_argument("--shifted", action="store_true")
    o.add_argument("--p", type=_number, default=Fraction(1, 2))
    o.add_argument("--m", type=_nonnegative, help="number of binomial trials")
    o.add_argument("--d", type=_positive, help="modulus")
    o.add_argument("--tol", type=_number, default=Fraction(1, 10**6))
    o.add_argument("--coords", help="monomial as index:exponent pairs, e.g. 0:1,1:1,2:2")
    _common(o, False)

    x = subs.add_parser("mixing", help="mixing gap table for two cylinder events")
    x.add_argument("--level", type=_nonnegative, required=True)
    x.add_argument("--N-list", dest="N_list", type=_int_list, required=True)
    x.add_argument("--specA", required=True)
    x.add_argument("--specB", required=True)
    x.add_argument("--reps", type=_positive, required=True)
    x.add_argument("--L", type=int, default=6)
    x.add_argument("--p", type=float, default=0.5)
    x.add_argument("--workers", type=_positive, default=1)
    _common(x, True)

    v = subs.add_parser("verify", help="run harness suites from a config file")
    v.add_argument("--config", help="config file (default: every suite at default scale)")
    v.add_argument("--suites", help="comma-separated suites overriding the config")
    v.add_argument("--workers", type=_positive)
    v.add_argument("--output", help="directory for JSON and CSV records")
    v.add_argument("--format", choices=("text", "csv", "json"), default="text")
    v.add_argument("--seed", type=_seed, help="override the config seed")
    v.add_argument("--json", action="store_true", help="machine-readable summary")
    return parser


# ---------------------------------------------------------------------------
# oracle queries


def _need(args, *names: str) -> list:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--query {args.query} needs " + ", ".join(f"--{n}" for n in missing))
    return [getattr(args, n) for n in names]


def _coords(text: str | None):
    if not text:
        raise UsageError("--query parity-moment needs --coords")
    try:
        pairs = [tuple(int(v) for v in item.split(":")) for item in text.split(",") if item.strip()]
    except ValueError:
        raise UsageError(f"bad --coords {text!r}; expected index:exponent pairs") from None
    if any(len(p) != 2 for p in pairs):
        raise UsageError(f"bad --coords {text!r}; expected index:exponent pairs")
    return pairs


def _q_deficit(a):
    (n,) = _need(a, "n")
    return oracle.deficit_bound_exact(a.L, n)


def _q_partial(a):
    h, power = _need(a, "h", "power")
    return oracle.exact_partial_sum_moment_level1_exact(h, power, a.shifted, a.L)


def _q_parity(a):
    return oracle.parity_moment_level1_exact(oracle.MomentQuery(_coords(a.coords)), a.L)


def _q_gmm(a):
    (h,) = _need(a, "h")
    return oracle.gaussian_mixture_moment_exact(h, a.L, a.p)


def _q_mod(a):
    m, d = _need(a, "m", "d")
    return oracle.binomial_mod_distribution_exact(m, d)


def _q_least(a):
    (d,) = _need(a, "d")
    return oracle.least_equidistributed_trials(d, a.tol)


def _q_tail(a):
    (h,) = _need(a, "h")
    return oracle.binomial_tail_half_exact(h)


def _q_fourth(a):
    (n,) = _need(a, "n")
    return oracle.normalized_fourth_moment_exact(n)


ORACLE_QUERIES = {
    "deficit-bound": _q_deficit,
    "clt-gap-constant": lambda a: oracle.clt_gap_constant_exact(a.L),
    "mixture-gap-constant": lambda a: 2 * oracle.clt_gap_constant_exact(a.L),
    "partial-sum-moment": _q_partial,
    "parity-moment": _q_parity,
    "gaussian-mixture-moment": _q_gmm,
    "binomial-mod": _q_mod,
    "least-equidistributed-trials": _q_least,
    "binomial-tail-half": _q_tail,
    "fourth-moment": _q_fourth,
}


def _show(x) -> str:
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _exact(x) -> str:
    return str(x)


# ---------------------------------------------------------------------------
# subcommands


def _params(args, level: int) -> ConstructionParams:
    return ConstructionParams(args.L, level, args.p, args.seed)


def _write_atomic(path: str, data: bytes) -> None:
    """Write via a sibling temp file and rename, so failures leave nothing behind."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_sample(args, out) -> int:
    process = canonical_process(args.process)
    params = _params(args, args.level)
    rng = stream(args.seed, "cli-sample", process, args.L, args.level, args.p)
    sampler = {"Y": sample_y_window, "X": sample_x_window, "X-tilde": sample_xtilde_window}[process]
    window = sampler(params, args.length, rng)
    index = range(window.start, window.start + len(window))
    if args.json:
        payload = {
            "process": process, "L": args.L, "level": args.level, "p": args.p, "seed": args.seed,
            "index": list(index), "values": [float(v) for v in window.values],
            "marks": None if window.marks is None else [int(v) for v in window.marks],
        }
        data = (json.dumps(payload) + "\n").encode()
    else:
        header = "index,value,mark" if window.marks is not None else "index,value"
        rows = [header]
        for k, i in enumerate(index):
            row = f"{i},{float(window.values[k])!r}"
            if window.marks is not None:
                row += f",{int(window.marks[k])}"
            rows.append(row)
        data = ("\n".join(rows) + "\n").encode()
    if args.out:
        try:
            _write_atomic(args.out, data)
        except OSError as exc:
            raise OutputError(f"cannot write {args.out}: {exc}") from exc
    else:
        out.write(data.decode())
    return EXIT_OK


def exact_moment_reference(process: str, L: int, level: int, h: int, power: int, p: float) -> float | None:
    """Known exact value of E[S(process, h)]^power, or None."""
    process = canonical_process(process)
    if power % 2:
        return 0.0  # every process is sign-symmetric
    if h == 1:
        base = oracle.abs_uniform_moment(power)
        return p * base if process == "X-tilde" else base
    if level == 1 and process in ("X", "Y") and h <= 3 * L and power <= L:
        return oracle.exact_partial_sum_moment_level1(h, power, process == "X", L)
    return None


def cmd_moment(args, out) -> int:
    params = _params(args, args.level)
    report = estimate_moment(args.process, params, args.h, args.power, args.reps, args.workers)
    ref = (float(args.reference) if args.reference is not None
           else exact_moment_reference(args.process, args.L, args.level, args.h, args.power, args.p))
    if ref is not None:
        report = report.against(ref)
    if args.json:
        out.write(json.dumps({
            "estimate": report.estimate, "std_error": report.std_error, "reps": report.reps,
            "exact_ref": report.exact_ref, "z_score": report.z_score,
        }) + "\n")
    else:
        line = f"estimate {report.estimate!r}  std_error {report.std_error:.6g}  reps {report.reps}"
        if ref is not None:
            line += f"  reference {ref!r}  z {report.z_score:+.3f}"
        out.write(line + "\n")
    return EXIT_OK


def cmd_oracle(args, out) -> int:
    value = ORACLE_QUERIES[args.query](args)
    if args.json:
        if isinstance(value, list):
            payload = {"query": args.query, "value": [float(v) for v in value], "exact": [_exact(v) for v in value]}
        else:
            payload = {"query": args.query, "value": float(value), "exact": _exact(value)}
        out.write(json.dumps(payload) + "\n")
    elif isinstance(value, list):
        out.write("\n".join(f"{k},{_show(v)}" for k, v in enumerate(value)) + "\n")
    else:
        out.write(_show(value) + "\n")
    return EXIT_OK


def cmd_mixing(args, out) -> int:
    params = _params(args, args.level)
    spec_a, spec_b = parse_cylinder(args.specA), parse_cylinder(args.specB)
    table = mixing_gap_table(params, spec_a, spec_b, args.N_list, args.reps, args.workers)
    rows = [
        {"N": g.N, "gap": g.gap.estimate, "std_error": g.gap.std_error, "z_score": g.gap.z_score,
         "p_a": g.p_a, "p_b": g.p_b, "p_ab": g.p_ab}
        for g in table
    ]
    if args.json:
        out.write(json.dumps({"specA": str(spec_a), "specB": str(spec_b), "level": args.level,
                              "seed": args.seed, "reps": args.reps, "rows": rows}) + "\n")
    else:
        out.write(f"# A = {spec_a}  B = {spec_b}  level {args.level}  seed {args.seed}  reps {args.reps}\n")
        out.write(f"{'N':>6} {'gap':>14} {'std_error':>12} {'z':>8}\n")
        for r in rows:
            out.write(f"{r['N']:>6} {r['gap']:>14.6g} {r['std_error']:>12.4g} {r['z_score']:>+8.2f}\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    if args.config and not Path(args.config).is_file():
        raise UsageError(f"--config {args.config}: no such file")
    config = load_config(args.config) if args.config else ExperimentConfig.default()
    overrides = {}
    if args.suites is not None:
        overrides["suites"] = tuple(s.strip() for s in args.suites.split(",") if s.strip())
    for name in ("workers", "output", "seed"):
        if getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    if overrides:
        config = ExperimentConfig.from_snapshot({**config.snapshot(), **overrides})
    result = verify_suite(config)
    if args.json:
        out.write(json.dumps({"status": result.status, "summary": result.summary,
                              "records": [r.to_dict() for r in result.records]}) + "\n")
    else:
        for record in result.records:
            out.write(emit_report(record, args.format).decode())
            out.write("\n")
        for name, counts in result.summary.items():
            out.write(f"{name}: {counts['pass']} passed, {counts['fail']} failed\n")
        out.write("status: " + ("PASS" if result.status == 0 else "FAIL") + "\n")
    return EXIT_FAIL if result.status else EXIT_OK


COMMANDS = {
    "sample": cmd_sample,
    "moment": cmd_moment,
    "oracle": cmd_oracle,
    "mixing": cmd_mixing,
    "verify": cmd_verify,
}


def dispatch(argv: list[str] | None = None, out=None, err=None) -> int:
    """Parse ``argv`` and run the subcommand; returns the exit status."""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed the usage and the offending flag
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    sub = parser._subparsers._group_actions[0].choices[args.command]
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, ParameterError, ConfigError, UnknownSuiteError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        err.write(sub.format_usage())
        err.write(f"{sub.prog}: error: {msg}\n")
        return EXIT_USAGE
    except (OutputError, NumericError, OSError) as exc:
        err.write(f"{sub.prog}: error: {exc}\n")
        return EXIT_FAIL


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
