"""Command-line interface: ``sieve-lab <command> [options]``.

Every command writes ``{"meta": {...}, "data": {...}}`` as JSON (or a CSV
table with a header row) to stdout or ``--out``.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from datetime import datetime, timezone

from . import __version__, streams
from .errors import SieveLabError
from .exact import (
    Pattern,
    enumerate_finite,
    expected_kr,
    limit_marginal,
    limit_pmf,
    marginals_from_pmf,
)
from .laws import parse_law
from .limit import StopParams, simulate_limit_Kr, simulate_limit_Z
from .output import csv_text, dumps
from .sieve import STATISTICS, EmpiricalPmf, replicate

log = logging.getLogger("sieve_lab")


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def nonneg_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    return value


def seed_value(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def law_value(text):
    try:
        return parse_law(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parts_value(text):
    try:
        parts = tuple(int(p) for p in text.split(","))
        Pattern(parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid parts {text!r}: {exc}") from None
    return parts


# ---------------------------------------------------------------------------
# commands; each returns (data, csv_rows)


def cmd_moments(args):
    law = args.law
    data = {
        "a": args.a,
        "b": args.b,
        "joint_moment": law.joint_moment(args.a, args.b),
        "mu": law.mu(),
        "nu": law.nu(),
    }
    row = f"{args.a},{args.b},{data['joint_moment']!r},{data['mu']!r},{_num(data['nu'])}"
    return data, ["a,b,joint_moment,mu,nu", row]


def cmd_exact_pattern(args):
    pmf = enumerate_finite(args.law, args.n, args.kmax, floor=args.floor, budget=args.budget)
    marginals = marginals_from_pmf(pmf, z_depth=args.zdepth)
    return {"pmf": pmf.to_dict(), "marginals": marginals.to_dict()}, pmf.csv_rows()


def cmd_limit_pmf(args):
    if args.parts is not None:
        value = limit_pmf(args.law, args.parts)
        data = {"parts": list(args.parts), "probability": value}
        return data, ["parts,probability", f"{Pattern(args.parts).key},{value!r}"]
    coordinate, cap = args.marginal
    marginal = limit_marginal(args.law, coordinate, cap)
    rows = ["value,probability"] + [f"{k},{v!r}" for k, v in sorted(marginal.pmf.items())]
    return marginal.to_dict(), rows


def cmd_expected_kr(args):
    values = [expected_kr(args.law, r) for r in range(args.rmax + 1)]
    rows = ["r,expected"] + [f"{r},{_num(v)}" for r, v in enumerate(values)]
    return {"r": list(range(args.rmax + 1)), "expected": values}, rows


def cmd_simulate_sieve(args):
    run = replicate(
        args.law, args.n, args.reps, seed=args.seed, stat=args.stat, depth=args.depth,
        r_max=args.rmax, workers=args.workers,
    )
    if args.stat == "kr":
        rows = ["r,mean,se"] + [
            f"{r},{m!r},{s!r}" for r, (m, s) in enumerate(zip(run.kr_means, run.kr_se))
        ]
    else:
        rows = run.pmf.csv_rows()
    return run.to_dict(), rows


def cmd_simulate_limit(args):
    if args.kr is not None:
        stop = StopParams(args.consecutive, args.factor, args.gap_budget)
        summary = simulate_limit_Kr(
            args.law, args.kr, args.reps, seed=args.seed, stop=stop, workers=args.workers
        )
        rows = ["r,mean,se"] + [
            f"{r},{_num(m)},{_num(s)}" for r, (m, s) in enumerate(zip(summary.means, summary.ses))
        ]
        return summary.to_dict(), rows
    z = simulate_limit_Z(args.law, args.depth, args.reps, seed=args.seed, workers=args.workers)
    table = {}
    for row in map(tuple, z.tolist()):
        table[row] = table.get(row, 0) + 1
    pmf = EmpiricalPmf(table, args.reps)
    return {"depth": args.depth, "pmf": pmf.to_dict()}, pmf.csv_rows()


def cmd_verify(args):
    from .verify import Context, run_suite

    def progress(result):
        print(result.summary(), file=sys.stderr, flush=True)

    suite = run_suite(args.suite, Context(args.seed, args.workers), law=args.law, progress=progress)
    rows = ["criterion,title,passed"] + [
        f"{r.number},\"{r.title}\",{str(r.passed).lower()}" for r in suite.results
    ]
    return suite.payload(), rows, 0 if suite.passed else 1


def _num(x):
    return repr(x) if isinstance(x, float) and x == x and abs(x) != float("inf") else str(x)


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sieve-lab",
        description="Exact formulas and Monte Carlo for the Bernoulli sieve.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=seed_value, default=None,
                        help=f"master seed (default ${streams.SEED_ENV} or {streams.DEFAULT_SEED:#x})")
    common.add_argument("--workers", type=positive_int, default=1)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, law_required=True):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.add_argument("--law", type=law_value, required=law_required,
                       help="e.g. uniform, beta-theta:2, beta:1.5,2.5, heavy:1, "
                            "mixture:0.3*beta:1,1+0.7*beta:2,1")
        p.set_defaults(func=func)
        return p

    p = add("moments", cmd_moments, "joint moment E[W^a (1-W)^b], mu and nu")
    p.add_argument("--a", type=nonneg_int, default=0)
    p.add_argument("--b", type=nonneg_int, default=0)

    p = add("exact-pattern", cmd_exact_pattern, "exact finite-n pattern law and marginals")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--kmax", type=positive_int, required=True)
    p.add_argument("--floor", type=float, default=1e-16)
    p.add_argument("--budget", type=positive_int, default=2_000_000)
    p.add_argument("--zdepth", type=positive_int, default=8)

    p = add("limit-pmf", cmd_limit_pmf, "limit law of the occupancy counts")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--parts", type=parts_value, help="comma-separated n1,n2,...")
    g.add_argument("--marginal", type=positive_int, nargs=2, metavar=("L", "CAP"))

    p = add("expected-kr", cmd_expected_kr, "limit means of the small-part counts")
    p.add_argument("--rmax", type=nonneg_int, required=True)

    p = add("simulate-sieve", cmd_simulate_sieve, "finite-n Monte Carlo")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--reps", type=positive_int, required=True)
    p.add_argument("--stat", choices=STATISTICS, default="pattern")
    p.add_argument("--depth", type=positive_int, default=8)
    p.add_argument("--rmax", type=nonneg_int, default=None)

    p = add("simulate-limit", cmd_simulate_limit, "limit-model Monte Carlo")
    p.add_argument("--reps", type=positive_int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--depth", type=positive_int)
    g.add_argument("--kr", type=positive_int, metavar="RMAX")
    p.add_argument("--consecutive", type=positive_int, default=12)
    p.add_argument("--factor", type=float, default=4.0)
    p.add_argument("--gap-budget", type=positive_int, default=10_000_000)

    p = add("verify", cmd_verify, "acceptance suites; exit status 0 iff all checks pass",
            law_required=False)
    p.add_argument("--suite", choices=("basic", "full"), default="basic")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.seed is None:
        try:
            args.seed = streams.default_seed()
        except ValueError:
            parser.error(f"invalid ${streams.SEED_ENV}")
    try:
        out = args.func(args)
    except (SieveLabError, ValueError, OverflowError) as exc:
        print(f"sieve-lab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    data, rows = out[0], out[1]
    status = out[2] if len(out) > 2 else 0
    if args.format == "json":
        meta = {
            "law": args.law.spec if args.law is not None else None,
            "seed": args.seed,
            "command": args.command,
            "version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        text = dumps({"meta": meta, "data": data}) + "\n"
    else:
        text = csv_text(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        log.info("wrote %s", args.out)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            sys.stderr.close()
    return status


if __name__ == "__main__":
    sys.exit(main())
