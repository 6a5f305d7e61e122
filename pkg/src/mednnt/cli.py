"""Command-line entry point: ``mednnt {estimate,simulate,oracle,example,generate}``.

Exit codes: 0 ok, 2 usage, 3 data problems, 4 numerical failures.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import reporting
from .core import EmptyGroup
from .effects import closed_form_example
from .glm import DidNotConverge, RankDeficientDesign
from .inference import SingularBread, sandwich
from .links import LinkFamily
from .simulate import SimulationConfig, coverage_study, generate, mc_oracle
from .stack import solve

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

logger = logging.getLogger("mednnt")

# migration example: (p_d(0), p_d(1)), E[M_1 - M_0 | A=a], E[I_{0,1} - I_{0,0} | A=a], exposed share
EXAMPLE_INPUTS = dict(pd0=0.3, pd1=0.2, med_contrast=(0.8, 0.5), out_contrast=(0.5, 0.6), exposed_share=0.3)


def _vector(size: int):
    def parse(text: str) -> tuple[float, ...]:
        try:
            vals = tuple(float(v) for v in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {size} comma-separated numbers, got {text!r}")
        if len(vals) != size:
            raise argparse.ArgumentTypeError(f"expected {size} comma-separated numbers, got {len(vals)}")
        return vals
    return parse


def _level(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return value


def _add_model_flags(p: argparse.ArgumentParser, n_default: int) -> None:
    d = SimulationConfig()
    p.add_argument("--family", choices=[f.value for f in LinkFamily], default="logit")
    p.add_argument("--mu", type=float, default=d.mu)
    p.add_argument("--sigma", type=float, default=d.sigma)
    p.add_argument("--delta", type=_vector(2), default=d.delta)
    p.add_argument("--gamma", type=_vector(3), default=d.gamma)
    p.add_argument("--beta", type=_vector(4), default=d.beta)
    p.add_argument("--n", type=int, default=n_default)
    p.add_argument("--seed", type=int, default=d.seed)


def _config(args, **extra) -> SimulationConfig:
    return SimulationConfig(mu=args.mu, sigma=args.sigma, delta=args.delta, gamma=args.gamma,
                            beta=args.beta, family=args.family, n=args.n, seed=args.seed, **extra)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mednnt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the nine indices from a CSV file")
    p.add_argument("--input", required=True, type=Path)
    for role, default in reporting.DEFAULT_COLUMNS.items():
        p.add_argument(f"--{role}", default=default, help=f"column name (default {default})")
    p.add_argument("--family", choices=[f.value for f in LinkFamily], default="logit")
    p.add_argument("--level", type=_level, default=0.95)
    p.add_argument("--out", type=Path, help="write JSON here instead of stdout")

    p = sub.add_parser("simulate", help="run the coverage study")
    _add_model_flags(p, n_default=1600)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--draws", type=int, default=2_000_000, help="Monte Carlo draws for the true values")
    p.add_argument("--level", type=_level, default=0.95)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="JSON report; per-replication CSV goes alongside")

    p = sub.add_parser("oracle", help="true effects and indices by Monte Carlo integration")
    _add_model_flags(p, n_default=1600)
    p.add_argument("--draws", type=int, default=10_000_000)
    p.add_argument("--out", type=Path, help="JSON output; an index CSV is written alongside")

    p = sub.add_parser("example", help="closed-form migration example")
    p.add_argument("--json", action="store_true", help="print the JSON document instead of the table")

    p = sub.add_parser("generate", help="write one simulated cohort as CSV")
    _add_model_flags(p, n_default=1600)
    p.add_argument("--rep", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    return parser


def cmd_estimate(args) -> int:
    columns = {role: getattr(args, role) for role in reporting.DEFAULT_COLUMNS}
    data = reporting.read_csv(args.input, columns)
    data.check_groups()
    theta = solve(data, args.family)
    result = sandwich(data, theta, args.family)
    if result.singular:
        raise SingularBread(f"bread matrix condition number {result.condition:.3g} exceeds threshold")
    doc = reporting.estimate_report(data, theta, result, LinkFamily.parse(args.family), args.level,
                                    source=str(args.input))
    text = reporting.dump_json(doc, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _config(args, reps=args.reps, level=args.level)
    truth = mc_oracle(config, draws=args.draws)
    report = coverage_study(config, truth, workers=args.workers)
    reporting.dump_json(reporting.coverage_document(report), args.out)
    reporting.write_replications_csv(report, args.out.with_suffix(".replications.csv"))
    for k, v in report.coverage.items():
        print(f"{k:<5} coverage {v:.3f}")
    print(f"excluded {report.percent_excluded:.2f}% {report.excluded_by_reason}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    config = _config(args)
    result = mc_oracle(config, draws=args.draws)
    doc = reporting.oracle_document(result, config)
    if args.out is not None:
        reporting.dump_json(doc, args.out)
        csv_path = args.out.with_suffix(".indices.csv")
        with csv_path.open("w") as fh:
            fh.write("index,value\n")
            for k, v in result.indices.items():
                fh.write(f"{k},{'inf' if v.is_infinite else repr(v.value)}\n")
    print(reporting.format_index_table(result.indices))
    return EXIT_OK


def cmd_example(args) -> int:
    effects = closed_form_example(**EXAMPLE_INPUTS)
    if args.json:
        sys.stdout.write(reporting.dump_json(reporting.example_report(effects, EXAMPLE_INPUTS["exposed_share"])))
    else:
        print(reporting.format_index_table(effects.indices))
    return EXIT_OK


def cmd_generate(args) -> int:
    data = generate(_config(args), args.rep)
    reporting.write_csv(data, args.out)
    return EXIT_OK


COMMANDS = {"estimate": cmd_estimate, "simulate": cmd_simulate, "oracle": cmd_oracle,
            "example": cmd_example, "generate": cmd_generate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    except reporting.ParseError as exc:
        print(f"error: parse error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EmptyGroup as exc:
        print(f"error: empty exposure group: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RankDeficientDesign as exc:
        print(f"error: rank-deficient design: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DidNotConverge as exc:
        print(f"error: regression did not converge: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SingularBread as exc:
        print(f"error: singular sandwich bread: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
