"""Command-line entry point: sc3sim {run,sweep,bounds,mc-detect,gen-params}.

CSV goes to stdout (or --out), diagnostics to stderr. Exit codes: 0 success,
2 configuration error, 3 simulation invariant violation.
"""

from __future__ import annotations

import argparse
import contextlib
import sys

from . import experiment
from .config import ConfigError, SweepSpec, load_config
from .hashcore import SearchExhausted, gen_params

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key = value file")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                   help="override one config key (repeatable)")
    p.add_argument("--seed", type=int, help="base seed (overrides base_seed)")
    p.add_argument("--reps", type=int, help="replications (overrides the config)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for replications")
    p.add_argument("--out", metavar="PATH", help="write CSV here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sc3sim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _common(sub.add_parser("run", help="simulate the configured algorithms"))
    sw = sub.add_parser("sweep", help="run over a list of values for one key")
    _common(sw)
    sw.add_argument("--param", required=True, help="config key to sweep")
    sw.add_argument("--values", required=True,
                    help="comma-separated values; use ';' as separator when values contain commas")
    _common(sub.add_parser("bounds", help="closed-form bounds for the configured fleet"))

    mc = sub.add_parser("mc-detect", help="Monte Carlo detection rate vs closed form")
    mc.add_argument("--pattern", required=True, choices=experiment.MC_PATTERNS)
    mc.add_argument("--check", default="lw", choices=experiment.MC_CHECKS)
    mc.add_argument("--trials", type=int, default=10_000)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--z", type=int, default=8, help="batch size")
    mc.add_argument("--z-tilde", type=int, default=2, help="corrupted count (sym-general)")
    mc.add_argument("--q", type=int, default=2**31 - 1)
    mc.add_argument("--rounds", type=int, help="rounds for --check mr (default ceil(log2 q))")
    mc.add_argument("--rho", type=float, default=0.3, help="corruption probability (random)")
    mc.add_argument("--out", metavar="PATH")

    gp = sub.add_parser("gen-params", help="print q, r, g, b one per line")
    gp.add_argument("--q-bits", type=int, default=31)
    gp.add_argument("--r-bits", type=int, default=62)
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--out", metavar="PATH")
    return ap


def _overrides(args) -> dict[str, str]:
    pairs = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        pairs[key.strip()] = value
    if args.seed is not None:
        pairs["base_seed"] = str(args.seed)
    if args.reps is not None:
        pairs["replications"] = str(args.reps)
    return pairs


@contextlib.contextmanager
def _output(path):
    if path:
        with open(path, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _dispatch(args) -> None:
    if args.command == "gen-params":
        p = gen_params(args.q_bits, args.r_bits, seed=args.seed)
        with _output(args.out) as fh:
            fh.write(f"{p.q}\n{p.r}\n{p.g}\n{p.b}\n")
        return
    if args.command == "mc-detect":
        row = experiment.mc_detect(args.pattern, args.trials, args.seed, args.z, args.z_tilde,
                                   args.q, args.check, args.rounds, args.rho)
        with _output(args.out) as fh:
            experiment.write_csv([row], fh, columns=list(row))
        return

    config = load_config(args.config, _overrides(args))
    if args.command == "bounds":
        row = experiment.bounds(config)
        with _output(args.out) as fh:
            experiment.write_csv([row], fh, columns=experiment.BOUND_COLUMNS)
        return
    if args.command == "run":
        rows = experiment.run(config, args.jobs)
    else:
        sep = ";" if ";" in args.values else ","
        values = tuple(v.strip() for v in args.values.split(sep) if v.strip())
        rows = experiment.sweep(SweepSpec(args.param, values, config), args.jobs)
    with _output(args.out) as fh:
        experiment.write_csv(rows, fh)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except (ConfigError, ValueError, SearchExhausted, OSError) as exc:
        print(f"sc3sim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except experiment.InvariantViolation as exc:
        print(f"sc3sim: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
