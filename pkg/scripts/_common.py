import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from sc3sim.config import SweepSpec, load_config  # noqa: E402
from sc3sim.experiment import sweep, write_csv  # noqa: E402

CONFIGS = Path(__file__).resolve().parent / "configs"


def parser(description, default_config):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--config", default=str(CONFIGS / default_config))
    ap.add_argument("--reps", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--outdir", default="results")
    return ap


def run_sweeps(args, studies):
    """studies: list of (csv name, parameter, values, extra overrides)."""
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, param, values, extra in studies:
        overrides = dict(extra)
        if args.reps:
            overrides["replications"] = str(args.reps)
        base = load_config(args.config, overrides)
        rows = sweep(SweepSpec(param, tuple(values), base), args.jobs)
        path = out / name
        with path.open("w", newline="") as fh:
            write_csv(rows, fh)
        summary(rows, param)
        print(f"wrote {path}", file=sys.stderr)


def summary(rows, param):
    print(f"{param:>12} {'algorithm':>12} {'mean':>9} {'ci95':>7}")
    for r in rows:
        if r["replication"] == "mean" and r["algorithm"] != "bounds":
            ci = next(x for x in rows if x["sweep_value"] == r["sweep_value"]
                      and x["algorithm"] == r["algorithm"] and x["replication"] == "ci95")
            print(f"{r['sweep_value']:>12} {r['algorithm']:>12} {r['completion_time']:9.2f} "
                  f"{ci['completion_time']:7.2f}")
