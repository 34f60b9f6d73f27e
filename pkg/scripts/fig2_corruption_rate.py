"""Completion time against the per-packet corruption probability."""

from _common import parser, run_sweeps

if __name__ == "__main__":
    ap = parser(__doc__, "scaled.cfg")
    ap.add_argument("--values", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    args = ap.parse_args()
    run_sweeps(args, [("fig2_rho_c.csv", "rho_c", args.values.split(","), {})])
