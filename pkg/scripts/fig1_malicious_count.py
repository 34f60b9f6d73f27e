"""Completion time against the number of malicious workers."""

from _common import parser, run_sweeps

if __name__ == "__main__":
    ap = parser(__doc__, "scaled.cfg")
    ap.add_argument("--values", default="0,5,10,15,20,25")
    args = ap.parse_args()
    run_sweeps(args, [("fig1_n_m.csv", "n_m", args.values.split(","), {})])
