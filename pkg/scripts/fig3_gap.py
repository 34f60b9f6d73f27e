"""HW-only minus SC3 completion gap against honest speed, rho_c and R."""

from _common import parser, run_sweeps

if __name__ == "__main__":
    args = parser(__doc__, "gap.cfg").parse_args()
    run_sweeps(args, [
        ("fig3a_honest_speed.csv", "honest_mean", ["5:6", "3:4", "1:2"], {}),
        ("fig3b_rho_c.csv", "rho_c", ["0.1", "0.3", "0.5", "0.7", "0.9"], {}),
        ("fig3c_rows.csv", "r", ["100", "200", "400"], {}),
    ])
