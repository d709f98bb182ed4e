"""Reconfiguration on a VSWR circle: planned versus matched settings, both BA roles.

For every load the planner's choice is compared with both forced role
assignments, and the unreconfigured (matched-setting) sweep is shown for
reference. ``--ca-voltage-limit`` lets the CA saturate as a voltage source
whenever its supply is reached below beta_hbo.
"""
import argparse
import time

from halmba.engine import build_config
from halmba.reconfig import evaluate_plan, nominal_plan, plan, vswr_circle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--vswr", type=float, default=2.0)
    ap.add_argument("--step-deg", type=float, default=30.0)
    ap.add_argument("--phi-grid-deg", type=float, default=1.0)
    ap.add_argument("--ca-voltage-limit", action="store_true")
    args = ap.parse_args()
    cfg = build_config(ca_voltage_limit=args.ca_voltage_limit)
    t0 = time.perf_counter()
    print("gamma_deg  z               role  phi    obo_plan clip | obo_BA1 clip obo_BA2 clip | obo_nominal clip")
    for ld in vswr_circle(args.vswr, args.step_deg):
        p = plan(ld, cfg, grid_deg=args.phi_grid_deg)
        m = evaluate_plan(p, ld, cfg)[0]
        forced = {}
        for role in ("ba1", "ba2"):
            q = plan(ld, cfg, grid_deg=args.phi_grid_deg, role_policy=role)
            forced[role] = evaluate_plan(q, ld, cfg)[0]
        n = evaluate_plan(nominal_plan(cfg), ld, cfg)[0]
        print(
            f"{ld.gamma_phase_deg:9.1f}  {ld.z:.3f}  {p.primary_ba.value}  {p.phi_deg:5.1f}  "
            f"{m.first_peak_obo_db:8.3f} {m.clipping_count:4d} | "
            f"{forced['ba1'].first_peak_obo_db:7.3f} {forced['ba1'].clipping_count:4d} "
            f"{forced['ba2'].first_peak_obo_db:7.3f} {forced['ba2'].clipping_count:4d} | "
            f"{n.first_peak_obo_db:11.3f} {n.clipping_count:4d}"
        )
    print(f"{time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
