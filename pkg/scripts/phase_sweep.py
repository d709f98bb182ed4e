"""AM-AM/AM-PM spans and back-off efficiency versus the CA-BA phase offset."""
import argparse

import numpy as np

from halmba.engine import amam_ampm, build_config, efficiency_at_obo, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--load", type=complex, default=1.0)
    ap.add_argument("--step-deg", type=float, default=15.0)
    args = ap.parse_args()
    cfg = build_config()
    print("phi_deg  ampm_span_deg  amam_span_db  eff_at_10db_obo")
    for phi in np.arange(-180.0, 180.0, args.step_deg):
        res = sweep(cfg.replace(phi=np.radians(phi)), args.load)
        lin = amam_ampm(res)
        print(f"{phi:7.1f}  {lin.ampm_span_deg:13.4f}  {lin.amam_span_db:12.4f}  {efficiency_at_obo(res):15.4f}")


if __name__ == "__main__":
    main()
