"""Matched-load drive sweep: efficiency peaks, back-off, linearity, impedances."""
import argparse
from pathlib import Path

import numpy as np

from halmba.engine import amam_ampm, build_config, efficiency_peaks, first_peak_obo, pdlmba_sweep, sweep
from halmba.io import export_smith, export_sweep_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/matched")
    ap.add_argument("--phi-deg", type=float, default=0.0)
    args = ap.parse_args()
    cfg = build_config(phi=np.radians(args.phi_deg))
    res = sweep(cfg)
    pd = pdlmba_sweep(cfg)
    lin = amam_ampm(res)
    print(f"BA supplies: {cfg.ba1.v_dd:.6f} (BA1), {cfg.ba2.v_dd:.6f} (BA2)")
    print(f"efficiency maxima at beta = {[float(res.beta[k]) for k in efficiency_peaks(res)]}")
    print(f"first-peak OBO: {first_peak_obo(res):.4f} dB (PD-LMBA {first_peak_obo(pd):.4f} dB)")
    print(f"AM-AM span {lin.amam_span_db:.4f} dB, AM-PM span {lin.ampm_span_deg:.4g} deg")
    print(" beta   z_ca              z_ba1             z_ba2             eff")
    for b in (0.25, 0.5, 0.6, 0.75, 0.875, 1.0):
        k = int(np.argmin(np.abs(res.beta - b)))
        print(f" {b:5.3f}  {res.z_ca[k]:.4f}  {res.z_ba1[k]:.4f}  {res.z_ba2[k]:.4f}  {res.efficiency[k]:.4f}")
    out = Path(args.out)
    export_sweep_csv(res, out / "sweep_halmba.csv")
    export_sweep_csv(pd, out / "sweep_pdlmba.csv")
    export_smith(res, out / "smith_halmba.csv")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
