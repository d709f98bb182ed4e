"""Piecewise transmission-line fit of a synthetic optimal phase-offset curve."""
import argparse

from halmba.cli import synthetic_phase_points
from halmba.phasefit import tl_phase_fit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise-deg", type=float, default=1.0)
    ap.add_argument("--max-segments", type=int, default=5)
    args = ap.parse_args()
    pts = synthetic_phase_points(args.seed, noise_deg=args.noise_deg)
    ref = float(pts[0, 0])
    for k in range(1, args.max_segments + 1):
        fit = tl_phase_fit(pts, k, ref)
        lengths = ", ".join(f"{s.electrical_length_deg:.1f}" for s in fit.segments)
        print(f"k={k}: max error {fit.max_abs_error_deg:7.3f} deg, breakpoints {fit.breakpoints}, lengths [{lengths}] deg at {ref} GHz")


if __name__ == "__main__":
    main()
