"""Command-line entry point: ``halmba <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 IO failure.
Failures print a one-line JSON summary on stderr.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import io as hio
from .engine import Mode, NoBackoffPeakError, SweepError, UndefinedGainError, first_peak_obo, sweep
from .network import NetworkError
from .phasefit import tl_phase_fit
from .reconfig import evaluate_plan, nominal_plan, optimize_phase, plan

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail(EXIT_CONFIG, "config", message, [message])


def _fail(code: int, kind: str, message: str, problems=None):
    doc = {"status": "error", "kind": kind, "exit_code": code, "message": message}
    if problems:
        doc["problems"] = list(problems)
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
    raise SystemExit(code)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML scenario file")
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--load", help="normalized load impedance, e.g. 2.0+0.0j")
    common.add_argument("--vswr", type=float, help="VSWR circle magnitude")
    common.add_argument("--step-deg", type=float, help="reflection phase step on the VSWR circle")
    common.add_argument("--mode", choices=["halmba", "pdlmba"])
    common.add_argument("--objective", choices=["ampm", "amam", "eff", "weighted"])
    common.add_argument("--phi-grid-deg", type=float, help="phase-offset search spacing")
    common.add_argument("--segments", type=int, help="transmission-line segments for tlfit")
    common.add_argument("--seed", type=int, default=0, help="seed for synthetic tlfit data")
    p = _Parser(prog="halmba", description="H-ALMBA behavioral simulator and reconfiguration planner")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("sweep", parents=[common], help="drive sweep at one load")
    sub.add_parser("mismatch-grid", parents=[common], help="plan and evaluate every load on a VSWR circle")
    sub.add_parser("phase-opt", parents=[common], help="phase-offset search table at one load")
    t = sub.add_parser("tlfit", parents=[common], help="piecewise transmission-line fit of phase offsets")
    t.add_argument("--input", help="CSV with freq,phi_deg columns (synthetic data if omitted)")
    t.add_argument("--ref-freq", type=float, help="reference frequency for electrical lengths")
    sub.add_parser("compare", parents=[common], help="H-ALMBA versus PD-LMBA sweeps")
    return p


def scenario_from_args(args) -> hio.ScenarioConfig:
    doc = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise hio.ExportError(f"cannot read config {args.config}: {exc}") from exc
        cfg = hio.parse_config(text)
        doc = hio.config_to_dict(cfg)
    else:
        doc = hio.config_to_dict(hio.ScenarioConfig())
    if args.load is not None:
        doc["load"].update(z=args.load, vswr=None)
    if args.vswr is not None:
        doc["load"].update(vswr=args.vswr, z=None)
    if args.step_deg is not None:
        doc["load"]["step_deg"] = args.step_deg
    if args.mode is not None:
        doc["architecture"]["mode"] = args.mode
    if args.objective is not None:
        doc["plan"]["objective"] = args.objective
    if args.phi_grid_deg is not None:
        doc["plan"]["phi_grid_deg"] = args.phi_grid_deg
    if args.segments is not None:
        doc["tlfit"]["segments"] = args.segments
    if args.out is not None:
        doc["output"]["dir"] = args.out
    if getattr(args, "input", None) is not None:
        doc["tlfit"]["input"] = args.input
    if getattr(args, "ref_freq", None) is not None:
        doc["tlfit"]["ref_freq"] = args.ref_freq
    return hio.config_from_dict(doc)


def _search_kwargs(sc: hio.ScenarioConfig) -> dict:
    return {"efficiency_floor_pp": sc.plan.efficiency_floor_pp, "weights": sc.plan.weights}


def cmd_sweep(sc: hio.ScenarioConfig, out: Path) -> list[str]:
    cfg = sc.architecture_config()
    load = sc.loads()[0]
    res = sweep(cfg, load.z * cfg.z0)
    hio.export_sweep_csv(res, out / "sweep.csv")
    hio.export_smith(res, out / "smith.csv")
    return ["sweep.csv", "smith.csv"]


def cmd_mismatch_grid(sc: hio.ScenarioConfig, out: Path) -> list[str]:
    cfg = sc.architecture_config()
    loads = sc.loads()
    files, planned, baseline = [], [], []
    for k, load in enumerate(loads):
        p = plan(
            load, cfg, sc.plan.objective, sc.plan.phi_grid_deg,
            role_policy=sc.plan.role_policy, swap_scales=sc.plan.swap_scales, **_search_kwargs(sc),
        )
        m, res = evaluate_plan(p, load, cfg, sc.plan.swap_scales)
        planned.append((load, p, m))
        nom = nominal_plan(cfg)
        baseline.append((load, nom, evaluate_plan(nom, load, cfg)[0]))
        tag = f"{k:02d}"
        hio.export_sweep_csv(res, out / f"sweep_{tag}.csv")
        hio.export_smith(res, out / f"smith_{tag}.csv")
        hio.export_plan_report([(load, p, m)], out / f"plan_{tag}.csv")
        files += [f"sweep_{tag}.csv", f"smith_{tag}.csv", f"plan_{tag}.csv"]
    hio.export_plan_report(planned, out / "plan_report.csv")
    hio.export_plan_report(baseline, out / "baseline_report.csv")
    return files + ["plan_report.csv", "baseline_report.csv"]


def cmd_phase_opt(sc: hio.ScenarioConfig, out: Path) -> list[str]:
    cfg = sc.architecture_config()
    load = sc.loads()[0]
    found = optimize_phase(cfg, load, sc.plan.objective, sc.plan.phi_grid_deg, **_search_kwargs(sc))
    rows = ["phi_deg,ampm_span_deg,amam_span_db,eff_at_10db_obo,objective,feasible"]
    for phi, ampm, amam, eff, score, feas in found.table:
        rows.append(",".join([hio.fmt(phi), hio.fmt(ampm), hio.fmt(amam), hio.fmt(eff), hio.fmt(score), str(int(feas))]))
    hio._write(out / "phase_search.csv", rows)
    hio._write(
        out / "phase_opt.csv",
        ["z_re,z_im,objective,phi_star_deg,objective_value",
         ",".join([*hio._cplx(load.z), sc.plan.objective, hio.fmt(found.phi_deg), hio.fmt(found.value)])],
    )
    return ["phase_search.csv", "phase_opt.csv"]


def synthetic_phase_points(seed: int = 0, n: int = 13, noise_deg: float = 1.0):
    """Three-slope piecewise-linear offset with bounded uniform noise (GHz, degrees)."""
    rng = np.random.default_rng(seed)
    f = np.linspace(1.5, 2.7, n)
    slopes = np.where(f < 1.85, -60.0, np.where(f < 2.3, -100.0, -140.0))
    phi = slopes * f + rng.uniform(-noise_deg, noise_deg, n)
    return np.column_stack([f, phi])


def read_phase_points(path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise hio.ExportError(f"cannot read {path}: {exc}") from exc
    try:
        return np.array([[float(r["freq"]), float(r["phi_deg"])] for r in rows])
    except (KeyError, ValueError) as exc:
        raise hio.ConfigError([f"tlfit.input: expected numeric freq,phi_deg columns ({exc})"]) from exc


def cmd_tlfit(sc: hio.ScenarioConfig, out: Path, seed: int = 0) -> list[str]:
    if sc.tlfit.input:
        pts = read_phase_points(sc.tlfit.input)
    else:
        pts = synthetic_phase_points(seed)
    ref = sc.tlfit.ref_freq if sc.tlfit.ref_freq is not None else float(pts[0, 0])
    fit = tl_phase_fit(pts, sc.tlfit.segments, ref)
    rows = ["segment,freq_lo,freq_hi,electrical_length_deg,max_abs_error_deg"]
    for k, s in enumerate(fit.segments):
        rows.append(",".join([str(k), hio.fmt(s.freq_lo), hio.fmt(s.freq_hi),
                              hio.fmt(s.electrical_length_deg), hio.fmt(s.max_abs_error_deg)]))
    hio._write(out / "tlfit.csv", rows)
    return ["tlfit.csv"]


def cmd_compare(sc: hio.ScenarioConfig, out: Path) -> list[str]:
    cfg = sc.architecture_config()
    z = sc.loads()[0].z * cfg.z0
    rows = ["mode,first_peak_obo_db,peak_eff,p_out_max"]
    files = []
    for mode in (Mode.HALMBA, Mode.PDLMBA):
        res = sweep(cfg.replace(mode=mode), z)
        name = f"sweep_{mode.value}.csv"
        hio.export_sweep_csv(res, out / name)
        files.append(name)
        try:
            obo = first_peak_obo(res)
        except NoBackoffPeakError:
            obo = float("nan")
        rows.append(",".join([mode.value, hio.fmt(obo), hio.fmt(np.nanmax(res.efficiency)), hio.fmt(np.nanmax(res.p_out))]))
    hio._write(out / "compare.csv", rows)
    return files + ["compare.csv"]


def run_scenario(command: str, sc: hio.ScenarioConfig, seed: int = 0) -> list[str]:
    """Execute one subcommand; returns the written file names (manifest last)."""
    out = Path(sc.output.dir)
    if command == "sweep":
        files = cmd_sweep(sc, out)
    elif command == "mismatch-grid":
        files = cmd_mismatch_grid(sc, out)
    elif command == "phase-opt":
        files = cmd_phase_opt(sc, out)
    elif command == "tlfit":
        files = cmd_tlfit(sc, out, seed)
    elif command == "compare":
        files = cmd_compare(sc, out)
    else:
        raise hio.ConfigError([f"command: unknown subcommand {command!r}"])
    hio.write_manifest(out / "manifest.yaml", sc, files, command)
    return files + ["manifest.yaml"]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = scenario_from_args(args)
        if args.command == "mismatch-grid" and sc.load.vswr is None:
            sc = dataclasses.replace(sc, load=dataclasses.replace(sc.load, vswr=2.0, z=None))
        files = run_scenario(args.command, sc, args.seed)
    except hio.ConfigError as exc:
        _fail(EXIT_CONFIG, "config", str(exc), exc.problems)
    except OSError as exc:
        _fail(EXIT_IO, "io", str(exc))
    except (SweepError, NetworkError, UndefinedGainError, ArithmeticError, RuntimeError, ValueError) as exc:
        _fail(EXIT_NUMERIC, "numeric", f"{type(exc).__name__}: {exc}")
    sys.stdout.write(json.dumps({"status": "ok", "files": files}, sort_keys=True) + "\n")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
