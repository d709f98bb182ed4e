"""Scenario configuration (YAML) and deterministic CSV export.

Every number written to disk goes through :func:`fmt`: 9 significant
digits, '.' separator, no locale dependence. Files use '\\n' line endings.
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .devices import CLASS_B_DC_RATIO, Region
from .engine import ArchitectureConfig, Mode, SweepResult, amam_ampm, build_config
from .reconfig import LoadCondition, Objective, PlanMetrics, ReconfigPlan, vswr_circle

SWEEP_HEADER = (
    "beta,region,i_c,i_b1,i_b2,z_ca_re,z_ca_im,z_ba1_re,z_ba1_im,z_ba2_re,z_ba2_im,"
    "v_out_re,v_out_im,p_out,p_dc,efficiency,gain_db,phase_deg,clip_ca,clip_ba1,clip_ba2"
)
SMITH_HEADER = "beta,device,gamma_re,gamma_im"
PLAN_HEADER = (
    "gamma_phase_deg,vswr,z_re,z_im,primary_ba,vdd_ca,phi_deg,first_peak_obo_db,"
    "eff_at_10db_obo,peak_eff,amam_span_db,ampm_span_deg,clipping_count"
)


class ConfigError(ValueError):
    """Invalid scenario document; ``problems`` lists every offending key."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ExportError(OSError):
    pass


def fmt(x) -> str:
    """9-significant-digit decimal rendering; NaN becomes an empty field."""
    x = float(x)
    if np.isnan(x):
        return ""
    if x == 0:
        x = 0.0  # drop the sign of negative zero
    return f"{x:#.9g}"


def parse_complex(text) -> complex:
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return complex(text)
    if not isinstance(text, str):
        raise ValueError(f"expected a complex number, got {text!r}")
    s = text.strip().replace(" ", "").replace("i", "j")
    if not re.fullmatch(r"[0-9eE.+\-j()]+", s):
        raise ValueError(f"not a complex number: {text!r}")
    return complex(s)


def format_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real!r}{'+' if z.imag >= 0 else '-'}{abs(z.imag)!r}j"


# -- scenario configuration ------------------------------------------------


@dataclass(frozen=True)
class ArchitectureSpec:
    z0: float = 1.0
    z0_ohms: float = 50.0
    i_max_c: float = 1.0
    i_max_b: float = 1.0
    beta_lbo: float = 0.5
    beta_hbo: float = 0.75
    lam: float = 0.4
    gamma: float = 0.3
    vdd_ca0: float | None = None
    dc_ratio: float = CLASS_B_DC_RATIO
    ca_conduction_deg: float | None = None
    ba1_conduction_deg: float | None = None
    ba2_conduction_deg: float | None = None
    phi_deg: float = 0.0
    mode: str = "halmba"
    beta_points: int = 201
    pd_scale: float = 1.0
    ca_voltage_limit: bool = False


@dataclass(frozen=True)
class LoadSpec:
    """A single impedance, or a VSWR circle (optionally at listed phases)."""

    z: complex | None = None
    vswr: float | None = None
    step_deg: float = 30.0
    phases_deg: tuple[float, ...] | None = None


@dataclass(frozen=True)
class PlanSpec:
    objective: str = "ampm"
    phi_grid_deg: float = 1.0
    role_policy: str = "auto"
    efficiency_floor_pp: float | None = 5.0
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    swap_scales: bool = True


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"


@dataclass(frozen=True)
class TLFitSpec:
    input: str | None = None
    segments: int = 3
    ref_freq: float | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    architecture: ArchitectureSpec = field(default_factory=ArchitectureSpec)
    load: LoadSpec = field(default_factory=LoadSpec)
    plan: PlanSpec = field(default_factory=PlanSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    tlfit: TLFitSpec = field(default_factory=TLFitSpec)

    def architecture_config(self) -> ArchitectureConfig:
        a = self.architecture
        rad = lambda d: None if d is None else float(np.radians(d))  # noqa: E731
        return build_config(
            z0=a.z0, i_max_c=a.i_max_c, i_max_b=a.i_max_b, beta_lbo=a.beta_lbo,
            beta_hbo=a.beta_hbo, lam=a.lam, gamma=a.gamma, vdd_ca0=a.vdd_ca0,
            dc_ratio=a.dc_ratio, ca_conduction=rad(a.ca_conduction_deg),
            ba1_conduction=rad(a.ba1_conduction_deg), ba2_conduction=rad(a.ba2_conduction_deg),
            phi=float(np.radians(a.phi_deg)), mode=Mode(a.mode), beta_points=a.beta_points,
            pd_scale=a.pd_scale, ca_voltage_limit=a.ca_voltage_limit,
        )

    def loads(self) -> list[LoadCondition]:
        ld = self.load
        if ld.vswr is None:
            return [LoadCondition(1.0 if ld.z is None else ld.z)]
        if ld.phases_deg is None:
            return vswr_circle(ld.vswr, ld.step_deg)
        mag = (ld.vswr - 1) / (ld.vswr + 1)
        return [LoadCondition.from_gamma(mag * np.exp(1j * np.radians(p))) for p in ld.phases_deg]


# YAML key -> dataclass field, where they differ
_ALIASES = {"architecture": {"lambda": "lam"}}
_SECTIONS = {
    "architecture": ArchitectureSpec,
    "load": LoadSpec,
    "plan": PlanSpec,
    "output": OutputSpec,
    "tlfit": TLFitSpec,
}
_NULLABLE = {"efficiency_floor_pp"}
_STRINGS = {"input", "dir"}


def _coerce(section: str, key: str, value, default, problems: list[str]):
    where = f"{section}.{key}"
    try:
        if key == "z" and section == "load":
            return None if value is None else parse_complex(value)
        if key in ("phases_deg", "weights"):
            if value is None and key == "phases_deg":
                return None
            if not isinstance(value, (list, tuple)):
                raise ValueError("expected a list of numbers")
            out = tuple(float(v) for v in value)
            if key == "weights" and len(out) != 3:
                raise ValueError("expected three weights (ampm, amam, efficiency)")
            return out
        if value is None:
            if default is None or key in _NULLABLE:
                return None
            raise ValueError("must not be null")
        if key in _STRINGS:
            if not isinstance(value, str):
                raise ValueError("expected a string")
            return value
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ValueError("expected true or false")
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or not float(value).is_integer():
                raise ValueError("expected an integer")
            return int(value)
        if isinstance(default, str):
            if not isinstance(value, str):
                raise ValueError("expected a string")
            return value
        if isinstance(value, bool) or isinstance(value, str) and not value.strip():
            raise ValueError("expected a number")
        x = float(value)
        if not np.isfinite(x):
            raise ValueError("expected a finite number")
        return x
    except (TypeError, ValueError) as exc:
        problems.append(f"{where}: {exc}")
        return default


def _validate(cfg: ScenarioConfig) -> list[str]:
    p = []
    a = cfg.architecture
    if not a.z0 > 0:
        p.append("architecture.z0: must be positive")
    if not a.z0_ohms > 0:
        p.append("architecture.z0_ohms: must be positive")
    if not 0 < a.beta_lbo < a.beta_hbo < 1:
        p.append(
            f"architecture.beta_lbo, architecture.beta_hbo: need 0 < beta_lbo < beta_hbo < 1, "
            f"got {a.beta_lbo} and {a.beta_hbo}"
        )
    for key in ("i_max_c", "i_max_b", "pd_scale"):
        if not getattr(a, key) > 0:
            p.append(f"architecture.{key}: must be positive")
    for key in ("lambda", "gamma"):
        v = a.lam if key == "lambda" else a.gamma
        if not 0 < v <= 0.5:
            p.append(f"architecture.{key}: must lie in (0, 0.5]")
    if a.vdd_ca0 is not None and not a.vdd_ca0 > 0:
        p.append("architecture.vdd_ca0: must be positive")
    if not 0 < a.dc_ratio <= 1:
        p.append("architecture.dc_ratio: must lie in (0, 1]")
    for key in ("ca_conduction_deg", "ba1_conduction_deg", "ba2_conduction_deg"):
        v = getattr(a, key)
        if v is not None and not 0 < v <= 180:
            p.append(f"architecture.{key}: conduction half-angle must lie in (0, 180]")
    if a.mode not in [m.value for m in Mode]:
        p.append(f"architecture.mode: must be one of halmba, pdlmba, got {a.mode!r}")
    if a.beta_points < 3:
        p.append("architecture.beta_points: need at least 3 points")
    ld = cfg.load
    if ld.z is not None and ld.vswr is not None:
        p.append("load.z, load.vswr: give a single impedance or a VSWR circle, not both")
    if ld.z is not None and not ld.z.real > 0:
        p.append("load.z: real part must be positive")
    if ld.vswr is not None and not ld.vswr >= 1:
        p.append("load.vswr: must be >= 1")
    if not ld.step_deg > 0 or abs(360.0 / ld.step_deg - round(360.0 / ld.step_deg)) > 1e-9:
        p.append("load.step_deg: must be positive and divide 360")
    pl = cfg.plan
    if pl.objective not in [o.value for o in Objective]:
        p.append(f"plan.objective: must be one of ampm, amam, eff, weighted, got {pl.objective!r}")
    if not pl.phi_grid_deg > 0:
        p.append("plan.phi_grid_deg: must be positive")
    if pl.role_policy not in ("auto", "ba1", "ba2"):
        p.append(f"plan.role_policy: must be auto, ba1 or ba2, got {pl.role_policy!r}")
    if pl.efficiency_floor_pp is not None and not pl.efficiency_floor_pp >= 0:
        p.append("plan.efficiency_floor_pp: must be non-negative")
    t = cfg.tlfit
    if t.segments < 1:
        p.append("tlfit.segments: must be at least 1")
    if t.ref_freq is not None and not t.ref_freq > 0:
        p.append("tlfit.ref_freq: must be positive")
    return p


def config_from_dict(doc) -> ScenarioConfig:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(["<root>: expected a mapping of sections"])
    problems = []
    sections = {}
    for name in doc:
        if name not in _SECTIONS:
            problems.append(f"{name}: unknown section")
    for name, cls in _SECTIONS.items():
        body = doc.get(name) or {}
        if not isinstance(body, dict):
            problems.append(f"{name}: expected a mapping")
            body = {}
        aliases = _ALIASES.get(name, {})
        fields = {f.name: f for f in dataclasses.fields(cls)}
        defaults = cls()
        kwargs = {}
        for key, value in body.items():
            attr = aliases.get(key, key)
            # field names that have a YAML alias are only reachable through it
            if attr not in fields or (attr == key and key in aliases.values()):
                problems.append(f"{name}.{key}: unknown key")
                continue
            kwargs[attr] = _coerce(name, key, value, getattr(defaults, attr), problems)
        sections[name] = dataclasses.replace(defaults, **kwargs)
    # range checks run on whatever parsed, so one error lists every bad key
    problems += _validate(ScenarioConfig(**sections))
    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(**sections)


def parse_config(text: str) -> ScenarioConfig:
    """Parse a YAML scenario document; omitted keys take their defaults."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"<document>: YAML parse error: {exc}"]) from exc
    return config_from_dict(doc)


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ExportError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    doc = {}
    for name in _SECTIONS:
        inverse = {v: k for k, v in _ALIASES.get(name, {}).items()}
        body = {}
        for f in dataclasses.fields(getattr(cfg, name)):
            v = getattr(getattr(cfg, name), f.name)
            if isinstance(v, tuple):
                v = list(v)
            elif isinstance(v, complex):
                v = format_complex(v)
            body[inverse.get(f.name, f.name)] = v
        doc[name] = body
    return doc


def serialize_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


# -- exports ---------------------------------------------------------------


def _write(path, lines: list[str]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path


def _cplx(z) -> list[str]:
    return [fmt(np.real(z)), fmt(np.imag(z))]


def sweep_rows(result: SweepResult) -> list[str]:
    if len(result) == 0:
        raise ValueError("empty sweep result")
    n = len(result)
    gain_db = np.full(n, np.nan)
    phase_deg = np.full(n, np.nan)
    try:
        lin = amam_ampm(result)
        idx = np.nonzero((result.beta > 0) & result.ok)[0]
        gain_db[idx] = lin.gain_db
        phase_deg[idx] = lin.phase_deg
    except ValueError:
        pass
    rows = [SWEEP_HEADER]
    for k in range(n):
        rows.append(",".join([
            fmt(result.beta[k]), Region(int(result.region[k])).label,
            fmt(result.i_c[k]), fmt(result.i_b1[k]), fmt(result.i_b2[k]),
            *_cplx(result.z_ca[k]), *_cplx(result.z_ba1[k]), *_cplx(result.z_ba2[k]),
            *_cplx(result.v_out[k]),
            fmt(result.p_out[k]), fmt(result.p_dc[k]), fmt(result.efficiency[k]),
            fmt(gain_db[k]), fmt(phase_deg[k]),
            *(str(int(c)) for c in result.clipping[k]),
        ]))
    return rows


def export_sweep_csv(result: SweepResult, path) -> Path:
    """One row per drive level; off impedances are empty fields."""
    return _write(path, sweep_rows(result))


def reflection(z) -> np.ndarray:
    """Reflection coefficient of normalized impedance ``z``; off (NaN) maps to 1."""
    z = np.asarray(z, dtype=complex)
    off = np.isnan(z.real) | np.isnan(z.imag)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = (z - 1) / (z + 1)
    return np.where(off, 1.0 + 0j, g)


def smith_rows(result: SweepResult) -> list[str]:
    if len(result) == 0:
        raise ValueError("empty sweep result")
    z0 = result.config.z0
    rows = [SMITH_HEADER]
    for name, z in (("ca", result.z_ca), ("ba1", result.z_ba1), ("ba2", result.z_ba2)):
        g = reflection(z / z0)
        for b, gk in zip(result.beta, g):
            rows.append(",".join([fmt(b), name, *_cplx(gk)]))
    return rows


def export_smith(result: SweepResult, path) -> Path:
    """Long-format load trajectories, grouped by device then drive level."""
    return _write(path, smith_rows(result))


def plan_rows(entries) -> list[str]:
    entries = list(entries)
    if not entries:
        raise ValueError("no plan entries")
    rows = [PLAN_HEADER]
    for load, plan, m in entries:
        load: LoadCondition
        plan: ReconfigPlan
        m: PlanMetrics
        rows.append(",".join([
            fmt(load.gamma_phase_deg), fmt(load.vswr), *_cplx(load.z),
            plan.primary_ba.value, fmt(plan.v_dd_ca), fmt(plan.phi_deg),
            fmt(m.first_peak_obo_db), fmt(m.efficiency_at_10db_obo), fmt(m.peak_efficiency),
            fmt(m.amam_span_db), fmt(m.ampm_span_deg), str(m.clipping_count),
        ]))
    return rows


def export_plan_report(entries, path) -> Path:
    """One row per ``(LoadCondition, ReconfigPlan, PlanMetrics)`` entry."""
    return _write(path, plan_rows(entries))


def write_manifest(path, cfg: ScenarioConfig, files: list[str], command: str) -> Path:
    """Scenario echo for downstream tools (reference impedance in ohms, file list)."""
    doc = {
        "command": command,
        "z0_ohms": cfg.architecture.z0_ohms,
        "units": "normalized to z0",
        "files": sorted(files),
        "config": config_to_dict(cfg),
    }
    # the output location is not part of the result
    del doc["config"]["output"]
    try:
        text = yaml.safe_dump(doc, sort_keys=False)
    except yaml.YAMLError as exc:  # pragma: no cover
        raise ExportError(str(exc)) from exc
    return _write(path, text.rstrip("\n").split("\n"))
