"""Load-mismatch countermeasures: BA role selection, CA supply rescaling,
phase-offset search, and the closed-form mismatch impedances."""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass

import numpy as np

from .devices import SQRT2, Region
from .engine import (
    ArchitectureConfig,
    NoBackoffPeakError,
    SweepResult,
    amam_ampm,
    efficiency_at_obo,
    first_peak_obo,
    swap_roles,
    sweep,
)

OBJECTIVE_TIE_TOL = 1e-9


@dataclass(frozen=True)
class LoadCondition:
    """Normalized load impedance ``z`` (``Z_L / z0``)."""

    z: complex

    def __post_init__(self):
        z = complex(self.z)
        if not np.isfinite(z.real) or not np.isfinite(z.imag) or z.real <= 0:
            raise ValueError(f"load needs a finite impedance with positive real part, got {z}")
        object.__setattr__(self, "z", z)

    @classmethod
    def from_gamma(cls, gamma: complex) -> "LoadCondition":
        if abs(gamma) >= 1:
            raise ValueError(f"|gamma| must be below 1, got {abs(gamma)}")
        return cls((1 + gamma) / (1 - gamma))

    @property
    def gamma(self) -> complex:
        return (self.z - 1) / (self.z + 1)

    @property
    def vswr(self) -> float:
        g = abs(self.gamma)
        return (1 + g) / (1 - g)

    @property
    def gamma_phase_deg(self) -> float:
        g = self.gamma
        if abs(g) < 1e-12:
            return 0.0
        return float(np.degrees(np.angle(g)) % 360.0)


def vswr_circle(vswr: float, step_deg: float = 30.0) -> list[LoadCondition]:
    if not vswr >= 1:
        raise ValueError(f"vswr must be >= 1, got {vswr}")
    if not step_deg > 0:
        raise ValueError("step_deg must be positive")
    if vswr == 1:
        return [LoadCondition(1.0)]
    n = 360.0 / step_deg
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"step {step_deg} deg does not divide 360")
    mag = (vswr - 1) / (vswr + 1)
    return [
        LoadCondition.from_gamma(mag * np.exp(1j * np.radians(k * step_deg)))
        for k in range(int(round(n)))
    ]


class PeakingDevice(enum.Enum):
    BA1 = "BA1"
    BA2 = "BA2"


def select_primary_ba(load: LoadCondition) -> PeakingDevice:
    # BA1's impedance grows with |z_L|, BA2's shrinks; ties keep the nominal role
    return PeakingDevice.BA2 if abs(load.z) > 1 else PeakingDevice.BA1


def scale_vdd(load: LoadCondition | complex, v0: float) -> float:
    z = complex(load.z if isinstance(load, LoadCondition) else load)
    if not z.real > 0:
        raise ValueError("load real part must be positive")
    return float(v0 * np.sqrt(1.0 / z.real))


def ca_saturation_power(z_ca: complex, v_dd: float, z0: float = 1.0) -> float:
    z_ca = complex(z_ca)
    if abs(z_ca) == 0:
        raise ValueError("zero CA impedance")
    return float(v_dd**2 / (2 * z0) * z_ca.real / abs(z_ca) ** 2)


class Objective(enum.Enum):
    AMPM_SPAN = "ampm"
    AMAM_SPAN = "amam"
    EFFICIENCY_AT_OBO = "eff"
    WEIGHTED = "weighted"


@dataclass(frozen=True)
class ReconfigPlan:
    primary_ba: PeakingDevice
    v_dd_ca: float
    phi: float

    def __post_init__(self):
        if not self.v_dd_ca > 0:
            raise ValueError("v_dd_ca must be positive")

    @property
    def phi_deg(self) -> float:
        return float(np.degrees(self.phi))


@dataclass(frozen=True)
class PlanMetrics:
    first_peak_obo_db: float
    efficiency_at_10db_obo: float
    peak_efficiency: float
    amam_span_db: float
    ampm_span_deg: float
    clipping_count: int


@dataclass(frozen=True)
class PhaseSearch:
    """Outcome of the phase-offset grid search.

    ``table`` rows are ``(phi_deg, ampm_span_deg, amam_span_db, eff_at_obo,
    objective, feasible)``; infeasible rows failed or fell below the
    efficiency floor.
    """

    phi: float
    value: float
    table: list[tuple[float, float, float, float, float, bool]]

    @property
    def phi_deg(self) -> float:
        return float(np.degrees(self.phi))


def phase_grid(grid_deg: float) -> np.ndarray:
    if not grid_deg > 0:
        raise ValueError("grid_deg must be positive")
    n = int(np.ceil(360.0 / grid_deg - 1e-9))
    phis = np.round(-180.0 + grid_deg * np.arange(n), 9)
    return phis[phis < 180.0]


def _score(objective: Objective, ampm: float, amam: float, eff: float, weights) -> float:
    if objective is Objective.AMPM_SPAN:
        return ampm
    if objective is Objective.AMAM_SPAN:
        return amam
    if objective is Objective.EFFICIENCY_AT_OBO:
        return -eff
    w_pm, w_am, w_eff = weights
    return w_pm * ampm + w_am * amam - w_eff * 100.0 * eff


def optimize_phase(
    cfg: ArchitectureConfig,
    load: LoadCondition | complex,
    objective: Objective = Objective.AMPM_SPAN,
    grid_deg: float = 1.0,
    *,
    efficiency_floor_pp: float | None = 5.0,
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
    obo_db: float = 10.0,
) -> PhaseSearch:
    """Exhaustive search of the CA-BA phase offset over [-180, 180) degrees.

    Spans are minimized and efficiency maximized. Unless the objective is
    efficiency itself, offsets whose efficiency at ``obo_db`` back-off falls
    more than ``efficiency_floor_pp`` percentage points below the best on the
    grid are rejected. Ties go to the offset closest to zero.
    """
    objective = Objective(objective)
    z = complex(load.z if isinstance(load, LoadCondition) else load) * cfg.z0
    rows = []
    for phi_deg in phase_grid(grid_deg):
        try:
            res = sweep(cfg.replace(phi=float(np.radians(phi_deg))), z)
            lin = amam_ampm(res)
            eff = efficiency_at_obo(res, obo_db)
        except (ValueError, ArithmeticError, RuntimeError):
            continue
        if not (np.isfinite(lin.ampm_span_deg) and np.isfinite(lin.amam_span_db) and np.isfinite(eff)):
            continue
        rows.append([float(phi_deg), lin.ampm_span_deg, lin.amam_span_db, eff])
    if not rows:
        raise RuntimeError("phase search failed at every grid point")
    best_eff = max(r[3] for r in rows)
    use_floor = efficiency_floor_pp is not None and objective is not Objective.EFFICIENCY_AT_OBO
    table = []
    for phi_deg, ampm, amam, eff in rows:
        feasible = not use_floor or eff >= best_eff - efficiency_floor_pp / 100.0
        table.append((phi_deg, ampm, amam, eff, _score(objective, ampm, amam, eff, weights), feasible))
    feasible = [t for t in table if t[5]]
    best = min(t[4] for t in feasible)
    ties = [t for t in feasible if t[4] <= best + OBJECTIVE_TIE_TOL]
    pick = min(ties, key=lambda t: (abs(t[0]), -t[0]))
    value = -pick[4] if objective is Objective.EFFICIENCY_AT_OBO else pick[4]
    return PhaseSearch(float(np.radians(pick[0])), float(value), table)


def apply_plan(plan: ReconfigPlan, cfg: ArchitectureConfig, swap_scales: bool = True) -> ArchitectureConfig:
    want_port = 2 if plan.primary_ba is PeakingDevice.BA1 else 4
    if cfg.primary_port != want_port:
        cfg = swap_roles(cfg, swap_scales)
    return cfg.replace(ca=dataclasses.replace(cfg.ca, v_dd=plan.v_dd_ca), phi=plan.phi)


def nominal_plan(cfg: ArchitectureConfig) -> ReconfigPlan:
    """The matched-load settings, used as the 'no reconfiguration' baseline."""
    dev = PeakingDevice.BA1 if cfg.primary_port == 2 else PeakingDevice.BA2
    return ReconfigPlan(dev, cfg.ca.v_dd, cfg.phi)


def plan(
    load: LoadCondition,
    cfg: ArchitectureConfig,
    objective: Objective = Objective.AMPM_SPAN,
    grid_deg: float = 1.0,
    *,
    role_policy: str = "auto",
    swap_scales: bool = True,
    **search_kwargs,
) -> ReconfigPlan:
    """Role selection, CA supply rescaling and phase search for one load.

    ``role_policy`` is ``"auto"`` (pick by |z_L|), ``"ba1"`` or ``"ba2"``.
    ``cfg`` holds the nominal (matched) settings.
    """
    if role_policy == "auto":
        role = select_primary_ba(load)
    else:
        role = PeakingDevice(role_policy.upper())
    vdd = scale_vdd(load, cfg.ca.v_dd)
    staged = apply_plan(ReconfigPlan(role, vdd, 0.0), cfg, swap_scales)
    found = optimize_phase(staged, load, objective, grid_deg, **search_kwargs)
    return ReconfigPlan(role, vdd, found.phi)


def metrics_of(result: SweepResult) -> PlanMetrics:
    try:
        obo = first_peak_obo(result)
    except NoBackoffPeakError:
        obo = float("nan")
    try:
        lin = amam_ampm(result)
        amam, ampm = lin.amam_span_db, lin.ampm_span_deg
    except ValueError:
        amam = ampm = float("nan")
    try:
        eff10 = efficiency_at_obo(result, 10.0)
    except ValueError:
        eff10 = float("nan")
    return PlanMetrics(
        obo, eff10, float(np.nanmax(result.efficiency)), amam, ampm,
        int(np.sum(np.any(result.clipping, axis=1))),
    )


def evaluate_plan(
    plan: ReconfigPlan, load: LoadCondition, cfg: ArchitectureConfig, swap_scales: bool = True
) -> tuple[PlanMetrics, SweepResult]:
    res = sweep(apply_plan(plan, cfg, swap_scales), load.z * cfg.z0)
    return metrics_of(res), res


def _off():
    return complex(np.nan, np.nan)


def mismatch_closed_forms(
    load: LoadCondition | complex,
    region: Region,
    *,
    v_ca: complex | None = None,
    i_c: complex | None = None,
    i_b1: float = 0.0,
    i_b2: float = 0.0,
    z0: float = 1.0,
) -> tuple[complex, complex, complex]:
    """Normalized ``(z_ba1, z_ba2, z_ca)`` under load mismatch, zero phase offset.

    ``v_ca`` describes the CA as a voltage source with port voltage
    ``j * v_ca``; ``i_c`` describes it as a current source with port current
    ``j * i_c``. Forms needing an absent description, or dividing by a zero
    current, come back as NaN (off).
    """
    zl = complex(load.z if isinstance(load, LoadCondition) else load)
    region = Region(region)
    z_ba1 = z_ba2 = z_ca = _off()
    if region is Region.LOW_POWER:
        return z_ba1, z_ba2, 1.0 / zl
    on1, on2 = abs(i_b1) > 1e-12, abs(i_b2) > 1e-12
    if region is Region.DOHERTY and on1 and on2:
        raise ValueError("only one peaking device is on in the Doherty region")
    if on1 and v_ca is not None:
        z_ba1 = SQRT2 * v_ca / (z0 * i_b1) * zl + 2 * zl - i_b2 / i_b1
    if on2 and i_c is not None:
        z_ba2 = SQRT2 * i_c / i_b2 / zl + 2 / zl - i_b1 / i_b2
    if v_ca is not None:
        if on1 and not on2:
            z_ca = v_ca / (v_ca * zl + SQRT2 * zl * i_b1 * z0)
        elif on2 and not on1:
            z_ca = v_ca / (v_ca * zl - SQRT2 * i_b2 * z0)
        elif on1 and on2:
            z_ca = v_ca / (v_ca * zl - SQRT2 * (i_b2 - zl * i_b1) * z0)
    return complex(z_ba1), complex(z_ba2), complex(z_ca)
