"""Dynamic drive sweep of the three-way load-modulated balanced amplifier.

For each drive level the port excitations are assembled from the device
current laws, the coupler network is solved, and impedances, voltages,
output power, efficiency, gain and output phase are extracted.
"""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .devices import (
    CLASS_B_DC_RATIO,
    SQRT2,
    DeviceProfile,
    Region,
    RegionBoundaries,
    Role,
    ba_primary_fundamental,
    ba_secondary_fundamental,
    dc_current,
    doherty_primary_current,
    region_of,
)
from .network import (
    CouplerNetwork,
    CurrentSource,
    NetworkSolution,
    PassiveLoad,
    VoltageSource,
    build_ideal_coupler,
    port_impedance,
    power_balance,
    solve,
    solve_batch,
)

CLIP_TOL = 1e-6
PEAK_TOL = 1e-12
VS_SWITCH_TOL = 1e-9


class Mode(enum.Enum):
    HALMBA = "halmba"
    PDLMBA = "pdlmba"


class SweepError(RuntimeError):
    pass


class NoBackoffPeakError(ValueError):
    pass


class UndefinedGainError(ValueError):
    pass


def uniform_grid(n: int = 201) -> tuple[float, ...]:
    if n < 1:
        raise ValueError("beta grid needs at least one point")
    if n == 1:
        return (1.0,)
    return tuple(float(x) for x in np.linspace(0.0, 1.0, n))


@dataclass(frozen=True)
class ArchitectureConfig:
    """Everything a sweep needs besides the load.

    ``ba1`` sits on port 2 and ``ba2`` on port 4. ``primary_port`` names the
    port whose profile follows the early (primary peaking) turn-on law.
    ``ca_voltage_limit`` additionally switches the CA to a voltage source
    whenever its current-source voltage would exceed ``v_dd`` below
    ``beta_hbo``; it is off by default.
    """

    net: CouplerNetwork
    ca: DeviceProfile
    ba1: DeviceProfile
    ba2: DeviceProfile
    rb: RegionBoundaries
    phi: float = 0.0
    mode: Mode = Mode.HALMBA
    primary_port: int = 2
    beta_grid: tuple[float, ...] = field(default_factory=uniform_grid)
    pd_scale: float = 1.0
    ca_voltage_limit: bool = False

    def __post_init__(self):
        grid = tuple(float(b) for b in self.beta_grid)
        object.__setattr__(self, "beta_grid", grid)
        g = np.array(grid)
        if len(g) == 0 or np.any(g < 0) or np.any(g > 1) or np.any(np.diff(g) <= 0):
            raise ValueError("beta_grid must be strictly increasing within [0, 1]")
        if self.primary_port not in (2, 4):
            raise ValueError(f"primary_port must be 2 or 4, got {self.primary_port}")
        if self.primary.role is not Role.BA_PRIMARY or self.secondary.role is not Role.BA_SECONDARY:
            raise ValueError("ports 2 and 4 must host exactly one primary and one secondary BA")
        if self.ca.role is not Role.CA:
            raise ValueError("ca profile must have role CA")
        if not np.isfinite(self.phi):
            raise ValueError("phi must be finite")

    @property
    def betas(self) -> np.ndarray:
        return np.array(self.beta_grid)

    @property
    def primary(self) -> DeviceProfile:
        return self.ba1 if self.primary_port == 2 else self.ba2

    @property
    def secondary(self) -> DeviceProfile:
        return self.ba2 if self.primary_port == 2 else self.ba1

    @property
    def z0(self) -> float:
        return self.net.z0

    def replace(self, **changes) -> "ArchitectureConfig":
        return dataclasses.replace(self, **changes)


def swap_roles(cfg: ArchitectureConfig, swap_scales: bool = True) -> ArchitectureConfig:
    """Exchange the primary/secondary turn-on roles of the two peaking devices.

    Thresholds (and, by default, scale factors) move between ports; ``i_max``
    and supply voltages stay with the physical device.
    """
    a, b = cfg.ba1, cfg.ba2
    new_a = dataclasses.replace(
        a, role=b.role, turn_on=b.turn_on, scale=b.scale if swap_scales else a.scale
    )
    new_b = dataclasses.replace(
        b, role=a.role, turn_on=a.turn_on, scale=a.scale if swap_scales else b.scale
    )
    return cfg.replace(ba1=new_a, ba2=new_b, primary_port=6 - cfg.primary_port)


def build_config(
    *,
    z0: float = 1.0,
    i_max_c: float = 1.0,
    i_max_b: float = 1.0,
    beta_lbo: float = 0.5,
    beta_hbo: float = 0.75,
    lam: float = 0.4,
    gamma: float = 0.3,
    vdd_ca0: float | None = None,
    dc_ratio: float = CLASS_B_DC_RATIO,
    ca_conduction: float | None = None,
    ba1_conduction: float | None = None,
    ba2_conduction: float | None = None,
    phi: float = 0.0,
    mode: Mode = Mode.HALMBA,
    beta_points: int = 201,
    pd_scale: float = 1.0,
    ba_vdd: tuple[float, float] | None = None,
    ca_voltage_limit: bool = False,
) -> ArchitectureConfig:
    """Nominal configuration (BA1 primary) with auto-calibrated BA supplies.

    Unless ``ba_vdd`` is given, each BA supply is set to that device's voltage
    magnitude at full drive in the nominal matched sweep, so both peaking
    devices reach voltage saturation exactly at peak power.
    """
    rb = RegionBoundaries(beta_lbo, beta_hbo)
    if vdd_ca0 is None:
        vdd_ca0 = beta_lbo * i_max_c * z0 / 2.0
    ca = DeviceProfile(Role.CA, i_max_c, 0.0, 0.5, dc_ratio, vdd_ca0, ca_conduction)
    v1, v2 = ba_vdd if ba_vdd is not None else (1.0, 1.0)
    ba1 = DeviceProfile(Role.BA_PRIMARY, i_max_b, beta_lbo, lam, dc_ratio, v1, ba1_conduction)
    ba2 = DeviceProfile(Role.BA_SECONDARY, i_max_b, beta_hbo, gamma, dc_ratio, v2, ba2_conduction)
    cfg = ArchitectureConfig(
        build_ideal_coupler(z0), ca, ba1, ba2, rb, phi, mode, 2,
        uniform_grid(beta_points), pd_scale, ca_voltage_limit,
    )
    if ba_vdd is None:
        cfg = calibrate_ba_supplies(cfg)
    return cfg


def calibrate_ba_supplies(cfg: ArchitectureConfig) -> ArchitectureConfig:
    nominal = cfg.replace(phi=0.0, mode=Mode.HALMBA, beta_grid=(1.0,), ca_voltage_limit=False)
    if nominal.primary_port != 2:
        nominal = swap_roles(nominal)
    res = sweep(nominal, complex(cfg.z0))
    v1 = float(np.abs(res.v_ba1[-1]))
    v2 = float(np.abs(res.v_ba2[-1]))
    return cfg.replace(
        ba1=dataclasses.replace(cfg.ba1, v_dd=v1), ba2=dataclasses.replace(cfg.ba2, v_dd=v2)
    )


def _ba_currents(beta, cfg: ArchitectureConfig):
    """Port-2 and port-4 current magnitudes."""
    b = np.asarray(beta, dtype=float)
    if cfg.mode is Mode.PDLMBA:
        lbo = cfg.rb.beta_lbo
        ramp = np.where(b < lbo, 0.0, 0.5 * (b - lbo) / (1.0 - lbo) * cfg.pd_scale)
        # the balanced pair shares the ramp equally
        return 0.5 * ramp * cfg.ba1.i_max, 0.5 * ramp * cfg.ba2.i_max
    prim = ba_primary_fundamental(b, cfg.primary, cfg.rb, cfg.ca.i_max)
    sec = ba_secondary_fundamental(b, cfg.secondary, cfg.rb)
    return (prim, sec) if cfg.primary_port == 2 else (sec, prim)


def _ca_cs_current(beta, cfg: ArchitectureConfig):
    b = np.asarray(beta, dtype=float)
    if cfg.mode is Mode.PDLMBA:
        b = np.minimum(b, cfg.rb.beta_lbo)
    return 1j * (b * cfg.ca.i_max / 2.0) * np.exp(1j * cfg.phi)


def ca_vs_phase(cfg: ArchitectureConfig, load: complex) -> float:
    """Phase of the CA voltage source: continues the current-source solution at beta_hbo-."""
    hbo = cfg.rb.beta_hbo
    ic = 1j * (hbo * cfg.ca.i_max / 2.0) * np.exp(1j * cfg.phi)
    doh = doherty_primary_current(hbo, cfg.rb, cfg.ca.i_max)
    i2, i4 = (doh, 0.0) if cfg.primary_port == 2 else (0.0, doh)
    sol = solve(cfg.net, [PassiveLoad(load), CurrentSource(i2), CurrentSource(ic), CurrentSource(-1j * i4)])
    v3 = sol.v[2]
    if abs(v3) < 1e-15:
        return float(cfg.phi + np.pi / 2)
    return float(np.angle(v3))


def assemble_excitations(beta: float, cfg: ArchitectureConfig, load: complex, vs_phase: float | None = None):
    """Port excitations for a single drive level."""
    region = region_of(beta, cfg.rb)
    i2, i4 = _ba_currents(beta, cfg)
    ports = [PassiveLoad(complex(load)), CurrentSource(complex(i2)), None, CurrentSource(complex(-1j * i4))]
    if cfg.mode is Mode.HALMBA and region is Region.ALMBA:
        if vs_phase is None:
            vs_phase = ca_vs_phase(cfg, load)
        ports[2] = VoltageSource(cfg.ca.v_dd * np.exp(1j * vs_phase))
    else:
        ports[2] = CurrentSource(complex(_ca_cs_current(beta, cfg)))
    return ports


@dataclass(frozen=True)
class SweepPoint:
    beta: float
    region: Region
    i_c: float
    i_b1: float
    i_b2: float
    z_ca: complex
    z_ba1: complex
    z_ba2: complex
    v_ca: complex
    v_ba1: complex
    v_ba2: complex
    v_out: complex
    p_out: float
    p_dc: float
    efficiency: float
    gain: float
    out_phase: float
    clipping: tuple[bool, bool, bool]
    ok: bool = True


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Column-oriented sweep record; ``points`` gives the row view.

    Off devices carry NaN impedances. ``clipping`` columns are (CA, BA1, BA2).
    """

    config: ArchitectureConfig
    load: complex
    beta: np.ndarray
    region: np.ndarray
    i_c: np.ndarray
    i_b1: np.ndarray
    i_b2: np.ndarray
    z_ca: np.ndarray
    z_ba1: np.ndarray
    z_ba2: np.ndarray
    v_ca: np.ndarray
    v_ba1: np.ndarray
    v_ba2: np.ndarray
    v_out: np.ndarray
    p_out: np.ndarray
    p_dc: np.ndarray
    efficiency: np.ndarray
    gain: np.ndarray
    out_phase: np.ndarray
    clipping: np.ndarray
    balance: np.ndarray
    ok: np.ndarray

    def __len__(self) -> int:
        return len(self.beta)

    @cached_property
    def points(self) -> list[SweepPoint]:
        return [
            SweepPoint(
                float(self.beta[k]), Region(int(self.region[k])),
                float(self.i_c[k]), float(self.i_b1[k]), float(self.i_b2[k]),
                complex(self.z_ca[k]), complex(self.z_ba1[k]), complex(self.z_ba2[k]),
                complex(self.v_ca[k]), complex(self.v_ba1[k]), complex(self.v_ba2[k]),
                complex(self.v_out[k]), float(self.p_out[k]), float(self.p_dc[k]),
                float(self.efficiency[k]), float(self.gain[k]), float(self.out_phase[k]),
                tuple(bool(c) for c in self.clipping[k]), bool(self.ok[k]),
            )
            for k in range(len(self.beta))
        ]


def _solve_sweep(cfg: ArchitectureConfig, load: complex):
    """Batched network solve over the beta grid; returns (v, i, load_power, balance, ok)."""
    betas = cfg.betas
    n = len(betas)
    i2, i4 = _ba_currents(betas, cfg)
    i2 = np.asarray(i2, dtype=complex)
    i4 = -1j * np.asarray(i4, dtype=complex)
    load_exc = PassiveLoad(complex(load))
    v = np.full((n, 4), np.nan, dtype=complex)
    i = np.full((n, 4), np.nan, dtype=complex)
    pl = np.full(n, np.nan)
    bal = np.full(n, np.nan)
    ok = np.zeros(n, dtype=bool)

    def run(idx, ca_exc_factory):
        if not np.any(idx):
            return
        exc = [load_exc, CurrentSource(i2[idx]), ca_exc_factory(idx), CurrentSource(i4[idx])]
        sol, good = solve_batch(cfg.net, exc)
        v[idx], i[idx], pl[idx] = sol.v, sol.i, sol.load_power
        bal[idx] = power_balance(sol)
        ok[idx] = good

    vs_region = np.zeros(n, dtype=bool)
    if cfg.mode is Mode.HALMBA:
        vs_region = betas >= cfg.rb.beta_hbo
    cs = ~vs_region
    run(cs, lambda idx: CurrentSource(_ca_cs_current(betas[idx], cfg)))
    if cfg.ca_voltage_limit and cfg.mode is Mode.HALMBA:
        over = cs & ok & (np.abs(v[:, 2]) > cfg.ca.v_dd * (1 + VS_SWITCH_TOL))
        phases = np.angle(v[:, 2])
        run(over, lambda idx: VoltageSource(cfg.ca.v_dd * np.exp(1j * phases[idx])))
    if np.any(vs_region):
        theta = ca_vs_phase(cfg, load)
        run(vs_region, lambda idx: VoltageSource(np.full(int(np.sum(idx)), cfg.ca.v_dd * np.exp(1j * theta))))
    return v, i, pl, bal, ok


def detect_clipping(result: SweepResult) -> np.ndarray:
    """(N, 3) flags for CA, BA1, BA2 voltage magnitudes above their supplies."""
    cfg = result.config
    supplies = np.array([cfg.ca.v_dd, cfg.ba1.v_dd, cfg.ba2.v_dd])
    mags = np.abs(np.stack([result.v_ca, result.v_ba1, result.v_ba2], axis=1))
    with np.errstate(invalid="ignore"):
        return np.nan_to_num(mags, nan=0.0) > supplies * (1 + CLIP_TOL)


def sweep(cfg: ArchitectureConfig, load: complex | None = None) -> SweepResult:
    if load is None:
        load = complex(cfg.z0)
    load = complex(load)
    betas = cfg.betas
    v, i, p_out, bal, ok = _solve_sweep(cfg, load)
    if not np.any(ok):
        raise SweepError("every sweep point failed to solve")
    sol_like = NetworkSolution(v, i, 0.5 * np.real(v * np.conj(i)), p_out, (True, False, False, False))
    z_ba1 = port_impedance(sol_like, 2)
    z_ca = port_impedance(sol_like, 3)
    z_ba2 = port_impedance(sol_like, 4)
    mag = np.abs(i)
    i_b1, i_c, i_b2 = mag[:, 1], mag[:, 2], mag[:, 3]
    p_dc = np.zeros(len(betas))
    for prof, cur in ((cfg.ca, i_c), (cfg.ba1, i_b1), (cfg.ba2, i_b2)):
        p_dc = p_dc + prof.v_dd * dc_current(np.nan_to_num(cur), prof)
    p_dc[~ok] = np.nan
    with np.errstate(divide="ignore", invalid="ignore"):
        eff = np.where(p_dc > 0, p_out / np.where(p_dc > 0, p_dc, 1.0), 0.0)
        v_out = v[:, 0]
        gain = np.where(betas > 0, np.abs(v_out) / np.where(betas > 0, betas, 1.0), np.nan)
    eff[~ok] = np.nan
    out_phase = np.where(np.abs(v_out) > 1e-15, np.angle(v_out), np.nan)
    result = SweepResult(
        cfg, load, betas, np.asarray(region_of(betas, cfg.rb)), i_c, i_b1, i_b2,
        z_ca, z_ba1, z_ba2, v[:, 2], v[:, 1], v[:, 3], v_out,
        p_out, p_dc, eff, gain, out_phase, np.zeros((len(betas), 3), dtype=bool), bal, ok,
    )
    object.__setattr__(result, "clipping", detect_clipping(result))
    return result


def pdlmba_sweep(cfg: ArchitectureConfig, load: complex | None = None) -> SweepResult:
    """Comparison sweep with both balanced devices turning on together at beta_lbo."""
    return sweep(cfg.replace(mode=Mode.PDLMBA), load)


def closed_form_impedances(beta, cfg: ArchitectureConfig):
    """Matched-load impedances straight from the coupler closed forms.

    Independent of the network solver; used as a cross-check. Returns
    ``(z_ca, z_ba1, z_ba2)`` with NaN for off devices.
    """
    b = np.asarray(beta, dtype=float)
    z0 = cfg.z0
    ib1, ib2 = _ba_currents(b, cfg)
    ib1 = np.asarray(ib1, dtype=float)
    ib2 = np.asarray(ib2, dtype=float)
    rot = np.exp(1j * cfg.phi)
    if cfg.mode is Mode.PDLMBA:
        c = np.minimum(b, cfg.rb.beta_lbo) * cfg.ca.i_max / 2.0 * rot
    else:
        # CA phasor c = I_c e^{j phi}; in the ALMBA region it follows from the
        # saturated CA voltage V3 = j z0 (c + sqrt2 (I_b2 - I_b1)).
        hbo = cfg.rb.beta_hbo
        c_h = hbo * cfg.ca.i_max / 2.0 * rot
        d_h = doherty_primary_current(hbo, cfg.rb, cfg.ca.i_max)
        i1_h, i2_h = (d_h, 0.0) if cfg.primary_port == 2 else (0.0, d_h)
        v3_h = 1j * z0 * (c_h + SQRT2 * (i2_h - i1_h))
        v3 = cfg.ca.v_dd * v3_h / abs(v3_h)
        c_vs = v3 / (1j * z0) - SQRT2 * (ib2 - ib1)
        c = np.where(b >= hbo, c_vs, b * cfg.ca.i_max / 2.0 * rot)
    nan = complex(np.nan, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        on1 = ib1 > 1e-12
        on2 = ib2 > 1e-12
        onc = np.abs(c) > 1e-12
        z_ba1 = np.where(on1, z0 * (SQRT2 * c + ib2) / np.where(on1, ib1, 1.0), nan)
        z_ba2 = np.where(on2, z0 * (2 + SQRT2 * c / np.where(on2, ib2, 1.0) - ib1 / np.where(on2, ib2, 1.0)), nan)
        z_ca = np.where(onc, z0 * (1 + SQRT2 * (ib2 - ib1) / np.where(onc, c, 1.0)), nan)
    if np.ndim(beta) == 0:
        return complex(z_ca), complex(z_ba1), complex(z_ba2)
    return z_ca, z_ba1, z_ba2


@dataclass(frozen=True)
class Linearity:
    beta: np.ndarray
    gain_db: np.ndarray
    phase_deg: np.ndarray
    amam_span_db: float
    ampm_span_deg: float


def amam_ampm(result: SweepResult) -> Linearity:
    """Gain and phase relative to the lowest nonzero drive point."""
    sel = (result.beta > 0) & result.ok
    if np.sum(sel) < 2:
        raise ValueError("need at least two points with beta > 0")
    v = result.v_out[sel]
    if np.all(np.abs(v) < 1e-15):
        raise UndefinedGainError("output is zero everywhere; gain undefined")
    gain = result.gain[sel]
    ref = gain[0]
    if ref <= 0:
        raise UndefinedGainError("reference gain is zero")
    with np.errstate(divide="ignore"):
        gain_db = 20 * np.log10(gain / ref)
    rel = np.unwrap(np.angle(v * np.conj(v[0])))
    phase_deg = np.degrees(rel)
    finite = np.isfinite(gain_db)
    return Linearity(
        result.beta[sel], gain_db, phase_deg,
        float(np.ptp(gain_db[finite])), float(np.ptp(phase_deg)),
    )


def efficiency_peaks(result: SweepResult, include_endpoint: bool = True) -> list[int]:
    """Indices of local efficiency maxima (three-point test, plateau tolerance)."""
    e = np.nan_to_num(result.efficiency, nan=-np.inf)
    n = len(e)
    peaks = [
        k for k in range(1, n - 1)
        if e[k] > e[k - 1] + PEAK_TOL and e[k] >= e[k + 1] - PEAK_TOL
    ]
    if include_endpoint and n >= 2 and e[-1] > e[-2] + PEAK_TOL:
        peaks.append(n - 1)
    return peaks


def first_peak_obo(result: SweepResult) -> float:
    """Back-off in dB of the lowest-drive interior efficiency peak from full-drive power."""
    if len(result) < 3:
        raise NoBackoffPeakError("grid too small to hold an interior efficiency peak")
    peaks = efficiency_peaks(result, include_endpoint=False)
    peaks = [k for k in peaks if result.p_out[k] > 0]
    if not peaks:
        raise NoBackoffPeakError("no back-off efficiency peak")
    k = peaks[0]
    return float(10 * np.log10(result.p_out[-1] / result.p_out[k]))


def efficiency_at_obo(result: SweepResult, obo_db: float = 10.0) -> float:
    """Efficiency interpolated (in dB of output power) at ``obo_db`` below peak power."""
    p = np.nan_to_num(result.p_out, nan=0.0)
    p_max = float(np.max(p))
    if p_max <= 0:
        raise UndefinedGainError("no output power")
    target = 10 * np.log10(p_max) - obo_db
    with np.errstate(divide="ignore"):
        p_db = 10 * np.log10(p)
    above = np.nonzero(p_db >= target)[0]
    k = int(above[0])
    if k == 0:
        return float(result.efficiency[0])
    x0, x1 = p_db[k - 1], p_db[k]
    e0, e1 = result.efficiency[k - 1], result.efficiency[k]
    if not np.isfinite(x0):
        return float(e1)
    t = (target - x0) / (x1 - x0)
    return float(e0 + t * (e1 - e0))
