"""Piecewise-linear drive-dependent current laws for CA, BA1 and BA2.

Drive level ``beta`` is the normalized input voltage magnitude in [0, 1].
All functions accept scalars or numpy arrays for ``beta``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

SQRT2 = np.sqrt(2.0)
CLASS_B_DC_RATIO = 2.0 / np.pi


class Role(enum.Enum):
    CA = "ca"
    BA_PRIMARY = "ba_primary"
    BA_SECONDARY = "ba_secondary"


class Region(enum.IntEnum):
    LOW_POWER = 0
    DOHERTY = 1
    ALMBA = 2

    @property
    def label(self) -> str:
        return {0: "low_power", 1: "doherty", 2: "almba"}[int(self)]


@dataclass(frozen=True)
class RegionBoundaries:
    beta_lbo: float = 0.5
    beta_hbo: float = 0.75

    def __post_init__(self):
        if not 0 < self.beta_lbo < self.beta_hbo < 1:
            raise ValueError(
                f"need 0 < beta_lbo < beta_hbo < 1, got {self.beta_lbo}, {self.beta_hbo}"
            )


def truncated_cosine_fourier(conduction_half_angle: float) -> tuple[float, float]:
    """DC and fundamental coefficients of a unit-peak truncated cosine.

    The waveform is ``(cos t - cos a) / (1 - cos a)`` for ``|t| < a`` and zero
    elsewhere, ``a`` being the conduction half-angle. At ``a = pi/2`` (class B)
    this gives ``1/pi`` and ``1/2``.
    """
    a = float(conduction_half_angle)
    if not 0 < a <= np.pi:
        raise ValueError(f"conduction half-angle must be in (0, pi], got {a}")
    c = np.cos(a)
    s = np.sin(a)
    denom = np.pi * (1.0 - c)
    dc = (s - a * c) / denom
    fund = (a - s * c) / denom
    return float(dc), float(fund)


@dataclass(frozen=True)
class DeviceProfile:
    """One sub-amplifier's current law parameters.

    ``scale`` is the fundamental scale factor relative to ``i_max`` (lambda for
    the primary peaking device, gamma for the secondary; 0.5 for a class-B CA).
    When ``conduction_angle`` (half-angle, radians) is given, ``dc_ratio`` is
    derived from the truncated-cosine decomposition instead.
    """

    role: Role
    i_max: float = 1.0
    turn_on: float = 0.0
    scale: float = 0.5
    dc_ratio: float = CLASS_B_DC_RATIO
    v_dd: float = 0.25
    conduction_angle: float | None = field(default=None)

    def __post_init__(self):
        if self.conduction_angle is not None:
            dc, fund = truncated_cosine_fourier(self.conduction_angle)
            object.__setattr__(self, "dc_ratio", dc / fund)
        problems = []
        if not 0 <= self.turn_on < 1:
            problems.append(f"turn_on={self.turn_on} outside [0, 1)")
        if not 0 < self.scale <= 0.5:
            problems.append(f"scale={self.scale} outside (0, 0.5]")
        if not self.i_max > 0:
            problems.append(f"i_max={self.i_max} must be positive")
        if not self.v_dd > 0:
            problems.append(f"v_dd={self.v_dd} must be positive")
        if not 0 < self.dc_ratio <= 1:
            problems.append(f"dc_ratio={self.dc_ratio} outside (0, 1]")
        if problems:
            raise ValueError(f"invalid {self.role.value} profile: " + "; ".join(problems))


def _check_beta(beta) -> np.ndarray:
    b = np.asarray(beta, dtype=float)
    if np.any(~np.isfinite(b)) or np.any(b < 0) or np.any(b > 1):
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    return b


def _out(x, beta):
    return float(x) if np.ndim(beta) == 0 else x


def region_of(beta, rb: RegionBoundaries):
    b = _check_beta(beta)
    r = np.where(b < rb.beta_lbo, 0, np.where(b < rb.beta_hbo, 1, 2))
    if np.ndim(beta) == 0:
        return Region(int(r))
    return r


def ca_fundamental(beta, p: DeviceProfile, rb: RegionBoundaries, z_ca=None):
    """CA fundamental current magnitude.

    Current-source law ``beta * i_max / 2`` below ``beta_hbo``; above it the CA
    is voltage saturated and delivers ``v_dd / |z_ca|``.
    """
    b = _check_beta(beta)
    cs = b * p.i_max / 2.0
    almba = b >= rb.beta_hbo
    if not np.any(almba):
        return _out(cs, beta)
    if z_ca is None:
        raise ValueError("z_ca is required in the ALMBA region")
    mag = np.abs(np.asarray(z_ca, dtype=complex))
    if np.any((mag < 1e-12) & almba):
        raise ValueError("|z_ca| too small for the voltage-source law")
    with np.errstate(divide="ignore"):
        vs = p.v_dd / mag
    return _out(np.where(almba, vs, cs), beta)


def doherty_primary_current(beta, rb: RegionBoundaries, i_max_c: float = 1.0):
    """Primary peaking current in the Doherty region (keeps the CA voltage constant)."""
    return SQRT2 * (np.asarray(beta, dtype=float) - rb.beta_lbo) / 4.0 * i_max_c


def ba_primary_fundamental(beta, p: DeviceProfile, rb: RegionBoundaries, i_max_c: float = 1.0):
    b = _check_beta(beta)
    span = 1.0 - rb.beta_hbo
    at_hbo = doherty_primary_current(rb.beta_hbo, rb, i_max_c)
    doherty = doherty_primary_current(b, rb, i_max_c)
    almba = (b - rb.beta_hbo) / span * p.scale * p.i_max + at_hbo * (1.0 - b) / span
    out = np.where(b < rb.beta_lbo, 0.0, np.where(b < rb.beta_hbo, doherty, almba))
    return _out(out, beta)


def ba_secondary_fundamental(beta, p: DeviceProfile, rb: RegionBoundaries):
    b = _check_beta(beta)
    ramp = (b - rb.beta_hbo) / (1.0 - rb.beta_hbo) * p.scale * p.i_max
    return _out(np.where(b < rb.beta_hbo, 0.0, ramp), beta)


def dc_current(fund, p: DeviceProfile):
    f = np.asarray(fund, dtype=float)
    if np.any(f < 0):
        raise ValueError("fundamental current magnitude must be non-negative")
    return _out(p.dc_ratio * f, fund)
