"""Ideal output quadrature coupler as a 4-port impedance matrix.

Port numbering follows the amplifier schematic: port 1 is the load,
port 2 is BA1, port 3 is the carrier amplifier (CA) and port 4 is BA2.
All port currents flow *into* the network, so a passive termination
obeys ``V = -z * I``.

Every quantity may be batched: excitation values can be numpy arrays
of a common shape, in which case the solution arrays carry that shape
plus a trailing axis of length 4.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

SQRT2 = np.sqrt(2.0)
PIVOT_TOL = 1e-12
OFF_TOL = 1e-12
POWER_EPS = 1e-15

_PATTERN = np.array(
    [
        [0, 0, 1j, -1j * SQRT2],
        [0, 0, -1j * SQRT2, 1j],
        [1j, -1j * SQRT2, 0, 0],
        [-1j * SQRT2, 1j, 0, 0],
    ],
    dtype=complex,
)


class NetworkError(ValueError):
    pass


class NoSourceError(NetworkError):
    pass


class DegenerateBoundaryError(NetworkError):
    pass


@dataclass(frozen=True)
class CurrentSource:
    value: complex | np.ndarray


@dataclass(frozen=True)
class VoltageSource:
    value: complex | np.ndarray


@dataclass(frozen=True)
class PassiveLoad:
    z: complex | np.ndarray

    def __post_init__(self):
        if np.any(np.real(self.z) <= 0):
            raise ValueError(f"passive load needs a positive real part, got {self.z}")


PortExcitation = Union[CurrentSource, VoltageSource, PassiveLoad]


@dataclass(frozen=True)
class CouplerNetwork:
    z0: float
    zmatrix: np.ndarray

    def __post_init__(self):
        z = np.array(self.zmatrix, dtype=complex)
        if z.shape != (4, 4):
            raise ValueError("zmatrix must be 4x4")
        z.flags.writeable = False
        object.__setattr__(self, "zmatrix", z)


def build_ideal_coupler(z0: float = 1.0) -> CouplerNetwork:
    """Lossless, reciprocal quadrature coupler scaled to reference impedance ``z0``."""
    if not z0 > 0:
        raise ValueError(f"z0 must be positive, got {z0}")
    return CouplerNetwork(float(z0), z0 * _PATTERN)


@dataclass(frozen=True)
class NetworkSolution:
    v: np.ndarray
    i: np.ndarray
    port_power: np.ndarray
    load_power: np.ndarray | float
    passive: tuple[bool, bool, bool, bool]


def _gauss_solve(a: np.ndarray, b: np.ndarray, tol: float = PIVOT_TOL):
    """Batched Gaussian elimination with partial pivoting.

    ``a`` has shape (B, n, n) and ``b`` shape (B, n). Returns ``(x, ok)``;
    ``ok[k]`` is False when a pivot of system ``k`` falls below ``tol``
    times that system's largest entry.
    """
    a = np.array(a, dtype=complex)
    b = np.array(b, dtype=complex)
    nb, n, _ = a.shape
    rows = np.arange(nb)
    scale = np.max(np.abs(a), axis=(1, 2))
    ok = scale > 0
    scale = np.where(ok, scale, 1.0)
    for k in range(n):
        p = k + np.argmax(np.abs(a[:, k:, k]), axis=1)
        a_k, b_k = a[rows, k].copy(), b[rows, k].copy()
        a[rows, k], b[rows, k] = a[rows, p], b[rows, p]
        a[rows, p], b[rows, p] = a_k, b_k
        piv = a[:, k, k]
        bad = np.abs(piv) < tol * scale
        ok &= ~bad
        piv = np.where(bad, 1.0, piv)
        f = a[:, k + 1 :, k] / piv[:, None]
        a[:, k + 1 :, k:] -= f[:, :, None] * a[:, None, k, k:]
        b[:, k + 1 :] -= f * b[:, None, k]
    x = np.zeros_like(b)
    for k in range(n - 1, -1, -1):
        piv = a[:, k, k]
        piv = np.where(np.abs(piv) == 0, 1.0, piv)
        x[:, k] = (b[:, k] - np.sum(a[:, k, k + 1 :] * x[:, k + 1 :], axis=1)) / piv
    return x, ok


def _assemble(net: CouplerNetwork, excitations):
    if len(excitations) != 4:
        raise ValueError("exactly 4 port excitations are required")
    if all(isinstance(e, PassiveLoad) for e in excitations):
        raise NoSourceError("no source: every port is a passive load")
    vals = [e.z if isinstance(e, PassiveLoad) else e.value for e in excitations]
    shape = np.broadcast_shapes(*(np.shape(v) for v in vals))
    nb = int(np.prod(shape)) if shape else 1
    z = net.zmatrix
    a = np.zeros((nb, 4, 4), dtype=complex)
    rhs = np.zeros((nb, 4), dtype=complex)
    for k, (exc, val) in enumerate(zip(excitations, vals)):
        val = np.broadcast_to(np.asarray(val, dtype=complex), shape).reshape(nb)
        if isinstance(exc, CurrentSource):
            a[:, k, k] = 1.0
            rhs[:, k] = val
        elif isinstance(exc, VoltageSource):
            a[:, k, :] = z[k]
            rhs[:, k] = val
        elif isinstance(exc, PassiveLoad):
            a[:, k, :] = z[k]
            a[:, k, k] += val
        else:
            raise TypeError(f"unknown excitation {exc!r}")
    return a, rhs, shape


def _package(net, excitations, i, shape) -> NetworkSolution:
    i = i.reshape(shape + (4,))
    v = i @ net.zmatrix.T
    port_power = 0.5 * np.real(v * np.conj(i))
    passive = tuple(isinstance(e, PassiveLoad) for e in excitations)
    mask = np.array(passive)
    load_power = -np.sum(port_power[..., mask], axis=-1)
    if not shape:
        load_power = float(load_power)
    return NetworkSolution(v, i, port_power, load_power, passive)


def solve_batch(net: CouplerNetwork, excitations) -> tuple[NetworkSolution, np.ndarray]:
    """Like :func:`solve` but reports degenerate systems in a mask instead of raising.

    Failed entries carry NaN voltages and currents.
    """
    a, rhs, shape = _assemble(net, excitations)
    x, ok = _gauss_solve(a, rhs)
    x[~ok] = np.nan
    return _package(net, excitations, x, shape), ok.reshape(shape)


def solve(net: CouplerNetwork, excitations) -> NetworkSolution:
    """Solve ``V = Z I`` together with one boundary condition per port."""
    sol, ok = solve_batch(net, excitations)
    if not np.all(ok):
        raise DegenerateBoundaryError("degenerate boundary conditions: singular system")
    return sol


def port_impedance(sol: NetworkSolution, port: int, tol: float = OFF_TOL):
    """``V/I`` at 1-based ``port``; NaN marks an off port (open circuit)."""
    if port not in (1, 2, 3, 4):
        raise ValueError(f"port must be 1..4, got {port}")
    v = sol.v[..., port - 1]
    i = sol.i[..., port - 1]
    off = np.abs(i) <= tol
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(off, complex(np.nan, np.nan), v / np.where(off, 1.0, i))
    return complex(z) if np.ndim(z) == 0 else z


def is_off(z) -> np.ndarray | bool:
    return np.isnan(np.real(z))


def power_balance(sol: NetworkSolution):
    """Relative mismatch between power delivered by sources and absorbed by loads."""
    src = np.array([not p for p in sol.passive])
    delivered = np.sum(sol.port_power[..., src], axis=-1)
    load = np.asarray(sol.load_power)
    res = np.abs(delivered - load) / np.maximum(load, POWER_EPS)
    return float(res) if np.ndim(res) == 0 else res
