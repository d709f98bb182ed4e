import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halmba.network import (
    SQRT2,
    CurrentSource,
    DegenerateBoundaryError,
    NoSourceError,
    PassiveLoad,
    VoltageSource,
    _gauss_solve,
    build_ideal_coupler,
    is_off,
    port_impedance,
    power_balance,
    solve,
    solve_batch,
)

NET = build_ideal_coupler()

finite = st.floats(-2.0, 2.0, allow_nan=False)
positive = st.floats(0.05, 5.0, allow_nan=False)


def drive(zl, ib1, ic, ib2, phi=0.0):
    return [
        PassiveLoad(zl),
        CurrentSource(ib1),
        CurrentSource(1j * ic * np.exp(1j * phi)),
        CurrentSource(-1j * ib2),
    ]


def test_matrix_is_symmetric_and_purely_reactive():
    z = build_ideal_coupler(50.0).zmatrix
    assert np.allclose(z, z.T)
    assert np.all(z.real == 0)
    assert z[0, 2] == pytest.approx(50j)
    assert z[0, 3] == pytest.approx(-50j * SQRT2)


def test_matrix_is_read_only():
    with pytest.raises(ValueError):
        NET.zmatrix[0, 0] = 1.0


def test_bad_z0_rejected():
    with pytest.raises(ValueError):
        build_ideal_coupler(0.0)


def test_ca_only_matched():
    # a single 0.25 carrier current into a matched load delivers I^2 z0 / 2
    sol = solve(NET, drive(1.0, 0.0, 0.25, 0.0))
    assert sol.load_power == pytest.approx(0.03125, abs=1e-15)
    assert sol.port_power[2] == pytest.approx(0.03125, abs=1e-15)
    assert port_impedance(sol, 3) == pytest.approx(1.0, abs=1e-14)
    assert is_off(port_impedance(sol, 2))
    assert is_off(port_impedance(sol, 4))


def test_full_drive_load_power():
    # saturated CA current at beta = 1 follows from |z_ca| = 0.638698
    ic = 0.25 / 0.6386979039
    sol = solve(NET, drive(1.0, 0.4, ic, 0.3))
    assert sol.load_power == pytest.approx(0.33267, abs=1e-5)


def test_output_voltage_is_constructive():
    ic, ib2 = 0.3, 0.2
    sol = solve(NET, drive(1.0, 0.1, ic, ib2))
    assert sol.v[0] == pytest.approx(-(ic + SQRT2 * ib2), abs=1e-14)


def test_no_source_and_singular_systems():
    with pytest.raises(NoSourceError):
        solve(NET, [PassiveLoad(1.0)] * 4)
    # voltage sources on the two uncoupled ports 1 and 2 leave ports 3, 4 undetermined
    with pytest.raises(DegenerateBoundaryError):
        solve(NET, [VoltageSource(1.0), VoltageSource(1.0), CurrentSource(0.0), CurrentSource(0.0)])
    sol, ok = solve_batch(NET, [VoltageSource(1.0), VoltageSource(1.0), CurrentSource(0.0), CurrentSource(0.0)])
    assert not ok
    assert np.all(np.isnan(sol.i))


def test_passive_load_needs_positive_resistance():
    with pytest.raises(ValueError):
        PassiveLoad(-1.0 + 1j)


def test_port_index_checked():
    sol = solve(NET, drive(1.0, 0.1, 0.1, 0.1))
    with pytest.raises(ValueError):
        port_impedance(sol, 0)


def test_gauss_matches_numpy(rng):
    a = rng.normal(size=(50, 4, 4)) + 1j * rng.normal(size=(50, 4, 4))
    b = rng.normal(size=(50, 4)) + 1j * rng.normal(size=(50, 4))
    x, ok = _gauss_solve(a, b)
    assert ok.all()
    assert np.allclose(x, np.linalg.solve(a, b[..., None])[..., 0], rtol=1e-10, atol=1e-12)


def test_batched_equals_pointwise(rng):
    ib1 = rng.uniform(0, 0.5, 7)
    ic = rng.uniform(0.01, 0.5, 7)
    sol, ok = solve_batch(NET, drive(1.3 - 0.2j, ib1, ic, 0.1))
    assert ok.all()
    for k in range(7):
        one = solve(NET, drive(1.3 - 0.2j, ib1[k], ic[k], 0.1))
        assert np.allclose(sol.v[k], one.v, atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(positive, finite, positive, finite, finite, finite, st.floats(-np.pi, np.pi))
def test_power_conservation(r, x, ic, ib1, ib2, vs, phi):
    sol = solve(NET, drive(complex(r, x), abs(ib1), ic, abs(ib2), phi))
    assert power_balance(sol) <= 1e-9
    sol = solve(NET, [PassiveLoad(complex(r, x)), CurrentSource(ib1), VoltageSource(1j * (abs(vs) + 0.01)), CurrentSource(-1j * ib2)])
    assert power_balance(sol) <= 1e-9


@settings(max_examples=300, deadline=None)
@given(positive, st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(-np.pi, np.pi))
def test_matched_impedances_follow_closed_forms(ic, ib1, ib2, phi):
    # z_ba1 = sqrt2 c/ib1 + ib2/ib1, z_ba2 = 2 + sqrt2 c/ib2 - ib1/ib2,
    # z_ca = 1 + sqrt2 (ib2 - ib1)/c with c = ic e^{j phi}
    ib1 += 1e-3
    ib2 += 1e-3
    c = ic * np.exp(1j * phi)
    sol = solve(NET, drive(1.0, ib1, ic, ib2, phi))
    assert port_impedance(sol, 2) == pytest.approx(SQRT2 * c / ib1 + ib2 / ib1, rel=1e-10)
    assert port_impedance(sol, 4) == pytest.approx(2 + SQRT2 * c / ib2 - ib1 / ib2, rel=1e-10)
    assert port_impedance(sol, 3) == pytest.approx(1 + SQRT2 * (ib2 - ib1) / c, rel=1e-10)


@settings(max_examples=300, deadline=None)
@given(positive, st.floats(-5.0, 5.0), positive)
def test_low_power_inversion(r, x, z0):
    net = build_ideal_coupler(z0)
    zl = complex(r, x) * z0
    sol = solve(net, [PassiveLoad(zl), CurrentSource(0.0), CurrentSource(0.2j), CurrentSource(0.0)])
    assert abs(port_impedance(sol, 3) - z0**2 / zl) <= 1e-10 * abs(z0**2 / zl)
