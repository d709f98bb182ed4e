import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halmba.devices import Region, Role
from halmba.engine import (
    Mode,
    NoBackoffPeakError,
    SweepError,
    UndefinedGainError,
    amam_ampm,
    assemble_excitations,
    build_config,
    closed_form_impedances,
    detect_clipping,
    efficiency_at_obo,
    efficiency_peaks,
    first_peak_obo,
    pdlmba_sweep,
    swap_roles,
    sweep,
    uniform_grid,
)
from halmba.network import CouplerNetwork, CurrentSource, PassiveLoad, VoltageSource

# frozen values of the default matched sweep
P_OUT_FULL = 0.332671356
FIRST_PEAK_OBO = 10.2716539
AMAM_SPAN = 4.25105396
MIDDLE_PEAK_EFF = 0.65278026
AMPM_SPAN_30 = 17.1154736
PD_FIRST_PEAK_OBO = 7.65551371


def idx(result, beta):
    return int(np.argmin(np.abs(result.beta - beta)))


def test_grid():
    g = uniform_grid()
    assert len(g) == 201 and g[0] == 0.0 and g[-1] == 1.0
    assert g[100] == 0.5 and g[150] == 0.75
    with pytest.raises(ValueError):
        uniform_grid(0)


def test_supplies_calibrated(cfg):
    assert cfg.ca.v_dd == pytest.approx(0.25)
    assert cfg.ba1.v_dd == pytest.approx(0.5 + 0.25 * np.sqrt(2), abs=1e-12)
    assert cfg.ba2.v_dd == pytest.approx(0.4 + 0.25 * np.sqrt(2), abs=1e-12)


def test_config_validation(cfg):
    with pytest.raises(ValueError):
        cfg.replace(beta_grid=(0.5, 0.2))
    with pytest.raises(ValueError):
        cfg.replace(primary_port=3)
    with pytest.raises(ValueError):
        cfg.replace(ba1=cfg.ba2)


def test_swap_roles(cfg):
    s = swap_roles(cfg)
    assert s.primary_port == 4
    assert s.ba2.role is Role.BA_PRIMARY and s.ba2.turn_on == 0.5 and s.ba2.scale == 0.4
    assert s.ba1.role is Role.BA_SECONDARY and s.ba1.turn_on == 0.75
    # supplies and device size stay with the port
    assert s.ba1.v_dd == cfg.ba1.v_dd and s.ba2.i_max == cfg.ba2.i_max
    keep = swap_roles(cfg, swap_scales=False)
    assert keep.ba2.scale == 0.3
    assert swap_roles(s) == cfg


def test_excitations(cfg):
    ex = assemble_excitations(0.3, cfg, 1.0)
    assert isinstance(ex[0], PassiveLoad)
    assert abs(ex[2].value) == pytest.approx(0.15)
    assert ex[1].value == 0 and ex[3].value == 0
    assert all(abs(e.value) == 0 for e in assemble_excitations(0.0, cfg, 1.0)[1:])
    ex = assemble_excitations(0.8, cfg, 1.0)
    assert isinstance(ex[2], VoltageSource) and abs(ex[2].value) == pytest.approx(0.25)
    assert isinstance(ex[1], CurrentSource) and ex[1].value == pytest.approx(0.1507107, abs=1e-7)
    assert ex[3].value == pytest.approx(-0.06j, abs=1e-12)


def test_matched_key_points(matched):
    k = idx(matched, 0.5)
    assert matched.efficiency[k] == pytest.approx(np.pi / 4, abs=1e-12)
    assert matched.p_out[k] == pytest.approx(0.03125, abs=1e-15)
    assert matched.efficiency[-1] == pytest.approx(np.pi / 4, abs=1e-12)
    assert matched.p_out[-1] == pytest.approx(P_OUT_FULL, abs=1e-9)
    assert matched.efficiency[0] == 0.0
    assert matched.i_c[-1] == pytest.approx(0.3914214, abs=1e-7)
    assert matched.z_ca[-1] == pytest.approx(0.6386979, abs=1e-7)
    assert matched.z_ba1[-1] == pytest.approx(2.1338835, abs=1e-7)
    assert matched.efficiency[idx(matched, 0.75)] == pytest.approx(MIDDLE_PEAK_EFF, abs=1e-8)


def test_matched_impedance_landmarks(cfg):
    z_ca, z_ba1, z_ba2 = closed_form_impedances(0.6, cfg)
    assert z_ca == pytest.approx(0.833333, abs=1e-6)
    assert closed_form_impedances(0.75, cfg)[0] == pytest.approx(2 / 3, abs=1e-12)
    z_ca, z_ba1, z_ba2 = closed_form_impedances(0.4, cfg)
    assert z_ca == pytest.approx(1.0)
    assert np.isnan(z_ba1) and np.isnan(z_ba2)


def test_solver_matches_closed_forms(cfg, matched):
    z_ca, z_ba1, z_ba2 = closed_form_impedances(matched.beta, cfg)
    for got, want in ((matched.z_ca, z_ca), (matched.z_ba1, z_ba1), (matched.z_ba2, z_ba2)):
        assert np.array_equal(np.isnan(got), np.isnan(want))
        on = ~np.isnan(want)
        assert np.all(np.abs(got[on] - want[on]) <= 1e-9 * np.abs(want[on]))


@pytest.mark.parametrize("phi_deg", [-60.0, 25.0, 90.0])
def test_solver_matches_closed_forms_any_phase(cfg, phi_deg):
    c = cfg.replace(phi=np.radians(phi_deg))
    res = sweep(c)
    z_ca = closed_form_impedances(res.beta, c)[0]
    on = ~np.isnan(z_ca)
    assert np.allclose(res.z_ca[on], z_ca[on], rtol=1e-9, atol=0)


def test_sweep_invariants(matched):
    assert len(matched) == 201 and matched.ok.all()
    assert np.all(matched.efficiency <= 1 + 1e-9)
    assert np.all(matched.p_out >= 0)
    assert np.all(matched.p_dc >= matched.p_out - 1e-9)
    assert np.nanmax(matched.balance) <= 1e-9
    assert not detect_clipping(matched).any()


def test_row_view(matched):
    pt = matched.points[100]
    assert pt.beta == 0.5 and pt.region is Region.DOHERTY
    assert pt.clipping == (False, False, False)
    assert np.isnan(matched.points[10].z_ba1)


def test_three_peaks_and_obo(matched):
    assert [matched.beta[k] for k in efficiency_peaks(matched)] == [0.5, 0.75, 1.0]
    assert first_peak_obo(matched) == pytest.approx(FIRST_PEAK_OBO, abs=1e-6)
    assert first_peak_obo(matched) == pytest.approx(10 * np.log10(P_OUT_FULL / 0.03125), abs=1e-7)
    assert efficiency_at_obo(matched, 10.0) == pytest.approx(0.754321291, abs=1e-8)


def test_first_peak_needs_grid(cfg):
    with pytest.raises(NoBackoffPeakError):
        first_peak_obo(sweep(cfg.replace(beta_grid=(0.5, 1.0))))


def test_linearity_at_zero_phase(matched):
    lin = amam_ampm(matched)
    assert lin.ampm_span_deg <= 1e-9
    assert lin.amam_span_db == pytest.approx(AMAM_SPAN, abs=1e-6)
    assert lin.amam_span_db == pytest.approx(20 * np.log10(0.8156854 / 0.5), abs=1e-5)
    low = lin.beta < 0.75
    assert np.ptp(lin.gain_db[low]) <= 1e-12


def test_phase_offset_spreads_ampm(cfg):
    res = sweep(cfg.replace(phi=np.radians(30)))
    assert amam_ampm(res).ampm_span_deg == pytest.approx(AMPM_SPAN_30, abs=1e-5)


@settings(max_examples=25, deadline=None)
@given(st.floats(-np.pi, np.pi))
def test_lower_regions_linear_for_any_phase(phi):
    c = build_config(phi=phi, beta_points=41)
    res = sweep(c)
    sel = (res.beta > 0) & (res.beta < 0.75)
    assert np.ptp(res.gain[sel]) <= 1e-12
    assert np.ptp(np.unwrap(res.out_phase[sel])) <= 1e-9


def test_zero_output_gain_undefined(cfg):
    res = sweep(cfg.replace(beta_grid=(0.0, 1e-300, 2e-300)))
    with pytest.raises(UndefinedGainError):
        amam_ampm(res)


def test_mismatch_without_reconfiguration_clips_ba1(cfg):
    res = sweep(cfg, 2.0)
    flags = res.clipping[:, 1]
    assert flags.any()
    # the carrier is still a current source below beta_hbo, so the port-2
    # voltage is untouched there and clipping starts at the switchover
    assert res.beta[np.argmax(flags)] == 0.75
    assert not res.clipping[:, 2].any()


def test_failed_sweep_raises(cfg):
    # with a decoupled network a voltage-source port has no solution
    dead = cfg.replace(net=CouplerNetwork(1.0, np.zeros((4, 4))), beta_grid=(0.8, 0.9))
    with pytest.raises(SweepError):
        sweep(dead, 1.0)


def test_pdlmba(cfg):
    pd = pdlmba_sweep(cfg)
    assert pd.config.mode is Mode.PDLMBA
    k = idx(pd, 0.75)
    assert pd.z_ca[k] == pytest.approx(1.0, abs=1e-12)
    assert pd.i_c[-1] == pytest.approx(0.25)
    assert pd.i_b1[-1] == pytest.approx(pd.i_b2[-1])
    assert efficiency_peaks(pd)[0] == 100
    assert first_peak_obo(pd) == pytest.approx(PD_FIRST_PEAK_OBO, abs=1e-6)
    ha = sweep(cfg)
    low = pd.beta < 0.5
    assert np.allclose(pd.v_out[low], ha.v_out[low], atol=0)


def test_ca_voltage_limit_holds_supply(cfg):
    c = cfg.replace(ca_voltage_limit=True)
    res = sweep(c, 0.5)
    assert np.all(np.abs(res.v_ca) <= c.ca.v_dd * (1 + 1e-9))
    assert res.balance.max() <= 1e-9
