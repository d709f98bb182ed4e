import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halmba import io as hio
from halmba.engine import sweep
from halmba.reconfig import LoadCondition, evaluate_plan, nominal_plan, plan


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fmt():
    assert hio.fmt(0.5) == "0.500000000"
    assert hio.fmt(np.pi / 4) == "0.785398163"
    assert hio.fmt(-0.0) == hio.fmt(0.0)
    assert hio.fmt(float("nan")) == ""
    assert hio.fmt(1.5e-20) == "1.50000000e-20"


def test_empty_document_gives_defaults():
    sc = hio.parse_config("")
    a = sc.architecture
    assert (a.beta_lbo, a.beta_hbo, a.lam, a.gamma, a.phi_deg, a.beta_points) == (0.5, 0.75, 0.4, 0.3, 0.0, 201)
    cfg = sc.architecture_config()
    assert cfg.ca.v_dd == 0.25 and len(cfg.beta_grid) == 201
    assert sc.loads() == [LoadCondition(1.0)]


def test_ordering_error_names_both_keys():
    with pytest.raises(hio.ConfigError) as exc:
        hio.parse_config("architecture:\n  beta_lbo: 0.8\n  beta_hbo: 0.75\n")
    msg = str(exc.value)
    assert "architecture.beta_lbo" in msg and "architecture.beta_hbo" in msg


def test_every_bad_key_listed():
    doc = "architecture:\n  lambda: 0.9\n  colour: red\n  beta_points: 2.5\nplan:\n  objective: speed\nextra: 1\n"
    with pytest.raises(hio.ConfigError) as exc:
        hio.parse_config(doc)
    joined = " ".join(exc.value.problems)
    for key in ("architecture.lambda", "architecture.colour", "architecture.beta_points", "plan.objective", "extra"):
        assert key in joined


def test_yaml_syntax_error():
    with pytest.raises(hio.ConfigError):
        hio.parse_config("architecture: [unclosed")


def test_load_string():
    sc = hio.parse_config('load:\n  z: "2.0+0.0j"\n')
    assert sc.loads()[0].z == 2.0
    assert hio.parse_complex("0.5-1.5i") == 0.5 - 1.5j
    with pytest.raises(hio.ConfigError):
        hio.parse_config('load:\n  z: "-1+0j"\n')


def test_vswr_loads():
    sc = hio.parse_config("load:\n  vswr: 2\n  step_deg: 30\n")
    assert len(sc.loads()) == 12
    sc = hio.parse_config("load:\n  vswr: 2\n  phases_deg: [0, 90]\n")
    assert [round(ld.gamma_phase_deg) for ld in sc.loads()] == [0, 90]


scenarios = st.builds(
    lambda lbo, gap, lam, z, obj, grid, seg: (lbo, lbo + gap, lam, z, obj, grid, seg),
    st.floats(0.1, 0.6), st.floats(0.05, 0.3), st.floats(0.05, 0.5),
    st.tuples(st.floats(0.01, 10), st.floats(-10, 10)).map(lambda t: complex(*t)),
    st.sampled_from(["ampm", "amam", "eff", "weighted"]), st.floats(0.1, 45), st.integers(1, 6),
)


@settings(max_examples=100, deadline=None)
@given(scenarios)
def test_round_trip(s):
    lbo, hbo, lam, z, obj, grid, seg = s
    doc = {
        "architecture": {"beta_lbo": lbo, "beta_hbo": hbo, "lambda": lam},
        "load": {"z": hio.format_complex(z)},
        "plan": {"objective": obj, "phi_grid_deg": grid},
        "tlfit": {"segments": seg},
    }
    sc = hio.config_from_dict(doc)
    assert hio.parse_config(hio.serialize_config(sc)) == sc


def test_sweep_csv(matched, tmp_path):
    path = hio.export_sweep_csv(matched, tmp_path / "s.csv")
    lines = path.read_text().split("\n")
    assert lines[0] == hio.SWEEP_HEADER
    assert len(lines) == 203 and lines[-1] == ""
    rows = read(path)
    by_beta = {r["beta"]: r for r in rows}
    assert by_beta["0.500000000"]["efficiency"] == "0.785398163"
    assert by_beta["0.300000000"]["z_ba1_re"] == "" and by_beta["0.300000000"]["z_ba1_im"] == ""
    assert by_beta["1.00000000"]["p_out"].startswith("0.33267")
    assert by_beta["1.00000000"]["region"] == "almba"
    assert {r["clip_ba1"] for r in rows} == {"0"}


def test_smith_csv(matched, tmp_path):
    rows = read(hio.export_smith(matched, tmp_path / "g.csv"))
    assert len(rows) == 3 * 201
    ca_low = [r for r in rows if r["device"] == "ca" and 0 < float(r["beta"]) < 0.5]
    assert all(float(r["gamma_re"]) == pytest.approx(0, abs=1e-12) and float(r["gamma_im"]) == pytest.approx(0, abs=1e-12) for r in ca_low)
    off = [r for r in rows if r["device"] == "ba2" and float(r["beta"]) < 0.75]
    assert all((r["gamma_re"], r["gamma_im"]) == ("1.00000000", "0.00000000") for r in off)
    top = [r for r in rows if r["device"] == "ba1" and r["beta"] == "1.00000000"][0]
    # BA1 impedance at full drive: (sqrt2 I_c + I_b2) / I_b1 with I_c = 0.25 + 0.1 sqrt2
    z = (np.sqrt(2) * (0.25 + 0.1 * np.sqrt(2)) + 0.3) / 0.4
    assert float(top["gamma_re"]) == pytest.approx((z - 1) / (z + 1), abs=1e-9)
    assert top["gamma_re"] == "0.361814179"
    for r in rows:
        assert abs(complex(float(r["gamma_re"]), float(r["gamma_im"]))) <= 1 + 1e-9


def test_plan_report(cfg, tmp_path):
    entries = []
    m1 = evaluate_plan(nominal_plan(cfg), LoadCondition(1.0), cfg)[0]
    entries.append((LoadCondition(1.0), nominal_plan(cfg), m1))
    for z in (2.0, 0.5):
        ld = LoadCondition(z)
        p = plan(ld, cfg, grid_deg=30.0)
        entries.append((ld, p, evaluate_plan(p, ld, cfg)[0]))
    lines = hio.export_plan_report(entries, tmp_path / "p.csv").read_text().split("\n")
    assert lines[0] == hio.PLAN_HEADER
    rows = read(tmp_path / "p.csv")
    assert len(rows) == 3
    assert (rows[0]["primary_ba"], rows[0]["vdd_ca"]) == ("BA1", "0.250000000")
    assert float(rows[0]["first_peak_obo_db"]) == pytest.approx(10.27, abs=0.005)
    assert (rows[1]["primary_ba"], rows[1]["vdd_ca"]) == ("BA2", "0.176776695")
    assert (rows[2]["primary_ba"], rows[2]["vdd_ca"]) == ("BA1", "0.353553391")
    with pytest.raises(ValueError):
        hio.export_plan_report([], tmp_path / "q.csv")


def test_exports_deterministic(cfg, tmp_path):
    a = hio.export_sweep_csv(sweep(cfg, 1.5 + 0.5j), tmp_path / "a.csv").read_bytes()
    b = hio.export_sweep_csv(sweep(cfg, 1.5 + 0.5j), tmp_path / "b.csv").read_bytes()
    assert a == b and b"\r" not in a


def test_io_error_names_path(matched, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(hio.ExportError, match="file"):
        hio.export_sweep_csv(matched, blocker / "s.csv")
