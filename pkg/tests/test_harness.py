import json

import numpy as np
import pytest

from idnls_lab import harness, lattice
from idnls_lab.errors import CalibrationError
from idnls_lab.harness import ExperimentConfig, InitialData

SHORT = [20.0, 25.0, 30.0, 35.0, 40.0]


def _cfg(tmp_path, **kw):
    kw.setdefault("out", str(tmp_path / "out"))
    kw.setdefault("base_dir", str(tmp_path))
    return ExperimentConfig(**kw)


def test_config_round_trip(tmp_path):
    cfg = _cfg(tmp_path, initial=InitialData("sech", 0.4, 0.5, 3), times=[1, 2, 3], V0=0.4)
    path = cfg.dump(tmp_path / "cfg.yaml")
    back = ExperimentConfig.load(path)
    assert back.to_dict() == cfg.to_dict()
    assert back.hash() == cfg.hash()
    assert back.dump(tmp_path / "again.yaml").read_text() == path.read_text()


def test_config_hash_ignores_output_location(tmp_path):
    a = _cfg(tmp_path, out="a")
    b = _cfg(tmp_path, out="b", calibration_file="elsewhere.json")
    assert a.hash() == b.hash() and len(a.hash()) == 12
    assert a.hash() != _cfg(tmp_path, dt=0.0025).hash()


@pytest.mark.parametrize(
    "kw",
    [
        {"times": [3.0, 2.0]},
        {"times": []},
        {"dt": 0.0},
        {"ratio_tol": -1.0},
        {"V0": 2.5},
        {"initial": {"kind": "single", "amplitude": 1.0}},
        {"initial": {"kind": "bogus"}},
        {"side": 0},
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ExperimentConfig(**kw)


def test_unknown_keys_rejected():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"dtt": 0.1})


def test_initial_data_kinds():
    assert InitialData("zero").build().amplitudes.tolist() == [0]
    assert InitialData("single", 0.1, offset=2).build().at(2) == 0.1
    c = InitialData("compact", values=[[0.1, 0.0], [0.0, 0.2]], offset=-1).build()
    assert c.at(0) == 0.2j
    s = InitialData("sech", 0.4, 0.5).build()
    assert s.at(0) == 0.4


def test_simulate_zero_data(tmp_path):
    cfg = _cfg(tmp_path, initial=InitialData("zero"), times=[1.0, 2.0])
    ev = harness.run_simulate(cfg, tmp_path / "snaps", {"config_hash": cfg.hash()})
    assert all(not np.any(s.amplitudes) for s in ev.states)
    files = sorted((tmp_path / "snaps").glob("snapshot_*.csv"))
    assert len(files) == 2
    assert f"# config_hash={cfg.hash()}" in files[0].read_text()
    assert lattice.read_state_csv(files[1]).t == 2.0


def test_simulate_halving_dt_self_convergence(tmp_path):
    a = harness.simulate(_cfg(tmp_path, initial=InitialData("single", 0.3), times=[50.0]))
    b = harness.simulate(_cfg(tmp_path, initial=InitialData("single", 0.3), times=[50.0], dt=0.0025))
    assert np.max(np.abs(a.final.amplitudes - b.final.amplitudes)) < 1e-8


def test_calibrate_sign_closed_loop():
    rng = np.random.default_rng(0)
    pred_plus = rng.normal(size=20) + 1j * rng.normal(size=20)
    sim = pred_plus + 1e-3 * rng.normal(size=20)
    res = harness.calibrate_sign(sim, lambda s: s * pred_plus)
    assert res.sign == 1 and res.conclusive and res.separation > 3
    flipped = harness.calibrate_sign(-sim, lambda s: s * pred_plus)
    assert flipped.sign == -1


def test_calibrate_sign_kappa_zero_is_inconclusive():
    res = harness.calibrate_sign(np.zeros(5), lambda s: np.zeros(5))
    assert not res.conclusive and res.sign is None
    assert res.residuals[1] == res.residuals[-1]


def test_calibration_required_before_compare(tmp_path):
    cfg = _cfg(tmp_path, times=[100.0])
    with pytest.raises(CalibrationError, match="calibration required"):
        harness.run_compare_region_b(cfg)
    with pytest.raises(ValueError):
        harness.run_compare_region_b(_cfg(tmp_path, times=[50.0]), sign=1)


def test_calibration_rejects_large_amplitude(tmp_path):
    with pytest.raises(CalibrationError):
        harness.run_calibrate(_cfg(tmp_path, initial=InitialData("single", 0.3)))


def test_calibrate_zero_data_inconclusive(tmp_path):
    cfg = _cfg(tmp_path, initial=InitialData("zero"), times=[10.0])
    res = harness.run_calibrate(cfg)
    assert not res.conclusive
    assert not cfg.calibration_path().exists()


def test_calibration_persist_and_load(tmp_path):
    cfg = _cfg(tmp_path)
    path = cfg.calibration_path()
    path.write_text(json.dumps({"sign": -1}))
    assert harness.load_calibration(cfg) == -1
    path.write_text(json.dumps({"sign": 3}))
    with pytest.raises(CalibrationError):
        harness.load_calibration(cfg)


def test_compare_b_zero_data_vacuous(tmp_path):
    cfg = _cfg(tmp_path, initial=InitialData("zero"), times=[50.0, 100.0])
    rep = harness.run_compare_region_b(cfg, sign=1)
    assert rep.passed
    assert all(r.sim == 0 and r.pred == 0 for r in rep.rows)
    rows, summary = rep.write(tmp_path / "rep", harness.report_header(cfg, 1))
    assert "# calibration_sign=1" in rows.read_text()
    assert "zero_data" in summary.read_text()


def test_compare_b_rows_near_linear(tmp_path):
    cfg = _cfg(tmp_path, initial=InitialData("single", 0.05), times=[60.0, 70.0, 80.0, 90.0, 100.0])
    rep = harness.run_compare_region_b(cfg, sign=-1)
    assert [r.n for r in rep.rows] == [120, 140, 160, 180, 200]
    assert all(r.region == "B" for r in rep.rows)
    assert all(r.rel_err < 0.2 for r in rep.rows)
    assert rep.check("conservation_drift").passed
    names = {c.name for c in rep.checks}
    assert {"front_exponent", "error_exponent", "magnitude_ratio"} <= names


def test_region_scan_zero_data(tmp_path):
    rep = harness.run_region_scan(_cfg(tmp_path, initial=InitialData("zero")))
    assert rep.passed and rep.rows == []


def test_region_scan_reflection_invariance(tmp_path):
    vals = [[0.2, 0.0], [0.0, 0.1], [0.05, 0.05]]
    a = _cfg(tmp_path, initial=InitialData("compact", values=vals, offset=3), times=SHORT, side=1)
    b = _cfg(tmp_path, initial=InitialData("compact", values=vals[::-1], offset=-5), times=SHORT, side=-1)
    ra, rb = harness.run_region_scan(a), harness.run_region_scan(b)
    assert [r.n for r in ra.rows] == [-r.n for r in rb.rows]
    np.testing.assert_array_equal([r.amplitude for r in ra.rows], [r.amplitude for r in rb.rows])
    for name in ra.fits:
        assert ra.fits[name].exponent == rb.fits[name].exponent
    assert [c.passed for c in ra.checks] == [c.passed for c in rb.checks]


def test_region_scan_rows_carry_region_tags(tmp_path):
    rep = harness.run_region_scan(_cfg(tmp_path, initial=InitialData("single", 0.3), times=SHORT))
    assert {r.region for r in rep.rows} <= {"A", "B", "C", "gap"}
    assert all("gap" in r.flag for r in rep.rows if r.region == "gap")
    c_rows = [r for r in rep.rows if r.t == 20.0 and r.n >= 60]
    assert len(c_rows) == 41 and all(r.region == "C" for r in c_rows)
    assert rep.check("C_log_slope").passed
