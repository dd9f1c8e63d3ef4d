from pathlib import Path

import pytest

import wxscale

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def test_graphcast_params():
    assert wxscale.param_count_graphcast(512, 16) == 34156544
    assert wxscale.format_millions(34156544) == "34.2M"
    rep = wxscale.params("GraphCast", 512, 16)
    assert rep["kind"] == "params"
    assert rep["body"]["params_millions"] == "34.2M"


def test_registry_listing():
    rows = wxscale.params()["body"]["rows"]
    assert any(r["arch"] == "Aurora" for r in rows)


def test_flops_hand_case():
    rep = wxscale.flops("GraphCast", 1, 1, config={"grid": {"n_grid": 2, "n_mesh": 1, "e_mesh": 1}}, samples=10)
    assert rep["body"]["forward_total"] == "156"
    assert rep["body"]["train_total"] == "468"
    assert rep["body"]["compute_total"] == "4680"


def test_crps():
    assert wxscale.crps([0.0, 2.0], 1.0) == pytest.approx(0.5, abs=1e-15)
    assert wxscale.crps([3.0], 1.0) == 2.0


def test_power_law_recovery():
    x = [10.0**k for k in range(1, 7)]
    loss = [2.0 * v**-0.5 for v in x]
    fit = wxscale.fit_power_law(x, loss, resamples=200)
    assert fit["exponent"] == pytest.approx(0.5, rel=1e-10)
    assert fit["prefactor"] == pytest.approx(2.0, rel=1e-10)


def test_fit_and_metrics_reports():
    rep = wxscale.fit(FIXTURES / "three_records.jsonl", "power-D", resamples=100)
    assert rep["kind"] == "fit_power"
    rep = wxscale.metrics(str(FIXTURES / "pred_5.wxt"), str(FIXTURES / "truth_5.wxt"))
    assert rep["body"]["weighted_loss"] == pytest.approx(5.0)


def test_utilization_preset():
    rows = wxscale.utilization(preset=str(Path(wxscale._core.default_registry_path()).parent / "utilization_h100.json"))
    assert rows["kind"] == "utilization"


def test_errors_map_to_exception_types():
    with pytest.raises(wxscale.ValidationError):
        wxscale.flops("Aurora", 64, [3, 5, 4], heads=3)
    with pytest.raises(wxscale.InsufficientDataError):
        wxscale.fit(FIXTURES / "three_records.jsonl", "power-D", models=["nobody"])
    assert issubclass(wxscale.InsufficientDataError, ValueError)
