import json
import math
from unittest.mock import MagicMock, patch

import pytest

from sine_gordon_lab.config import config_from_dict
from sine_gordon_lab.errors import StatisticalTestFailure
from sine_gordon_lab.experiments import run_experiment
from sine_gordon_lab.measure import InvarianceReport
from sine_gordon_lab.stats import EnsembleStats, LinearFit, scan_point

NAMES = ("O1", "O3")


def invariance_report(shift):
    return InvarianceReport(1.0, NAMES, {"O1": 0.5, "O3": 0.5}, {"O1": shift, "O3": 0.0}, {"O1": 1.0, "O3": 1.0})


@pytest.fixture
def mock_ensemble():
    """Skip the sampler; the invariance handler only needs the ensemble's metadata."""
    ensemble = MagicMock()
    ensemble.metadata.return_value = {"members": 0}
    with patch("sine_gordon_lab.experiments._ensemble", return_value=ensemble) as mock:
        yield mock


def test_invariance_records_detected_control(tmp_path, mock_ensemble):
    config = config_from_dict({"subcommand": "invariance-test", "out": str(tmp_path)})
    with patch("sine_gordon_lab.measure.invariance_test", return_value=invariance_report(0.5)):
        with patch(
            "sine_gordon_lab.measure.wrong_renormalization_control", return_value=invariance_report(8.0)
        ) as control:
            directory = run_experiment(config)
    assert control.call_args.kwargs["gamma_factor"] == 2.0
    summary = json.loads((directory / "invariance.json").read_text())
    assert summary["report"]["passed"] is True
    assert summary["control"]["detected"] is True
    assert summary["control"]["passed"] is False
    assert json.loads((directory / "manifest.json").read_text())["passed"] is True


@pytest.mark.parametrize("main_shift, control_shift", [(0.5, 1.0), (5.0, 8.0)])
def test_invariance_failures(tmp_path, mock_ensemble, main_shift, control_shift):
    """An undetected control fails the run, as does a rejected main test."""
    config = config_from_dict({"subcommand": "invariance-test", "out": str(tmp_path)})
    with patch("sine_gordon_lab.measure.invariance_test", return_value=invariance_report(main_shift)):
        with patch(
            "sine_gordon_lab.measure.wrong_renormalization_control", return_value=invariance_report(control_shift)
        ):
            with pytest.raises(StatisticalTestFailure):
                run_experiment(config)
    manifest = json.loads(next(tmp_path.glob("invariance-test/run-*/manifest.json")).read_text())
    assert manifest["passed"] is False


def decay(slope, slope_se):
    points = [scan_point(N, [1.0, 2.0, 3.0]) for N in (2.0, 4.0)]
    return EnsembleStats.from_scan("N", points, LinearFit(slope, slope_se, 0.0))


@pytest.mark.parametrize(
    "slope, slope_se, fails",
    [
        (-0.5, 0.05, False),  # the exact Gaussian rate -β²/2π
        (-0.2, 0.1, False),  # above -β²/4π = -0.25 but within one SE
        (-0.1, 0.05, True),
        (0.0, math.nan, True),
    ],
)
def test_cos_decay_checks_the_bound(tmp_path, slope, slope_se, fails):
    config = config_from_dict(
        {"subcommand": "cos-decay", "out": str(tmp_path), "scan": {"N_list": [2, 4], "samples": 4}}
    )
    with patch("sine_gordon_lab.chaos.cos_pairing_decay", return_value=decay(slope, slope_se)):
        if fails:
            with pytest.raises(StatisticalTestFailure):
                run_experiment(config)
        else:
            run_experiment(config)
    summary = json.loads(next(tmp_path.glob("cos-decay/run-*/cos_decay.json")).read_text())
    assert summary["bound_violated"] is fails
    assert summary["bound_slope"] == pytest.approx(-0.25)
