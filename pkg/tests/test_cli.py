import pytest
from unittest.mock import patch

from sine_gordon_lab.cli import main
from sine_gordon_lab.errors import RegimeError, StatisticalTestFailure
from sine_gordon_lab.fourier import GridSpec
from sine_gordon_lab.io import write_field_dump
from sine_gordon_lab.noise import SeededStream, sample_gff


@pytest.fixture
def mock_run_experiment(tmp_path):
    """Mock the run_experiment function in the cli module."""
    with patch("sine_gordon_lab.cli.run_experiment", return_value=tmp_path) as mock:
        yield mock


@pytest.mark.parametrize(
    "args, expected",
    [
        (
            ["sine-gordon-lab", "run"],
            {"subcommand": "renorm-table", "seed": 0, "threads": 1},
        ),
        (
            ["sine-gordon-lab", "run", "--subcommand", "gmc-scan", "--seed", "7", "--threads", "4"],
            {"subcommand": "gmc-scan", "seed": 7, "threads": 4},
        ),
        (
            ["sine-gordon-lab", "run", "--seed", "3", "--set", "--seed=9", "--grid.n_side", "64"],
            {"subcommand": "renorm-table", "seed": 3, "threads": 1},
        ),
    ],
)
def test_run_command(mock_run_experiment, args, expected):
    """Test the 'run' subcommand; explicit flags win over --set overrides."""
    with patch("sys.argv", args):
        main()
    mock_run_experiment.assert_called_once()
    config = mock_run_experiment.call_args.args[0]
    assert {key: getattr(config, key) for key in expected} == expected


def test_set_overrides_reach_the_config(mock_run_experiment, tmp_path):
    args = ["sine-gordon-lab", "run", "--out", str(tmp_path), "--set", "--grid.n_side=64", "--sampler.potential_off"]
    with patch("sys.argv", args):
        main()
    config = mock_run_experiment.call_args.args[0]
    assert config.grid.n_side == 64
    assert config.sampler.potential_off is True
    assert config.out == str(tmp_path)


def test_config_file(mock_run_experiment, tmp_path):
    path = tmp_path / "exp.json"
    path.write_text('{"subcommand": "cos-decay", "N": 8}', encoding="utf-8")
    with patch("sys.argv", ["sine-gordon-lab", "run", "--config", str(path)]):
        main()
    config = mock_run_experiment.call_args.args[0]
    assert config.subcommand == "cos-decay"
    assert config.N == 8.0


@pytest.mark.parametrize(
    "args, code",
    [
        (["sine-gordon-lab", "run", "--set", "--grid.bogus=1"], 2),
        (["sine-gordon-lab", "run", "--set", "--grid.n_side=48"], 2),
        (["sine-gordon-lab", "run", "--subcommand", "run-wave", "--set", "--beta2=7.0"], 3),
    ],
)
def test_errors_map_to_exit_codes(mock_run_experiment, args, code):
    """Configuration errors exit with 2 and regime errors with 3, before any compute."""
    with patch("sys.argv", args):
        with pytest.raises(SystemExit) as excinfo:
            main()
        assert excinfo.value.code == code
    mock_run_experiment.assert_not_called()


@pytest.mark.parametrize("error, code", [(RegimeError("x"), 3), (StatisticalTestFailure("p=0.001"), 4)])
def test_library_errors_map_to_exit_codes(error, code):
    with patch("sine_gordon_lab.cli.run_experiment", side_effect=error):
        with patch("sys.argv", ["sine-gordon-lab", "run"]):
            with pytest.raises(SystemExit) as excinfo:
                main()
    assert excinfo.value.code == code


def test_inspect_command(tmp_path, capsys):
    """Test the 'inspect' subcommand on a two-record dump."""
    grid = GridSpec(1.0, 8)
    fields = sample_gff(grid, SeededStream(1, "cli"), (2,))
    dump = write_field_dump(tmp_path / "ckpt.sgsq", fields.member(0), fields.member(1))
    with patch("sys.argv", ["sine-gordon-lab", "inspect", str(dump), "--csv", str(tmp_path / "modes.csv")]):
        main()
    assert (tmp_path / "modes-0.csv").exists()
    assert (tmp_path / "modes-1.csv").exists()
    assert "modes-1.csv" in capsys.readouterr().out


def test_missing_command():
    """Test running the CLI without a subcommand."""
    with patch("sys.argv", ["sine-gordon-lab"]):
        with pytest.raises(SystemExit) as excinfo:
            main()
        assert excinfo.value.code == 2  # argparse exits with code 2 for missing arguments


def test_invalid_command():
    """Test an invalid command for the CLI."""
    args = ["sine-gordon-lab", "invalid_command"]
    with patch("sys.argv", args):
        with pytest.raises(SystemExit) as excinfo:
            main()
        assert excinfo.value.code == 2  # argparse exits with code 2 for invalid commands


def test_invalid_subcommand_choice():
    args = ["sine-gordon-lab", "run", "--subcommand", "fly"]
    with patch("sys.argv", args):
        with pytest.raises(SystemExit) as excinfo:
            main()
        assert excinfo.value.code == 2
