import json
import math

import pytest

import main
import services.dynamics as dynamics
from handlers import COMMANDS
from handlers.errors import EXIT_BLOWUP, EXIT_CRITERION, EXIT_INVALID, EXIT_OK
from storage.data_manager import ArtifactManager

GAUSSIAN = {
    "grid": {"box_periods": 4, "points": 64},
    "data": {"name": "gaussian", "amplitude": 0.5, "width": 1.0},
    "physics": {"dt": 1e-4, "horizon": 1e-3, "record_every": 5},
    "determinant": {"kappa": [3]},
    "seed": 0,
}


def write_config(tmp_path, document, name="config.json") -> str:
    path = tmp_path / name
    if isinstance(document, str):
        path.write_text(document, encoding="utf-8")
    else:
        path.write_text(json.dumps(document, indent=2), encoding="utf-8")
    return str(path)


def run(tmp_path, command, document, out="out", extra=()):
    messages = []
    config = write_config(tmp_path, document, f"{command}-{out}.json")
    code = main.run([command, "--config", config, "--out", str(tmp_path / out), *extra], notify=messages.append)
    return code, messages, tmp_path / out


def test_every_command_is_registered():
    parser = main.build_parser()
    for name in COMMANDS:
        args = parser.parse_args([name, "--config", "x.json"])
        assert args.command == name
    for argv in (["simulate", "--config", "x.json", "--threads", "0"],
                 ["simulate", "--config", "x.json", "--seed", "-1"],
                 ["simulate"],
                 ["transmogrify", "--config", "x.json"]):
        with pytest.raises(SystemExit) as exc:
            parser.parse_args(argv)
        assert exc.value.code == EXIT_INVALID


def test_usage_errors_do_not_look_like_blow_up(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main.run(["simulate", "--config", str(tmp_path / "x.json"), "--threads", "zero"])
    assert exc.value.code == EXIT_INVALID


def test_simulate_zero_data(tmp_path):
    document = {
        "grid": {"box_periods": 2, "points": 32},
        "data": {"name": "zero"},
        "physics": {"dt": 1e-3, "horizon": 1e-2, "record_every": 5},
        "determinant": {"kappa": [2]},
    }
    code, messages, out = run(tmp_path, "simulate", document)
    assert code == EXIT_OK
    for name in ("trajectory.csv", "trajectory.json", "conservation.csv", "conservation_norms.csv",
                 "conservation.json"):
        assert (out / name).exists()
    summary = ArtifactManager.read_json(str(out / "conservation.json"))
    assert list(summary)[:3] == ["config_hash", "seed", "lab_version"]
    assert summary["command"] == "simulate"
    assert summary["conservation"]["mass_drift"] == 0.0
    lines = (out / "trajectory.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# config_hash=") and lines[1] == "# seed=0"
    assert lines[2] == "t,mass,max_abs,sobolev,modulation,z"
    assert len(lines) == 3 + 3


def test_zero_dt_is_a_config_error(tmp_path):
    text = '{\n  "grid": {"box_periods": 1, "points": 16},\n  "data": {"name": "zero"},\n  "physics": {"dt": 0, "horizon": 1}\n}\n'
    code, messages, _ = run(tmp_path, "simulate", text)
    assert code == EXIT_INVALID
    assert any("line 4" in m for m in messages)


def test_unknown_key_is_rejected(tmp_path):
    text = '{\n  "grid": {"box_periods": 1, "points": 16, "spacing": 2}\n}\n'
    code, messages, _ = run(tmp_path, "norms", text)
    assert code == EXIT_INVALID
    assert any("grid.spacing" in m and "line 2" in m for m in messages)


def test_malformed_json(tmp_path):
    code, messages, _ = run(tmp_path, "norms", '{"grid": {"points": 16,}}')
    assert code == EXIT_INVALID
    assert any("line 1" in m for m in messages)


def test_inadmissible_pair(tmp_path):
    code, messages, out = run(tmp_path, "sweep-strichartz", {"sweep": {"p": 8, "q": 4}})
    assert code == EXIT_INVALID
    assert not (out / "strichartz-biharmonic.csv").exists()


def test_energy_pair_sweep(tmp_path):
    document = {"sweep": {"p": "inf", "q": 2, "frequencies": [4, 8], "ensemble": 16}, "seed": 11}
    code, _, out = run(tmp_path, "sweep-strichartz", document)
    assert code == EXIT_OK
    summary = ArtifactManager.read_json(str(out / "strichartz-biharmonic.json"))
    assert summary["seed"] == 11
    assert summary["sweep"]["mean_ratios"] == pytest.approx([1.0, 1.0], abs=1e-10)
    lines = (out / "strichartz-biharmonic.csv").read_text(encoding="utf-8").splitlines()
    assert lines[2] == "N,sample,ratio"
    assert len(lines) == 3 + 2 * 16


def test_runs_are_byte_identical(tmp_path):
    document = {"sweep": {"p": 16, "q": 4, "frequencies": [4, 8], "ensemble": 16}, "seed": 5}
    run(tmp_path, "sweep-strichartz", document, out="first")
    run(tmp_path, "sweep-strichartz", document, out="second")
    for name in ("strichartz-biharmonic.csv", "strichartz-biharmonic.json"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    document = {"sweep": {"p": 16, "q": 4, "frequencies": [4, 8], "ensemble": 16}, "seed": 5}
    code, _, out = run(tmp_path, "sweep-strichartz", document, extra=["--seed", "9"])
    assert code == EXIT_OK
    assert ArtifactManager.read_json(str(out / "strichartz-biharmonic.json"))["seed"] == 9


def test_simulate_then_conservation_report(tmp_path):
    code, _, out = run(tmp_path, "simulate", GAUSSIAN, out="sim")
    assert code == EXIT_OK
    direct = ArtifactManager.read_json(str(out / "conservation.json"))["conservation"]

    report = {"data": {"trajectory": str(out / "trajectory.json")}, "determinant": {"kappa": [3]}}
    code, _, again = run(tmp_path, "conservation-report", report, out="report")
    assert code == EXIT_OK
    replayed = ArtifactManager.read_json(str(again / "conservation.json"))["conservation"]
    assert replayed["max_alpha_drift"] == pytest.approx(direct["max_alpha_drift"], rel=1e-12, abs=1e-300)
    assert replayed["mass_drift"] == pytest.approx(direct["mass_drift"], rel=1e-12, abs=1e-300)


def test_conservation_report_needs_a_trajectory(tmp_path):
    code, _, _ = run(tmp_path, "conservation-report", {"data": {"trajectory": str(tmp_path / "missing.json")}})
    assert code == EXIT_INVALID


def test_blowup_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(dynamics, "BLOWUP_FACTOR", 1e-3)
    code, messages, _ = run(tmp_path, "simulate", GAUSSIAN)
    assert code == EXIT_BLOWUP
    assert messages[-1].startswith("💥")


def test_criterion_exit_code(tmp_path):
    document = dict(GAUSSIAN)
    document["data"] = {"name": "gaussian", "amplitude": 4.0, "width": 1.0}
    document["physics"] = {"dt": 1e-4, "horizon": 2e-4}
    document["determinant"] = {"kappa": [1]}
    code, messages, out = run(tmp_path, "simulate", document)
    assert code == EXIT_CRITERION
    assert (out / "conservation.json").exists()
    assert any("k1+0i" in m for m in messages)


def test_alpha_profile_of_zero_field(tmp_path):
    document = {
        "grid": {"box_periods": 2, "points": 32},
        "data": {"name": "zero"},
        "determinant": {"kappa0": "auto", "lattice": [-2, 2]},
    }
    code, _, out = run(tmp_path, "alpha", document)
    assert code == EXIT_OK
    lines = (out / "alpha_profile.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3 + 5
    summary = ArtifactManager.read_json(str(out / "alpha_summary.json"))
    assert summary["kappa0_choice"]["kappa0"] == 1.0
    assert summary["profile"]["residual_norm"] == 0.0


def test_alpha_profile_of_gaussian(tmp_path):
    document = {
        "grid": {"box_periods": 4, "points": 64},
        "data": {"name": "gaussian", "amplitude": 0.5, "width": 1.0},
        "determinant": {"kappa0": 4, "lattice": [-2, 2]},
        "norms": {"s": 0.5, "q": 4},
    }
    code, _, out = run(tmp_path, "alpha", document)
    assert code == EXIT_OK
    profile = ArtifactManager.read_json(str(out / "alpha_summary.json"))["profile"]
    assert profile["kappa0"] == 4.0
    assert profile["z_identity"] < 1e-10
    assert profile["flagged"] == []


def test_norms_command(tmp_path):
    document = {
        "grid": {"box_periods": 4, "points": 128},
        "data": {"name": "gaussian", "amplitude": 0.5, "width": 1.0, "carrier": 2.0},
        "norms": {"s": 0.0, "q": 2, "scales": [0.5, 2]},
    }
    code, _, out = run(tmp_path, "norms", document)
    assert code == EXIT_OK
    norms = ArtifactManager.read_json(str(out / "norms.json"))
    values = norms["norms"]
    assert values["l2"] == pytest.approx(math.sqrt(0.25 * math.sqrt(math.pi / 2)), rel=1e-10)
    assert values["z"] is not None
    assert set(norms["critical_scaling"]) == {"0.5", "2"}
    for name in ("box_norms.csv", "band_norms.csv", "scaling.csv"):
        assert (out / name).exists()


def test_norms_skip_z_off_lattice(tmp_path):
    document = {
        "grid": {"box_length": 30.0, "points": 128},
        "data": {"name": "gaussian", "amplitude": 0.5, "width": 1.0},
    }
    code, _, out = run(tmp_path, "norms", document)
    assert code == EXIT_OK
    values = ArtifactManager.read_json(str(out / "norms.json"))["norms"]
    assert values["z"] is None and values["equivalence_ratio"] is None
