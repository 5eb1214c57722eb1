# ruff: noqa: T201, D100, D103
import json

import numpy as np
import pytest

from ddtelegraph.cli import (
    CSV_HEADER,
    EXIT_INVALID,
    EXIT_NUMERICAL,
    EXIT_OK,
    RunConfig,
    build_parser,
    load_model,
    main,
    run,
    split_specs,
)
from ddtelegraph.errors import DomainError, ValidationError
from ddtelegraph.noise import two_state_rtn
from ddtelegraph.optimize import DampedNewton

abs = 1e-10


@pytest.fixture()
def rtn_config(tmp_path):
    path = tmp_path / "rtn.json"
    path.write_text(json.dumps(two_state_rtn(1.0, 1.0).to_dict()))
    return str(path)


def test_validate(subtests, tmp_path, capsys, rtn_config):
    with subtests.test(msg="valid"):
        assert run(["validate", "--config", rtn_config]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["valid"]
        assert report["n_levels"] == 2
        assert report["scalar_s"] == pytest.approx(-2.0, abs=abs)
        assert report["absorbing"] == []
    with subtests.test(msg="column sum"):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"levels": [1, -1], "generator": [[-1, 1], [1, -0.5]]}))
        assert run(["validate", "--config", str(path)]) == EXIT_INVALID
        assert "probability conservation" in capsys.readouterr().err
    with subtests.test(msg="unknown key"):
        path = tmp_path / "extra.json"
        path.write_text(json.dumps({"levels": [1, -1], "generator": [[-1, 1], [1, -1]], "x": 1}))
        assert run(["validate", "--config", str(path)]) == EXIT_INVALID
        assert "configuration" in capsys.readouterr().err


def test_malformed_config(subtests, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "levels": [1, -1],\n  "generator": [[-1, 1], [1, -1]\n}\n')
    with subtests.test(msg="line number"), pytest.raises(ValidationError) as info:
        load_model(path)
    with subtests.test(msg="message"):
        assert info.value.invariant == "configuration"
        assert "line 4" in str(info.value)
    with subtests.test(msg="missing file"), pytest.raises(ValidationError):
        load_model(tmp_path / "missing.json")
    with subtests.test(msg="not an object"), pytest.raises(ValidationError):
        (tmp_path / "list.json").write_text("[1, 2]")
        load_model(tmp_path / "list.json")


def test_expand(capsys, rtn_config):
    assert run(["expand", "--config", rtn_config, "--sequence", "cpmg:2"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["g_total"] == pytest.approx(1 / 48, abs=1e-12)
    assert report["scalar_s"] == pytest.approx(-2.0, abs=1e-12)
    assert report["predicted_cubic"] == pytest.approx(-1 / 24, abs=1e-12)


def test_expand_without_echo(capsys, rtn_config):
    argv = ["expand", "--config", rtn_config, "--sequence", "pos:0.3,0.7"]
    assert run(argv) == EXIT_INVALID
    assert "echo condition" in capsys.readouterr().err


def test_curve(subtests, tmp_path, capsys, rtn_config):
    with subtests.test(msg="stdout"):
        argv = ["curve", "--config", rtn_config, "--sequence", "free", "--t-max", "1"]
        assert run([*argv, "--points", "2"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 3
        t, re_x, im_x, abs_x = (float(v) for v in lines[-1].split(","))
        assert t == 1.0
        assert re_x == pytest.approx(2 / np.e, abs=abs)
        assert im_x == pytest.approx(0.0, abs=abs)
        assert abs_x == pytest.approx(2 / np.e, abs=abs)
    with subtests.test(msg="file and methods"):
        exact = tmp_path / "exact.csv"
        ode = tmp_path / "ode.csv"
        argv = ["curve", "--config", rtn_config, "--sequence", "udd:3", "--t-max", "2"]
        assert run([*argv, "--points", "5", "--out", str(exact), "--workers", "2"]) == EXIT_OK
        assert run([*argv, "--points", "5", "--out", str(ode), "--method", "ode"]) == EXIT_OK
        a = np.loadtxt(exact, delimiter=",", skiprows=1)
        b = np.loadtxt(ode, delimiter=",", skiprows=1)
        assert a == pytest.approx(b, abs=1e-8)
    with subtests.test(msg="bad grid"):
        argv = ["curve", "--config", rtn_config, "--sequence", "free", "--t-max", "0"]
        assert run(argv) == EXIT_INVALID
    with subtests.test(msg="bad sequence"):
        argv = ["curve", "--config", rtn_config, "--sequence", "pos:0.7,0.3", "--t-max", "1"]
        assert run(argv) == EXIT_INVALID
        assert "physical boundary" in capsys.readouterr().err


def test_run_config_grid(subtests):
    with subtests.test(msg="linear"):
        assert RunConfig(t_max=2.0, points=5).grid() == pytest.approx([0, 0.5, 1, 1.5, 2])
    with subtests.test(msg="log"):
        grid = RunConfig(t_max=10.0, points=4, log=True).grid()
        assert grid == pytest.approx([1e-2, 1e-1, 1.0, 10.0])
    with subtests.test(msg="empty"), pytest.raises(DomainError):
        RunConfig(points=0).grid()


def test_run_config_from_args(subtests, rtn_config):
    parser = build_parser()
    with subtests.test(msg="compare"):
        args = parser.parse_args(
            ["compare", "--config", rtn_config, "--sequences", "cpmg:2,pos:0.3,0.7", "--t", "0.5"]
        )
        config = RunConfig.from_args(args)
        assert config.model.n_levels == 2
        assert [s.label for s in config.sequences] == ["cpmg:2", "pos:0.3,0.7"]
        assert config.t == 0.5
    with subtests.test(msg="optimize"):
        args = parser.parse_args(["optimize", "--pulses", "4", "--starts", "7", "--workers", "2"])
        config = RunConfig.from_args(args)
        assert config.model is None
        assert config.sequences == []
        assert (config.pulses, config.starts, config.seed, config.workers) == (4, 7, 0, 2)
    with subtests.test(msg="mc"):
        argv = ["mc", "--config", rtn_config, "--sequence", "udd:3", "--t", "1"]
        args = parser.parse_args([*argv, "--trajectories", "500"])
        config = RunConfig.from_args(args)
        assert config.sequences[0].label == "udd:3"
        assert config.trajectories == 500
    with subtests.test(msg="bad sequence"), pytest.raises(ValidationError):
        args = parser.parse_args(["expand", "--config", rtn_config, "--sequence", "x"])
        RunConfig.from_args(args)


def test_usage_errors_exit_invalid(subtests, capsys, rtn_config):
    with subtests.test(msg="missing argument"), pytest.raises(SystemExit) as info:
        run(["curve", "--config", rtn_config])
    with subtests.test(msg="missing argument code"):
        assert info.value.code == EXIT_INVALID
        assert "error [usage]" in capsys.readouterr().err
    with subtests.test(msg="bad type"), pytest.raises(SystemExit) as info:
        run(["optimize", "--pulses", "two"])
    with subtests.test(msg="bad type code"):
        assert info.value.code == EXIT_INVALID
    with subtests.test(msg="no command"), pytest.raises(SystemExit) as info:
        run([])
    with subtests.test(msg="no command code"):
        assert info.value.code == EXIT_INVALID


def test_split_specs():
    assert split_specs("cpmg:2, pos:0.3,0.7,udd:2,free") == [
        "cpmg:2",
        "pos:0.3,0.7",
        "udd:2",
        "free",
    ]


def test_compare(capsys, rtn_config):
    sequences = "cpmg:2,udd:2,udd:3,cpmg:3,pos:0.3,0.7,free"
    argv = ["compare", "--config", rtn_config, "--sequences", sequences, "--t", "0.5"]
    assert run(argv) == EXIT_OK
    entries = {e["sequence"]: e for e in json.loads(capsys.readouterr().out)}
    assert entries["cpmg:2"]["rank"] == 1
    assert entries["udd:2"]["rank"] == 1
    assert entries["cpmg:3"]["rank"] == 1
    assert entries["udd:3"]["rank"] == 2
    assert entries["pos:0.3,0.7"]["rank"] is None
    assert entries["free"]["rank"] is None
    assert entries["free"]["re_x"] == pytest.approx(np.exp(-0.5) * 1.5, abs=abs)


def test_compare_static_model(tmp_path, capsys):
    path = tmp_path / "static.json"
    config = {"levels": [1, -1], "generator": [[0, 0], [0, 0]], "initial": [0.5, 0.5]}
    path.write_text(json.dumps(config))
    argv = ["compare", "--config", str(path), "--sequences", "cpmg:2,udd:3"]
    assert run(argv) == EXIT_OK
    entries = json.loads(capsys.readouterr().out)
    assert all(e["rank"] is None for e in entries)


def test_optimize(capsys):
    argv = ["optimize", "--pulses", "2", "--starts", "5", "--seed", "3"]
    assert run(argv) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert result["pulse_count"] == 2
    assert result["best_g"] == pytest.approx(1 / 48, abs=1e-9)


def test_optimize_failure(capsys, monkeypatch):
    # Every step stalls, so no start converges.
    monkeypatch.setattr(DampedNewton, "update_x", lambda self, **kwargs: self.x[0])
    argv = ["optimize", "--pulses", "3", "--starts", "2", "--seed", "0"]
    assert run(argv) == EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_mc(capsys, rtn_config):
    argv = ["mc", "--config", rtn_config, "--sequence", "free", "--t", "1"]
    assert run([*argv, "--trajectories", "20000", "--seed", "3"]) == EXIT_OK
    estimate = json.loads(capsys.readouterr().out)
    assert estimate["trajectories"] == 20_000
    assert estimate["mean"]["re"] == pytest.approx(2 / np.e, abs=4 * estimate["std_error"])


def test_mc_too_few_trajectories(rtn_config):
    argv = ["mc", "--config", rtn_config, "--sequence", "free", "--t", "1"]
    assert run([*argv, "--trajectories", "10"]) == EXIT_INVALID


def test_main_exits(rtn_config):
    with pytest.raises(SystemExit) as info:
        main(["validate", "--config", rtn_config, "--out", "-"])
    assert info.value.code == EXIT_OK
