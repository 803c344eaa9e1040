import subprocess
import sys
from importlib import resources
from pathlib import Path

import pytest
import yaml

from qftlink.cli import format_table, main, run_scene, validate_path, validate_scene, Row

SCENES = sorted(p for p in resources.files("qftlink").joinpath("scenes").iterdir()
                if p.name.endswith(".yaml"))


def _write(tmp_path, data, name="scene.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def _link_scene(expected=1):
    return {"experiment": "link",
            "loops": {"a": {"kind": "hopf", "member": 0}, "b": {"kind": "hopf", "member": 1}},
            "parameters": {"pair": ["a", "b"], "expected": expected}}


def _positivity_scene(trials=4):
    return {"experiment": "positivity",
            "parameters": {"trials": trials, "cross_c": 0.5, "weight_f": 1.0, "weight_g": 1.0}}


@pytest.mark.parametrize("path", SCENES, ids=lambda p: p.name)
def test_shipped_scenes_validate(path, capsys):
    assert validate_path(path) == 0
    assert capsys.readouterr().out == "ok\n"


def test_missing_mollifier_single_diagnostic():
    data = yaml.safe_load(SCENES[0].read_text())
    data["mollifiers"] = {}
    diag = validate_scene(data)
    assert len(diag) == 1
    assert diag[0].startswith("parameters.mollifiers") and "'s'" in diag[0]


@pytest.mark.parametrize("radius", [0, -1.0, "big"])
def test_bad_radius_rejected(radius):
    data = _link_scene()
    data["loops"]["a"] = {"kind": "circle", "radius": radius}
    assert "loops.a.radius: must be a positive number" in validate_scene(data)


def test_unknown_experiment_rejected():
    (diag,) = validate_scene({"experiment": "bogus"})
    assert diag.startswith("experiment:")


def test_link_scene_passes_and_writes_outputs(tmp_path, capsys):
    path = _write(tmp_path, _link_scene(1))
    assert run_scene(path, out=tmp_path / "out") == 0
    report = (tmp_path / "out" / "scene.report.txt").read_text()
    assert "summary: 3/3 checks passed" in report
    assert report == capsys.readouterr().out
    table = (tmp_path / "out" / "scene.csv").read_text().splitlines()
    assert table[0] == "parameter,value_re,value_im,error"
    assert [r.split(",")[0] for r in table[1:]] == ["gauss", "crossing", "causal"]


def test_link_scene_wrong_expectation_fails(tmp_path):
    assert run_scene(_write(tmp_path, _link_scene(2)), stream=open("/dev/null", "w")) == 1


def test_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "broken.yaml"
    path.write_text("experiment: [link\n")
    assert run_scene(path) == 2
    assert "YAML parse error" in capsys.readouterr().err
    assert run_scene(tmp_path / "absent.yaml") == 2


def test_invalid_scene_exit_code(tmp_path):
    data = _link_scene()
    data["loops"]["a"]["kind"] = "trefoil"
    assert run_scene(_write(tmp_path, data)) == 2
    assert validate_path(_write(tmp_path, data), stream=open("/dev/null", "w")) == 2


def test_table_format_round_trips():
    text = format_table([Row("x", 1 / 3 + 2j / 7, 1e-17)])
    _, line = text.splitlines()
    name, re_, im, err = line.split(",")
    assert (float(re_), float(im), float(err)) == (1 / 3, 2 / 7, 1e-17)
    assert len(re_.split("e")[0].replace(".", "")) == 17


def test_positivity_deterministic_across_runs_and_workers(tmp_path):
    path = _write(tmp_path, _positivity_scene())
    sink = open("/dev/null", "w")
    tables = []
    for i, workers in enumerate((1, 1, 2)):
        out = tmp_path / f"run{i}"
        assert run_scene(path, out=out, workers=workers, stream=sink) == 0
        tables.append((out / "scene.csv").read_bytes())
    assert tables[0] == tables[1] == tables[2]
    out = tmp_path / "seeded"
    run_scene(path, out=out, seed=7, stream=sink)
    assert (out / "scene.csv").read_bytes() != tables[0]


def test_main_validate(capsys):
    assert main(["validate", str(SCENES[0])]) == 0
    assert capsys.readouterr().out == "ok\n"


def test_console_script_installed():
    done = subprocess.run([sys.executable, "-m", "qftlink.cli", "--help"],
                          capture_output=True, text=True)
    assert done.returncode == 0 and "validate" in done.stdout


@pytest.mark.slow
def test_shipped_negative_control_fails(tmp_path):
    path = next(p for p in SCENES if p.name == "negative-control.yaml")
    assert run_scene(path, out=tmp_path, stream=open("/dev/null", "w")) == 1
    report = (tmp_path / "negative-control.report.txt").read_text()
    assert "ratio[lambda=2] | 1.000000e+00 | 2.0" in report
