from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from cleflite.cli import EXIT_ERRORS, EXIT_OK, EXIT_USAGE, run
from cleflite.report import cache_lines_text

from conftest import FIXTURES, GOLDEN


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(["check", *map(str, argv)], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize(
    "fixture, show, golden",
    [
        ("readings.clef", "escapes", "readings.escapes.txt"),
        ("astronomical.clef", "repr", "astronomical.repr.txt"),
        ("selection.clef", "repr", "selection.repr.txt"),
        ("quire_work.clef", "all", "quire_work.all.txt"),
    ],
)
def test_text_output_matches_golden(fixture, show, golden):
    code, out, _ = cli(FIXTURES / fixture, "--show", show)
    assert out == (GOLDEN / golden).read_text(encoding="utf-8")
    assert code == (EXIT_ERRORS if fixture == "quire_work.clef" else EXIT_OK)


@pytest.mark.parametrize(
    "fixture, code",
    [
        ("gravity.clef", EXIT_OK),
        ("readings.clef", EXIT_OK),
        ("gravity_targets.clef", EXIT_OK),
        ("push.clef", EXIT_OK),
        ("bad.clef", EXIT_ERRORS),
        ("quire_work.clef", EXIT_ERRORS),
    ],
)
def test_exit_status(fixture, code):
    assert cli(FIXTURES / fixture)[0] == code


def test_structured_report_shape(tmp_path):
    dest = tmp_path / "r.json"
    code, out, _ = cli(FIXTURES / "gravity_targets.clef", "--format", "structured", "--report", dest)
    assert code == EXIT_OK
    data = json.loads(out)
    assert json.loads(dest.read_text()) == data
    assert data["targets"] == ["x86_64", "xilinx", "riscv_xposit", "loihi2"]
    assert {b["name"] for b in data["bindings"]} == {"computeForce", "hostForce"}
    (t,) = data["transfers"]
    assert (t["from"], t["to"], t["lossless"], t["fidelity"]) == ("xilinx", "x86_64", True, 1.0)


def test_structured_dimension_error():
    code, out, _ = cli(FIXTURES / "bad.clef", "--format", "structured")
    assert code == EXIT_ERRORS
    (d,) = json.loads(out)["diagnostics"]
    assert d["code"] == "DimensionError" and d["notes"] == ["origin: 1:9", "origin: 1:23"]


def test_report_file_with_text_output(tmp_path):
    dest = tmp_path / "r.json"
    code, out, _ = cli(FIXTURES / "readings.clef", "--report", dest)
    assert code == EXIT_OK and not out.lstrip().startswith("{")
    assert json.loads(dest.read_text())["escapes"]


def test_target_restriction():
    code, out, _ = cli(FIXTURES / "gravity_targets.clef", "--target", "xilinx", "--format", "structured")
    assert code == EXIT_OK
    for b in json.loads(out)["bindings"]:
        assert [t["target"] for t in b["perTarget"]] in ([], ["xilinx"])


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["nope.clef"], "cannot read"),
        ([FIXTURES / "gravity_targets.clef", "--target", "gpu"], "unknown target 'gpu'"),
    ],
)
def test_usage_errors(argv, needle):
    code, _, err = cli(*argv)
    assert code == EXIT_USAGE and needle in err


def test_bad_target_config(tmp_path):
    cfg = tmp_path / "t.targets"
    cfg.write_text("[target t]\nformats = bogus\n")
    code, _, err = cli(FIXTURES / "gravity_targets.clef", "--targets", cfg)
    assert code == EXIT_USAGE
    assert err.startswith("error: bad target configuration: line 2: formats:")


def test_argparse_failures_are_usage_errors():
    assert run(["frobnicate"], io.StringIO(), io.StringIO()) == EXIT_USAGE
    assert run(["check", "x.clef", "--show", "everything"], io.StringIO(), io.StringIO()) == EXIT_USAGE


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cleflite.cli", "check", str(FIXTURES / "bad.clef")],
        capture_output=True, text=True,
    )
    assert proc.returncode == EXIT_ERRORS
    assert "dimension mismatch" in proc.stdout + proc.stderr


@pytest.mark.parametrize(
    "nbytes, line, level, text",
    [(800, 64, "L1", "12.5 L1 cache lines"), (64, 64, "", "1 cache line"), (256, 64, "", "4 cache lines")],
)
def test_cache_lines_text(nbytes, line, level, text):
    assert cache_lines_text(nbytes, line, level) == text
