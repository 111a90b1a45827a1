import json
import shutil
import subprocess

import pytest

from einflag import cli, pipeline
from einflag.catalog_io import catalog_to_dict
from einflag.errors import CheckViolation
from einflag.presets import PRESET_NAMES, load_preset


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_presets_lists_every_name(capsys):
    code, out, _ = run(capsys, "presets")
    assert code == 0
    assert [line.split()[0] for line in out.splitlines()] == list(PRESET_NAMES)


@pytest.mark.parametrize("name,verdict,reason", [
    ("su3_flag", "exists", "reduced Betti numbers [2]"),
    ("su2modT_squared", "exists", "reduced Betti numbers [1]"),
    ("su2xsu2_toral", "inconclusive", "cone over s1+t2"),
    ("su2xsu2_diag", "exists", "empty"),
])
def test_analyze_verdicts(capsys, name, verdict, reason):
    code, out, _ = run(capsys, "analyze", name, "--samples", "5", "--starts", "0")
    report = json.loads(out)
    assert code == 0 and report["report_version"] == 1
    assert report["verdict"] == verdict and reason in report["verdict_reason"]


def test_analyze_file_with_markdown_report(capsys, tmp_path):
    path = tmp_path / "flag.json"
    path.write_text(json.dumps(catalog_to_dict(load_preset("su3_flag").catalog)))
    out_path = tmp_path / "report.md"
    code, _, _ = run(capsys, "analyze", str(path), "--samples", "3", "--starts", "4", "--report", "md",
                     "-o", str(out_path))
    text = out_path.read_text()
    assert code == 0 and text.startswith("#") and "exists" in text


def test_einstein_rows(capsys):
    code, out, _ = run(capsys, "einstein", "su3_flag", "--starts", "12")
    table = json.loads(out)["einstein"]
    assert code == 0 and len(table["metrics"]) == 4 and table["spectral_classes"] == 2
    code, out, _ = run(capsys, "einstein", "su2", "--starts", "4")
    assert len(json.loads(out)["einstein"]["metrics"]) == 1
    code, out, _ = run(capsys, "einstein", "su3_flag", "--budget", "0")
    table = json.loads(out)["einstein"]
    assert code == 0 and table["metrics"] == [] and "budget" in table["note"]


@pytest.mark.parametrize("suite,preset", [
    ("filtering", "su2modT_squared"),
    ("butterflies", "su2_cubed"),
    ("retraction", "su3_flag"),
    ("cover", "su2xsu2_toral"),
    ("curvature", "su3_flag"),
])
def test_certify_suites_pass(capsys, suite, preset):
    code, out, _ = run(capsys, "certify", preset, "--suite", suite, "--samples", "20")
    report = json.loads(out)
    assert code == 0 and report["passed"] and report["suite"] == suite


def test_corrupted_structure_exits_2(capsys, tmp_path):
    data = catalog_to_dict(load_preset("su2").catalog)
    data["structure"][0][3] += 0.5
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    code, _, err = run(capsys, "analyze", str(path))
    assert code == 2 and "validation error" in err
    code, _, _ = run(capsys, "analyze", "no_such_preset")
    assert code == 2


def test_failed_suite_and_check_violation_exit_3(capsys, monkeypatch):
    monkeypatch.setitem(pipeline._SUITES, "cover", lambda cat, cfg: {"passed": False})
    code, out, _ = run(capsys, "certify", "su2", "--suite", "cover")
    assert code == 3 and not json.loads(out)["passed"]

    def boom(*_):
        raise CheckViolation("forced")

    monkeypatch.setattr(cli, "run_analyze", boom)
    code, _, err = run(capsys, "analyze", "su2")
    assert code == 3 and "forced" in err


def test_export_round_trips_through_console_script(tmp_path):
    exe = shutil.which("einflag")
    if exe is None:
        pytest.skip("console script not installed")
    path = tmp_path / "su2.json"
    subprocess.run([exe, "export", "su2", "-o", str(path)], check=True)
    proc = subprocess.run([exe, "analyze", str(path), "--samples", "2", "--starts", "0"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["catalog"] == "su2"
