"""Command-line surface."""

import json

from archscale.cli import main, reference_architecture_path

from conftest import REFERENCE_COUNTS


def test_validate_reference(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "ok" in out


def test_validate_reports_violations(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "services": [{"name": "A", "cost": {"Cores": 0, "Memory": 0}}],
        "vm_catalog": [], "profile": {}, "pipeline": [],
    }), encoding="utf-8")
    assert main(["validate", "--arch", str(bad)]) == 1
    assert "cores_required" in capsys.readouterr().out


def test_validate_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["validate", "--arch", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def ladder_section(out: str) -> list[str]:
    lines = out.splitlines()
    start = next(i for i, l in enumerate(lines) if l.split()[:3] == ["service", "B", "D1"])
    return lines[start:]


def test_ladder_matches_reference_counts(capsys):
    assert main(["ladder"]) == 0
    out = capsys.readouterr().out
    section = ladder_section(out)
    for name, row in REFERENCE_COUNTS.items():
        line = next(l for l in section if l.startswith(name))
        cells = line.split()
        assert cells[1] == str(row[0])
        assert cells[2:6] == [f"+{d}" for d in row[1:]], name
    assert "Scale4 (+330 emails/sec) = D1 + D2 + D3 + D4" in out


def test_ladder_image_recognizer_row(capsys):
    main(["ladder"])
    line = next(l for l in ladder_section(capsys.readouterr().out)
                if l.startswith("ImageRecognizer"))
    assert line.split() == ["ImageRecognizer", "1", "+1", "+2", "+1", "+2"]


def test_ladder_single_infinite_service(tmp_path, capsys):
    doc = tmp_path / "one.json"
    doc.write_text(json.dumps({
        "services": [{"name": "Free", "cost": {"Cores": 1, "Memory": 0},
                      "mcl": {"attachments_per_request": 0, "penalty_factor": 0}}],
        "vm_catalog": [{"name": "v", "cores": 2, "memory": 100,
                        "speed_per_core": 1, "startup_time": 0, "cost": 1}],
        "profile": {}, "pipeline": [],
    }), encoding="utf-8")
    assert main(["ladder", "--arch", str(doc)]) == 0
    line = next(l for l in ladder_section(capsys.readouterr().out) if l.startswith("Free"))
    assert line.split() == ["Free", "1", "+0", "+0", "+0", "+0"]


def test_plan_delta_index(capsys):
    assert main(["plan", "--delta-index", "1"]) == 0
    out = capsys.readouterr().out
    assert "placement cost" in out
    assert "set-startup 450" in out
    assert "undeployment orchestration" in out
    assert "release vm-" in out


def test_plan_explicit_delta(capsys):
    assert main(["plan", "--delta", "VirusScanner=2,MessageAnalyser=1"]) == 0
    out = capsys.readouterr().out
    assert out.count("create VirusScanner") == 2


def test_simulate_single_policy(tmp_path, capsys):
    spec = tmp_path / "exp.json"
    spec.write_text(json.dumps({
        "architecture": str(reference_architecture_path()),
        "scenario": {"duration_s": 20, "workload": {"kind": "steps", "points": [[0, 30]]}},
    }), encoding="utf-8")
    out_dir = tmp_path / "out"
    assert main(["simulate", "--spec", str(spec), "--policy", "global",
                 "--out", str(out_dir), "--seed", "3", "--exact-arrivals"]) == 0
    assert (out_dir / "metrics_global.csv").exists()
    assert not (out_dir / "metrics_local.csv").exists()
    assert "global: generated=600" in capsys.readouterr().out


def test_compare_runs_both(tmp_path, capsys):
    spec = tmp_path / "exp.json"
    spec.write_text(json.dumps({
        "architecture": str(reference_architecture_path()),
        "scenario": {"duration_s": 20, "seed": 4, "exact_arrivals": True,
                     "workload": {"kind": "steps", "points": [[0, 50]]}},
    }), encoding="utf-8")
    out_dir = tmp_path / "out"
    assert main(["compare", "--spec", str(spec), "--out", str(out_dir)]) == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert report["policies"]["global"]["dropped_requests"] == 0
    assert report["policies"]["local"]["dropped_requests"] == 0
    assert "policy" in capsys.readouterr().out


def test_compare_byte_identical(tmp_path):
    spec = tmp_path / "exp.json"
    spec.write_text(json.dumps({
        "architecture": str(reference_architecture_path()),
        "scenario": {"duration_s": 15, "seed": 8,
                     "workload": {"kind": "diurnal", "base": 20, "peak": 90, "period_s": 15}},
    }), encoding="utf-8")
    assert main(["compare", "--spec", str(spec), "--out", str(tmp_path / "a")]) == 0
    assert main(["compare", "--spec", str(spec), "--out", str(tmp_path / "b")]) == 0
    for name in ("metrics_global.csv", "metrics_local.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_error_is_nonzero(tmp_path, capsys):
    assert main(["simulate", "--spec", str(tmp_path / "missing.json")]) == 1
    assert "error" in capsys.readouterr().err
