"""CLI tests: exit codes, document emission, env overrides."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from effaudit.audit import AuditFile, default_audit, new_audit
from effaudit.cli import main
from effaudit.scanner import scan_package

FIXTURES = Path(__file__).parent / "fixtures" / "scan"
CHAINS = Path(__file__).parent / "fixtures" / "chain"


def test_scan_stdout_matches_library(capsys):
    rc = main(["scan", str(FIXTURES / "sink_net")])
    assert rc == 0
    out = capsys.readouterr().out
    assert out == scan_package(FIXTURES / "sink_net").dumps()


def test_scan_json_out_flag(tmp_path):
    target = tmp_path / "doc.json"
    assert main(["scan", str(FIXTURES / "clean_pkg"), "--json-out", str(target)]) == 0
    doc = json.loads(target.read_text())
    assert doc["effects"] == []


def test_scan_missing_manifest_exits_1(tmp_path, capsys):
    assert main(["scan", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_scan_parse_failure_warns_but_exits_0(tmp_path, capsys):
    pkg = tmp_path / "p"
    (pkg / "src").mkdir(parents=True)
    (pkg / "Cargo.toml").write_text('[package]\nname = "p"\nversion = "0.1.0"\n')
    (pkg / "src" / "lib.rs").write_text("mod bad;\n")
    (pkg / "src" / "bad.rs").write_text("fn oops( {")
    assert main(["scan", str(pkg)]) == 0
    captured = capsys.readouterr()
    assert "warning: 1 file(s)" in captured.err
    assert json.loads(captured.out)["errors"]


def test_sinks_env_var_override(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(
        "EFFAUDIT_SINKS", str(FIXTURES / "custom_sinks" / "sinks.txt")
    )
    assert main(["scan", str(FIXTURES / "custom_sinks")]) == 0
    doc = json.loads(capsys.readouterr().out)
    kinds = {e["kind"]["pattern"]["prefix"] for e in doc["effects"]}
    assert kinds == {"http_client"}


def test_sinks_flag_beats_env(tmp_path, capsys, monkeypatch):
    bogus = tmp_path / "none.txt"
    bogus.write_text("never_matches_anything\n")
    monkeypatch.setenv("EFFAUDIT_SINKS", str(bogus))
    assert main([
        "scan", str(FIXTURES / "custom_sinks"),
        "--sinks", str(FIXTURES / "custom_sinks" / "sinks.txt"),
    ]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["effects"]


def test_default_audit_stdout(capsys):
    assert main(["default-audit", str(FIXTURES / "clean_pkg")]) == 0
    audit = AuditFile.from_json(json.loads(capsys.readouterr().out))
    assert audit.status == "default"
    assert audit.items == []


def test_default_audit_file_and_metrics_row(tmp_path, capsys):
    target = tmp_path / "a.json"
    rc = main([
        "default-audit", str(FIXTURES / "metrics_rows"), "--audit-file", str(target),
    ])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "metrics-rows-0.1.0: 1 fn, 9 LoC"
    scan = scan_package(FIXTURES / "metrics_rows")
    assert target.read_text() == default_audit(scan).dumps()


def test_audit_create_then_judge(tmp_path, capsys):
    audit_file = tmp_path / "audit.json"
    pkg = str(FIXTURES / "sink_net")
    assert main(["audit", pkg, "--audit-file", str(audit_file)]) == 0
    scan = scan_package(FIXTURES / "sink_net")
    created = AuditFile.from_json(json.loads(audit_file.read_text()))
    assert created.dumps() == new_audit(scan).dumps()
    item_id = created.items[0].id
    capsys.readouterr()
    rc = main([
        "audit", pkg, "--audit-file", str(audit_file),
        "--item", item_id, "--annotation", "CallerChecked",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "1 new item(s)" in out
    assert "1/2 annotated" in out
    updated = AuditFile.from_json(json.loads(audit_file.read_text()))
    assert len(updated.items) == 2


def test_audit_item_without_annotation_is_usage_error(tmp_path, capsys):
    audit_file = tmp_path / "audit.json"
    rc = main([
        "audit", str(FIXTURES / "sink_net"), "--audit-file", str(audit_file),
        "--item", "abc",
    ])
    assert rc == 2
    assert "usage error" in capsys.readouterr().err


def test_audit_stale_file_exits_1(tmp_path, capsys):
    audit_file = tmp_path / "audit.json"
    pkg = str(FIXTURES / "sink_net")
    assert main(["audit", pkg, "--audit-file", str(audit_file)]) == 0
    stale = json.loads(audit_file.read_text())
    stale["fingerprint"] = "0" * 64
    audit_file.write_text(json.dumps(stale))
    assert main(["audit", pkg, "--audit-file", str(audit_file)]) == 1
    assert "stale" in capsys.readouterr().err


def test_audit_unknown_item_exits_1(tmp_path, capsys):
    audit_file = tmp_path / "audit.json"
    pkg = str(FIXTURES / "sink_net")
    rc = main([
        "audit", pkg, "--audit-file", str(audit_file),
        "--item", "nope", "--annotation", "Safe",
    ])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_audit_list_items(tmp_path, capsys):
    audit_file = tmp_path / "audit.json"
    rc = main([
        "audit", str(FIXTURES / "kitchen_sink"),
        "--audit-file", str(audit_file), "--list",
    ])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 11 + 1  # items plus the progress summary
    assert any("SinkCall(std::fs)" in line for line in lines)


def test_chain_command_writes_manifest_and_audits(tmp_path, capsys):
    out_dir = tmp_path / "audits"
    rc = main([
        "chain", str(CHAINS / "linear" / "app"), "--out", str(out_dir),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "leaf 0.1.0: 2 item(s), 1 presented" in out
    assert "app 0.1.0: 1 item(s), 1 presented" in out
    manifest = json.loads((out_dir / "chain.json").read_text())
    assert manifest["root"] == "app 0.1.0"
    assert (out_dir / "leaf-0.1.0.audit.json").is_file()
    assert (out_dir / "mid-0.1.0.audit.json").is_file()
    assert (out_dir / "app-0.1.0.audit.json").is_file()


def test_chain_missing_lockfile_exits_1(tmp_path, capsys):
    pkg = tmp_path / "solo"
    (pkg / "src").mkdir(parents=True)
    (pkg / "Cargo.toml").write_text('[package]\nname = "solo"\nversion = "1.0.0"\n')
    (pkg / "src" / "lib.rs").write_text("pub fn f() {}\n")
    assert main(["chain", str(pkg)]) == 1
    assert "lockfile" in capsys.readouterr().err


def test_stats_csv_and_json(tmp_path, capsys):
    csv_file = tmp_path / "rows.csv"
    json_file = tmp_path / "agg.json"
    rc = main([
        "stats", str(FIXTURES), "--workers", "3",
        "--csv", str(csv_file), "--json", str(json_file),
    ])
    assert rc == 0
    assert csv_file.read_text().startswith("package,")
    agg = json.loads(json_file.read_text())
    assert agg["corpus_size"] == len(list(FIXTURES.iterdir()))
    assert sum(agg["histogram"].values()) == agg["corpus_size"] - agg["failed"]


def test_bad_usage_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["scan"])  # missing path
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
