"""Scanner tests: exact effect manifests per fixture, graph mechanics."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from effaudit.effects import load_sink_registry, parse_path, path_str
from effaudit.scanner import PackageError, ScanResult, read_package_meta, scan_package

FIXTURES = Path(__file__).parent / "fixtures" / "scan"
ALL_FIXTURES = sorted(p.name for p in FIXTURES.iterdir() if p.is_dir())


def fixture_registry(root: Path):
    manifest = json.loads((root / "expected_effects.json").read_text())
    sinks_file = manifest.get("sinks_file")
    if sinks_file:
        return load_sink_registry((root / sinks_file).read_text())
    return None


def scan_fixture(name: str) -> ScanResult:
    root = FIXTURES / name
    return scan_package(root, fixture_registry(root))


def effect_facts(result: ScanResult) -> set[tuple]:
    facts = set()
    for e in result.effects:
        callee = path_str(e.callee_path) if e.callee_path is not None else None
        facts.add(
            (e.kind.label(), e.location.file, e.location.line, e.location.col,
             path_str(e.containing_fn), callee)
        )
    return facts


def expected_facts(root: Path) -> set[tuple]:
    manifest = json.loads((root / "expected_effects.json").read_text())
    facts = set()
    for e in manifest["effects"]:
        facts.add(
            (e["kind"], e["file"], e["line"], e["col"],
             e["containing_fn"], e.get("callee"))
        )
    return facts


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_fixture_effects_exact(name):
    root = FIXTURES / name
    result = scan_fixture(name)
    assert result.errors == []
    got = effect_facts(result)
    want = expected_facts(root)
    assert got == want, (
        f"missing={sorted(want - got)}\nextra={sorted(got - want)}"
    )


def test_manifest_package_ids_match():
    for name in ALL_FIXTURES:
        manifest = json.loads((FIXTURES / name / "expected_effects.json").read_text())
        assert scan_fixture(name).id == manifest["package"]


def edges_by(result: ScanResult):
    return {
        (path_str(e.caller), path_str(e.callee), e.dispatch)
        for e in result.graph.edges
    }


def test_sink_effect_sits_in_callee_not_caller():
    result = scan_fixture("sink_net")
    containing = {path_str(e.containing_fn) for e in result.effects}
    assert containing == {"sink_net::AddrIncoming::new"}
    assert ("sink_net::serve", "sink_net::AddrIncoming::new", "direct") in edges_by(result)


def test_trait_dispatch_edges():
    result = scan_fixture("traits_dispatch")
    edges = edges_by(result)
    assert ("traits_dispatch::static_dispatch", "traits_dispatch::Dog::speak",
            "static-trait") in edges
    assert ("traits_dispatch::dynamic_dispatch", "traits_dispatch::Dog::speak",
            "dynamic-trait") in edges
    assert ("traits_dispatch::dynamic_dispatch", "traits_dispatch::LogFile::speak",
            "dynamic-trait") in edges
    assert ("traits_dispatch::default_call", "traits_dispatch::Speak::greet",
            "static-trait") in edges
    # the default body dispatches dynamically over every impl
    assert ("traits_dispatch::Speak::greet", "traits_dispatch::Dog::speak",
            "dynamic-trait") in edges
    assert ("traits_dispatch::Speak::greet", "traits_dispatch::LogFile::speak",
            "dynamic-trait") in edges
    # no dynamic fan-in for the statically evident receiver
    assert ("traits_dispatch::static_dispatch", "traits_dispatch::LogFile::speak",
            "dynamic-trait") not in edges


def test_closure_edges_attributed_to_containing_fn():
    result = scan_fixture("closures")
    edges = edges_by(result)
    assert ("closures::make_reader", "std::fs::read_to_string", "external") in edges


def test_module_resolution_and_visibility():
    result = scan_fixture("modules_paths")
    edges = edges_by(result)
    assert ("modules_paths::run", "modules_paths::store::load_one", "direct") in edges
    assert ("modules_paths::run", "modules_paths::util::tag", "direct") in edges
    assert ("modules_paths::util::tag", "modules_paths::prefix", "direct") in edges
    assert ("modules_paths::util::helper", "modules_paths::util::helper::inner",
            "direct") in edges
    nodes = {path_str(p): n for p, n in result.graph.nodes.items()}
    assert nodes["modules_paths::store::load_one"].is_public
    assert not nodes["modules_paths::util::tag"].is_public  # private module
    assert not nodes["modules_paths::util::helper::inner"].is_public


def test_fn_ptr_least_fixpoint_keeps_cycle_pure():
    result = scan_fixture("fn_ptrs")
    by_fn = {}
    for e in result.effects:
        by_fn.setdefault(path_str(e.containing_fn), []).append(e.kind.label())
    assert "fn_ptrs::ping" not in by_fn
    assert "fn_ptrs::pong" not in by_fn
    assert "fn_ptrs::pick_math" not in by_fn
    assert by_fn["fn_ptrs::pick_reader"] == ["FnPtrCreation"]


def test_function_loc_and_total_loc():
    result = scan_fixture("metrics_rows")
    nodes = {path_str(p): n for p, n in result.graph.nodes.items()}
    assert nodes["metrics_rows::emit"].loc == 9
    assert nodes["metrics_rows::pure_len"].loc == 3
    span_sum = sum(n.loc for n in result.graph.nodes.values())
    assert result.total_loc >= span_sum


def test_nested_fn_lines_excluded_from_parent():
    result = scan_fixture("modules_paths")
    nodes = {path_str(p): n for p, n in result.graph.nodes.items()}
    assert nodes["modules_paths::util::helper::inner"].loc == 3
    assert nodes["modules_paths::util::helper"].loc == 3


def test_total_loc_at_least_sum_of_spans_everywhere():
    for name in ALL_FIXTURES:
        result = scan_fixture(name)
        assert result.total_loc >= sum(n.loc for n in result.graph.nodes.values()), name


def test_scan_is_deterministic_bytes():
    for name in ("kitchen_sink", "traits_dispatch", "modules_paths"):
        a = scan_fixture(name).dumps()
        b = scan_fixture(name).dumps()
        assert a == b


def test_scan_result_round_trip():
    result = scan_fixture("kitchen_sink")
    loaded = ScanResult.from_json(json.loads(result.dumps()))
    assert loaded.dumps() == result.dumps()
    assert loaded.fingerprint() == result.fingerprint()


def test_fingerprint_tracks_source_changes(tmp_path):
    src = FIXTURES / "clean_pkg"
    work = tmp_path / "clean_pkg"
    shutil.copytree(src, work)
    before = scan_package(work).fingerprint()
    lib = work / "src" / "lib.rs"
    lib.write_text(lib.read_text() + "\npub fn extra() -> u8 { 1 }\n")
    after = scan_package(work).fingerprint()
    assert before != after


def test_custom_registry_replaces_builtins():
    result = scan_fixture("custom_sinks")
    labels = {e.kind.label() for e in result.effects}
    assert labels == {"SinkCall(http_client)"}


def test_unparseable_file_recorded_not_fatal(tmp_path):
    pkg = tmp_path / "broken"
    (pkg / "src").mkdir(parents=True)
    (pkg / "Cargo.toml").write_text('[package]\nname = "broken"\nversion = "0.1.0"\n')
    (pkg / "src" / "lib.rs").write_text("mod bad;\npub fn ok() {}\n")
    (pkg / "src" / "bad.rs").write_text("fn broken( {")
    result = scan_package(pkg)
    assert any(e["file"] == "src/bad.rs" for e in result.errors)
    assert ("broken", "ok") in result.graph.nodes


def test_missing_manifest_is_fatal(tmp_path):
    with pytest.raises(PackageError):
        read_package_meta(tmp_path)


def test_missing_module_file_recorded(tmp_path):
    pkg = tmp_path / "holey"
    (pkg / "src").mkdir(parents=True)
    (pkg / "Cargo.toml").write_text('[package]\nname = "holey"\nversion = "0.1.0"\n')
    (pkg / "src" / "lib.rs").write_text("mod gone;\n")
    result = scan_package(pkg)
    assert any("not found" in e["error"] for e in result.errors)


def test_effect_ids_unique_and_stable():
    result = scan_fixture("kitchen_sink")
    ids = [e.id for e in result.effects]
    assert len(ids) == len(set(ids))
    again = scan_fixture("kitchen_sink")
    assert [e.id for e in again.effects] == ids


def test_all_25_kinds_covered_by_corpus():
    seen: set[str] = set()
    for name in ALL_FIXTURES:
        if name == "custom_sinks":
            continue
        for e in scan_fixture(name).effects:
            seen.add(e.kind.label())
    unsafe = {"FFICall", "FFIDecl", "StaticExt", "StaticMut", "UnsafeCall",
              "UnionField", "RawPointer"}
    higher = {"FnPtrCreation", "ClosureCreation"}
    sinks = {f"SinkCall({p})" for p in (
        "std::fs", "std::io", "std::os", "std::ffi", "std::net", "std::env",
        "std::arch", "std::path", "std::mem", "std::simd", "std::panic",
        "std::process", "std::backtrace", "std::intrinsics", "libc", "winapi")}
    assert unsafe | higher | sinks <= seen
