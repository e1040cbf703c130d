import json
import subprocess
import sys

import pytest

from qam import protocols
from qam.cli import main
from qam.emit import emit_dot, emit_json, state_hash
from qam.engine import Budget, LtsGraph, explore
from qam.terms import Configuration
from qam.traces import trace_refines


def call(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_prints_json_lines(capsys):
    code, out, _ = call(capsys, "run", "teleport")
    assert code == 0
    lines = [json.loads(x) for x in out.splitlines()]
    assert lines[0]["label"] == "c" and lines[0]["rule"] == "COHERE"
    assert all(len(x["source"]) == 64 for x in lines)
    assert lines[0]["target"] == lines[1]["source"]


def test_run_is_deterministic(capsys):
    _, first, _ = call(capsys, "run", "swap", "--depth", "20")
    _, second, _ = call(capsys, "run", "swap", "--depth", "20")
    assert first == second and first


def test_run_uses_network_when_present(capsys):
    _, out, _ = call(capsys, "run", "swap-net")
    labels = [json.loads(x)["label"] for x in out.splitlines()]
    assert "0.5(A,R)" in labels


def test_explore_writes_dot(capsys, tmp_path):
    dot = tmp_path / "bit.dot"
    code, out, _ = call(capsys, "explore", "bit-commitment", "--dot", str(dot))
    assert code == 0
    report = json.loads(out)
    assert report["schema"] == 1 and report["states"] == 3 and not report["truncated"]
    assert '[label="c"]' in dot.read_text()


def test_check_ok_and_failing(capsys, tmp_path):
    code, out, _ = call(capsys, "check", "swap")
    report = json.loads(out)
    assert code == 0 and report["ok"]
    assert report["non_relocation"]["witnesses"]
    bad = tmp_path / "bad.qam"
    bad.write_text("quantum c\nconfig { membrane @A { res: c.blank } membrane @B "
                   "{ res: c.blank } membrane @C { res: c.blank } }\n")
    code, out, _ = call(capsys, "check", str(bad), "--well-formed")
    assert code == 1
    assert json.loads(out)["well_formed"]["violations"][0]["kind"] == "duplicate_resource_channel"


def test_routes(capsys):
    code, out, _ = call(capsys, "routes", "qpass", "--policy", "qpass")
    report = json.loads(out)
    assert code == 0
    # sorted by endpoints, then rate
    assert report["transitions"] == ["1(Ann,Bob)", "0.5(Ann,Ra)", "0.5(Ra,Bob)"]
    assert report["paths"][0]["success_rate"] == "0.25"
    code, out, _ = call(capsys, "routes", "qpass", "--policy", "qcast", "--agg", "product")
    assert json.loads(out)["transitions"]


def test_routes_needs_network(capsys):
    code, _, err = call(capsys, "routes", "teleport", "--policy", "qpass")
    assert code == 2 and "network" in err


def test_refine_verdicts(capsys, tmp_path):
    code, out, _ = call(capsys, "refine", "bit-commitment", "bit-commitment", "--depth", "4")
    assert code == 0 and json.loads(out)["refines"]
    code, out, _ = call(capsys, "refine", "teleport", "bit-commitment", "--depth", "4")
    report = json.loads(out)
    assert code == 1 and not report["refines"]
    assert isinstance(report["witness"], list) and report["witness"]
    budget = Budget(max_depth=4)
    expected = trace_refines(protocols.load("teleport").config,
                             protocols.load("bit-commitment").config, budget)
    assert report["witness"] == json.loads(emit_json({"w": expected.witness}))["w"]


def test_refine_likeliness(capsys):
    code, out, _ = call(capsys, "refine", "qpass", "qpass", "--likeliness", "--policy1", "qpass",
                        "--policy2", "qcast", "--agg2", "product", "--depth", "8")
    assert code == 0 and json.loads(out)["refines"]


def test_compile_and_simulate(capsys, tmp_path):
    code, out, _ = call(capsys, "compile", "teleport")
    assert code == 0 and out.startswith("# qubits: 3\n")
    target = tmp_path / "t.circ"
    call(capsys, "compile", "teleport", "-o", str(target))
    assert target.read_text() == out
    code, out, _ = call(capsys, "simulate", "teleport", "--input",
                        '{"bar(d).Alice": [0.6, 0.8]}')
    report = json.loads(out)
    assert code == 0 and len(report["branches"]) == 4
    for b in report["branches"]:
        bob = b["regions"]["c.Bob"]
        assert bob is not None
        assert abs(abs(complex(*bob[0])) - 0.6) < 1e-9


def test_input_from_file(capsys, tmp_path):
    spec = tmp_path / "in.json"
    spec.write_text('{"bits": "10"}')
    code, out, _ = call(capsys, "simulate", "superdense", "--input", str(spec))
    assert code == 0
    assert all(["Bob", "w", "10"] in b["transcript"] for b in json.loads(out)["branches"])


def test_errors_exit_two(capsys, tmp_path):
    code, _, err = call(capsys, "run", "no-such-protocol")
    assert code == 2 and err.startswith("error:")
    broken = tmp_path / "broken.qam"
    broken.write_text("config {\n")
    code, _, err = call(capsys, "run", str(broken))
    assert code == 2 and "2:1" in err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "qam.cli", "compile", "bit-commitment"],
                         capture_output=True, text=True, check=True).stdout
    assert out.splitlines()[0] == "# qubits: 2"


# -- emitters -------------------------------------------------------------------

def test_empty_graph_dot():
    dot = emit_dot(LtsGraph([], []))
    assert dot.count("->") == 0
    assert "s0 [" in dot and "peripheries=2" in dot


def test_dot_is_stable():
    g1 = explore(protocols.load("teleport").config, Budget(max_depth=12))
    g2 = explore(protocols.load("teleport").config, Budget(max_depth=12))
    assert emit_dot(g1) == emit_dot(g2)


def test_json_schema_and_sorted_keys():
    text = emit_json({"b": 1, "a": [Configuration(())]})
    data = json.loads(text)
    assert data == {"schema": 1, "a": ["(empty)"], "b": 1}
    assert text.index('"a"') < text.index('"b"')


def test_state_hash_depends_on_content():
    a = protocols.load("teleport").config
    b = protocols.load("bit-commitment").config
    assert state_hash(a) == state_hash(a) and state_hash(a) != state_hash(b)


@pytest.mark.parametrize("name", protocols.NAMES)
def test_bundled_names_resolve(capsys, name):
    assert main(["run", name, "--depth", "1"]) == 0
