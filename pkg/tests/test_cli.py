import json
import subprocess
import sys
import time

import pytest

from kamac.cli import main
from kamac.scenario import bundled_scenarios, load_scenario

BUNDLED = sorted(bundled_scenarios())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


BASE = {
    "sources": {"independent": [{"symbols": [0, 1], "probs": ["1/2", "1/2"]},
                                {"symbols": [0, 1], "probs": ["1/2", "1/2"]}]},
    "function": {"name": "polynomial", "params": {"m": 2}},
}


def test_bundled_set():
    assert {"product", "coupling", "polynomial_toy", "min_small", "max_small", "xor",
            "affine", "product_inner"} <= set(BUNDLED)


def test_simulate_product(capsys):
    code, out, _ = run(capsys, "simulate", "--scenario", "product", "--x", "3,-2")
    assert code == 0
    doc = json.loads(out)
    assert doc["output"]["value"] == pytest.approx(6.0, abs=1e-12)
    assert doc["direct"]["provenance"] == "closed-form"
    assert len(doc["y_pq"]) == 2 and len(doc["y_pq"][0]) == 5


def test_graph_dot_xor(capsys, tmp_path):
    dot = tmp_path / "g.dot"
    code, out, _ = run(capsys, "graph", "--scenario", "xor", "--source", "1", "--dot", str(dot))
    assert code == 0
    text = dot.read_text()
    assert text.count("[label=") == 4 and text.count(" -- ") == 4
    assert json.loads(out)["edge_count"]["value"] == 4


def test_graph_power_and_conditional(capsys):
    code, out, _ = run(capsys, "graph", "--scenario", "xor", "--source", "1", "--power", "2")
    assert code == 0 and out.count("[label=") == 16
    code, out, _ = run(capsys, "graph", "--scenario", "product", "--source", "1",
                       "--conditional", "2=0")
    assert code == 0 and " -- " not in out
    code, out, _ = run(capsys, "graph", "--scenario", "product", "--source", "1",
                       "--conditional", "2=0", "--rule", "global")
    assert out.count(" -- ") == 6


def test_rates_json_and_table(capsys):
    code, out, _ = run(capsys, "rates", "--scenario", "product")
    doc = json.loads(out)
    rows = {tuple(r["subset"]): r for r in doc["rate_report"]["rows"]}
    assert rows[(1, 2)]["slepian_wolf"]["value"] == pytest.approx(3.0)
    assert rows[(1, 2)]["graph_lower"]["note"] == "surrogate"
    code, out, _ = run(capsys, "rates", "--scenario", "product", "--table")
    assert code == 0 and out.splitlines()[0].startswith("subset")


def test_coupling_dump(capsys):
    code, out, _ = run(capsys, "coupling", "--scenario", "coupling")
    c = json.loads(out)["coupling"]
    assert c["delta"]["value"] == "1/6"
    assert [v["value"] for v in c["pT"]] == ["2/5", "3/10", "3/10"]
    assert c["branch_determined"] is True


def test_calculus(capsys):
    code, out, _ = run(capsys, "calculus", "--scenario", "product", "--at", "2,3", "--dx", "0.1,0.1")
    calc = json.loads(out)["calculus"]
    assert [g["value"] for g in calc["gradient"]] == pytest.approx([3, 2])
    assert abs(calc["taylor2_remainder"]["value"]) < 1e-9


def _numbers_tagged(node, path="$"):
    if isinstance(node, dict):
        if "provenance" in node:
            assert node["provenance"] in ("oracle", "closed-form", "paper-reported"), path
            return
        for k, v in node.items():
            if k in ("scenario", "subset", "vertices", "edges", "coloring", "x", "at", "dx",
                     "symbols", "given", "source", "given_source", "iterations"):
                continue
            _numbers_tagged(v, f"{path}.{k}")
    elif isinstance(node, list):
        for i, v in enumerate(node):
            _numbers_tagged(v, f"{path}[{i}]")
    else:
        assert not isinstance(node, (int, float)) or isinstance(node, bool), f"untagged number at {path}"


@pytest.mark.parametrize("name", BUNDLED)
def test_report_every_bundled(capsys, name):
    t0 = time.perf_counter()
    code, out, err = run(capsys, "report", "--scenario", name)
    assert code == 0, err
    assert time.perf_counter() - t0 < 10
    doc = json.loads(out)
    assert doc["schema"] == "ka-mac/1"
    _numbers_tagged({k: v for k, v in doc.items() if k != "scenario"})


def test_report_deterministic():
    cmd = [sys.executable, "-m", "kamac.cli", "report", "--scenario", "polynomial_toy"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a


def test_product_annotations(capsys):
    _, out, _ = run(capsys, "report", "--scenario", "product")
    anns = {a["oracle_key"]: a for a in json.loads(out)["paper_annotations"]}
    assert anns["conditional:pointwise:1|2"]["agree"] is True
    assert anns["conditional:pointwise:2|1"]["agree"] is True
    assert anns["rates:graph_lower:1"]["agree"] is False


def test_exit_code_parse(capsys, tmp_path):
    code, out, err = run(capsys, "rates", "--scenario", _write(tmp_path, "{not json"))
    assert code == 2 and out == "" and "error" in err
    code, _, _ = run(capsys, "rates", "--scenario", str(tmp_path / "missing.json"))
    assert code == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_exit_code_validation_path(capsys, tmp_path):
    doc = json.loads(json.dumps(BASE))
    doc["sources"]["independent"][0]["probs"] = ["1/2", "2/5"]
    code, out, err = run(capsys, "rates", "--scenario", _write(tmp_path, doc))
    assert code == 3 and out == ""
    assert "sources.independent[0]" in err


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d["function"].update(name="cosine"), "function.name"),
    (lambda d: d.update(options={"edge_rule": "sometimes"}), "options.edge_rule"),
    (lambda d: d.update(options={"colour": 1}), "options"),
    (lambda d: d.pop("function"), "function"),
    (lambda d: d["sources"].update(joint={}), "sources"),
])
def test_validation_paths(capsys, tmp_path, mutate, path):
    doc = json.loads(json.dumps(BASE))
    mutate(doc)
    code, _, err = run(capsys, "report", "--scenario", _write(tmp_path, doc))
    assert code == 3 and path in err


def test_xor_needs_nonnegative_integers(capsys, tmp_path):
    doc = json.loads(json.dumps(BASE))
    doc["function"] = {"name": "xor"}
    doc["sources"]["independent"][0]["symbols"] = [-1, 1]
    code, _, err = run(capsys, "graph", "--scenario", _write(tmp_path, doc), "--source", "1")
    assert code == 3 and "xor" in err


def test_exit_code_size_cap(capsys, tmp_path):
    doc = json.loads(json.dumps(BASE))
    doc["sources"]["independent"][0] = {"symbols": list(range(20)), "probs": ["1/20"] * 20}
    code, _, _ = run(capsys, "rates", "--scenario", _write(tmp_path, doc))
    assert code == 4
    doc = json.loads(json.dumps(BASE))
    doc["sources"]["independent"][0] = {"symbols": list(range(14)), "probs": ["1/14"] * 14}
    code, _, err = run(capsys, "rates", "--scenario", _write(tmp_path, doc))
    assert code == 4, err


def test_exit_code_domain(capsys):
    code, _, _ = run(capsys, "simulate", "--scenario", "xor", "--x", "1,2")
    assert code == 5
    code, _, _ = run(capsys, "calculus", "--scenario", "product", "--at", "0,3")
    assert code == 5


def test_joint_table_source(tmp_path):
    sc = load_scenario(_write(tmp_path, {
        "sources": {"joint": {"alphabets": [[0, 1], [0, 1]], "table": [["1/2", "0"], ["1/4", "1/4"]]}},
        "function": {"name": "max"},
    }))
    assert sc.n == 2 and sc.joint.prob((1, 0)) == pytest.approx(0.25)


def test_console_script_runs():
    r = subprocess.run(["ka-mac", "rates", "--scenario", "xor", "--table"], capture_output=True, text=True)
    assert r.returncode == 0 and "coloring_achievable" in r.stdout
