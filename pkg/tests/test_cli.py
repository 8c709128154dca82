import json

import pytest

import main
from tests.conftest import ROOT, fixture_path

BASE = ["-q", "-b", str(ROOT / "configs" / "default.yaml")]


def _run(capsys, *argv):
    code = main.main(list(argv) + BASE)
    return code, capsys.readouterr().out


def test_homology_json(capsys):
    code, out = _run(capsys, "homology", str(fixture_path("aleshin")), "-m", "3", "-f", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["homology"] == {"0": "0", "1": "Z/2", "2": "0", "3": "0"}
    assert doc["k_theory"] is None
    assert doc["coefficients"] == "Z"


def test_ktheory_json(capsys):
    code, out = _run(capsys, "ktheory", str(fixture_path("ggs3")), "-f", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["homology"] == {}
    assert doc["k_theory"]["K0"] == "Z/2 + Z^2"
    assert doc["k_theory"]["K1"] == "Z^2"


def test_builtin_table(capsys):
    code, out = _run(capsys, "builtin", "ggs", "5", "-m", "2")
    assert code == 0
    assert out.splitlines()[0].split()[:3] == ["H_0", "=", "Z/4"]
    assert "K_1    = Z^4" in out


def test_f2_coefficients(capsys):
    code, out = _run(capsys, "homology", str(fixture_path("aleshin")), "-m", "2", "-c", "F2", "-f", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["coefficients"] == "F2"
    assert doc["homology"] == {"0": "0", "1": "F2", "2": "F2"}


def test_fp_needs_prime(capsys):
    code, _ = _run(capsys, "builtin", "grigorchuk", "-c", "Fp")
    assert code == 2
    code, _ = _run(capsys, "builtin", "grigorchuk", "-c", "Fp", "-p", "4")
    assert code == 2


def test_missing_file(capsys, tmp_path):
    code, out = _run(capsys, "homology", str(tmp_path / "nope.json"))
    assert code == 2
    assert out == ""


def test_hypothesis_violation(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"version": 1, "kind": "katsura", "A": [[0]], "B": [[1]]}))
    code, _ = _run(capsys, "homology", str(path))
    assert code == 3


def test_unknown_family(capsys):
    code, _ = _run(capsys, "builtin", "nope")
    assert code == 2


def test_linalg_snf_and_coker(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps([[2, 4], [6, 8]]))
    code, out = _run(capsys, "linalg", "snf", "-i", str(path), "-f", "json")
    assert code == 0
    assert json.loads(out)["diag"] == [2, 4]
    code, out = _run(capsys, "linalg", "coker", "-i", str(path), "-f", "json")
    assert json.loads(out) == {"cokernel": "Z/2 + Z/4"}


def test_linalg_needs_matrix(capsys):
    code, _ = _run(capsys, "linalg", "snf")
    assert code == 2


def test_dotlist_override(capsys):
    code, out = _run(capsys, "homology", str(fixture_path("odometer")), "run.max_degree=2", "-f", "json")
    assert code == 0
    assert sorted(json.loads(out)["homology"]) == ["0", "1", "2"]


def test_analyze(capsys):
    code, out = _run(capsys, "analyze", str(fixture_path("grigorchuk")), "-f", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["transitive"] is True
    assert doc["stabilizer_index"] == 2
    assert doc["section_closure"] == ["e", "a", "b", "c", "d"]


def test_out_file(capsys, tmp_path):
    target = tmp_path / "report.json"
    code, out = _run(capsys, "builtin", "aleshin", "-m", "1", "-f", "json", "-o", str(target))
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text())["homology"]["1"] == "Z/2"


def test_save_config(capsys, tmp_path):
    target = tmp_path / "merged.yaml"
    code, _ = _run(capsys, "builtin", "dihedral", "-m", "1", "--save-config", str(target))
    assert code == 0
    assert "max_degree: 1" in target.read_text()


@pytest.mark.parametrize("argv", [["homology"], ["analyze"]])
def test_commands_need_document(capsys, argv):
    code, _ = _run(capsys, *argv)
    assert code == 2


@pytest.mark.parametrize("doc", [
    {"version": 1, "kind": "automaton", "alphabet": "two",
     "generators": {"a": {"perm": [1, 0], "sections": ["e", "e"]}}},
    {"version": 1, "kind": "automaton", "alphabet": 2,
     "generators": {"a": {"perm": [1, "x"], "sections": ["e", "e"]}}},
    {"version": 1, "kind": "automaton", "alphabet": 2, "generators": {"a": 5}},
    {"version": 1, "kind": "graph", "adjacency": [["abc"]]},
    {"version": 1, "kind": "graph", "adjacency": [1, 2]},
    {"version": 1, "kind": "free_abelian", "A": 3, "d": 2},
    {"version": 1, "kind": "free_abelian", "A": [["1/0"]], "d": 2},
    {"version": 1, "kind": "multispinal", "d": 2, "B": {"m": "x"}, "phi": [{"aut": [[1]]}, {"hom": [1]}]},
])
def test_malformed_document_is_an_input_error(capsys, tmp_path, doc):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, out = _run(capsys, "homology", str(path))
    assert code == 2
    assert out == ""


def test_linalg_malformed_matrix(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps([[1, "abc"], [0, 1]]))
    code, _ = _run(capsys, "linalg", "snf", "-i", str(path))
    assert code == 2
    path.write_text(json.dumps([1, 2]))
    code, _ = _run(capsys, "linalg", "snf", "-i", str(path))
    assert code == 2


def test_linalg_extpow_degree_flag(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps([[1, 2, 0], [0, 1, 0], [0, 0, 3]]))
    code, out = _run(capsys, "linalg", "extpow", "-i", str(path), "--degree", "2", "-f", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["q"] == 2
    assert doc["matrix"] == [["1", "0", "0"], ["0", "3", "6"], ["0", "0", "3"]]
    # -q still means quiet next to the degree flag
    code, out = _run(capsys, "linalg", "extpow", "-i", str(path), "-e", "3", "-q", "-f", "json")
    assert code == 0
    assert json.loads(out)["matrix"] == [["3"]]
