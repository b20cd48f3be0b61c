import json

import pytest

from pcrit import ExhaustionSpec, build_family
from pcrit import jsonio
from pcrit.cli import emit_series, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def path_graph(tmp_path):
    g, _ = build_family(ExhaustionSpec("z", [2]), 0)
    path = tmp_path / "g.json"
    jsonio.save_graph(g, path)
    return path


class TestExitCodes:
    def test_classify_z(self, capsys):
        code, out, _ = run(capsys, "classify", "--family", "z", "--p", "2", "--radii", "1,3,7,15")
        rep = json.loads(out)
        assert code == 0 and rep["schema"] == "pcrit/1"
        assert rep["classification"] == "critical-evidence"

    @pytest.mark.parametrize("p", ("1", "0.5", "abc"))
    def test_bad_p(self, capsys, p):
        code, _, _ = run(capsys, "capacity", "--family", "z", "--p", p)
        assert code == 2

    def test_unknown_family(self, capsys):
        assert run(capsys, "capacity", "--family", "moebius", "--p", "2")[0] == 2

    def test_asymmetric_graph(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"vertices": [{"id": 0}, {"id": 1}],
                                   "edges": [{"u": 0, "v": 1, "b": 1.0}, {"u": 1, "v": 0, "b": 2.0}]}))
        code, _, err = run(capsys, "eigen", "--graph", str(bad), "--p", "2")
        assert code == 2
        assert json.loads(err)["violations"][0]["kind"] == "asymmetric edge"

    def test_validate_reports_and_fails(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"vertices": [{"id": 0, "m": -1}, {"id": 1}],
                                   "edges": [{"u": 0, "v": 1, "b": 1.0}]}))
        code, out, _ = run(capsys, "validate", "--graph", str(bad))
        assert code == 2 and json.loads(out)["valid"] is False

    def test_green_refused_on_z(self, capsys):
        code, out, err = run(capsys, "green", "--family", "z", "--p", "2", "--radii", "1,3,7,15",
                             "--format", "csv")
        rep = json.loads(out)
        assert code == 1 and rep["kind"] == "refusal" and "refused" in err

    def test_unknown_problem_vertex(self, capsys, tmp_path, path_graph):
        prob = tmp_path / "p.json"
        prob.write_text(json.dumps({"K": [0, 42]}))
        assert run(capsys, "dirichlet", "--graph", str(path_graph), "--problem", str(prob), "--p", "2")[0] == 2

    def test_anchor_outside_interior(self, capsys, tmp_path, path_graph):
        K = tmp_path / "K.json"
        K.write_text("[1, 2]")
        code, _, _ = run(capsys, "capacity", "--graph", str(path_graph), "--interior", str(K),
                         "--anchor", "0", "--p", "2")
        assert code == 2

    def test_witness_needs_family(self, capsys, path_graph):
        assert run(capsys, "witness", "--graph", str(path_graph), "--p", "2")[0] == 2


class TestOutputs:
    def test_eigen_deterministic(self, capsys, tmp_path, path_graph, monkeypatch):
        K = tmp_path / "K.json"
        K.write_text("[0, 1, 2]")
        args = ("eigen", "--graph", str(path_graph), "--interior", str(K), "--p", "2.5", "--seed", "3")
        _, a, _ = run(capsys, *args)
        monkeypatch.setenv("PCRIT_THREADS", "2")
        _, b, _ = run(capsys, *args)
        assert a == b
        assert json.loads(a)["lambda0"] > 0

    def test_capacity_csv(self, capsys, tmp_path):
        out = tmp_path / "cap.csv"
        code, _, _ = run(capsys, "capacity", "--family", "z", "--p", "2", "--radii", "1,3,7,15",
                         "--format", "csv", "--out", str(out))
        lines = out.read_text().splitlines()
        assert code == 0 and lines[0] == "n,radius,value" and len(lines) == 5
        assert lines[1] == "0,1,1" and lines[2] == "1,3,0.5"

    def test_empty_series_leaves_no_file(self, tmp_path):
        out = tmp_path / "none.csv"
        with pytest.raises(Exception):
            emit_series({"kind": "validation"}, "csv", out)
        assert not out.exists()

    def test_csv_of_validation_is_an_error(self, capsys, tmp_path):
        out = tmp_path / "v.csv"
        code, _, _ = run(capsys, "validate", "--family", "z", "--radii", "1,2", "--format", "csv",
                         "--out", str(out))
        assert code == 2 and not out.exists()

    def test_dirichlet_from_files(self, capsys, tmp_path, path_graph):
        prob = tmp_path / "p.json"
        prob.write_text(json.dumps({"K": [0], "g": {"0": 1.0}}))
        code, out, _ = run(capsys, "dirichlet", "--graph", str(path_graph), "--problem", str(prob),
                           "--p", "3")
        assert code == 0 and json.loads(out)["solution"][0] == pytest.approx(0.5 ** 0.5)

    @pytest.mark.parametrize("suite", ("picone", "ads", "green-formula", "gateaux", "barta"))
    def test_verify_suites(self, capsys, suite):
        code, out, _ = run(capsys, "verify", "--suite", suite, "--p", "1.5", "--trials", "50", "--seed", "1")
        rep = json.loads(out)
        assert code == 0 and rep["all_gaps_nonnegative"] and rep["run"]["seed"] == 1

    def test_root_potential(self, capsys):
        code, out, _ = run(capsys, "classify", "--family", "tree", "--p", "2", "--radii", "1,2,3",
                           "--c", "root:-5")
        rep = json.loads(out)
        assert code == 0 and rep["classification"] == "supercritical"
