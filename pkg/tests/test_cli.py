import json

import pytest

from blocklp import cli, model
from blocklp.linalg import from_dense

import numpy as np


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_instance(tmp_path, lp, name="inst.json"):
    path = tmp_path / name
    path.write_text(model.instance_to_json(lp))
    return str(path)


def eq5_instance(tmp_path):
    # one base row, one constraint with two terms and two pieces each
    spec = model.CplSpec(
        [[np.array([2.0]), np.array([3.0])],
         [np.array([4.0]), np.array([5.0])]],
        bound=7.0,
    )
    return write_instance(tmp_path, model.build_cpl(1, [spec]))


class TestGen:
    def test_deterministic_output(self, capsys, tmp_path):
        code1, out1, _ = run(capsys, "gen", "cpl", "--seed", "3")
        code2, out2, _ = run(capsys, "gen", "cpl", "--seed", "3")
        assert code1 == code2 == 0
        assert out1 == out2
        doc = json.loads(out1)
        assert doc["m"] > 0 and doc["triplets"]

    def test_write_to_file(self, capsys, tmp_path):
        target = str(tmp_path / "x.json")
        code, out, _ = run(capsys, "gen", "l1", "--out", target)
        assert code == 0
        summary = json.loads(out)
        assert summary["written"] == target
        lp = model.instance_from_json(open(target).read())
        assert lp.m == summary["m"] and lp.n == summary["n"]

    def test_bad_params_exit(self, capsys):
        code, _, err = run(capsys, "gen", "cvar", "--beta", "1.5")
        assert code == 64
        assert "beta" in err


class TestDetect:
    def test_eq5_structure(self, capsys, tmp_path):
        path = eq5_instance(tmp_path)
        code, out, _ = run(capsys, "detect", path, "--mmin", "2", "--jmax", "3")
        assert code == 0
        doc = json.loads(out)
        assert doc["k_blocks"] == 2
        assert doc["m1"] == 1
        assert doc["reduction"] == pytest.approx(2 / 3)
        assert doc["has_nonzero_coupling"] and doc["validated"]

    def test_identity_with_required_coupling(self, capsys, tmp_path):
        lp = model.StandardFormLP(
            from_dense(np.eye(5)), np.ones(5), np.ones(5), []
        )
        path = write_instance(tmp_path, lp)
        code, out, _ = run(
            capsys, "detect", path, "--mmin", "2", "--jmax", "1",
            "--require-coupling",
        )
        doc = json.loads(out)
        assert code == 0 and doc["k_blocks"] == 1 and doc["reduction"] == 0.0

    def test_missing_file_is_usage_error(self, capsys):
        code, _, err = run(capsys, "detect", "/nonexistent/file.json")
        assert code == 64


class TestSolve:
    def test_optimal_exit_zero(self, capsys, tmp_path):
        path = eq5_instance(tmp_path)
        code, out, _ = run(capsys, "solve", path, "--mmin", "2", "--jmax", "3")
        assert code == 0
        doc = json.loads(out)
        assert doc["status"] == "Optimal"
        assert "log" not in doc

    def test_full_and_reduced_agree(self, capsys, tmp_path):
        lp = model.gen_random_cpl(
            base_dim=5, n_specs=2, p_terms=20, l_pieces=2, seed=4
        )
        path = write_instance(tmp_path, lp)
        code_f, out_f, _ = run(capsys, "solve", path, "--backend", "full")
        code_r, out_r, _ = run(capsys, "solve", path, "--backend", "reduced")
        assert code_f == code_r == 0
        obj_f = json.loads(out_f)["objective"]
        doc_r = json.loads(out_r)
        assert doc_r["backend"] == "reduced"
        assert doc_r["objective"] == pytest.approx(obj_f, abs=1e-6)

    def test_infeasible_exit_four(self, capsys, tmp_path):
        lp = model.StandardFormLP(
            from_dense([[1.0], [1.0]]),
            np.array([1.0, 2.0]),
            np.array([1.0]),
            [],
        )
        path = write_instance(tmp_path, lp)
        code, out, _ = run(capsys, "solve", path)
        assert code == 4
        assert json.loads(out)["status"] == "Infeasible-suspected"

    def test_log_iterations_json_lines(self, capsys, tmp_path):
        path = eq5_instance(tmp_path)
        code, out, _ = run(
            capsys, "solve", path, "--mmin", "2", "--jmax", "3",
            "--log-iterations",
        )
        assert code == 0
        head, _, tail = out.partition("}\n{")  # report, then JSON lines
        lines = out.strip().splitlines()
        last = json.loads(lines[-1])
        assert "mu" in last and "alpha" in last

    def test_l1_consistent_near_zero(self, capsys, tmp_path):
        target = str(tmp_path / "l1.json")
        run(capsys, "gen", "l1", "--consistent", "--out", target)
        code, out, _ = run(capsys, "solve", target)
        assert code == 0
        doc = json.loads(out)
        assert abs(doc["source_objective"]) <= 1e-6

    def test_rt_instance_solves(self, capsys, tmp_path):
        target = str(tmp_path / "rt.json")
        run(
            capsys, "gen", "rt", "--beamlets", "6", "--voxels", "45",
            "--structures", "3", "--out", target,
        )
        code, out, _ = run(capsys, "solve", target)
        assert code == 0
        doc = json.loads(out)
        assert doc["status"] == "Optimal"
        assert doc["structure_stats"]["m1"] < doc["structure_stats"]["m"]

    def test_mps_path(self, capsys, tmp_path):
        mps = tmp_path / "toy.mps"
        mps.write_text(
            "NAME T\nROWS\n N OBJ\n L R1\nCOLUMNS\n"
            " X OBJ -1.0 R1 1.0\nRHS\n S R1 2.0\nENDATA\n"
        )
        code, out, _ = run(capsys, "solve", str(mps))
        assert code == 0
        doc = json.loads(out)
        assert doc["source_objective"] == pytest.approx(-2.0, abs=1e-6)

    def test_parse_error_exit(self, capsys, tmp_path):
        bad = tmp_path / "bad.mps"
        bad.write_text("NAME X\nROWS\n L R1\nENDATA\n")
        code, _, err = run(capsys, "solve", str(bad))
        assert code == 65
        assert "parse error" in err


class TestBench:
    def test_repeat_count_does_not_change_result(self, capsys):
        code1, out1, _ = run(
            capsys, "bench", "--sizes", "200", "--m1", "8", "--repeats", "1"
        )
        code5, out5, _ = run(
            capsys, "bench", "--sizes", "200", "--m1", "8", "--repeats", "5"
        )
        assert code1 == code5 == 0
        r1 = json.loads(out1)["results"][0]
        r5 = json.loads(out5)["results"][0]
        assert r1["reduced_dy_norm"] == r5["reduced_dy_norm"]
        assert r1["full_dy_norm"] == r5["full_dy_norm"]

    def test_backends_agree_on_direction(self, capsys):
        code, out, _ = run(
            capsys, "bench", "--sizes", "150,300", "--m1", "10",
            "--repeats", "1",
        )
        assert code == 0
        for entry in json.loads(out)["results"]:
            assert entry["reduced_dy_norm"] == pytest.approx(
                entry["full_dy_norm"], rel=1e-8
            )


class TestSurvey:
    def test_mixed_corpus(self, capsys, tmp_path):
        good = eq5_instance(tmp_path)
        bad = tmp_path / "bad.mps"
        bad.write_text("garbage\n")
        code, out, _ = run(
            capsys, "survey", good, str(bad), "--mmin", "2", "--jmax", "3"
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["n_problems"] == 2 and doc["n_analyzed"] == 1
        assert doc["fraction_with_structure"] == 1.0
        assert "error" in doc["problems"][1]


class TestUsage:
    def test_no_command(self, capsys):
        assert run(capsys, )[0] == 64

    def test_unknown_flag(self, capsys):
        assert run(capsys, "solve", "x.json", "--frobnicate")[0] == 64

    def test_out_file_written(self, capsys, tmp_path):
        path = eq5_instance(tmp_path)
        target = tmp_path / "report.json"
        code, out, _ = run(
            capsys, "detect", path, "--mmin", "2", "--jmax", "3",
            "--out", str(target),
        )
        assert code == 0
        assert json.loads(target.read_text()) == json.loads(out)
