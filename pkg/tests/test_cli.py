import json
import math

import numpy as np
import pytest

from rankbp import fileio
from rankbp.cli import main


@pytest.fixture
def files(tmp_path):
    d = {}
    d["vec1"] = tmp_path / "a.vec"
    fileio.write_vectors(d["vec1"], [[1, 2]])
    d["signed"] = tmp_path / "s.vec"
    fileio.write_vectors(d["signed"], [[2, 2], [1, -1]])
    d["bad"] = tmp_path / "bad.vec"
    fileio.write_vectors(d["bad"], [[1, 0], [5, 0]])
    d["m2"] = tmp_path / "m2.txt"
    fileio.write_matrix(d["m2"], [[0, 1], [1, 0]])
    rng = np.random.default_rng(0)
    x, y = rng.uniform(0.5, 1.5, (2, 12))
    d["r2"] = tmp_path / "r2.txt"
    fileio.write_matrix(d["r2"], 0.1 * (np.outer(x, y) + np.outer(y, x)))
    d["star"] = tmp_path / "star.g"
    d["star"].write_text("4\n1 2\n1 3\n1 4\n")
    return {k: str(v) for k, v in d.items()}


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_rates_check_examples(capsys, files):
    code, rep = run_json(capsys, ["rates-check", "--construction", "rank1", "--vectors", files["vec1"], "--ell", "0.5"])
    assert code == 0 and rep["max_rel_deviation"] == 0 and rep["decision"] == "pass"
    code, rep = run_json(capsys, ["rates-check", "--construction", "signed", "--vectors", files["signed"]])
    assert code == 0 and rep["max_rel_deviation"] <= 1e-15
    code = main(["rates-check", "--construction", "signed", "--vectors", files["bad"]])
    err = capsys.readouterr().err
    assert code == 2 and "dominance" in err and "index 1" in err


def test_rates_check_failure_exit_code(capsys, files):
    # rounding in the spectral split exceeds an absurdly tight tolerance
    code, rep = run_json(capsys, ["rates-check", "--construction", "rank2", "--matrix", files["r2"], "--tol", "1e-300"])
    assert rep["max_rel_deviation"] > 1e-300
    assert code == 1 and rep["decision"] == "fail"
    assert main(["rates-check", "--construction", "rank2", "--matrix", files["m2"], "--tol", "-1"]) == 2
    capsys.readouterr()


def test_equiv_exact_and_mc(capsys, files):
    argv = ["equiv", "--matrix", files["m2"], "--ell", repr(math.log(2)), "--reps", "3000", "--seed", "4"]
    code, rep = run_json(capsys, argv)
    assert code == 0 and rep["mode"] == "exact" and rep["oracle_tv"] <= 1e-12 and rep["gof"]["p_value"] > 1e-3
    code, rep = run_json(capsys, argv + ["--mode", "mc"])
    assert code == 0 and rep["p_value"] > 1e-3
    assert {"seed", "reps", "construction"} <= set(rep)


def test_equiv_zero_kernel(capsys, tmp_path):
    z = tmp_path / "z.txt"
    fileio.write_matrix(z, np.zeros((3, 3)))
    code, rep = run_json(capsys, ["equiv", "--matrix", str(z), "--reps", "50"])
    assert code == 0 and rep["outcomes"] == 1 and rep["decision"] == "pass"


def test_config_file_and_override(capsys, tmp_path, files):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"matrix={files['m2']}\nconstruction=rank2\nreps=400\nmax-pop=1000\n")
    code, rep = run_json(capsys, ["equiv", "--config", str(cfg), "--mode", "mc"])
    assert code == 0 and rep["reps"] == 400 and rep["construction"] == "rank2"
    code, rep = run_json(capsys, ["equiv", "--config", str(cfg), "--mode", "mc", "--reps", "300"])
    assert rep["reps"] == 300


def test_bp_csv(tmp_path, files):
    out = tmp_path / "bp.csv"
    assert main(["bp", "--matrix", files["m2"], "--construction", "rank2", "--reps", "5", "--depth", "3",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "replicate,node_id,parent_id,generation,type,mark,thinned"
    root = lines[1].split(",")
    assert root[2] == "" and root[3] == "0" and root[4] == "0" and root[5] == "1"
    summary = json.loads((tmp_path / "bp.csv.json").read_text())
    assert summary["reps"] == 5 and summary["construction"] == "rank2"


def test_shells_and_sample_csv(tmp_path, files):
    out = tmp_path / "sh.csv"
    assert main(["shells", "--graph", files["star"], "--ell", "50", "--root", "2", "--depth", "2",
                 "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows == ["replicate,depth,shell_size,shell_members", "0,0,1,2", "0,1,1,1", "0,2,2,3;4"]
    out = tmp_path / "e.csv"
    assert main(["sample", "--graph", files["star"], "--ell", "50", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[1:] == ["0,1,2", "0,1,3", "0,1,4"]


def test_partition_and_sparsity(capsys, files, tmp_path):
    code, rep = run_json(capsys, ["partition", "--graph", files["star"]])
    assert code == 0 and rep["blocks"] == [[1], [2, 3, 4]] and rep["kl_ratio"] == 1.0
    m = tmp_path / "s.txt"
    fileio.write_matrix(m, [[0, 2], [2, 0]])
    code, rep = run_json(capsys, ["sparsity", "--matrix", str(m), "--ell", "0.5"])
    assert code == 0 and rep["sparsity"] == pytest.approx(1.0)


def test_giant_decisions(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["giant", "--n", "20000", "--c", "2", "--reps", "2", "--out", str(out)]) == 0
    rep = json.loads((tmp_path / "g.csv.json").read_text())
    assert rep["decision"] == "pass" and rep["reference"] == pytest.approx(0.79681213)
    assert out.read_text().splitlines()[0] == "replicate,largest_component,fraction"
    assert main(["giant", "--n", "20000", "--c", "1", "--reps", "2", "--out", str(out)]) == 0
    assert json.loads((tmp_path / "g.csv.json").read_text())["decision"] == "report"


def test_input_errors(capsys, files, tmp_path):
    assert main(["shells", "--matrix", files["m2"], "--root", "3"]) == 2
    assert main(["bp", "--construction", "signed", "--matrix", files["m2"]]) == 2
    assert main(["equiv", "--matrix", str(tmp_path / "missing.txt")]) == 2
    assert main(["sample", "--matrix", files["m2"], "--reps", "0"]) == 2
    assert main(["giant", "--n", "10"]) == 2
    with pytest.raises(SystemExit):
        main(["sample", "--matrix", files["m2"], "--graph", files["star"]])
    capsys.readouterr()


RANDOMIZED = [
    ["sample", "--vectors", "{vec1}", "--reps", "30"],
    ["shells", "--matrix", "{r2}", "--reps", "40", "--depth", "3"],
    ["bp", "--matrix", "{r2}", "--construction", "rank2", "--reps", "40", "--depth", "3"],
    ["equiv", "--matrix", "{r2}", "--construction", "rank2", "--reps", "400"],
    ["giant", "--n", "3000", "--c", "1.5", "--reps", "6"],
]


@pytest.mark.parametrize("argv", RANDOMIZED, ids=lambda a: a[0])
def test_outputs_identical_across_threads(tmp_path, files, argv):
    argv = [a.format(**files) for a in argv]
    blobs = []
    for threads in ("1", "3"):
        out = tmp_path / f"t{threads}.out"
        main(argv + ["--seed", "77", "--threads", threads, "--out", str(out)])
        side = out.with_name(out.name + ".json")
        blobs.append((out.read_bytes(), side.read_bytes() if side.exists() else b""))
    assert blobs[0] == blobs[1]
