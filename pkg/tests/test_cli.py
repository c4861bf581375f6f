import csv
import json

import numpy as np
import pytest

from submardia.cli import dumps, main, parse_matrix, read_experiment, UsageError
from submardia.families import CompositeModel
from submardia.simlab import sample


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 and out else None), err


def write_csv(path, x, header=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        for row in x:
            w.writerow([repr(float(v)) for v in row])
    return path


def test_measures_on_setosa(capsys, tmp_path):
    code, doc, _ = run(capsys, "measures", "iris-setosa", "--csv", tmp_path / "m.csv")
    assert code == 0
    assert doc["data"]["n"] == 50 and len(doc["measures"]) == 15
    assert doc["measures"][6]["subset"] == [1, 4] and doc["measures"][6]["index"] == 7
    rows = list(csv.reader(open(tmp_path / "m.csv")))
    assert len(rows) == 16 and rows[0][0] == "index"


def test_measures_columns(capsys):
    code, doc, _ = run(capsys, "measures", "iris-setosa", "--columns", "1,4")
    assert code == 0 and len(doc["measures"]) == 3
    assert doc["data"]["columns"] == ["sepal_length", "petal_width"]


def test_where_filter_matches_builtin(capsys):
    _, a, _ = run(capsys, "measures", "iris", "--where", "species=setosa")
    _, b, _ = run(capsys, "measures", "iris-setosa")
    assert a["measures"] == b["measures"]


def test_test_maxs(capsys):
    code, doc, _ = run(capsys, "test", "maxs", "iris-setosa", "--reps", 1000, "--seed", 7)
    assert code == 0
    r = doc["result"]
    assert abs(r["p_value"] - 0.004) <= 0.01 + 3 * r["mc_se"]
    assert r["argmax"] == {"subset": [4], "index": 4}
    assert doc["config"]["seed"] == 7


def test_test_mardia(capsys):
    code, doc, _ = run(capsys, "test", "mardia-s", "iris-setosa", "--columns", 4)
    assert code == 0
    assert doc["result"]["p_value"] == pytest.approx(0.001, abs=0.0005)
    code, doc, _ = run(capsys, "test", "mardia-k", "iris")
    assert doc["result"]["p_value"] == pytest.approx(0.611, abs=0.01)


def test_composite_report_flags_p_value_rule(capsys):
    code, doc, _ = run(capsys, "test", "maxsk", "iris-setosa", "--seed", 3)
    assert code == 0
    assert doc["result"]["detail"]["p_value_rule"].startswith("min(1, 2*")


def test_usage_errors(capsys, tmp_path):
    x = np.random.default_rng(0).standard_normal((50, 5))
    f = write_csv(tmp_path / "g.csv", x)
    assert run(capsys, "test", "maxs-q", f, "--q0", 6)[0] == 1
    assert run(capsys, "test", "maxs-q", f)[0] == 1
    assert run(capsys, "test", "nope", f)[0] == 1
    assert run(capsys, "test", "maxs", f, "--reps", 0)[0] == 1
    assert run(capsys, "test", "maxs", f, "--columns", "0,2")[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "theory", "t", "--p", 2)[0] == 1
    assert run(capsys, "theory", "t", "--p", 2, "--nu", 3)[0] == 1


def test_low_reps_warns(capsys):
    code, _, err = run(capsys, "test", "maxk", "iris-setosa", "--reps", 200, "--seed", 1)
    assert code == 0 and "warning" in err


def test_data_errors(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n3,x\n4,5\n")
    code, _, err = run(capsys, "measures", bad)
    assert code == 2 and "line 3" in err
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    code, _, err = run(capsys, "measures", ragged)
    assert code == 2 and "line 2" in err
    assert run(capsys, "measures", tmp_path / "missing.csv")[0] == 2
    x = np.random.default_rng(1).standard_normal((30, 2))
    dup = write_csv(tmp_path / "dup.csv", np.column_stack([x, x.sum(axis=1)]))
    code, _, err = run(capsys, "test", "maxs", dup, "--seed", 1)
    assert code == 2 and "(1, 2, 3)" in err


def test_degenerate_subsets_are_null_in_measures(capsys, tmp_path):
    x = np.random.default_rng(1).standard_normal((30, 2))
    f = write_csv(tmp_path / "dup.csv", np.column_stack([x, x.sum(axis=1)]))
    code, doc, _ = run(capsys, "measures", f)
    assert code == 0
    assert doc["degenerate"] == [[1, 2, 3]]
    assert doc["measures"][-1]["b1"] is None


def test_headerless_csv(capsys, tmp_path):
    x = np.random.default_rng(2).standard_normal((40, 3))
    f = write_csv(tmp_path / "plain.csv", x)
    code, doc, _ = run(capsys, "measures", f)
    assert code == 0 and doc["data"]["n"] == 40
    assert doc["data"]["columns"] == ["x1", "x2", "x3"]


def test_detect_model_one_file(capsys, tmp_path):
    x = sample(CompositeModel(1, alpha=5), 200, 4)
    f = write_csv(tmp_path / "m1.csv", x, [f"v{i}" for i in range(1, 6)])
    code, doc, _ = run(capsys, "detect", f, "--seed", 4)
    assert code == 0
    assert doc["result"]["triggered"] is True
    assert doc["result"]["union_subset"] == {"subset": [1, 2], "index": 6}
    assert doc["config"]["seed"] == 4


def test_seed_replay_is_byte_identical(capsys):
    outs = []
    for _ in range(2):
        main(["test", "maxsk", "iris-setosa", "--seed", "9"])
        doc = json.loads(capsys.readouterr().out)
        doc.pop("timing")
        outs.append(dumps(doc))
    assert outs[0] == outs[1]


def test_fresh_seed_is_echoed_and_replays(capsys):
    _, a, _ = run(capsys, "test", "maxk", "iris-setosa")
    seed = a["config"]["seed"]
    _, b, _ = run(capsys, "test", "maxk", "iris-setosa", "--seed", seed)
    assert a["result"] == b["result"]


def test_json_round_trip(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert main(["measures", "iris", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    again = json.loads(dumps(doc))
    assert again == doc
    assert isinstance(doc["measures"][0]["b1"], float)


def test_theory_commands(capsys):
    _, doc, _ = run(capsys, "theory", "sn", "--omega", "equicorr:0.5", "--lambda", "5,5")
    assert doc["theory"][2]["beta1"] == pytest.approx(0.889, abs=1e-3)
    assert doc["theory"][0]["beta1"] == pytest.approx(0.130, abs=1e-3)
    _, doc, _ = run(capsys, "theory", "t", "--nu", 8, "--p", 3)
    assert [r["beta2"] for r in doc["theory"]] == pytest.approx([4.5] * 3 + [12] * 3 + [22.5])
    _, doc, _ = run(capsys, "theory", "gaussian", "--p", 2)
    assert [(r["beta1"], r["beta2"]) for r in doc["theory"]] == [(0, 3), (0, 3), (0, 8)]
    _, doc, _ = run(capsys, "theory", "model2", "--nu", 8, "--subset", "1,2")
    assert len(doc["theory"]) == 1 and doc["theory"][0]["beta2"] == pytest.approx(12)
    _, doc, _ = run(capsys, "theory", "st", "--nu", 3.5, "--lambda", "1")
    assert doc["theory"][0]["beta2"] is None


def test_parse_matrix():
    np.testing.assert_array_equal(parse_matrix("identity", 2), np.eye(2))
    np.testing.assert_allclose(parse_matrix("equicorr:0.3", 2), [[1, 0.3], [0.3, 1]])
    np.testing.assert_allclose(parse_matrix("1,0.5;0.5,2", None), [[1, 0.5], [0.5, 2]])
    with pytest.raises(UsageError):
        parse_matrix("equicorr", None)


def write_config(path, **keys):
    body = "[experiment]\n" + "".join(f"{k} = {v}\n" for k, v in keys.items())
    path.write_text(body)
    return path


def test_read_experiment_grid(tmp_path):
    f = write_config(tmp_path / "c.ini", kind="power", family="model1", n="100, 200", alpha="1, 3")
    settings, cells = read_experiment(str(f))
    assert settings["family"] == "model1"
    assert cells == [{"n": 100, "alpha": 1.0}, {"n": 100, "alpha": 3.0},
                     {"n": 200, "alpha": 1.0}, {"n": 200, "alpha": 3.0}]


def test_simulate_validation(capsys, tmp_path):
    assert run(capsys, "simulate", write_config(tmp_path / "a.ini", n=50, replicates=0))[0] == 1
    assert run(capsys, "simulate", write_config(tmp_path / "b.ini", n=50, bogus=1))[0] == 1
    assert run(capsys, "simulate", write_config(tmp_path / "c.ini", kind="size"))[0] == 1
    (tmp_path / "d.ini").write_text("[other]\nn = 5\n")
    assert run(capsys, "simulate", tmp_path / "d.ini")[0] == 1


def test_simulate_size(capsys, tmp_path):
    f = write_config(tmp_path / "s.ini", kind="size", family="gaussian", p=3, n="60, 80",
                     tests="MaxS, MaxK_2", replicates=5, reps=100, seed=1)
    code, doc, _ = run(capsys, "simulate", f, "--csv", tmp_path / "s")
    assert code == 0 and len(doc["results"]) == 4
    rows = list(csv.reader(open(tmp_path / "s_rates.csv")))
    assert rows[0] == ["n", "alpha", "nu", "test", "rate", "mc_se"] and len(rows) == 5


def test_simulate_detection_histogram(capsys, tmp_path):
    f = write_config(tmp_path / "d.ini", kind="detection", family="model1", p=5, q=2, n=200,
                     alpha=5, procedure="s", replicates=6, reps=200, seed=2)
    code, doc, _ = run(capsys, "simulate", f, "--csv", tmp_path / "d")
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "d_histogram.csv")))
    assert sum(r["kind"] == "index" for r in rows) == 31
    assert sum(r["kind"] == "q" for r in rows) == 5
    res = doc["results"][0]
    assert sum(res["detection_histogram"].values()) == pytest.approx(res["rate"])


def test_bundled_configs_parse():
    from pathlib import Path

    configs = sorted((Path(__file__).parents[1] / "configs").glob("*.ini"))
    assert len(configs) >= 7
    for c in configs:
        settings, cells = read_experiment(str(c))
        assert cells
