import json
import numpy as np
import pytest
from click.testing import CliRunner

from fads.cli import main
from fads.data import read_dense_csv, write_dense_csv
from fads.simulate import simulate_dataset


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def tiny_csv(tmp_path):
    data, _ = simulate_dataset(40, 5, 1, seed=77)
    path = tmp_path / "tiny.csv"
    write_dense_csv(path, data.rows)
    return path


FAST = ["--starts", "3,4,1", "--threads", "1"]


def test_fit_tiny_dataset(runner, tiny_csv, tmp_path):
    out = tmp_path / "out"
    res = runner.invoke(main, ["fit", "--input", str(tiny_csv), "--q", "1",
                               "--out-dir", str(out), "--seed", "1"] + FAST)
    assert res.exit_code == 0, res.output
    mu, _ = read_dense_csv(out / "mu.csv")
    assert mu.shape == (1, 5)
    assert np.linalg.norm(mu) == pytest.approx(1.0, abs=1e-10)
    psi, _ = read_dense_csv(out / "psi.csv")
    assert np.all(psi > 0)
    trace, _ = read_dense_csv(out / "loglik_trace.csv")
    assert np.diff(trace[:, 0]).min() >= -1e-9
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 1 and man["command"] == "fit"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"] in (True, False)


def test_fit_byte_identical_reruns(runner, tiny_csv, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        res = runner.invoke(main, ["fit", "--input", str(tiny_csv), "--q", "1",
                                   "--out-dir", str(out), "--seed", "5"] + FAST)
        assert res.exit_code == 0, res.output
        outs.append(out)
    for fname in ("mu.csv", "lambda.csv", "psi.csv", "scores.csv",
                  "loglik_trace.csv", "summary.json"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes(), fname


def test_fit_q_too_large_is_usage_error(runner, tiny_csv, tmp_path):
    res = runner.invoke(main, ["fit", "--input", str(tiny_csv), "--q", "5",
                               "--out-dir", str(tmp_path / "x")] + FAST)
    assert res.exit_code == 2


def test_fit_malformed_csv(runner, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,2.0\n3.0,oops\n")
    res = runner.invoke(main, ["fit", "--input", str(bad), "--q", "1"] + FAST)
    assert res.exit_code == 2


def test_select_writes_table(runner, tmp_path):
    data, _ = simulate_dataset(150, 8, 1, seed=3)
    src = tmp_path / "d.csv"
    write_dense_csv(src, data.rows)
    out = tmp_path / "sel"
    res = runner.invoke(main, ["select", "--input", str(src), "--q-max", "2",
                               "--out-dir", str(out), "--seed", "0"] + FAST)
    assert res.exit_code in (0, 3), res.output
    lines = (out / "selection.csv").read_text().strip().splitlines()
    assert lines[0] == "q,loglik,ebic,converged,iterations"
    assert len(lines) == 4
    payload = json.loads(res.output.strip().splitlines()[-1])
    ebics = payload["ebic"]
    assert payload["chosen_q"] == int(np.argmin(ebics)) == 1


def test_select_qmax_zero_single_row(runner, tiny_csv, tmp_path):
    out = tmp_path / "sel0"
    res = runner.invoke(main, ["select", "--input", str(tiny_csv), "--q-max", "0",
                               "--out-dir", str(out)] + FAST)
    assert res.exit_code == 0, res.output
    lines = (out / "selection.csv").read_text().strip().splitlines()
    assert len(lines) == 2


def test_simulate_deterministic(runner, tmp_path):
    args = ["simulate", "--n", "30", "--p", "6", "--q", "2", "--seed", "9"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert runner.invoke(main, args + ["--out-dir", str(a)]).exit_code == 0
    assert runner.invoke(main, args + ["--out-dir", str(b)]).exit_code == 0
    for f in ("data.csv", "true_mu.csv", "true_lambda.csv", "true_psi.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    mu, _ = read_dense_csv(a / "true_mu.csv")
    assert np.linalg.norm(mu) == pytest.approx(1.0, abs=1e-12)
    psi, _ = read_dense_csv(a / "true_psi.csv")
    assert np.all((psi > 0.2) & (psi < 0.8))
    rows, _ = read_dense_csv(a / "data.csv")
    assert np.allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-10)


def test_preprocess_tfidf_l2(runner, tmp_path):
    counts = np.array([[1.0, 0.0, 2.0], [0.0, 3.0, 1.0], [2.0, 1.0, 0.0]])
    src = tmp_path / "c.csv"
    write_dense_csv(src, counts)
    out = tmp_path / "pre"
    res = runner.invoke(main, ["preprocess", "--input", str(src),
                               "--recipe", "tfidf-l2", "--out-dir", str(out)])
    assert res.exit_code == 0, res.output
    rows, _ = read_dense_csv(out / "spherical.csv")
    assert np.allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-12)


def test_preprocess_sqrt_composition(runner, tmp_path, rng):
    comp = rng.dirichlet(np.ones(6), size=12)
    src = tmp_path / "comp.csv"
    write_dense_csv(src, comp)
    out = tmp_path / "pre2"
    res = runner.invoke(main, ["preprocess", "--input", str(src),
                               "--recipe", "sqrt-composition", "--out-dir", str(out)])
    assert res.exit_code == 0, res.output
    rows, _ = read_dense_csv(out / "spherical.csv")
    assert np.allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-12)


def test_preprocess_zero_row_exits_2(runner, tmp_path):
    m = np.ones((3, 2))
    m[2] = 0.0
    src = tmp_path / "z.csv"
    write_dense_csv(src, m)
    res = runner.invoke(main, ["preprocess", "--input", str(src), "--recipe", "l2"])
    assert res.exit_code == 2


def test_gof_minimum_m_enforced(runner, tiny_csv):
    res = runner.invoke(main, ["gof", "--input", str(tiny_csv), "--q-max", "1",
                               "--mc-samples", "5"] + FAST)
    assert res.exit_code == 2


def test_gof_record(runner, tmp_path):
    data, _ = simulate_dataset(80, 6, 2, seed=15)
    src = tmp_path / "g.csv"
    write_dense_csv(src, data.rows)
    out = tmp_path / "gof"
    res = runner.invoke(main, ["gof", "--input", str(src), "--q-max", "2",
                               "--mc-samples", "19", "--reuse-q", "--seed", "2",
                               "--out-dir", str(out), "--tol-grad", "1e-5",
                               "--max-iter", "300"] + FAST)
    assert res.exit_code == 0, res.output
    record = json.loads((out / "gof_result.json").read_text())
    assert 0.0 < record["p_value"] <= 1.0
    num, den = record["p_value_rank"].split("/")
    assert int(den) == 20
    assert record["m"] == 19
    samples, _ = read_dense_csv(out / "gof_samples.csv")
    assert samples.shape == (19, 1)


def test_benchmark_smoke(runner, tmp_path):
    out = tmp_path / "bench"
    res = runner.invoke(main, [
        "benchmark", "--settings", "60,6,1", "--replicates", "2",
        "--algorithms", "fads-p", "--out-dir", str(out), "--seed", "4",
        "--max-iter", "500"] + FAST)
    assert res.exit_code == 0, res.output
    table = (out / "benchmark.csv").read_text().strip().splitlines()
    assert len(table) == 1 + 2
    means = json.loads((out / "benchmark_means.json").read_text())
    assert any(k.startswith("60,6,1") for k in means)
