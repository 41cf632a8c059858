import json

import numpy as np
import pytest

from dpvarsel import cli
from dpvarsel.beta_sampler import FACTORIZATIONS, NumericalError
from dpvarsel.datasets import Truth, read_truth, write_csv, write_truth
from dpvarsel.gibbs import DrawStore, ModelConfig
from dpvarsel.network import planted_edge_fixture


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def sim50(tmp_path):
    out = tmp_path / "sim"
    assert run("simulate", "--scenario", "S2", "--n", 50, "--p", 10, "--seed", 3, "--out-dir", out) == 0
    return out


def test_simulate_s2(tmp_path):
    assert run("simulate", "--scenario", "S2", "--n", 200, "--p", 50, "--seed", 1, "--out-dir", tmp_path) == 0
    assert read_truth(tmp_path / "data.truth").n_components == 9
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "simulate" and manifest["seed"] == 1
    assert set(manifest["outputs"]) == {"data.csv", "data.truth"}


def test_simulate_s1(tmp_path):
    assert run("simulate", "--scenario", "S1", "--n", 10, "--p", 50, "--out-dir", tmp_path) == 0
    assert read_truth(tmp_path / "data.truth").n_components == 1


def test_missing_flag_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        run("simulate", "--p", 50, "--out-dir", tmp_path)
    assert info.value.code == 2
    assert "--n" in capsys.readouterr().err


def test_invalid_dimensions_is_usage_error(tmp_path):
    assert run("simulate", "--n", 10, "--p", 5, "--out-dir", tmp_path) == 2


def test_fit_dpss_emits_K(sim50, tmp_path, capsys):
    out = tmp_path / "fit"
    assert run("fit", "--data", sim50 / "data.csv", "--model", "dpss", "--iterations", 2000, "--out-dir", out) == 0
    header = (out / "draws.csv").read_text().splitlines()[0].split(",")
    assert "K" in header
    printed = capsys.readouterr().out
    assert "kept=1000" in printed and "wall_clock=" in printed
    assert (out / "timing.txt").exists()


def test_fit_ss_schema(sim50, tmp_path):
    out = tmp_path / "fit"
    assert run("fit", "--data", sim50 / "data.csv", "--model", "ss", "--iterations", 20, "--out-dir", out) == 0
    header = (out / "draws.csv").read_text().splitlines()[0].split(",")
    assert header[-1] == "sigma2" and "K" not in header


def test_fit_fast_backend_avoids_pxp(tmp_path):
    g = np.random.default_rng(0)
    X = g.standard_normal((50, 500))
    write_csv(tmp_path / "wide.csv", X, X[:, 0] + g.standard_normal(50))
    before = FACTORIZATIONS["pxp"]
    code = run(
        "fit", "--data", tmp_path / "wide.csv", "--model", "dphs", "--beta-backend", "fast",
        "--iterations", 10, "--out-dir", tmp_path / "fit",
    )
    assert code == 0 and FACTORIZATIONS["pxp"] == before


def test_fit_io_errors(tmp_path):
    assert run("fit", "--data", tmp_path / "missing.csv", "--out-dir", tmp_path / "o") == 3
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n3,oops\n")
    assert run("fit", "--data", tmp_path / "bad.csv", "--out-dir", tmp_path / "o") == 3


def test_fit_numerical_failure(sim50, tmp_path, monkeypatch, capsys):
    def boom(data, cfg):
        raise NumericalError("forced", iteration=17)

    monkeypatch.setattr(cli, "run_chain", boom)
    assert run("fit", "--data", sim50 / "data.csv", "--out-dir", tmp_path / "o") == 4
    assert "iteration=17" in capsys.readouterr().err


def _perfect_fixture(tmp_path, model):
    beta0 = np.array([0.0, 2.0, 0.0, -1.0])
    cfg = ModelConfig.for_model(model, iterations=20)
    store = DrawStore(cfg, 5, 4)
    store.beta_draws[:] = beta0
    if store.eta_draws is not None:
        store.eta_draws[:] = beta0 != 0
        store.omega_draws[:] = 0.5
    store.sigma2_draws[:] = 1.0
    store.save(tmp_path / "draws")
    write_truth(tmp_path / "t.truth", Truth(beta0, np.zeros(5, dtype=int), [1.0]))
    return tmp_path / "draws", tmp_path / "t.truth"


def test_evaluate_perfect_recovery(tmp_path):
    draws, truth = _perfect_fixture(tmp_path, "ss")
    assert run("evaluate", "--draws", draws, "--truth", truth, "--out-dir", tmp_path / "ev") == 0
    text = (tmp_path / "ev" / "metrics.txt").read_text()
    assert "rel_error=0.0" in text and "tp=2" in text and "fp=0" in text


def test_evaluate_requires_truth(tmp_path):
    draws, _ = _perfect_fixture(tmp_path, "ss")
    assert run("evaluate", "--draws", draws, "--out-dir", tmp_path / "ev") == 2


@pytest.mark.parametrize("model,method", [("ss", "inclusion"), ("hs", "credible_interval")])
def test_select_default_method_and_zeta(tmp_path, model, method):
    draws, _ = _perfect_fixture(tmp_path, model)
    assert run("select", "--draws", draws, "--out-dir", tmp_path / "sel") == 0
    text = (tmp_path / "sel" / "selection.txt").read_text()
    assert f"method={method}" in text and "zeta=0.05" in text and "support=2,4" in text


def test_select_override(tmp_path):
    draws, _ = _perfect_fixture(tmp_path, "ss")
    assert run("select", "--draws", draws, "--method", "zcut", "--out-dir", tmp_path / "sel") == 0
    assert "method=zcut" in (tmp_path / "sel" / "selection.txt").read_text()
    assert run("select", "--draws", tmp_path / "nowhere", "--out-dir", tmp_path / "sel2") == 3


def _write_network(tmp_path, seed=0):
    expr, (target, regulator) = planted_edge_fixture(n_genes=4, n_samples=40, seed=seed)
    names = [f"G{k + 1}" for k in range(4)]
    with open(tmp_path / "expr.tsv", "w") as fh:
        fh.write("\t".join(names) + "\n")
        for row in expr.T:
            fh.write("\t".join(repr(float(v)) for v in row) + "\n")
    (tmp_path / "gold.tsv").write_text(f"{names[regulator]}\t{names[target]}\t1\n")
    return tmp_path / "expr.tsv", tmp_path / "gold.tsv"


def test_network_with_and_without_gold(tmp_path, capsys):
    expr, gold = _write_network(tmp_path)
    out = tmp_path / "net"
    code = run(
        "network", "--expression", expr, "--gold", gold, "--model", "ss,hs",
        "--iterations", 100, "--out-dir", out,
    )
    assert code == 0
    table = (out / "log_loss.csv").read_text().splitlines()
    assert table[0] == "network,ss,hs" and table[1].startswith("N1,")
    P = np.loadtxt(out / "edges_N1_ss.csv", delimiter=",", skiprows=1, usecols=range(1, 5))
    assert np.all(np.diag(P) == 0)
    out2 = tmp_path / "net2"
    assert run("network", "--expression", expr, "--model", "ss", "--iterations", 50, "--out-dir", out2) == 0
    assert (out2 / "edges_N1_ss.csv").exists() and not (out2 / "log_loss.csv").exists()


def test_network_bad_model(tmp_path):
    expr, _ = _write_network(tmp_path)
    assert run("network", "--expression", expr, "--model", "lasso", "--out-dir", tmp_path / "n") == 2


def test_sweep(tmp_path, capsys):
    code = run(
        "sweep", "--scenario", "S2", "--n", 30, "--p", 10, "--model", "ss,dpss",
        "--replicates", 2, "--iterations", 40, "--out-dir", tmp_path,
    )
    assert code == 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0] == "seed,model,rel_error,tp,fp,K_mode" and len(rows) == 5


def test_replay_reproduces_fit(sim50, tmp_path):
    out = tmp_path / "fit"
    assert run("fit", "--data", sim50 / "data.csv", "--model", "dphs", "--iterations", 50, "--out-dir", out) == 0
    assert run("replay", "--manifest", out / "manifest.json", "--out-dir", tmp_path / "again") == 0
    for name in ("draws.csv", "draws.meta"):
        assert (out / name).read_bytes() == (tmp_path / "again" / name).read_bytes()
    first = (out / "manifest.json").read_bytes()
    assert run("replay", "--manifest", out / "manifest.json") == 0
    assert (out / "manifest.json").read_bytes() == first


def test_replay_bad_manifest(tmp_path):
    (tmp_path / "m.json").write_text("{not json")
    assert run("replay", "--manifest", tmp_path / "m.json") == 3
