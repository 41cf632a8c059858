import math

import numpy as np
import pytest
from scipy import integrate, stats

from dpvarsel import gibbs
from dpvarsel.beta_sampler import NumericalError
from dpvarsel.datasets import Dataset, ScenarioSpec, center, gen_scenario
from dpvarsel.gibbs import DrawStore, Hyper, ModelConfig, initial_state, run_chain, sweep
from dpvarsel.rng import RngStream
from oracles import log_gamma_pdf, log_ig_pdf, log_normal_pdf


def small_data(n=30, p=6, seed=0):
    return gen_scenario(ScenarioSpec("S2", n=n, p=max(p, 8), seed=seed))


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(prior="lasso")
    with pytest.raises(ValueError):
        ModelConfig.for_model("ss", iterations=10, burn_in=10)
    with pytest.raises(ValueError):
        ModelConfig.for_model("ss", alpha_update="other")
    with pytest.raises(ValueError):
        ModelConfig.for_model("dpss", beta_backend="gpu")
    with pytest.raises(ValueError):
        ModelConfig.for_model("ss", hyper=Hyper(v0=1.5))


def test_defaults():
    cfg = ModelConfig.for_model("dpss")
    assert cfg.sampler.iterations == 10_000 and cfg.sampler.resolved_burn_in == 5_000
    assert cfg.sampler.n_kept == 5_000 and cfg.hyper.v0 == 0.005
    assert cfg.name == "dpss" and cfg.is_dp and not cfg.is_student


def test_flat_round_trip():
    cfg = ModelConfig.for_model("dphs", likelihood="student_t", nu=3.5, iterations=40, thin=3, fixed_alpha=2.0, seed=9)
    flat = {k: str(v) for k, v in cfg.flat().items()}
    back = ModelConfig.from_flat(flat)
    assert back.replace_sampler(burn_in=None) == cfg.replace_sampler(burn_in=None)
    assert back.sampler.resolved_burn_in == 20


@pytest.mark.parametrize(
    "model,likelihood,expected",
    [
        ("dpss", "gaussian", ["assignments", "cluster_vars", "beta", "tau2,eta,omega", "alpha"]),
        ("dphs", "gaussian", ["assignments", "cluster_vars", "beta", "lambda2,nu,tau2,xi", "alpha"]),
        ("dpss", "student_t", ["assignments", "cluster_vars", "beta", "tau2,eta,omega", "G", "alpha"]),
        ("ss", "gaussian", ["beta", "tau2,eta,omega", "sigma2"]),
        ("hs", "student_t", ["beta", "lambda2,nu,tau2,xi", "G", "sigma2"]),
    ],
)
def test_sweep_order(model, likelihood, expected):
    data = small_data()
    cfg = ModelConfig.for_model(model, likelihood=likelihood, iterations=2, trace=True)
    state = initial_state(data, cfg)
    sweep(state, data, cfg, RngStream(0))
    assert state.trace == expected


def test_determinism_and_stream_sensitivity():
    data = small_data()
    cfg = ModelConfig.for_model("dpss", iterations=60, seed=4)
    a, b = run_chain(data, cfg), run_chain(data, cfg)
    assert np.array_equal(a.beta_draws, b.beta_draws) and np.array_equal(a.K_draws, b.K_draws)
    c = run_chain(data, cfg.replace_sampler(stream_id=1))
    assert not np.array_equal(a.beta_draws, c.beta_draws)


def test_schema(tmp_path):
    data = small_data()
    ss = run_chain(data, ModelConfig.for_model("ss", iterations=20))
    ss.save(tmp_path / "ss")
    header = (tmp_path / "ss" / "draws.csv").read_text().splitlines()[0].split(",")
    assert header[-1] == "sigma2" and "K" not in header and "omega" in header
    dphs = run_chain(data, ModelConfig.for_model("dphs", iterations=20))
    dphs.save(tmp_path / "dphs")
    header = (tmp_path / "dphs" / "draws.csv").read_text().splitlines()[0].split(",")
    assert header[-2:] == ["K", "alpha"] and "sigma2" not in header and "eta_1" not in header
    meta = (tmp_path / "dphs" / "draws.meta").read_text()
    assert "wall" not in meta and "kept=10" in meta


def test_burn_in_and_thin():
    data = small_data()
    store = run_chain(data, ModelConfig.for_model("ss", iterations=100, burn_in=40, thin=7))
    assert len(store) == 60 // 7


def test_save_load_round_trip(tmp_path):
    data = small_data()
    store = run_chain(data, ModelConfig.for_model("dpss", iterations=30))
    store.save(tmp_path)
    back = DrawStore.load(tmp_path)
    assert np.array_equal(back.beta_draws, store.beta_draws)
    assert np.array_equal(back.eta_draws, store.eta_draws)
    assert np.array_equal(back.alpha_draws, store.alpha_draws)
    assert back.cfg == store.cfg.replace_sampler(burn_in=15)  # burn-in is materialized on save


def test_memory_spill_matches_in_memory():
    data = small_data(n=20, p=10)
    cfg = ModelConfig.for_model("hs", iterations=50)
    spilled = run_chain(data, cfg.replace_sampler(memory_budget_mb=0))
    assert isinstance(spilled.beta_draws, np.memmap)
    assert np.array_equal(np.asarray(spilled.beta_draws), run_chain(data, cfg).beta_draws)


def test_numerical_error_reports_iteration(monkeypatch):
    data = small_data()
    calls = {"n": 0}

    def failing(cond, rng, backend="auto"):
        calls["n"] += 1
        if calls["n"] == 4:
            raise NumericalError("forced")
        return np.zeros(cond.shape[1])

    monkeypatch.setattr(gibbs, "sample_beta", failing)
    with pytest.raises(NumericalError) as info:
        run_chain(data, ModelConfig.for_model("ss", iterations=10))
    assert info.value.diagnostics["iteration"] == 3


def test_fixed_alpha_is_kept():
    store = run_chain(small_data(), ModelConfig.for_model("dpss", iterations=20, fixed_alpha=0.7))
    assert np.all(store.alpha_draws == 0.7)


def test_fast_backend_chain():
    g = np.random.default_rng(0)
    X = center(g.standard_normal((20, 120)))
    y = center(X[:, 0] * 3 + g.standard_normal(20))
    store = run_chain(Dataset(y, X), ModelConfig.for_model("dphs", iterations=40, beta_backend="fast"))
    assert np.all(np.isfinite(store.beta_draws))


def _batch_se(x, batches=50):
    m = len(x) // batches
    means = np.asarray(x[: m * batches]).reshape(batches, m).mean(axis=1)
    return means.std(ddof=1) / math.sqrt(batches)


BETA_GRID = np.linspace(-8.0, 10.0, 721)


def _posterior_mean_beta(log_prior_beta, log_lik_beta):
    # outer integral over beta on a fine grid, inner integrals by adaptive quadrature
    logf = np.array([log_prior_beta(b) + log_lik_beta(b) for b in BETA_GRID])
    f = np.exp(logf - logf.max())
    return integrate.simpson(BETA_GRID * f, x=BETA_GRID) / integrate.simpson(f, x=BETA_GRID)


def _ss_log_prior(h):
    # beta | eta ~ N(0, eta tau2) with tau2 ~ IG(a1, a2) integrated out is t_{2 a1}(0, eta a2 / a1);
    # eta = 1 or v0 with probability 1/2 each (omega ~ U(0, 1) integrated out)
    def dens(b, eta):
        return stats.t.pdf(b, 2 * h.a1, scale=math.sqrt(eta * h.a2 / h.a1))

    return lambda b: math.log(0.5 * dens(b, 1.0) + 0.5 * dens(b, h.v0))


@pytest.mark.parametrize("model", ["ss", "dpss"])
def test_one_observation_posterior_mean_gaussian(model):
    h = Hyper()
    y, x = 1.5, 1.0

    def log_lik(b):
        # sigma2 ~ IG(b1, b2) integrated by quadrature
        return math.log(
            integrate.quad(lambda s: math.exp(log_normal_pdf(y, x * b, s) + log_ig_pdf(s, h.b1, h.b2)), 0, np.inf, limit=200)[0]
        )

    target = _posterior_mean_beta(_ss_log_prior(h), log_lik)
    store = run_chain(Dataset([y], [[x]]), ModelConfig.for_model(model, iterations=12_000, burn_in=2_000, seed=1))
    draws = store.beta_draws[:, 0]
    assert abs(draws.mean() - target) < 3 * _batch_se(draws)


def test_one_observation_posterior_mean_student():
    h, nu = Hyper(), 3.0
    y, x = 1.5, 1.0

    def log_lik(b):
        # y | beta, sigma2 ~ t_nu(x beta, sigma2) (the G-integral), sigma2 ~ Gamma(b1, b2)
        def f(s):
            return math.exp(stats.t.logpdf(y, nu, loc=x * b, scale=math.sqrt(s)) + log_gamma_pdf(s, h.b1, h.b2))

        return math.log(integrate.quad(f, 0, np.inf, limit=200)[0])

    target = _posterior_mean_beta(_ss_log_prior(h), log_lik)
    cfg = ModelConfig.for_model("dpss", likelihood="student_t", nu=nu, iterations=12_000, burn_in=2_000, seed=2)
    draws = run_chain(Dataset([y], [[x]]), cfg).beta_draws[:, 0]
    assert abs(draws.mean() - target) < 3 * _batch_se(draws)


def test_zero_signal_calibration():
    covered = []
    for seed in range(20):
        g = np.random.default_rng(100 + seed)
        data = Dataset(center(g.standard_normal(50)), center(g.standard_normal((50, 10))))
        for model in ("ss", "hs"):
            store = run_chain(data, ModelConfig.for_model(model, iterations=1000, seed=seed))
            q = np.quantile(store.beta_draws, [0.025, 0.975], axis=0)
            covered.extend(((q[0] <= 0) & (q[1] >= 0)).tolist())
    assert np.mean(covered) >= 0.9


def test_student_large_nu_matches_gaussian():
    g = np.random.default_rng(7)
    X = center(g.standard_normal((50, 5)))
    y = center(X @ np.array([2.0, -1.5, 0.0, 1.0, 3.0]) + g.standard_normal(50))
    data = Dataset(y, X)
    gauss = run_chain(data, ModelConfig.for_model("dpss", iterations=3000, seed=3)).posterior_mean()
    student = run_chain(
        data, ModelConfig.for_model("dpss", likelihood="student_t", nu=200.0, iterations=3000, seed=3)
    ).posterior_mean()
    assert np.linalg.norm(student - gauss) / np.linalg.norm(gauss) < 0.05
