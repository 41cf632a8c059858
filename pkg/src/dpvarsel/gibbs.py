"""Gibbs sweeps for the four regression models and their Student-t variants.

A model is the product of a shrinkage prior (spike-and-slab or horseshoe),
a variance model (one shared variance or a Dirichlet-process mixture of
per-observation variances) and a likelihood (Gaussian or Student-t with
fixed degrees of freedom).

Draw files
----------
``draws.csv``
    Header row then one row per kept iteration. Columns, in order:
    ``beta_1..beta_p``; ``eta_1..eta_p`` (1 for slab, 0 for spike; spike-and-slab
    only); ``omega`` (spike-and-slab only); ``K`` and ``alpha`` (Dirichlet
    process only); ``sigma2`` (shared-variance models only). Values use
    ``%.17g`` so they round-trip exactly.
``draws.meta``
    ``key=value`` lines with the fully resolved :class:`ModelConfig`
    (nested fields flattened with dots), the data shape and the kept-row
    count. Wall-clock time is deliberately not part of it so that reruns are
    byte-identical; it is kept on :attr:`DrawStore.wall_clock` instead.
"""

from __future__ import annotations

import dataclasses
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dp
from .beta_sampler import BetaConditional, NumericalError, choose_backend, sample_beta
from .datasets import Dataset, read_key_values
from .priors import HorseshoeState, SpikeSlabState, update_horseshoe, update_spike_slab
from .rng import RngStream, sample_gamma, sample_inverse_gamma

MODEL_NAMES = {
    "ss": ("spike_slab", "homoskedastic"),
    "hs": ("horseshoe", "homoskedastic"),
    "dpss": ("spike_slab", "dirichlet_process"),
    "dphs": ("horseshoe", "dirichlet_process"),
}


@dataclass(frozen=True)
class Hyper:
    a1: float = 2.01
    a2: float = 1.0
    b1: float = 2.01
    b2: float = 1.0
    d1: float = 1.0
    d2: float = 0.5
    v0: float = 0.005


@dataclass(frozen=True)
class SamplerSettings:
    iterations: int = 10_000
    burn_in: int | None = None  # None means iterations // 2
    thin: int = 1
    seed: int = 0
    stream_id: int = 0
    beta_backend: str = "auto"
    alpha_update: str = "classical"
    fixed_alpha: float | None = None
    memory_budget_mb: float = 512.0
    trace: bool = False

    @property
    def resolved_burn_in(self) -> int:
        return self.iterations // 2 if self.burn_in is None else self.burn_in

    @property
    def n_kept(self) -> int:
        return (self.iterations - self.resolved_burn_in) // self.thin


@dataclass(frozen=True)
class ModelConfig:
    prior: str = "spike_slab"
    variance_model: str = "dirichlet_process"
    likelihood: str = "gaussian"
    nu: float = 2.0
    hyper: Hyper = field(default_factory=Hyper)
    sampler: SamplerSettings = field(default_factory=SamplerSettings)

    def __post_init__(self):
        if self.prior not in ("spike_slab", "horseshoe"):
            raise ValueError(f"unknown prior {self.prior!r}")
        if self.variance_model not in ("homoskedastic", "dirichlet_process"):
            raise ValueError(f"unknown variance model {self.variance_model!r}")
        if self.likelihood not in ("gaussian", "student_t"):
            raise ValueError(f"unknown likelihood {self.likelihood!r}")
        if self.likelihood == "student_t" and not self.nu > 0:
            raise ValueError("nu must be positive")
        s = self.sampler
        if s.iterations < 1 or s.thin < 1:
            raise ValueError("iterations and thin must be >= 1")
        if not 0 <= s.resolved_burn_in < s.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if s.alpha_update not in dp.ALPHA_UPDATES:
            raise ValueError(f"unknown alpha update {s.alpha_update!r}")
        if s.fixed_alpha is not None and not s.fixed_alpha > 0:
            raise ValueError("fixed_alpha must be positive")
        choose_backend(1, 1, s.beta_backend)
        if not 0 < self.hyper.v0 < 1:
            raise ValueError("v0 must lie in (0, 1)")

    @classmethod
    def for_model(cls, name: str, likelihood: str = "gaussian", nu: float = 2.0, **sampler) -> "ModelConfig":
        prior, variance = MODEL_NAMES[name]
        hyper = sampler.pop("hyper", Hyper())
        return cls(prior, variance, likelihood, nu, hyper, SamplerSettings(**sampler))

    @property
    def name(self) -> str:
        for key, value in MODEL_NAMES.items():
            if value == (self.prior, self.variance_model):
                return key
        raise AssertionError("unreachable")

    @property
    def is_dp(self) -> bool:
        return self.variance_model == "dirichlet_process"

    @property
    def is_student(self) -> bool:
        return self.likelihood == "student_t"

    def replace_sampler(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, sampler=dataclasses.replace(self.sampler, **changes))

    def flat(self) -> dict:
        out = {}
        for key, value in dataclasses.asdict(self).items():
            if isinstance(value, dict):
                for sub, v in value.items():
                    out[f"{key}.{sub}"] = v
            else:
                out[key] = value
        out["sampler.burn_in"] = self.sampler.resolved_burn_in
        return out

    @classmethod
    def from_flat(cls, flat: dict) -> "ModelConfig":
        def conv(ftype, raw):
            if raw in (None, "None"):
                return None
            if isinstance(raw, str):
                if "bool" in str(ftype):
                    return raw == "True"
                if "int" in str(ftype) and "float" not in str(ftype):
                    return int(raw)
                if "float" in str(ftype):
                    return float(raw)
            return raw

        groups = {"hyper": Hyper, "sampler": SamplerSettings}
        kwargs = {}
        nested = {g: {} for g in groups}
        for f in dataclasses.fields(cls):
            if f.name in groups:
                for sf in dataclasses.fields(groups[f.name]):
                    key = f"{f.name}.{sf.name}"
                    if key in flat:
                        nested[f.name][sf.name] = conv(sf.type, flat[key])
            elif f.name in flat:
                kwargs[f.name] = conv(f.type, flat[f.name])
        return cls(hyper=Hyper(**nested["hyper"]), sampler=SamplerSettings(**nested["sampler"]), **kwargs)


@dataclass
class ChainState:
    beta: np.ndarray
    prior_state: SpikeSlabState | HorseshoeState
    sigma2: float | None = None
    clusters: dp.ClusterState | None = None
    G: np.ndarray | None = None
    trace: list | None = None

    def observation_variances(self, n: int) -> np.ndarray:
        """The diagonal of the observation covariance used for the beta draw."""
        if self.G is not None:
            return 1.0 / self.G
        if self.clusters is not None:
            return self.clusters.variances()
        return np.full(n, self.sigma2)

    def log(self, step: str) -> None:
        if self.trace is not None:
            self.trace.append(step)


def initial_state(data: Dataset, cfg: ModelConfig) -> ChainState:
    n, p = data.n, data.p
    h = cfg.hyper
    if cfg.prior == "spike_slab":
        prior = SpikeSlabState.initial(p, v0=h.v0, a1=h.a1, a2=h.a2)
    else:
        prior = HorseshoeState.initial(p)
    var0 = float(np.var(data.y - data.y.mean())) if n > 1 else 0.0
    if not (var0 > 0 and math.isfinite(var0)):
        var0 = 1.0
    state = ChainState(beta=np.zeros(p), prior_state=prior, trace=[] if cfg.sampler.trace else None)
    if cfg.is_dp:
        alpha = cfg.sampler.fixed_alpha if cfg.sampler.fixed_alpha is not None else 1.0
        state.clusters = dp.ClusterState.single_cluster(
            n, var0, alpha=alpha, b1=h.b1, b2=h.b2, d1=h.d1, d2=h.d2
        )
    else:
        state.sigma2 = var0
    if cfg.is_student:
        state.G = np.ones(n)
    return state


def update_beta_block(state: ChainState, data: Dataset, cfg: ModelConfig, rng: RngStream) -> ChainState:
    """Beta from its Gaussian conditional, then the shrinkage parameters."""
    cond = BetaConditional(
        data.X, data.y, state.observation_variances(data.n), state.prior_state.prior_variances()
    )
    state.beta = sample_beta(cond, rng, cfg.sampler.beta_backend)
    state.log("beta")
    if cfg.prior == "spike_slab":
        state.prior_state = update_spike_slab(state.beta, state.prior_state, rng)
        state.log("tau2,eta,omega")
    else:
        state.prior_state = update_horseshoe(state.beta, state.prior_state, rng)
        state.log("lambda2,nu,tau2,xi")
    return state


def _update_alpha(state: ChainState, cfg: ModelConfig, rng: RngStream) -> None:
    cs = state.clusters
    if cfg.sampler.fixed_alpha is None:
        cs.alpha = dp.update_alpha(cs.alpha, cs.K, cs.n, cs.d1, cs.d2, rng, cfg.sampler.alpha_update)
    state.log("alpha")


def sweep_gaussian_dp(state: ChainState, data: Dataset, cfg: ModelConfig, rng: RngStream) -> ChainState:
    cs = state.clusters
    resid = data.y - data.X @ state.beta
    for i in range(data.n):
        dp.reassign_gaussian(i, resid[i], cs, rng)
    state.log("assignments")
    dp.update_cluster_vars_gaussian(cs, resid, rng)
    state.log("cluster_vars")
    update_beta_block(state, data, cfg, rng)
    _update_alpha(state, cfg, rng)
    return state


def sweep_student_dp(state: ChainState, data: Dataset, cfg: ModelConfig, rng: RngStream) -> ChainState:
    cs = state.clusters
    nu = cfg.nu
    G = state.G
    for i in range(data.n):
        dp.reassign_student(i, G[i], nu, cs, rng)
    state.log("assignments")
    dp.update_cluster_vars_student(cs, G, nu, rng)
    state.log("cluster_vars")
    update_beta_block(state, data, cfg, rng)
    resid = data.y - data.X @ state.beta
    state.G = dp.update_G(resid, cs.variances(), nu, rng)
    state.log("G")
    _update_alpha(state, cfg, rng)
    return state


def sample_shared_variance(resid, b1: float, b2: float, rng: RngStream) -> float:
    """Gaussian likelihood, IG(b1, b2) prior: IG(b1 + n/2, b2 + |r|^2 / 2)."""
    resid = np.asarray(resid, dtype=float)
    return float(sample_inverse_gamma(b1 + 0.5 * resid.size, b2 + 0.5 * resid @ resid, rng))


def sample_shared_variance_student(G, nu: float, b1: float, b2: float, rng: RngStream) -> float:
    """Student-t likelihood, Gamma(b1, b2) prior: Gamma(nu n/2 + b1, nu sum(G)/2 + b2)."""
    G = np.asarray(G, dtype=float)
    return float(sample_gamma(0.5 * nu * G.size + b1, 0.5 * nu * G.sum() + b2, rng))


def sweep_homoskedastic(state: ChainState, data: Dataset, cfg: ModelConfig, rng: RngStream) -> ChainState:
    h = cfg.hyper
    update_beta_block(state, data, cfg, rng)
    resid = data.y - data.X @ state.beta
    if cfg.is_student:
        nu = cfg.nu
        state.G = dp.update_G(resid, np.full(data.n, state.sigma2), nu, rng)
        state.log("G")
        state.sigma2 = sample_shared_variance_student(state.G, nu, h.b1, h.b2, rng)
    else:
        state.sigma2 = sample_shared_variance(resid, h.b1, h.b2, rng)
    state.log("sigma2")
    return state


def sweep(state: ChainState, data: Dataset, cfg: ModelConfig, rng: RngStream) -> ChainState:
    if not cfg.is_dp:
        return sweep_homoskedastic(state, data, cfg, rng)
    if cfg.is_student:
        return sweep_student_dp(state, data, cfg, rng)
    return sweep_gaussian_dp(state, data, cfg, rng)


def check_finite(state: ChainState, iteration: int) -> None:
    bad = []
    if not np.all(np.isfinite(state.beta)):
        bad.append("beta")
    if not np.all(np.isfinite(state.prior_state.prior_variances())):
        bad.append("prior variances")
    if state.sigma2 is not None and not (math.isfinite(state.sigma2) and state.sigma2 > 0):
        bad.append("sigma2")
    if state.clusters is not None:
        if not all(math.isfinite(v) and v > 0 for v in state.clusters.distinct_vars):
            bad.append("cluster variances")
        if not math.isfinite(state.clusters.alpha):
            bad.append("alpha")
    if state.G is not None and not np.all(np.isfinite(state.G) & (state.G > 0)):
        bad.append("G")
    if bad:
        raise NumericalError("non-finite state", iteration=iteration, fields=";".join(bad))


class DrawStore:
    """Thinned posterior draws of one chain plus its configuration."""

    def __init__(self, cfg: ModelConfig, n: int, p: int, directory=None):
        self.cfg = cfg
        self.n, self.p = n, p
        m = cfg.sampler.n_kept
        self.wall_clock = 0.0
        nbytes = 8 * m * p * (2 if cfg.prior == "spike_slab" else 1)
        if nbytes > cfg.sampler.memory_budget_mb * 2**20:
            tmpdir = directory or tempfile.gettempdir()
            fd, self._spill = tempfile.mkstemp(prefix="dpvarsel-", suffix=".beta", dir=tmpdir)
            os.close(fd)
            self.beta_draws = np.memmap(self._spill, dtype=float, mode="w+", shape=(m, p))
        else:
            self._spill = None
            self.beta_draws = np.empty((m, p))
        self.eta_draws = np.empty((m, p), dtype=np.int8) if cfg.prior == "spike_slab" else None
        self.omega_draws = np.empty(m) if cfg.prior == "spike_slab" else None
        self.K_draws = np.empty(m, dtype=np.int64) if cfg.is_dp else None
        self.alpha_draws = np.empty(m) if cfg.is_dp else None
        self.sigma2_draws = None if cfg.is_dp else np.empty(m)

    def __len__(self) -> int:
        return self.beta_draws.shape[0]

    def record(self, row: int, state: ChainState) -> None:
        self.beta_draws[row] = state.beta
        if self.eta_draws is not None:
            self.eta_draws[row] = state.prior_state.inclusion()
            self.omega_draws[row] = state.prior_state.omega
        if self.K_draws is not None:
            self.K_draws[row] = state.clusters.K
            self.alpha_draws[row] = state.clusters.alpha
        if self.sigma2_draws is not None:
            self.sigma2_draws[row] = state.sigma2

    def posterior_mean(self) -> np.ndarray:
        return np.asarray(self.beta_draws).mean(axis=0)

    def columns(self) -> tuple[list, np.ndarray]:
        names = [f"beta_{j + 1}" for j in range(self.p)]
        blocks = [np.asarray(self.beta_draws)]
        if self.eta_draws is not None:
            names += [f"eta_{j + 1}" for j in range(self.p)] + ["omega"]
            blocks += [self.eta_draws.astype(float), self.omega_draws[:, None]]
        if self.K_draws is not None:
            names += ["K", "alpha"]
            blocks += [self.K_draws[:, None].astype(float), self.alpha_draws[:, None]]
        if self.sigma2_draws is not None:
            names += ["sigma2"]
            blocks += [self.sigma2_draws[:, None]]
        return names, np.hstack(blocks)

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        names, table = self.columns()
        with open(directory / "draws.csv", "w") as fh:
            fh.write(",".join(names) + "\n")
            np.savetxt(fh, table, fmt="%.17g", delimiter=",")
        meta = self.cfg.flat()
        meta.update({"model": self.cfg.name, "n": self.n, "p": self.p, "kept": len(self)})
        (directory / "draws.meta").write_text("".join(f"{k}={v}\n" for k, v in meta.items()))

    @classmethod
    def load(cls, directory) -> "DrawStore":
        directory = Path(directory)
        meta = read_key_values(directory / "draws.meta")
        cfg = ModelConfig.from_flat(meta)
        n, p = int(meta["n"]), int(meta["p"])
        store = cls(cfg, n, p)
        with open(directory / "draws.csv") as fh:
            names = fh.readline().strip().split(",")
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
        col = {name: k for k, name in enumerate(names)}
        store.beta_draws = table[:, [col[f"beta_{j + 1}"] for j in range(p)]]
        if store.eta_draws is not None:
            store.eta_draws = table[:, [col[f"eta_{j + 1}"] for j in range(p)]].astype(np.int8)
            store.omega_draws = table[:, col["omega"]]
        if store.K_draws is not None:
            store.K_draws = table[:, col["K"]].astype(np.int64)
            store.alpha_draws = table[:, col["alpha"]]
        if store.sigma2_draws is not None:
            store.sigma2_draws = table[:, col["sigma2"]]
        return store

    def __del__(self):
        spill = getattr(self, "_spill", None)
        if spill:
            self.beta_draws = None
            try:
                os.unlink(spill)
            except OSError:
                pass


def run_chain(data: Dataset, cfg: ModelConfig, state: ChainState | None = None) -> DrawStore:
    """Run ``iterations`` sweeps, drop the burn-in, thin, and store the draws."""
    if data.n < 1 or data.p < 1:
        raise ValueError("data must have at least one observation and one predictor")
    s = cfg.sampler
    rng = RngStream(s.seed, s.stream_id)
    state = state if state is not None else initial_state(data, cfg)
    store = DrawStore(cfg, data.n, data.p)
    burn = s.resolved_burn_in
    start = time.perf_counter()
    row = 0
    for t in range(s.iterations):
        try:
            sweep(state, data, cfg, rng)
        except NumericalError as exc:
            raise NumericalError(str(exc), iteration=t) from exc
        check_finite(state, t)
        kept = t - burn
        if kept >= 0 and (kept + 1) % s.thin == 0 and row < len(store):
            store.record(row, state)
            row += 1
    store.wall_clock = time.perf_counter() - start
    store.final_state = state
    return store
