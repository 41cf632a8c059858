"""Dirichlet-process layer over the per-observation variances.

Observations are partitioned into clusters that share a variance. The
partition is resampled one observation at a time from its Chinese-restaurant
conditional, cluster variances are drawn from their conjugate conditionals,
and the concentration ``alpha`` is refreshed with an auxiliary-variable step.

``ClusterState`` is mutated in place by the ``reassign_*`` and
``update_cluster_vars_*`` functions (they also return it, for chaining).
Reassignment is inherently sequential, so there is no point copying the
state between observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import (
    RngStream,
    sample_bernoulli,
    sample_beta_dist,
    sample_categorical_log,
    sample_gamma,
    sample_inverse_gamma,
)

LOG_2PI = math.log(2.0 * math.pi)

ALPHA_UPDATES = ("shifted", "classical")


@dataclass
class ClusterState:
    assignments: np.ndarray
    distinct_vars: list
    sizes: list
    alpha: float = 1.0
    b1: float = 2.01
    b2: float = 1.0
    d1: float = 1.0
    d2: float = 0.5
    # incremented whenever a cluster is opened or closed; cheap change detection
    version: int = field(default=0, compare=False)

    @classmethod
    def single_cluster(cls, n: int, variance: float, **hyper) -> "ClusterState":
        return cls(
            assignments=np.zeros(n, dtype=np.int64),
            distinct_vars=[float(variance)],
            sizes=[n],
            **hyper,
        )

    @classmethod
    def from_assignments(cls, assignments, distinct_vars, **hyper) -> "ClusterState":
        assignments = np.asarray(assignments, dtype=np.int64)
        K = len(distinct_vars)
        sizes = np.bincount(assignments, minlength=K).tolist()
        state = cls(assignments=assignments, distinct_vars=[float(v) for v in distinct_vars], sizes=sizes, **hyper)
        state.check()
        return state

    @property
    def n(self) -> int:
        return self.assignments.shape[0]

    @property
    def K(self) -> int:
        return len(self.sizes)

    def variances(self) -> np.ndarray:
        """Per-observation variance sigma2_{c_i}."""
        return np.asarray(self.distinct_vars)[self.assignments]

    def check(self) -> None:
        """Raise AssertionError if the partition bookkeeping is inconsistent."""
        K = self.K
        assert len(self.distinct_vars) == K
        assert sum(self.sizes) == self.n
        assert all(s >= 1 for s in self.sizes)
        assert self.assignments.min() >= 0 and self.assignments.max() < K
        assert np.bincount(self.assignments, minlength=K).tolist() == list(self.sizes)
        assert all(v > 0 for v in self.distinct_vars)

    def copy(self) -> "ClusterState":
        return ClusterState(
            assignments=self.assignments.copy(),
            distinct_vars=list(self.distinct_vars),
            sizes=list(self.sizes),
            alpha=self.alpha,
            b1=self.b1,
            b2=self.b2,
            d1=self.d1,
            d2=self.d2,
        )


def log_marginal_g_gaussian(residual: float, b1: float, b2: float) -> float:
    return (
        b1 * math.log(b2)
        - 0.5 * LOG_2PI
        + math.lgamma(b1 + 0.5)
        - math.lgamma(b1)
        - (b1 + 0.5) * math.log(0.5 * residual * residual + b2)
    )


def marginal_g_gaussian(residual: float, b1: float, b2: float) -> float:
    """Prior predictive density of a residual under a fresh IG(b1, b2) variance."""
    if b1 <= 0 or b2 <= 0:
        raise ValueError("b1 and b2 must be positive")
    return math.exp(log_marginal_g_gaussian(residual, b1, b2))


def log_marginal_g_student(G: float, nu: float, b1: float, b2: float) -> float:
    h = 0.5 * nu
    return (
        h * math.log(h)
        - math.lgamma(h)
        + (h - 1.0) * math.log(G)
        + b1 * math.log(b2)
        - math.lgamma(b1)
        + math.lgamma(b1 + h)
        - (b1 + h) * math.log(b2 + h * G)
    )


def marginal_g_student(G: float, nu: float, b1: float, b2: float) -> float:
    """Density of the latent precision G under a fresh Gamma(b1, b2) variance."""
    if min(G, nu, b1, b2) <= 0:
        raise ValueError("all arguments must be positive")
    return math.exp(log_marginal_g_student(G, nu, b1, b2))


def _drop_cluster(state: ClusterState, k: int) -> None:
    """Delete empty cluster k by moving the last cluster into its slot."""
    last = len(state.sizes) - 1
    if k != last:
        state.distinct_vars[k] = state.distinct_vars[last]
        state.sizes[k] = state.sizes[last]
        state.assignments[state.assignments == last] = k
    state.distinct_vars.pop()
    state.sizes.pop()
    state.version += 1


def _reassign(i, state, log_lik_existing, log_lik_new, draw_new, rng) -> ClusterState:
    c_old = int(state.assignments[i])
    sizes = state.sizes
    sizes[c_old] -= 1
    if sizes[c_old] == 0:
        _drop_cluster(state, c_old)
    log_w = [math.log(s) + log_lik_existing(v) for s, v in zip(sizes, state.distinct_vars)]
    log_w.append(math.log(state.alpha) + log_lik_new)
    k = sample_categorical_log(log_w, rng)
    if k == len(sizes):
        state.distinct_vars.append(float(draw_new()))
        sizes.append(1)
        state.version += 1
    else:
        sizes[k] += 1
    state.assignments[i] = k
    return state


def reassign_gaussian(i: int, residual_i: float, state: ClusterState, rng: RngStream) -> ClusterState:
    r2h = 0.5 * residual_i * residual_i
    b1, b2 = state.b1, state.b2

    def log_lik(v):
        return -0.5 * (LOG_2PI + math.log(v)) - r2h / v

    def draw_new():
        return sample_inverse_gamma(b1 + 0.5, b2 + r2h, rng)

    return _reassign(i, state, log_lik, log_marginal_g_gaussian(residual_i, b1, b2), draw_new, rng)


def reassign_student(i: int, G_i: float, nu: float, state: ClusterState, rng: RngStream) -> ClusterState:
    h = 0.5 * nu
    b1, b2 = state.b1, state.b2
    const = (h - 1.0) * math.log(G_i) - math.lgamma(h)

    def log_lik(v):
        # Gamma(G_i; nu/2, rate = nu v / 2)
        rate = h * v
        return h * math.log(rate) + const - rate * G_i

    def draw_new():
        return sample_gamma(h + b1, h * G_i + b2, rng)

    return _reassign(i, state, log_lik, log_marginal_g_student(G_i, nu, b1, b2), draw_new, rng)


def reassign_prior_only(i: int, state: ClusterState, rng: RngStream) -> ClusterState:
    """CRP reassignment with the likelihood switched off; new variances from IG(b1, b2)."""
    return _reassign(
        i, state, lambda v: 0.0, 0.0, lambda: sample_inverse_gamma(state.b1, state.b2, rng), rng
    )


def update_cluster_vars_gaussian(state: ClusterState, residuals, rng: RngStream) -> ClusterState:
    residuals = np.asarray(residuals, dtype=float)
    ss = np.bincount(state.assignments, weights=residuals**2, minlength=state.K)
    sizes = np.asarray(state.sizes, dtype=float)
    draws = sample_inverse_gamma(state.b1 + 0.5 * sizes, state.b2 + 0.5 * ss, rng)
    state.distinct_vars = np.atleast_1d(draws).tolist()
    return state


def update_cluster_vars_student(state: ClusterState, G, nu: float, rng: RngStream) -> ClusterState:
    G = np.asarray(G, dtype=float)
    sums = np.bincount(state.assignments, weights=G, minlength=state.K)
    sizes = np.asarray(state.sizes, dtype=float)
    draws = sample_gamma(0.5 * nu * sizes + state.b1, 0.5 * nu * sums + state.b2, rng)
    state.distinct_vars = np.atleast_1d(draws).tolist()
    return state


def update_G(residuals, sigma2_of_i, nu: float, rng: RngStream) -> np.ndarray:
    residuals = np.asarray(residuals, dtype=float)
    rate = 0.5 * (residuals**2 + nu * np.asarray(sigma2_of_i, dtype=float))
    return np.asarray(sample_gamma(0.5 * (nu + 1.0), rate, rng), dtype=float)


def update_alpha(
    alpha: float,
    K_n: int,
    n: int,
    d1: float,
    d2: float,
    rng: RngStream,
    variant: str = "classical",
) -> float:
    """Auxiliary-variable update of the DP concentration.

    ``variant="shifted"`` mixes Gamma(d1+K) and Gamma(d1+K+1) with weights
    (d1+K+1) : n(d2 - log psi). ``variant="classical"`` is the Escobar & West
    (1995) step: Gamma(d1+K) with weight d1+K-1 and Gamma(d1+K-1) with weight
    n(d2 - log psi).
    """
    if not 1 <= K_n <= n:
        raise ValueError(f"need 1 <= K_n <= n, got K_n={K_n}, n={n}")
    psi = float(sample_beta_dist(alpha + 1.0, n, rng))
    rate = d2 - math.log(psi)
    w2 = n * rate
    if variant == "shifted":
        w1 = d1 + K_n + 1.0
        a = sample_bernoulli(w2 / (w1 + w2), rng)
        shape = d1 + K_n + a
    elif variant == "classical":
        w1 = d1 + K_n - 1.0
        a = sample_bernoulli(w1 / (w1 + w2), rng)
        shape = d1 + K_n - 1.0 + a
    else:
        raise ValueError(f"unknown alpha update variant {variant!r}")
    return float(sample_gamma(shape, rate, rng))


def crp_log_prob(block_sizes, alpha: float) -> float:
    """Exchangeable partition probability of a CRP(alpha) partition."""
    n = sum(block_sizes)
    K = len(block_sizes)
    return (
        K * math.log(alpha)
        + sum(math.lgamma(s) for s in block_sizes)
        + math.lgamma(alpha)
        - math.lgamma(alpha + n)
    )


def sample_crp_partition(n: int, alpha: float, rng: RngStream) -> np.ndarray:
    """Sequential CRP seating; returns contiguous cluster labels."""
    labels = np.zeros(n, dtype=np.int64)
    sizes: list = []
    for i in range(n):
        k = sample_categorical_log([math.log(s) for s in sizes] + [math.log(alpha)], rng)
        if k == len(sizes):
            sizes.append(1)
        else:
            sizes[k] += 1
        labels[i] = k
    return labels


__all__ = [
    "ALPHA_UPDATES",
    "ClusterState",
    "crp_log_prob",
    "marginal_g_gaussian",
    "marginal_g_student",
    "reassign_gaussian",
    "reassign_prior_only",
    "reassign_student",
    "sample_crp_partition",
    "update_G",
    "update_alpha",
    "update_cluster_vars_gaussian",
    "update_cluster_vars_student",
]
