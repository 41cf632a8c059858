"""Posterior summaries, support recovery and evaluation metrics.

Percentiles use the nearest-rank rule on sorted draws: the q-th percentile
of N draws is the ``ceil(q/100 * N)``-th smallest (rank at least 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

LOG_LOSS_EPS = 1e-12
SELECTION_METHODS = ("inclusion", "credible_interval", "magnitude_threshold", "zcut")


@dataclass
class SelectionReport:
    method: str
    zeta: float
    support: set
    per_index: np.ndarray  # inclusion probability, or (p, 2) interval bounds

    def to_text(self) -> str:
        lines = [
            f"method={self.method}",
            f"zeta={self.zeta!r}",
            "support=" + ",".join(str(j + 1) for j in sorted(self.support)),
            f"size={len(self.support)}",
        ]
        return "\n".join(lines) + "\n"


@dataclass
class MetricsReport:
    rel_error: float
    tp: int
    fp: int
    true_support_size: int
    K_posterior: dict | None = None
    log_loss: float | None = None
    extra: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            f"rel_error={self.rel_error!r}",
            f"tp={self.tp}",
            f"fp={self.fp}",
            f"true_support_size={self.true_support_size}",
        ]
        if self.K_posterior is not None:
            lines.append(f"K_mode={self.K_posterior['mode']}")
            lo, hi = self.K_posterior["interval"]
            lines.append(f"K_interval={lo},{hi}")
        if self.log_loss is not None:
            lines.append(f"log_loss={self.log_loss!r}")
        for key, value in self.extra.items():
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def nearest_rank(sorted_draws: np.ndarray, q: float) -> np.ndarray:
    """Nearest-rank q-th percentile along axis 0 of already sorted draws."""
    N = sorted_draws.shape[0]
    rank = max(1, math.ceil(q / 100.0 * N - 1e-12))
    return sorted_draws[min(rank, N) - 1]


def relative_error(beta_hat, beta0) -> float:
    beta0 = np.asarray(beta0, dtype=float)
    denom = np.linalg.norm(beta0)
    if denom == 0:
        raise ValueError("beta0 must not be the zero vector")
    return float(np.linalg.norm(np.asarray(beta_hat, dtype=float) - beta0) / denom)


def select_inclusion(eta_draws, zeta: float = 0.05) -> SelectionReport:
    """Keep j when the posterior frequency of the slab indicator exceeds 1 - zeta.

    ``eta_draws`` holds either 0/1 slab indicators or the raw eta values in
    {v0, 1}; only entries equal to 1 count as slab.
    """
    eta = np.asarray(eta_draws, dtype=float)
    freq = (eta == 1.0).mean(axis=0)
    support = set(np.flatnonzero(freq > 1.0 - zeta).tolist())
    return SelectionReport("inclusion", zeta, support, freq)


def credible_intervals(beta_draws, zeta: float = 0.05) -> np.ndarray:
    draws = np.sort(np.asarray(beta_draws, dtype=float), axis=0)
    if draws.shape[0] < 2:
        raise ValueError("need at least two draws")
    lo = nearest_rank(draws, 100.0 * zeta / 2.0)
    hi = nearest_rank(draws, 100.0 * (1.0 - zeta / 2.0))
    return np.column_stack([lo, hi])


def select_credible_interval(beta_draws, zeta: float = 0.05) -> SelectionReport:
    bounds = credible_intervals(beta_draws, zeta)
    excludes_zero = (bounds[:, 0] > 0) | (bounds[:, 1] < 0)
    return SelectionReport("credible_interval", zeta, set(np.flatnonzero(excludes_zero).tolist()), bounds)


def select_zcut(beta_draws, zeta: float = 0.05) -> SelectionReport:
    """|posterior mean| >= z_{1 - zeta/2}. Reported for comparison only."""
    mean = np.asarray(beta_draws, dtype=float).mean(axis=0)
    z = norm.ppf(1.0 - zeta / 2.0)
    return SelectionReport("zcut", zeta, set(np.flatnonzero(np.abs(mean) >= z).tolist()), mean)


def edge_probability(beta_draws, threshold: float = 0.1) -> np.ndarray:
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return (np.abs(np.asarray(beta_draws, dtype=float)) > threshold).mean(axis=0)


def select_magnitude(beta_draws, threshold: float = 0.1, zeta: float = 0.05) -> SelectionReport:
    prob = edge_probability(beta_draws, threshold)
    return SelectionReport("magnitude_threshold", zeta, set(np.flatnonzero(prob > 1.0 - zeta).tolist()), prob)


def log_loss(prob_matrix, gold) -> float:
    """Mean over targets i of the mean Bernoulli log-loss over regulators j != i."""
    P = np.asarray(prob_matrix, dtype=float)
    Y = np.asarray(gold, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape != Y.shape:
        raise ValueError(f"need matching square matrices, got {P.shape} and {Y.shape}")
    m = P.shape[0]
    if m < 2:
        raise ValueError("need at least two genes")
    P = np.clip(P, LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS)
    ll = Y * np.log(P) + (1.0 - Y) * np.log1p(-P)
    np.fill_diagonal(ll, 0.0)
    return float(np.mean(-ll.sum(axis=1) / (m - 1)))


def tp_fp(selected, true_support) -> tuple[int, int]:
    selected, true_support = set(selected), set(true_support)
    return len(selected & true_support), len(selected - true_support)


def k_posterior(K_draws) -> dict:
    K = np.asarray(K_draws, dtype=np.int64)
    if K.size == 0 or K.min() < 1:
        raise ValueError("K draws must be positive integers")
    counts = np.bincount(K)
    values = np.flatnonzero(counts)
    probs = counts[values] / K.size
    s = np.sort(K)
    return {
        "values": values,
        "probs": probs,
        "mode": int(np.argmax(counts)),
        "interval": (int(nearest_rank(s, 2.5)), int(nearest_rank(s, 97.5))),
    }


def default_selection_method(prior: str) -> str:
    return "inclusion" if prior == "spike_slab" else "credible_interval"


def select(store, method: str | None = None, zeta: float = 0.05, threshold: float = 0.1) -> SelectionReport:
    """Dispatch a selection rule over a :class:`~dpvarsel.gibbs.DrawStore`."""
    method = method or default_selection_method(store.cfg.prior)
    if method == "inclusion":
        if store.eta_draws is None:
            raise ValueError("inclusion selection needs spike-and-slab draws")
        return select_inclusion(store.eta_draws, zeta)
    if method == "credible_interval":
        return select_credible_interval(store.beta_draws, zeta)
    if method == "magnitude_threshold":
        return select_magnitude(store.beta_draws, threshold, zeta)
    if method == "zcut":
        return select_zcut(store.beta_draws, zeta)
    raise ValueError(f"unknown selection method {method!r}")


def write_per_index(path, report: SelectionReport) -> None:
    values = np.asarray(report.per_index)
    with open(path, "w") as fh:
        if values.ndim == 2:
            fh.write("index,lower,upper,selected\n")
            for j, (lo, hi) in enumerate(values):
                fh.write(f"{j + 1},{lo!r},{hi!r},{int(j in report.support)}\n")
        else:
            fh.write("index,value,selected\n")
            for j, v in enumerate(values):
                fh.write(f"{j + 1},{float(v)!r},{int(j in report.support)}\n")


def write_k_histogram(path, kp: dict) -> None:
    with open(path, "w") as fh:
        fh.write("K,probability\n")
        for k, pr in zip(kp["values"], kp["probs"]):
            fh.write(f"{int(k)},{float(pr)!r}\n")


def write_text(path, text: str) -> None:
    Path(path).write_text(text)
