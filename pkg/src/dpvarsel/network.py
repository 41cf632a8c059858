"""Gene-network reconstruction: one sparse regression per target gene.

Each gene in turn is the response and every other gene a predictor. Edge
probabilities come from the posterior of the per-gene coefficients:
slab-inclusion frequencies for spike-and-slab models, and the frequency of
``|beta| > threshold`` for horseshoe models. Entry ``[i, j]`` of the result is
the probability that gene ``j`` regulates gene ``i``; the diagonal is zero.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analysis import edge_probability
from .datasets import Dataset, center
from .gibbs import ModelConfig, run_chain


def gene_stream_id(gene: int) -> int:
    """Stream id for one gene's chain; fixed per gene so worker count is irrelevant."""
    return 1 + gene


def gene_design(expression: np.ndarray, gene: int) -> Dataset:
    """Response = gene ``gene``; predictors = every other gene (centered)."""
    others = [k for k in range(expression.shape[0]) if k != gene]
    return Dataset(center(expression[gene]), center(expression[others].T))


def _fit_gene(args):
    expression, gene, cfg, threshold = args
    data = gene_design(expression, gene)
    store = run_chain(data, cfg.replace_sampler(stream_id=gene_stream_id(gene)))
    if cfg.prior == "spike_slab":
        probs = store.eta_draws.mean(axis=0)
    else:
        probs = edge_probability(store.beta_draws, threshold)
    return gene, probs.astype(float)


def edge_probabilities(
    expression: np.ndarray, cfg: ModelConfig, threshold: float = 0.1, workers: int = 1
) -> np.ndarray:
    """Fit every gene and assemble the genes x genes edge-probability matrix.

    Raises ``RuntimeError`` listing every gene whose fit failed.
    """
    expression = np.asarray(expression, dtype=float)
    m = expression.shape[0]
    tasks = [(expression, g, cfg, threshold) for g in range(m)]
    P = np.zeros((m, m))
    failures = []

    def place(result):
        gene, probs = result
        others = [k for k in range(m) if k != gene]
        P[gene, others] = probs

    if workers <= 1:
        for task in tasks:
            try:
                place(_fit_gene(task))
            except Exception as exc:  # collected and reported together
                failures.append((task[1], exc))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(task[1], pool.submit(_fit_gene, task)) for task in tasks]
            for gene, fut in futures:
                try:
                    place(fut.result())
                except Exception as exc:
                    failures.append((gene, exc))
    if failures:
        detail = "; ".join(f"gene {g}: {e}" for g, e in failures)
        raise RuntimeError(f"{len(failures)} gene fit(s) failed: {detail}")
    return P


def planted_edge_fixture(n_genes: int = 10, n_samples: int = 100, seed: int = 0, weight: float = 1.0):
    """Independent standard-normal genes except gene 1 = weight * gene 0 + noise.

    Returns ``(expression genes x samples, (target, regulator))``.
    """
    g = np.random.default_rng(seed)
    expr = g.standard_normal((n_genes, n_samples))
    expr[1] = weight * expr[0] + g.standard_normal(n_samples)
    return expr, (1, 0)
