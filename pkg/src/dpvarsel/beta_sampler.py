"""Draws of the coefficient vector from its Gaussian full conditional.

Both samplers target ``N(mu, V)`` with

    V^{-1} = X' S^{-1} X + L^{-1},   mu = V X' S^{-1} y,

where ``S = diag(sigma_diag)`` (length n, one variance per observation) and
``L = diag(lambda_diag)`` (length p, prior variances).

``sample_beta_direct`` factorizes the p x p precision, O(p^3).
``sample_beta_fast`` works with an n x n system, O(n^2 p), using the
auxiliary-variable construction of Bhattacharya, Chakraborty & Mallick (2016).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .rng import RngStream

# how many p x p / n x n factorizations have been performed; read by tests and
# the CLI to check which backend actually ran
FACTORIZATIONS: Counter = Counter()

JITTER_SCALE = 1e-10


class NumericalError(RuntimeError):
    """A linear-algebra step failed even after jitter."""

    def __init__(self, message: str, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            detail = ", ".join(f"{k}={v}" for k, v in diagnostics.items())
            message = f"{message} ({detail})"
        super().__init__(message)


@dataclass
class BetaConditional:
    X: np.ndarray
    y: np.ndarray
    sigma_diag: np.ndarray
    lambda_diag: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.sigma_diag = np.asarray(self.sigma_diag, dtype=float)
        self.lambda_diag = np.asarray(self.lambda_diag, dtype=float)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        n, p = self.X.shape
        if self.y.shape != (n,) or self.sigma_diag.shape != (n,):
            raise ValueError(f"y and sigma_diag must have length n={n}")
        if self.lambda_diag.shape != (p,):
            raise ValueError(f"lambda_diag must have length p={p}")
        if not np.all(self.sigma_diag > 0) or not np.all(self.lambda_diag > 0):
            raise ValueError("sigma_diag and lambda_diag must be strictly positive")

    @property
    def shape(self) -> tuple[int, int]:
        return self.X.shape

    def precision(self) -> np.ndarray:
        """The p x p posterior precision ``X' S^{-1} X + L^{-1}``."""
        Xs = self.X / self.sigma_diag[:, None]
        Q = self.X.T @ Xs
        Q[np.diag_indices_from(Q)] += 1.0 / self.lambda_diag
        return Q


def _cholesky_with_jitter(A: np.ndarray, kind: str) -> np.ndarray:
    """Lower Cholesky factor; one retry with diagonal jitter, then fail."""
    FACTORIZATIONS[kind] += 1
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER_SCALE * float(np.mean(np.diag(A)))
    try:
        return np.linalg.cholesky(A + jitter * np.eye(A.shape[0]))
    except np.linalg.LinAlgError:
        diag = np.diag(A)
        raise NumericalError(
            f"{kind} matrix is not positive definite",
            size=A.shape[0],
            min_diag=float(diag.min()),
            max_diag=float(diag.max()),
            cond=float(np.linalg.cond(A)),
            jitter=jitter,
        ) from None


def sample_beta_direct(cond: BetaConditional, rng: RngStream) -> np.ndarray:
    Q = cond.precision()
    L = _cholesky_with_jitter(Q, "pxp")
    b = cond.X.T @ (cond.y / cond.sigma_diag)
    mean = linalg.cho_solve((L, True), b)
    z = rng.generator.standard_normal(Q.shape[0])
    # L' x = z gives x ~ N(0, Q^{-1})
    return mean + linalg.solve_triangular(L, z, lower=True, trans="T")


def sample_beta_fast(cond: BetaConditional, rng: RngStream) -> np.ndarray:
    n, p = cond.shape
    lam = cond.lambda_diag
    root = 1.0 / np.sqrt(cond.sigma_diag)
    Phi = cond.X * root[:, None]
    u = np.sqrt(lam) * rng.generator.standard_normal(p)
    delta = rng.generator.standard_normal(n)
    v = Phi @ u + delta
    M = (Phi * lam) @ Phi.T
    M[np.diag_indices_from(M)] += 1.0
    L = _cholesky_with_jitter(M, "nxn")
    w = linalg.cho_solve((L, True), cond.y * root - v)
    return u + lam * (Phi.T @ w)


def choose_backend(n: int, p: int, backend: str = "auto") -> str:
    """Resolve ``auto`` to ``fast`` when p > 2n, else ``direct``."""
    if backend == "auto":
        return "fast" if p > 2 * n else "direct"
    if backend not in ("direct", "fast"):
        raise ValueError(f"unknown beta backend {backend!r}")
    return backend


def sample_beta(cond: BetaConditional, rng: RngStream, backend: str = "auto") -> np.ndarray:
    n, p = cond.shape
    if choose_backend(n, p, backend) == "fast":
        return sample_beta_fast(cond, rng)
    return sample_beta_direct(cond, rng)
