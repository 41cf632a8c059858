"""Seeded random streams and the distribution samplers used by the Gibbs updates.

Conventions are fixed for the whole package:

* ``sample_gamma(shape, rate)`` uses the RATE parametrization,
  density proportional to ``x**(shape-1) * exp(-rate*x)``.
* ``sample_inverse_gamma(shape, scale)`` uses the SCALE parametrization,
  density proportional to ``x**(-shape-1) * exp(-scale/x)``; it is drawn as
  ``1 / Gamma(shape, rate=scale)``.
* ``sample_student_t(location, scale2, dof)`` has variance
  ``scale2 * dof / (dof - 2)`` when ``dof > 2``.

All samplers accept scalars or numpy arrays (broadcast together with
``size``) and raise :class:`DomainError` on invalid parameters instead of
clamping them.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    """Invalid distribution parameter."""


class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Streams sharing a seed but with different ``stream_id`` values are
    derived through :class:`numpy.random.SeedSequence` spawn keys, so they
    are statistically independent while remaining reproducible. A stream
    must only be used from one worker at a time.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise DomainError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def derive(self, stream_id: int) -> "RngStream":
        """Independent sibling stream with the same master seed."""
        return RngStream(self.seed, stream_id)

    def uniform(self) -> float:
        return self.generator.random()

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def _check_positive(name: str, value) -> None:
    if isinstance(value, float):
        ok = 0.0 < value < math.inf
    else:
        arr = np.asarray(value, dtype=float)
        # NaN fails both comparisons
        ok = arr.size == 0 or bool(arr.min() > 0 and arr.max() < math.inf)
    if not ok:
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")


def sample_normal(mean, variance, rng: RngStream, size=None):
    _check_positive("variance", variance)
    return rng.generator.normal(mean, np.sqrt(variance), size=size)


def sample_gamma(shape, rate, rng: RngStream, size=None):
    _check_positive("shape", shape)
    _check_positive("rate", rate)
    return rng.generator.gamma(shape, 1.0 / np.asarray(rate, dtype=float), size=size)


def sample_inverse_gamma(shape, scale, rng: RngStream, size=None):
    return 1.0 / sample_gamma(shape, scale, rng, size=size)


def sample_beta_dist(a, b, rng: RngStream, size=None):
    _check_positive("a", a)
    _check_positive("b", b)
    return rng.generator.beta(a, b, size=size)


def sample_bernoulli(p, rng: RngStream, size=None):
    arr = np.asarray(p, dtype=float)
    if not np.all((arr >= 0) & (arr <= 1)):
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    u = rng.generator.random(size=size if size is not None else arr.shape)
    out = (u < arr).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def sample_categorical(weights: Sequence[float], rng: RngStream) -> int:
    """Draw an index with probability proportional to ``weights``."""
    total = 0.0
    for w in weights:
        if not (w >= 0.0) or w == math.inf:
            raise DomainError(f"weights must be finite and >= 0, got {w!r}")
        total += w
    if total <= 0.0:
        raise DomainError("at least one weight must be positive")
    u = rng.generator.random() * total
    acc = 0.0
    last = 0
    for k, w in enumerate(weights):
        if w > 0.0:
            last = k
            acc += w
            if u < acc:
                return k
    # rounding can leave u == total; fall back to the last positive weight
    return last


def sample_categorical_log(log_weights: Sequence[float], rng: RngStream) -> int:
    """Categorical draw from unnormalized log-weights (max-subtracted)."""
    m = max(log_weights)
    if not math.isfinite(m):
        raise DomainError("log-weights must contain a finite maximum")
    return sample_categorical([math.exp(lw - m) for lw in log_weights], rng)


def sample_student_t(location, scale2, dof, rng: RngStream, size=None):
    _check_positive("scale2", scale2)
    _check_positive("dof", dof)
    if size is None:
        size = np.broadcast(np.asarray(location), np.asarray(scale2), np.asarray(dof)).shape or None
    return location + np.sqrt(scale2) * rng.generator.standard_t(dof, size=size)
