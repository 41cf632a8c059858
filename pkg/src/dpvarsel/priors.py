"""Full-conditional updates for the spike-and-slab and horseshoe shrinkage blocks.

Every update returns a new state object; the input state is not modified.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .rng import RngStream, sample_beta_dist, sample_gamma, sample_inverse_gamma

DEFAULT_V0 = 0.005


@dataclass(frozen=True)
class SpikeSlabState:
    tau2: np.ndarray
    eta: np.ndarray
    omega: float = 0.5
    v0: float = DEFAULT_V0
    a1: float = 2.01
    a2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.v0 < 1.0:
            raise ValueError(f"v0 must lie in (0, 1), got {self.v0}")
        if not (np.asarray(self.tau2) > 0).all():
            raise ValueError("tau2 must be positive")
        eta = np.asarray(self.eta)
        if not ((eta == 1.0) | (eta == self.v0)).all():
            raise ValueError("eta entries must equal v0 or 1")

    @classmethod
    def initial(cls, p: int, v0: float = DEFAULT_V0, a1: float = 2.01, a2: float = 1.0):
        return cls(tau2=np.ones(p), eta=np.ones(p), omega=0.5, v0=v0, a1=a1, a2=a2)

    def prior_variances(self) -> np.ndarray:
        return self.eta * self.tau2

    def inclusion(self) -> np.ndarray:
        """Boolean slab indicators (eta == 1)."""
        return self.eta == 1.0


@dataclass(frozen=True)
class HorseshoeState:
    lambda2: np.ndarray
    nu_aux: np.ndarray
    tau2: float = 1.0
    xi_aux: float = 1.0

    def __post_init__(self):
        for name in ("lambda2", "nu_aux", "tau2", "xi_aux"):
            if not (np.asarray(getattr(self, name)) > 0).all():
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def initial(cls, p: int):
        return cls(lambda2=np.ones(p), nu_aux=np.ones(p), tau2=1.0, xi_aux=1.0)

    def prior_variances(self) -> np.ndarray:
        return self.tau2 * self.lambda2


def update_tau2(beta, state: SpikeSlabState, rng: RngStream) -> SpikeSlabState:
    beta = np.asarray(beta, dtype=float)
    rate = state.a2 + beta**2 / (2.0 * state.eta)
    precision = sample_gamma(state.a1 + 0.5, rate, rng, size=beta.shape)
    return replace(state, tau2=1.0 / precision)


def update_eta(beta, state: SpikeSlabState, rng: RngStream) -> SpikeSlabState:
    """Resample each indicator between the spike (v0) and the slab (1).

    ``omega`` may be a scalar or an array broadcasting against ``beta``
    (used to run many independent prior-only chains at once).
    """
    beta = np.asarray(beta, dtype=float)
    omega = np.asarray(state.omega, dtype=float)
    v0 = state.v0
    half_b2 = beta**2 / (2.0 * state.tau2)
    with np.errstate(divide="ignore"):
        log_w1 = np.log1p(-omega) - 0.5 * np.log(v0) - half_b2 / v0
        log_w2 = np.log(omega) - half_b2
    m = np.maximum(log_w1, log_w2)
    w1 = np.exp(log_w1 - m)
    w2 = np.exp(log_w2 - m)
    p_spike = w1 / (w1 + w2)
    u = rng.generator.random(beta.shape)
    eta = np.where(u < p_spike, v0, 1.0)
    return replace(state, eta=eta)


def update_omega(eta, rng: RngStream, v0: float | None = None) -> float:
    eta = np.asarray(eta, dtype=float)
    n_slab = int(np.count_nonzero(eta == 1.0))
    n_spike = eta.size - n_slab
    if v0 is not None and n_spike != int(np.count_nonzero(eta == v0)):
        raise ValueError("eta entries must equal v0 or 1")
    return float(sample_beta_dist(1.0 + n_slab, 1.0 + n_spike, rng))


def update_spike_slab(beta, state: SpikeSlabState, rng: RngStream) -> SpikeSlabState:
    """tau2, then eta, then omega, in that order."""
    state = update_tau2(beta, state, rng)
    state = update_eta(beta, state, rng)
    return replace(state, omega=update_omega(state.eta, rng))


def sample_nu_aux(lambda2, rng: RngStream):
    """Auxiliary of the half-Cauchy local scale: IG(1, 1 + 1/lambda2)."""
    return sample_inverse_gamma(1.0, 1.0 + 1.0 / np.asarray(lambda2, dtype=float), rng)


def sample_xi_aux(tau2: float, rng: RngStream) -> float:
    """Auxiliary of the half-Cauchy global scale: IG(1, 1 + 1/tau2)."""
    return float(sample_inverse_gamma(1.0, 1.0 + 1.0 / tau2, rng))


def update_horseshoe_locals(
    beta, state: HorseshoeState, rng: RngStream, likelihood: bool = True
) -> HorseshoeState:
    """lambda2_j then nu_j for every coordinate.

    With ``likelihood=False`` the beta term is dropped and lambda2_j is drawn
    from its prior conditional IG(1/2, 1/nu_j); this is only meant for
    prior-reproduction checks.
    """
    beta = np.asarray(beta, dtype=float)
    if likelihood:
        lam2 = sample_inverse_gamma(1.0, 1.0 / state.nu_aux + beta**2 / (2.0 * state.tau2), rng)
    else:
        lam2 = sample_inverse_gamma(0.5, 1.0 / state.nu_aux, rng)
    lam2 = np.broadcast_to(lam2, np.shape(state.nu_aux)).astype(float)
    nu = sample_nu_aux(lam2, rng)
    return replace(state, lambda2=np.asarray(lam2, dtype=float), nu_aux=np.asarray(nu, dtype=float))


def update_horseshoe_global(
    beta, state: HorseshoeState, rng: RngStream, likelihood: bool = True
) -> HorseshoeState:
    beta = np.asarray(beta, dtype=float)
    if likelihood:
        p = beta.size
        scale = 1.0 / state.xi_aux + float(np.sum(beta**2 / (2.0 * state.lambda2)))
        tau2 = sample_inverse_gamma((p + 1) / 2.0, scale, rng)
    else:
        tau2 = sample_inverse_gamma(0.5, 1.0 / state.xi_aux, rng)
    return replace(state, tau2=tau2, xi_aux=sample_xi_aux(tau2, rng))


def update_horseshoe(beta, state: HorseshoeState, rng: RngStream) -> HorseshoeState:
    state = update_horseshoe_locals(beta, state, rng)
    return update_horseshoe_global(beta, state, rng)
