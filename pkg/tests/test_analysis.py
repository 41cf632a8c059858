import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dpvarsel import analysis


def test_nearest_rank():
    s = np.arange(1.0, 101.0)
    assert analysis.nearest_rank(s, 2.5) == 3.0
    assert analysis.nearest_rank(s, 97.5) == 98.0
    assert analysis.nearest_rank(s, 0.0) == 1.0
    assert analysis.nearest_rank(s, 100.0) == 100.0


def test_relative_error():
    assert analysis.relative_error([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert analysis.relative_error([0.0, 0.0], [3.0, 4.0]) == 1.0
    with pytest.raises(ValueError):
        analysis.relative_error([1.0], [0.0])


def test_inclusion_boundary_is_strict():
    eta = np.zeros((100, 3))
    eta[:95, 0] = 1  # exactly 0.95: excluded at zeta = 0.05
    eta[:96, 1] = 1
    rep = analysis.select_inclusion(eta, 0.05)
    assert rep.support == {1}
    assert rep.per_index[0] == pytest.approx(0.95)


def test_inclusion_accepts_raw_eta():
    eta = np.array([[1.0, 0.005], [1.0, 1.0]])
    assert analysis.select_inclusion(eta, 0.4).support == {0}


def test_credible_interval_rule():
    g = np.random.default_rng(0)
    draws = np.column_stack([g.normal(5, 1, 2000), g.normal(0, 1, 2000), g.normal(-4, 1, 2000)])
    assert analysis.select_credible_interval(draws, 0.05).support == {0, 2}
    with pytest.raises(ValueError):
        analysis.credible_intervals(draws[:1])


def test_zcut():
    draws = np.array([[2.5, 0.1], [2.0, -0.1]])
    assert analysis.select_zcut(draws, 0.05).support == {0}


@given(arrays(float, (40, 4), elements=st.floats(-5, 5)), st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_selection_is_order_invariant(draws, seed):
    perm = np.random.default_rng(seed).permutation(draws.shape[0])
    eta = (draws > 0).astype(float)
    assert analysis.select_credible_interval(draws).support == analysis.select_credible_interval(draws[perm]).support
    assert analysis.select_inclusion(eta).support == analysis.select_inclusion(eta[perm]).support


@given(arrays(float, (40, 4), elements=st.floats(-5, 5)), st.floats(0.001, 0.5), st.floats(0.001, 0.5))
@settings(max_examples=50, deadline=None)
def test_support_monotone_in_zeta(draws, z1, z2):
    z1, z2 = sorted((z1, z2))
    eta = (draws > 0).astype(float)
    assert analysis.select_inclusion(eta, z1).support <= analysis.select_inclusion(eta, z2).support
    assert analysis.select_credible_interval(draws, z1).support <= analysis.select_credible_interval(draws, z2).support


@given(arrays(float, (30, 3), elements=st.floats(-5, 5)), st.floats(0.01, 3))
@settings(max_examples=50, deadline=None)
def test_edge_probability_sign_invariant(draws, t):
    signs = np.where(np.arange(draws.size).reshape(draws.shape) % 3 == 0, -1.0, 1.0)
    assert np.array_equal(analysis.edge_probability(draws, t), analysis.edge_probability(draws * signs, t))


def test_edge_probability_threshold():
    draws = np.array([[0.05, 0.2], [-0.3, 0.0]])
    assert analysis.edge_probability(draws, 0.1).tolist() == [0.5, 0.5]
    with pytest.raises(ValueError):
        analysis.edge_probability(draws, 0.0)


def test_log_loss_hand_values():
    P = np.array([[0.0, 0.8], [0.3, 0.0]])
    Y = np.array([[0, 1], [0, 0]])
    expected = (-math.log(0.8) - math.log(0.7)) / 2
    assert abs(analysis.log_loss(P, Y) - expected) < 1e-10
    P3 = np.array([[0.0, 0.5, 0.25], [0.9, 0.0, 0.1], [0.2, 0.6, 0.0]])
    Y3 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    rows = [
        -(math.log(0.5) + math.log(0.75)) / 2,
        -(math.log(0.9) + math.log(0.9)) / 2,
        -(math.log(0.8) + math.log(0.4)) / 2,
    ]
    assert abs(analysis.log_loss(P3, Y3) - sum(rows) / 3) < 1e-10


def test_log_loss_clips_and_ignores_diagonal():
    P = np.array([[0.7, 1.0], [0.0, 0.2]])
    Y = np.array([[1, 0], [1, 0]])
    value = analysis.log_loss(P, Y)
    assert math.isfinite(value)
    assert abs(value - (-math.log(1e-12))) < 1e-3


def test_log_loss_minimized_at_edge_rate():
    g = np.random.default_rng(1)
    Y = (g.random((12, 12)) < 0.2).astype(int)
    np.fill_diagonal(Y, 0)
    rate = Y.sum() / (12 * 11)
    grid = np.linspace(0.01, 0.99, 981)
    losses = [analysis.log_loss(np.full((12, 12), c), Y) for c in grid]
    assert abs(grid[int(np.argmin(losses))] - rate) < 0.002


def test_log_loss_shape_errors():
    with pytest.raises(ValueError):
        analysis.log_loss(np.zeros((2, 3)), np.zeros((2, 3)))


def test_tp_fp():
    assert analysis.tp_fp({1, 2, 5}, {1, 2, 3}) == (2, 1)


def test_k_posterior():
    k = analysis.k_posterior([5, 5, 5])
    assert k["mode"] == 5 and k["probs"].tolist() == [1.0] and k["interval"] == (5, 5)
    assert analysis.k_posterior([4, 5, 5, 6])["mode"] == 5
    with pytest.raises(ValueError):
        analysis.k_posterior([0, 1])


def test_reports_render():
    rep = analysis.select_inclusion(np.ones((4, 2)), 0.05)
    assert "support=1,2" in rep.to_text()
    m = analysis.MetricsReport(0.1, 2, 0, 2, analysis.k_posterior([3, 3]), 0.5)
    text = m.to_text()
    assert "K_mode=3" in text and "log_loss=0.5" in text
