from __future__ import annotations

import numpy as np
import pytest

from stepped_wedge_gee.core.errors import UnidentifiedParameterError
from stepped_wedge_gee.core.registry import create_correlation_model
from stepped_wedge_gee.core.specs import ModelSpec
from stepped_wedge_gee.models.correlation import ClusterMoments, CorrelationParams
from stepped_wedge_gee.models.shared import CorrelationStructure
from stepped_wedge_gee.structures import ed_update, moment_sums, ne_update
from stepped_wedge_gee.structures.exchangeable import exchangeable_update
from stepped_wedge_gee.structures.exponential_decay import alpha0_given_rho, solve_rho


def moments(products: list[list[float]], sizes: list[int], nu: list[float], periods=None) -> ClusterMoments:
    products_arr = np.asarray(products, dtype=float)
    k = products_arr.shape[0]
    return ClusterMoments(
        periods=np.arange(k) if periods is None else np.asarray(periods),
        sizes=np.asarray(sizes, dtype=float),
        nu=np.asarray(nu, dtype=float),
        residual=np.zeros(k),
        products=products_arr,
    )


def test_within_period_ratio_hand_value() -> None:
    sums = moment_sums([moments([[0.2]], [2], [0.25])])
    assert sums.within_products / sums.within_variances == pytest.approx(0.6)
    assert exchangeable_update(sums) == pytest.approx(0.6)


def test_single_period_leaves_alpha1_unidentified() -> None:
    sums = moment_sums([moments([[0.2]], [2], [0.25])])
    with pytest.raises(UnidentifiedParameterError, match="alpha1"):
        ne_update(sums)


def test_singleton_cells_leave_alpha0_unidentified() -> None:
    sums = moment_sums([moments([[0.2, 0.01], [0.01, 0.3]], [1, 1], [0.25, 0.25])])
    with pytest.raises(UnidentifiedParameterError, match="alpha0"):
        ne_update(sums)


def test_between_period_ratio_counts_both_orderings() -> None:
    sums = moment_sums([moments([[0.1, 0.01], [0.01, 0.1]], [2, 2], [0.25, 0.25])])
    _, alpha1 = ne_update(sums)
    assert alpha1 == pytest.approx(0.04)
    assert sums.lag_products[1] == pytest.approx(2 * 0.01 * 0.25)


def test_zero_products_force_negative_alpha0_and_projection() -> None:
    nu, n = np.array([0.21, 0.24]), np.array([4, 6])
    sums = moment_sums([moments(np.zeros((2, 2)).tolist(), n.tolist(), nu.tolist())])
    alpha0, alpha1 = ne_update(sums)
    expected = -np.sum(nu / n * nu * (n - 1) / n) / np.sum((nu * (n - 1) / n) ** 2)
    assert alpha1 == 0.0
    assert alpha0 == pytest.approx(expected)
    assert alpha0 < 0

    model = create_correlation_model(CorrelationStructure.NESTED_EXCHANGEABLE)
    projected, clipped = model.project(CorrelationParams.nested_exchangeable(alpha0, alpha1), 6)
    assert clipped
    assert projected.alpha0 > 0
    assert projected.alpha1 <= projected.alpha0


def test_projection_caps_alpha1_at_alpha0_and_bounds_it_below() -> None:
    model = create_correlation_model(CorrelationStructure.NESTED_EXCHANGEABLE)
    capped, clipped = model.project(CorrelationParams.nested_exchangeable(0.1, 0.3), 50)
    assert clipped and capped.alpha1 == pytest.approx(0.1)
    low, clipped = model.project(CorrelationParams.nested_exchangeable(0.1, -0.5), 11)
    assert clipped and low.alpha1 == pytest.approx(-0.01 + 1e-8)
    kept, clipped = model.project(CorrelationParams.nested_exchangeable(0.1, 0.05), 11)
    assert not clipped and kept == CorrelationParams.nested_exchangeable(0.1, 0.05)


def _two_cluster_sums():
    cluster = moments([[0.1, 0.02], [0.02, 0.1]], [5, 5], [0.25, 0.25])
    return moment_sums([cluster, cluster])


def test_decay_two_periods_solves_the_linear_equation() -> None:
    sums = _two_cluster_sums()
    update = ed_update(sums, CorrelationParams.exponential_decay(0.01, 0.5))
    alpha0, rho = update.params.alpha0, update.params.rho
    assert 0.0 < rho < 1.0
    assert update.warnings == ()
    assert rho == pytest.approx(sums.lag_products[1] / (alpha0 * sums.lag_variances[1]), rel=1e-8)
    assert alpha0 == pytest.approx(alpha0_given_rho(sums, rho), rel=1e-8)


def test_zero_between_products_give_rho_zero() -> None:
    cluster = moments([[0.1, 0.0], [0.0, 0.12]], [5, 4], [0.25, 0.21])
    sums = moment_sums([cluster])
    update = ed_update(sums, CorrelationParams.exponential_decay(0.05, 0.5))
    assert update.params.rho == pytest.approx(0.0, abs=1e-12)
    assert update.params.alpha0 == pytest.approx(sums.within_products / sums.within_variances)


def test_perfectly_correlated_periods_push_rho_to_one() -> None:
    residual = np.array([0.5, 0.5])
    cluster = moments(np.outer(residual, residual).tolist(), [2, 2], [0.25, 0.25])
    update = ed_update(moment_sums([cluster]), CorrelationParams.exponential_decay(0.01, 0.5))
    assert update.params.rho == pytest.approx(1.0, abs=1e-6)


def test_negative_between_products_fall_back_to_the_boundary() -> None:
    cluster = moments([[0.1, -0.02], [-0.02, 0.1]], [5, 5], [0.25, 0.25])
    sums = moment_sums([cluster])
    rho, warning = solve_rho(sums, 0.2, 0.5)
    assert rho == 0.0
    assert warning is not None and "boundary" in warning
    update = ed_update(sums, CorrelationParams.exponential_decay(0.01, 0.5))
    assert update.params.rho == 0.0
    assert update.warnings


def test_three_period_decay_roots_are_stationary() -> None:
    products = [[0.11, 0.03, 0.015], [0.03, 0.09, 0.025], [0.015, 0.025, 0.1]]
    cluster = moments(products, [6, 5, 7], [0.24, 0.22, 0.25])
    sums = moment_sums([cluster, moments(products, [4, 8, 5], [0.2, 0.25, 0.23])])
    update = ed_update(sums, CorrelationParams.exponential_decay(0.01, 0.5))
    alpha0, rho = update.params.alpha0, update.params.rho
    assert 0.0 < rho < 1.0
    lags = np.arange(sums.lag_products.size)[1:]
    rho_equation = np.sum(lags * sums.lag_products[1:] * rho ** (lags - 1)) - alpha0 * np.sum(
        lags * sums.lag_variances[1:] * rho ** (2 * lags - 1)
    )
    assert rho_equation == pytest.approx(0.0, abs=1e-9)


def test_tied_nested_exchangeable_matches_exchangeable() -> None:
    cluster = moments([[0.1, 0.02], [0.02, 0.12]], [5, 4], [0.25, 0.21])
    model = create_correlation_model(CorrelationStructure.NESTED_EXCHANGEABLE)
    spec = ModelSpec(tie_alpha1=True)
    update = model.update([cluster], model.initial(spec), spec)
    expected = exchangeable_update(moment_sums([cluster]))
    assert update.params.alpha0 == pytest.approx(expected)
    assert update.params.alpha1 == pytest.approx(expected)
    assert model.free_names(spec) == ("alpha0",)


def test_fixed_rho_only_updates_alpha0() -> None:
    cluster = moments([[0.1, 0.02], [0.02, 0.12]], [5, 4], [0.25, 0.21])
    model = create_correlation_model(CorrelationStructure.EXPONENTIAL_DECAY)
    spec = ModelSpec(structure=CorrelationStructure.EXPONENTIAL_DECAY, fixed_rho=0.4)
    update = model.update([cluster], model.initial(spec), spec)
    assert update.params.rho == 0.4
    assert update.params.alpha0 == pytest.approx(alpha0_given_rho(moment_sums([cluster]), 0.4))
    np.testing.assert_array_equal(model.free_map(spec), [[1.0], [0.0]])


def test_lags_follow_period_indices_not_positions() -> None:
    cluster = moments([[0.1, 0.02], [0.02, 0.1]], [5, 5], [0.25, 0.25], periods=[0, 2])
    sums = moment_sums([cluster])
    assert sums.lag_products[1] == 0.0
    assert sums.lag_products[2] == pytest.approx(2 * 0.02 * 0.25)
