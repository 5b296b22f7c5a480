from __future__ import annotations

import numpy as np
import pytest

from stepped_wedge_gee.core.errors import (
    DesignError,
    LeverageDegeneracyError,
    UnidentifiedParameterError,
)
from stepped_wedge_gee.core.registry import create_correlation_model
from stepped_wedge_gee.core.specs import ModelSpec
from stepped_wedge_gee.engine.gee import correlation_score, fit, mean_score, residual_products
from stepped_wedge_gee.models.correlation import CorrelationParams
from stepped_wedge_gee.models.shared import Adjustment, CorrelationStructure, LinkFunction
from stepped_wedge_gee.models.trial import TrialData
from tests.trial_cases import (
    ED_CASE,
    EXCH_CASE,
    NE_CASE,
    TrialCase,
    logistic_irls,
    small_trial,
    trial_from_cells,
)

INDEPENDENCE = ModelSpec(structure=CorrelationStructure.INDEPENDENCE)


def test_mean_score_hand_example() -> None:
    data = trial_from_cells(sizes=[[4, 4]], totals=[[2, 1]], treatment=[[0, 1]])
    score, info = mean_score(np.zeros(3), CorrelationParams.independence(), data)
    np.testing.assert_allclose(score, [0.0, -1.0, -1.0])
    # D1 = 0.25 * Z and V1^-1 = 16 * I.
    np.testing.assert_allclose(info, [[1.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, 1.0]])


def test_mean_score_vanishes_at_zero_residuals() -> None:
    data = trial_from_cells(
        sizes=[[4, 6], [8, 2]], totals=[[2, 3], [4, 1]], treatment=[[0, 1], [0, 0]]
    )
    score, _ = mean_score(np.zeros(3), CorrelationParams.nested_exchangeable(0.2, 0.1), data)
    np.testing.assert_allclose(score, 0.0, atol=1e-14)


def test_zero_correlation_reproduces_independence_score() -> None:
    data = small_trial()
    theta = np.array([-0.5, -0.3, -0.6, 0.2])
    independent = mean_score(theta, CorrelationParams.independence(), data)
    nested = mean_score(theta, CorrelationParams.nested_exchangeable(0.0, 0.0), data)
    np.testing.assert_allclose(nested[0], independent[0], rtol=1e-12)
    np.testing.assert_allclose(nested[1], independent[1], rtol=1e-12)


def test_raw_products_are_outer_products() -> None:
    data = trial_from_cells(sizes=[[10, 10], [10, 10]], totals=[[6, 3], [4, 5]], treatment=[[0, 1], [0, 0]])
    theta = np.array([0.0, 0.0, 0.0])
    moments, _ = residual_products(theta, data, CorrelationParams.independence(), Adjustment.UEE)
    np.testing.assert_allclose(moments[0].residual, [0.1, -0.2])
    np.testing.assert_allclose(moments[0].products, [[0.01, -0.02], [-0.02, 0.04]])


def _two_per_cell_trial() -> TrialData:
    # Period 2 has two treated and two control clusters, so no cluster pins a parameter alone.
    return trial_from_cells(
        sizes=[[10, 10], [10, 10], [10, 10], [10, 10]],
        totals=[[6, 3], [4, 7], [7, 4], [3, 6]],
        treatment=[[0, 1], [0, 1], [0, 0], [0, 0]],
    )


def test_bias_adjusted_products_hand_example() -> None:
    data = _two_per_cell_trial()
    params = CorrelationParams.independence()
    raw, leverages = residual_products(np.zeros(3), data, params, Adjustment.UEE)
    adjusted, _ = residual_products(np.zeros(3), data, params, Adjustment.MAEE)
    # At mu = 1/2 the leverage is the weighted hat matrix Z (sum Z'Z)^-1 Z' = diag(1/4, 1/2).
    for h in leverages:
        np.testing.assert_allclose(h, np.diag([0.25, 0.5]), atol=1e-12)
    np.testing.assert_allclose(raw[0].products, [[0.01, -0.02], [-0.02, 0.04]], atol=1e-12)
    np.testing.assert_allclose(adjusted[0].products, [[1 / 75, -1 / 30], [-1 / 30, 0.08]], atol=1e-12)
    for r, a in zip(raw, adjusted):
        assert np.all(np.abs(np.diag(a.products)) > np.abs(np.diag(r.products)))


def test_bias_adjusted_products_undo_mean_leverage() -> None:
    data = _two_per_cell_trial()
    theta = np.array([-0.2, 0.1, -0.3])
    params = CorrelationParams.nested_exchangeable(0.05, 0.02)
    raw, leverages = residual_products(theta, data, params, Adjustment.UEE)
    adjusted, _ = residual_products(theta, data, params, Adjustment.MAEE)
    assert sum(np.trace(h) for h in leverages) == pytest.approx(3.0)
    for r, a, h in zip(raw, adjusted, leverages):
        assert np.linalg.svd(np.eye(h.shape[0]) - h, compute_uv=False).min() > 0.1
        expected = np.linalg.solve(np.eye(h.shape[0]) - h, r.products)
        np.testing.assert_allclose(a.products, (expected + expected.T) / 2, rtol=1e-10)
        assert not np.allclose(a.products, r.products)


def test_independence_fit_matches_binomial_glm() -> None:
    data = NE_CASE.trial()
    result = fit(data, INDEPENDENCE)
    beta, _ = logistic_irls(data)
    assert result.converged
    np.testing.assert_allclose(result.theta, beta, atol=1e-7)
    assert result.alpha.size == 0
    assert result.names[-1] == "delta"


@pytest.mark.parametrize("case", [NE_CASE, ED_CASE, EXCH_CASE], ids=lambda case: case.name)
@pytest.mark.parametrize("adjustment", list(Adjustment))
def test_fit_converges_on_simulated_trials(case: TrialCase, adjustment: Adjustment) -> None:
    spec = ModelSpec(structure=case.truth.structure, adjustment=adjustment)
    result = fit(case.trial(), spec)
    assert result.converged
    assert result.score_norm < 1e-4
    assert np.isfinite(result.estimates).all()
    assert result.alpha_names == case.truth.names
    assert len(result.trace) == result.iterations


@pytest.mark.parametrize("adjustment", list(Adjustment))
def test_fitted_parameters_solve_the_estimating_equations(adjustment: Adjustment) -> None:
    data = NE_CASE.trial()
    spec = ModelSpec(adjustment=adjustment)
    result = fit(data, spec)
    assert not result.raw_alpha
    score, _ = mean_score(result.theta, result.params, data)
    np.testing.assert_allclose(score, 0.0, atol=1e-4)
    free_map = create_correlation_model(spec.structure).free_map(spec)
    np.testing.assert_allclose(correlation_score(result.moments, result.params, free_map), 0.0, atol=1e-10)


def test_decay_fit_solves_its_correlation_equations() -> None:
    spec = ModelSpec(structure=CorrelationStructure.EXPONENTIAL_DECAY)
    result = fit(ED_CASE.trial(), spec)
    assert not result.raw_alpha
    free_map = create_correlation_model(spec.structure).free_map(spec)
    np.testing.assert_allclose(correlation_score(result.moments, result.params, free_map), 0.0, atol=1e-7)


def test_fit_is_invariant_to_cluster_order() -> None:
    data = NE_CASE.trial()
    reordered = data.take(np.random.default_rng(3).permutation(data.n_clusters))
    first, second = fit(data), fit(reordered)
    assert first.iterations == second.iterations
    np.testing.assert_allclose(first.theta, second.theta, rtol=0, atol=1e-12)
    np.testing.assert_allclose(first.params.vector, second.params.vector, rtol=0, atol=1e-12)


def _assert_reduces_to_exchangeable(data: TrialData) -> None:
    exchangeable = fit(data, ModelSpec(structure=CorrelationStructure.EXCHANGEABLE))
    tied = fit(data, ModelSpec(tie_alpha1=True))
    fixed = fit(data, ModelSpec(structure=CorrelationStructure.EXPONENTIAL_DECAY, fixed_rho=1.0))
    for variant in (tied, fixed):
        np.testing.assert_allclose(variant.theta, exchangeable.theta, rtol=0, atol=1e-10)
        assert variant.params.alpha0 == pytest.approx(exchangeable.params.alpha0, rel=0, abs=1e-10)
        assert variant.alpha_names == ("alpha0",)


def test_tied_and_fixed_variants_reduce_to_exchangeable() -> None:
    _assert_reduces_to_exchangeable(EXCH_CASE.trial())


@pytest.mark.slow
@pytest.mark.parametrize("replicate", range(20))
def test_reductions_hold_across_simulated_trials(replicate: int) -> None:
    case = TrialCase("exch-small", CorrelationParams.exchangeable(0.05), 8, 5, (20, 40), 31)
    _assert_reduces_to_exchangeable(case.trial(replicate))


def test_identity_link_fit() -> None:
    data = small_trial()
    result = fit(data, ModelSpec(structure=CorrelationStructure.INDEPENDENCE, link=LinkFunction.IDENTITY))
    assert result.converged
    assert np.all((result.mu_hat > 0) & (result.mu_hat < 1))


def test_one_cluster_is_rejected() -> None:
    data = trial_from_cells(sizes=[[5, 5]], totals=[[1, 2]], treatment=[[0, 1]])
    with pytest.raises(DesignError, match="I ≥ 2 required"):
        fit(data)


def test_one_period_is_rejected() -> None:
    data = trial_from_cells(sizes=[[5], [5]], totals=[[1], [2]], treatment=[[0], [1]])
    with pytest.raises(DesignError, match="J ≥ 2 required"):
        fit(data, ModelSpec(structure=CorrelationStructure.EXPONENTIAL_DECAY))


def test_all_control_design_leaves_delta_unidentified() -> None:
    data = trial_from_cells(sizes=[[5, 5], [6, 6]], totals=[[1, 2], [2, 3]], treatment=[[0, 0], [0, 0]])
    with pytest.raises(UnidentifiedParameterError, match="delta"):
        fit(data)


def test_empty_period_leaves_its_effect_unidentified() -> None:
    data = trial_from_cells(
        sizes=[[5, 0, 5], [6, 0, 6]], totals=[[1, 0, 2], [2, 0, 3]], treatment=[[0, 0, 1], [0, 0, 0]]
    )
    with pytest.raises(UnidentifiedParameterError, match="period effects"):
        fit(data)


def test_single_period_clusters_leave_alpha1_unidentified() -> None:
    data = trial_from_cells(
        sizes=[[10, 0], [12, 0], [0, 11], [0, 9]],
        totals=[[3, 0], [5, 0], [0, 4], [0, 2]],
        treatment=[[0, 0], [0, 0], [0, 1], [0, 0]],
    )
    with pytest.raises(UnidentifiedParameterError, match="alpha1"):
        fit(data, ModelSpec(adjustment=Adjustment.UEE))


def test_cluster_determining_delta_alone_breaks_bias_adjustment() -> None:
    data = trial_from_cells(
        sizes=[[10, 12], [11, 9], [0, 10]],
        totals=[[3, 4], [5, 3], [0, 6]],
        treatment=[[0, 0], [0, 0], [0, 1]],
    )
    with pytest.raises(LeverageDegeneracyError):
        fit(data, ModelSpec(adjustment=Adjustment.MAEE))
