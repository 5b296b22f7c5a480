from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from stepped_wedge_gee.core.coordinator import TrialAnalyzer
from stepped_wedge_gee.core.errors import DegreesOfFreedomError
from stepped_wedge_gee.core.specs import ModelSpec
from stepped_wedge_gee.engine.covariance import stack_weights
from stepped_wedge_gee.engine.gee import fit
from stepped_wedge_gee.inference.cic import cic_cp
from stepped_wedge_gee.inference.intervals import intervals, t_interval, t_quantile
from stepped_wedge_gee.inference.sandwich import (
    ClusterContribution,
    cluster_contributions,
    joint_covariance,
    model_based,
    sandwich,
    sandwich_set,
)
from stepped_wedge_gee.models.results import SandwichSet
from stepped_wedge_gee.models.shared import Adjustment, Correction, CorrelationStructure
from stepped_wedge_gee.models.trial import TrialData
from tests.trial_cases import NE_CASE, independence_sandwich, logistic_irls

INDEPENDENCE = ModelSpec(structure=CorrelationStructure.INDEPENDENCE)


@pytest.fixture(scope="module")
def ne_fit():
    return fit(NE_CASE.trial(), ModelSpec())


@pytest.fixture(scope="module")
def independence_fit():
    return fit(NE_CASE.trial(), INDEPENDENCE)


def test_model_based_matches_glm_inverse_information(independence_fit) -> None:
    _, inverse_information = logistic_irls(independence_fit.data)
    np.testing.assert_allclose(model_based(independence_fit), inverse_information, rtol=1e-6)


def test_doubling_sizes_halves_model_based_variance(independence_fit) -> None:
    data = independence_fit.data
    doubled = TrialData(
        cluster_ids=data.cluster_ids,
        periods=data.periods,
        sizes=data.sizes * 2,
        totals=data.totals * 2,
        treatment=data.treatment,
    )
    doubled_fit = fit(doubled, INDEPENDENCE)
    np.testing.assert_allclose(model_based(doubled_fit), model_based(independence_fit) / 2, rtol=1e-6)


def test_uncorrected_sandwich_matches_clustered_glm_sandwich(independence_fit) -> None:
    expected = independence_sandwich(independence_fit.data, independence_fit.theta)
    np.testing.assert_allclose(sandwich(independence_fit, Correction.BC0), expected, rtol=1e-6)


def test_zero_leverage_makes_corrections_coincide(ne_fit) -> None:
    inputs = cluster_contributions(ne_fit)
    flat = [replace(c, h1=np.zeros_like(c.h1), h2=np.zeros_like(c.h2)) for c in inputs.contributions]
    covariances = {
        correction: joint_covariance(flat, inputs.omega, inputs.p, inputs.q, correction)
        for correction in (Correction.BC0, Correction.BC1, Correction.BC2)
    }
    np.testing.assert_allclose(covariances[Correction.BC1], covariances[Correction.BC0], rtol=1e-10)
    np.testing.assert_allclose(covariances[Correction.BC2], covariances[Correction.BC0], rtol=1e-10)


def test_inflation_is_capped_at_two() -> None:
    rng = np.random.default_rng(4)
    d1 = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    omega = np.linalg.inv(d1.T @ d1)
    contribution = ClusterContribution(
        label="only",
        d1=d1,
        v_inv=np.eye(3),
        residual=rng.normal(size=3),
        h1=np.zeros((3, 3)),
        d2=np.zeros((6, 0)),
        weights=stack_weights(3),
        moment_residual=np.zeros(6),
        h2=np.zeros((6, 6)),
    )
    args = ([contribution], omega, np.zeros((0, 0)), np.zeros((0, 3)))
    bc0 = joint_covariance(*args, Correction.BC0)
    bc3 = joint_covariance(*args, Correction.BC3, (0.75, 0.75))
    np.testing.assert_allclose(bc3, 4 * bc0, rtol=1e-12)


def test_zero_cap_turns_off_inflation(ne_fit) -> None:
    bc3 = sandwich(ne_fit, Correction.BC3, zeta=(0.0, 0.0))
    np.testing.assert_allclose(bc3, sandwich(ne_fit, Correction.BC0), rtol=1e-10)


def test_sandwich_set_shapes_and_psd(ne_fit) -> None:
    covariances = sandwich_set(ne_fit)
    size = ne_fit.estimates.size
    assert covariances.names == ne_fit.names
    for correction in (Correction.BC0, Correction.BC1, Correction.BC2, Correction.BC3):
        matrix = covariances.covariance(correction)
        assert matrix.shape == (size, size)
        assert np.linalg.eigvalsh(matrix).min() > -1e-10
        assert covariances.alpha_block(correction).shape == (2, 2)
    assert covariances.model_based.shape == (ne_fit.theta.size, ne_fit.theta.size)
    with pytest.raises(KeyError):
        covariances.alpha_block(Correction.MODEL)


def test_leverage_corrections_widen_the_mean_block(ne_fit) -> None:
    covariances = sandwich_set(ne_fit, (Correction.BC0, Correction.BC2))
    assert np.trace(covariances.theta_block(Correction.BC2)) >= np.trace(
        covariances.theta_block(Correction.BC0)
    )


def test_sandwich_is_invariant_to_cluster_relabeling(ne_fit) -> None:
    permuted = ne_fit.data.take(np.arange(ne_fit.data.n_clusters)[::-1])
    other = fit(permuted, ModelSpec())
    for correction in (Correction.BC0, Correction.BC1, Correction.BC2, Correction.BC3):
        np.testing.assert_allclose(
            sandwich(other, correction), sandwich(ne_fit, correction), rtol=1e-5, atol=1e-9
        )


def test_strict_uee_uses_raw_products_for_the_correlation_block() -> None:
    result = fit(NE_CASE.trial(), ModelSpec(adjustment=Adjustment.UEE))
    default = sandwich_set(result, (Correction.BC0,))
    strict = sandwich_set(result, (Correction.BC0,), strict_uee=True)
    assert not np.allclose(default.alpha_block(Correction.BC0), strict.alpha_block(Correction.BC0))


def test_t_quantile_for_twelve_clusters() -> None:
    assert t_quantile(12) == pytest.approx(2.228, abs=1e-3)
    with pytest.raises(DegreesOfFreedomError):
        t_quantile(2)


def test_interval_in_the_normal_limit() -> None:
    lower, upper = t_interval(-0.142, 0.090, 10**6)
    assert lower == pytest.approx(-0.318, abs=1e-3)
    assert upper == pytest.approx(0.034, abs=1e-3)
    assert lower < 0.0 < upper


def test_lower_confidence_shrinks_the_interval() -> None:
    wide = t_interval(0.3, 0.1, 12, 0.95)
    narrow = t_interval(0.3, 0.1, 12, 0.5)
    assert wide[0] < narrow[0] < narrow[1] < wide[1]


def test_default_interval_pairing(ne_fit) -> None:
    covariances = sandwich_set(ne_fit, (Correction.BC1, Correction.BC2))
    report = intervals(ne_fit, covariances)
    assert report.df == ne_fit.data.n_clusters - 2
    assert report.row("delta").correction is Correction.BC1
    assert report.row("alpha0").correction is Correction.BC2
    assert report.row("alpha1").correction is Correction.BC2
    odds = report.odds_ratio()
    assert odds["lower"] < odds["estimate"] < odds["upper"]

    model_rows = intervals(ne_fit, covariances, Correction.MODEL)
    assert [row.parameter for row in model_rows.rows] == list(ne_fit.theta_names)


def test_independence_cic_with_model_based_meat_counts_parameters(independence_fit) -> None:
    omega = model_based(independence_fit)
    covariances = SandwichSet(
        model_based=omega,
        joint={Correction.BC1: omega},
        names=independence_fit.names,
        n_theta=independence_fit.theta.size,
        zeta=(0.75, 0.75),
    )
    cic = cic_cp(independence_fit, covariances)
    assert cic == pytest.approx(independence_fit.data.n_periods + 1, rel=1e-8)


def test_cic_is_positive(ne_fit) -> None:
    assert cic_cp(ne_fit) > 0.0


def test_analyzer_reports_every_requested_correction(ne_fit) -> None:
    analyzer = TrialAnalyzer()
    analysis = analyzer.analyze(ne_fit.data, ModelSpec(), (Correction.BC3,))
    assert set(analysis.covariances.joint) == {Correction.BC1, Correction.BC2, Correction.BC3}
    assert set(analysis.by_correction) == {Correction.MODEL, Correction.BC3}
    payload = analysis.as_dict()
    assert set(payload["standard_errors"]) == {"model", "bc1", "bc2", "bc3"}
    assert set(payload["alpha"]) == {"alpha0", "alpha1"}
    assert "odds_ratio" in payload
    assert payload["cic_cp"] > 0


def test_structure_comparison_ranks_by_cic(ne_fit) -> None:
    scores = TrialAnalyzer().compare_structures(ne_fit.data)
    values = [score.cic for score in scores if score.cic is not None]
    assert values == sorted(values)
    assert {score.structure for score in scores} == {"exchangeable", "nested-exch", "exp-decay"}
