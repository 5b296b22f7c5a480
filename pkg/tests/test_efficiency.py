from __future__ import annotations

import numpy as np
import pytest

from stepped_wedge_gee.core.specs import AreConfig, DiscreteUniformSizes
from stepped_wedge_gee.efficiency import are_estimate, are_tau, are_tau_individual
from stepped_wedge_gee.models.correlation import CorrelationParams
from stepped_wedge_gee.models.shared import LinkFunction
from stepped_wedge_gee.simulation.design import staircase

NE = CorrelationParams.nested_exchangeable
DESIGN = staircase(22, 5)


def _theta(design: np.ndarray = DESIGN) -> np.ndarray:
    return AreConfig(design=design, truth=NE(0.1, 0.1), sizes=DiscreteUniformSizes(1, 1)).theta_truth()


def test_independence_truth_gives_unit_efficiency() -> None:
    sizes = np.random.default_rng(0).integers(50, 151, size=DESIGN.shape)
    tau = are_tau(DESIGN, CorrelationParams.independence(), sizes, _theta())
    assert tau == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize(
    "truth",
    [NE(0.1, 0.1), NE(0.1, 0.03), CorrelationParams.exponential_decay(0.08, 0.5)],
    ids=["ne-tied", "ne", "ed"],
)
def test_cluster_period_and_individual_paths_agree(truth: CorrelationParams) -> None:
    sizes = np.random.default_rng(1).integers(0, 6, size=DESIGN.shape)
    sizes[:, 0] = np.maximum(sizes[:, 0], 1)
    direct = are_tau(DESIGN, truth, sizes, _theta())
    assembled = are_tau_individual(DESIGN, truth, sizes, _theta())
    assert direct == pytest.approx(assembled, rel=1e-8)


def test_equal_sizes_match_individual_path() -> None:
    sizes = np.full(DESIGN.shape, 5)
    truth = NE(0.1, 0.1)
    assert are_tau(DESIGN, truth, sizes, _theta()) == pytest.approx(
        are_tau_individual(DESIGN, truth, sizes, _theta()), rel=1e-8
    )


def test_modeled_structure_is_at_least_as_efficient() -> None:
    rng = np.random.default_rng(2)
    for _ in range(20):
        sizes = rng.integers(50, 151, size=DESIGN.shape)
        alpha0 = rng.uniform(0.01, 0.2)
        truth = NE(alpha0, rng.uniform(0.0, alpha0))
        assert are_tau(DESIGN, truth, sizes, _theta()) >= 1.0 - 1e-10


def test_single_replicate_with_constant_sizes() -> None:
    truth = NE(0.1, 0.05)
    config = AreConfig(design=DESIGN, truth=truth, sizes=DiscreteUniformSizes(100, 100), replicates=1)
    result = are_estimate(config)
    assert result.replicates == 1
    assert result.mc_se == 0.0
    assert result.mean == pytest.approx(are_tau(DESIGN, truth, np.full(DESIGN.shape, 100), config.theta_truth()))


def test_estimate_is_independent_of_thread_count() -> None:
    config = AreConfig(design=DESIGN, truth=NE(0.1, 0.1), sizes=DiscreteUniformSizes(50, 150), replicates=12, seed=5)
    serial = are_estimate(config, threads=1)
    threaded = are_estimate(config, threads=4)
    assert serial.values == threaded.values
    assert serial.mean > 1.0
    assert set(serial.quantiles) == {"q0.025", "q0.25", "q0.5", "q0.75", "q0.975"}


@pytest.mark.slow
def test_independence_truth_averages_to_unit_efficiency() -> None:
    config = AreConfig(
        design=DESIGN,
        truth=CorrelationParams.independence(),
        sizes=DiscreteUniformSizes(50, 150),
        replicates=200,
        seed=9,
    )
    assert are_estimate(config, threads=4).mean == pytest.approx(1.0, rel=0, abs=1e-9)


@pytest.mark.slow
def test_efficiency_drops_as_between_period_correlation_falls() -> None:
    means = []
    for alpha1 in (0.1, 0.08, 0.06, 0.04, 0.02):
        config = AreConfig(
            design=DESIGN,
            truth=NE(0.1, alpha1),
            sizes=DiscreteUniformSizes(50, 150),
            replicates=200,
            seed=9,
        )
        means.append(are_estimate(config, threads=4).mean)
    assert all(mean > 1.0 for mean in means)
    assert all(earlier > later for earlier, later in zip(means, means[1:]))


def test_theta_truth_follows_the_link() -> None:
    config = AreConfig(
        design=staircase(4, 3), truth=NE(0.1, 0.05), sizes=DiscreteUniformSizes(5, 5), link=LinkFunction.LOG
    )
    np.testing.assert_allclose(config.theta_truth()[[0, -2, -1]], [np.log(0.25), np.log(0.2), np.log(0.75)])
