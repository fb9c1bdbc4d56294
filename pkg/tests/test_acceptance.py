# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
End-to-end properties over many random instances.
"""

import itertools
import logging
import time

import numpy as np
import pytest

from conftest import random_samples, random_table
from nmdecide.chain_analysis import analyze
from nmdecide.criteria import CriterionKind, CriterionSpec, InitKind, decompose, marginal_expected_error, z_vector
from nmdecide.optimizer import (LambdaGrid, block_relaxation, calibrate_lambda_marginal, compare_with_brute_force,
                                guindani_oracle, is_monotone, step_down_ordered, step_up_ordered)
from nmdecide.posterior_core import (ConditioningMode, ProbabilityTable, factorized_joint, joint_probability,
                                     nested_probabilities, rank_by_bayes_factor)
from nmdecide.simulator import GaussianScenario, multiplicity_probe

LAMBDAS = (1.0, 1.5, 3.0)


@pytest.fixture(scope='module')
def table_instances() -> list[tuple[ProbabilityTable, float]]:
    """200 random tables with m from 2 to 10 and lambda from :data:`LAMBDAS`."""
    rng = np.random.default_rng(7)
    return [(random_table(rng, 2 + k % 9), LAMBDAS[k % 3]) for k in range(200)]


def test_relaxation_reaches_global_maximum(table_instances, caplog):
    """Relaxation fixed points attain the brute-force maximum on at least 95% of the tables."""
    start = time.perf_counter()
    agreements = 0
    with caplog.at_level(logging.WARNING, logger='nmdecide.optimizer'):
        for table, lam in table_instances:
            comparison = compare_with_brute_force(table, CriterionSpec(CriterionKind.GENERAL, lam))
            agreements += int(comparison.agrees)
    discrepancies = [record for record in caplog.records if 'global maximum' in record.getMessage()]
    assert len(discrepancies) == len(table_instances) - agreements
    assert agreements >= 0.95 * len(table_instances)
    assert time.perf_counter() - start < 60


def test_absorption_times_match_simulation(table_instances):
    """t = N 1 equals the simulated sweep counts on every table with m <= 8."""
    for table, lam in table_instances:
        if table.n_hypotheses > 8:
            continue
        report = analyze(table, CriterionSpec(CriterionKind.GENERAL, lam))
        assert report.verdict == 'exact'
        assert report.residual <= 1e-9


def test_marginal_relaxation_is_oracle(rng):
    """The marginal criterion converges within two sweeps to the closed-form decisions from both inits."""
    grid = LambdaGrid.default(CriterionKind.MARGINAL).values[::8]
    for _ in range(100):
        v = rng.uniform(size=int(rng.integers(1, 7)))
        table = ProbabilityTable.from_marginals(v)
        for lam in grid:
            oracle = guindani_oracle(v, lam)
            for init in InitKind:
                decisions, trace = block_relaxation(table, CriterionSpec(CriterionKind.MARGINAL, lam, init=init))
                assert np.array_equal(decisions, oracle)
                assert trace.evaluated_sweeps <= 2


def test_decomposition_partition(rng):
    """The eight counts sum to m and the controlled error completes the true positives."""
    for mode in ConditioningMode:
        for _ in range(1000):
            m = int(rng.integers(1, 13))
            d = rng.integers(0, 2, size=m)
            r = rng.integers(0, 2, size=m)
            decomposition = decompose(d, r, mode)
            z = z_vector(d, r, mode)
            assert decomposition.total == m
            assert decomposition.ne1 + int(np.sum(d * (1 - r * z))) == int(np.sum(d))


def test_marginal_constraint_decreases_in_lambda(rng):
    """The expected number of false positives never grows along an ascending grid."""
    grid = LambdaGrid.default(CriterionKind.MARGINAL).values
    for _ in range(50):
        v = rng.uniform(size=10)
        values = [marginal_expected_error(v, guindani_oracle(v, lam)) for lam in grid]
        assert all(later <= earlier for earlier, later in zip(values, values[1:]))


def test_calibration_example():
    """v = (0.9, 0.8, 0.6) at alpha = 0.5 rejects the first two hypotheses."""
    grid = LambdaGrid.default(CriterionKind.MARGINAL)
    result = calibrate_lambda_marginal([0.9, 0.8, 0.6], 0.5)
    assert result.feasible
    assert result.decisions.tolist() == [1, 1, 0]
    assert result.achieved == pytest.approx(0.3, abs=1e-12)
    position = int(np.flatnonzero(grid.values == result.lam)[0])
    previous = grid.values[position - 1]
    assert previous / (1 + previous) <= 0.6 < result.lam / (1 + result.lam)


def test_marginal_and_general_disagree(divergent):
    """At lambda = 1 the marginal rule accepts both alternatives, the general rule neither."""
    marginal, _ = block_relaxation(divergent, CriterionSpec(CriterionKind.MARGINAL, 1.0))
    assert marginal.tolist() == [1, 1]
    assert guindani_oracle(divergent.marginals(), 1.0).tolist() == [1, 1]
    comparison = compare_with_brute_force(divergent, CriterionSpec(CriterionKind.GENERAL, 1.0))
    assert comparison.relaxed.tolist() == [0, 0]
    assert comparison.relaxed_value == 0.0


def test_stepwise_procedures_are_monotone(rng, record_property):
    """Step-down and step-up decisions follow the Bayes factor order."""
    fixed_points = total = 0
    for k in range(100):
        samples = random_samples(rng, int(rng.integers(2, 9)))
        order = rank_by_bayes_factor(samples)
        lam = LAMBDAS[k % 3]
        for procedure in (step_down_ordered, step_up_ordered):
            decisions, trace = procedure(samples, lam, order)
            assert is_monotone(decisions, order)
            fixed_points += int(trace.shortcut_is_fixed_point)
            total += 1
    rate = fixed_points / total
    record_property('shortcut_fixed_point_rate', rate)
    assert 0.0 <= rate <= 1.0


def test_nested_probabilities_decrease(rng):
    """Shared-sample nested events never gain probability along any order."""
    for _ in range(100):
        m = int(rng.integers(1, 11))
        samples = random_samples(rng, m, n_samples=int(rng.integers(1, 200)))
        for order in (list(range(m)), rank_by_bayes_factor(samples), list(rng.permutation(m))):
            nested = nested_probabilities(samples, order)
            assert all(later <= earlier for earlier, later in zip(nested, nested[1:]))


def test_multiplicity_probe():
    """Only a correlated prior moves v_1 between m = 1 and m = 50."""
    start = time.perf_counter()
    independent = multiplicity_probe(GaussianScenario(50, rho=0.0, seed=1), 1, 50)
    assert abs(independent.difference) <= 1e-12
    scenario = GaussianScenario(50, sigma2=1.0, tau2=1.0, rho=0.8, data=[0.0] + [3.0] * 49)
    correlated = multiplicity_probe(scenario, 1, 50)
    assert abs(correlated.difference) > 10 * 1e-12
    assert time.perf_counter() - start < 5


def test_independence_factorization(rng):
    """Product tables give the product of the marginals for every joint probability."""
    for m in range(1, 9):
        v = rng.uniform(size=m)
        table = ProbabilityTable.from_marginals(v)
        for d in itertools.product((0, 1), repeat=m):
            for i, target, mode in itertools.product(range(m), (0, 1), ConditioningMode):
                expected = factorized_joint(v, d, i, target, mode)
                assert joint_probability(table, d, i, mode, target) == pytest.approx(expected, abs=1e-12)
