# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Module generating synthetic multiple testing problems from a conjugate Gaussian model.

The model is ``X | theta ~ Normal(theta, sigma2 * I)`` with the equicorrelated prior
``theta ~ Normal(mu0, tau2 * ((1 - rho) * I + rho * J))``, and the hypotheses are ``H_0i: theta_i <= c`` against
``H_1i: theta_i > c``. The posterior is Gaussian and exact, so the indicator samples carry no MCMC error. With
``rho = 0`` the hypotheses are independent a posteriori; with ``rho > 0`` the posterior of every ``theta_i`` depends on
the whole data vector, which changes each marginal posterior with the number of hypotheses tested jointly.
"""

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.linalg
from scipy.stats import norm

from .config import resolve
from .errors import ScenarioError
from .posterior_core import IndicatorSampleMatrix

logger = logging.getLogger(__name__)


# pylint: disable=too-many-instance-attributes,too-many-arguments
class GaussianScenario():
    """
    Settings of a simulated problem.

    Args:
        m: number of hypotheses.
        sigma2: observation noise variance, ``> 0``.
        tau2: prior variance, ``> 0``.
        rho: prior correlation in ``[0, 1)``.
        mu0: prior mean, scalar or one value per hypothesis.
        theta_true: true means, scalar or one value per hypothesis.
        cutpoint: hypothesis cutpoint ``c``.
        seed: seed of the random generator.
        samples: number of posterior draws ``S``.
        data: fixed observations; drawn from the model if :obj:`None`.
    """
    def __init__(self, m: int, sigma2: float = 1.0, tau2: float = 1.0, rho: float = 0.0, mu0=0.0, theta_true=0.0,
                 cutpoint: float = 0.0, seed: int = 0, samples: int = 1000, data: Sequence[float] = None):
        if int(m) < 1:
            raise ScenarioError(f'm must be at least 1, got {m}')
        self.m = int(m)
        if not sigma2 > 0 or not tau2 > 0:
            raise ScenarioError(f'variances must be positive, got sigma2={sigma2}, tau2={tau2}')
        if not 0 <= rho < 1:
            raise ScenarioError(f'rho must lie in [0, 1) for a positive definite prior, got {rho}')
        if int(samples) < 1:
            raise ScenarioError(f'samples must be at least 1, got {samples}')
        self.sigma2 = float(sigma2)
        self.tau2 = float(tau2)
        self.rho = float(rho)
        self.mu0 = self._vector(mu0, 'mu0')
        self.theta_true = self._vector(theta_true, 'theta_true')
        self.cutpoint = float(cutpoint)
        self.seed = int(seed)
        self.samples = int(samples)
        self.data = None if data is None else self._vector(data, 'data')

    def _vector(self, value, name: str) -> np.ndarray:
        array = np.asarray(value, dtype=float)
        if array.ndim == 0:
            return np.full(self.m, float(array))
        if array.shape != (self.m,):
            raise ScenarioError(f'{name} has {array.size} entries, expected {self.m}')
        if not np.all(np.isfinite(array)):
            raise ScenarioError(f'{name} must be finite')
        return array.copy()

    def prior_covariance(self) -> np.ndarray:
        """
        Returns:
            ``tau2 * ((1 - rho) * I + rho * J)``.
        """
        return self.tau2 * ((1.0 - self.rho) * np.eye(self.m) + self.rho * np.ones((self.m, self.m)))

    def truncated(self, size: int, data: Sequence[float] = None) -> 'GaussianScenario':
        """
        Returns:
            The scenario restricted to the first ``size`` hypotheses, optionally with the given data.
        """
        if not 1 <= size <= self.m:
            raise ScenarioError(f'cannot restrict m={self.m} to {size} hypotheses')
        if data is None and self.data is not None:
            data = self.data[:size]
        return GaussianScenario(size, self.sigma2, self.tau2, self.rho, self.mu0[:size], self.theta_true[:size],
                                self.cutpoint, self.seed, self.samples, data)

    def with_seed(self, seed: int) -> 'GaussianScenario':
        """
        Returns:
            A copy with a different seed.
        """
        return GaussianScenario(self.m, self.sigma2, self.tau2, self.rho, self.mu0, self.theta_true, self.cutpoint,
                                seed, self.samples, self.data)

    def as_dict(self) -> dict:
        """
        Returns:
            JSON-compatible :obj:`dict`.
        """
        return {
            'm': self.m, 'sigma2': self.sigma2, 'tau2': self.tau2, 'rho': self.rho,
            'mu0': self.mu0.tolist(), 'theta_true': self.theta_true.tolist(), 'cutpoint': self.cutpoint,
            'seed': self.seed, 'samples': self.samples,
            'data': None if self.data is None else self.data.tolist(),
        }


def conjugate_posterior(scenario: GaussianScenario, data: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """
    Exact Gaussian posterior of ``theta`` given the observations.

    Returns:
        Tuple of the posterior mean and the (symmetric positive definite) posterior covariance.
    """
    data = np.asarray(data, dtype=float)
    try:
        prior_factor = scipy.linalg.cho_factor(scenario.prior_covariance())
    except np.linalg.LinAlgError as error:
        raise ScenarioError(f'prior covariance is not positive definite: {error}') from error
    identity = np.eye(scenario.m)
    precision = scipy.linalg.cho_solve(prior_factor, identity) + identity / scenario.sigma2
    precision_factor = scipy.linalg.cho_factor(precision)
    covariance = scipy.linalg.cho_solve(precision_factor, identity)
    covariance = (covariance + covariance.T) / 2.0
    shift = scipy.linalg.cho_solve(prior_factor, scenario.mu0) + data / scenario.sigma2
    mean = scipy.linalg.cho_solve(precision_factor, shift)
    return mean, covariance


def analytic_marginals(mean: np.ndarray, covariance: np.ndarray, cutpoint: float) -> np.ndarray:
    """
    Returns:
        ``Pr(theta_i > c | D)`` for every hypothesis.
    """
    return norm.sf(cutpoint, loc=mean, scale=np.sqrt(np.diag(covariance)))


# pylint: disable=too-few-public-methods,too-many-arguments
class SimulatedProblem():
    """
    Output of :func:`generate`.

    Attributes:
        scenario: the generating :class:`GaussianScenario`.
        data: observation vector ``X``.
        truth: truth vector ``r`` with ``r_i = 1{theta_true_i > c}``.
        samples: :class:`~.IndicatorSampleMatrix` of the posterior draws.
        posterior_mean: exact posterior mean.
        posterior_covariance: exact posterior covariance.
        analytic: exact marginal posterior probabilities of the alternatives.
    """
    def __init__(self, scenario: GaussianScenario, data: np.ndarray, truth: np.ndarray,
                 samples: IndicatorSampleMatrix, posterior_mean: np.ndarray, posterior_covariance: np.ndarray):
        self.scenario = scenario
        self.data = data
        self.truth = truth
        self.samples = samples
        self.posterior_mean = posterior_mean
        self.posterior_covariance = posterior_covariance
        self.analytic = analytic_marginals(posterior_mean, posterior_covariance, scenario.cutpoint)


def _observations(scenario: GaussianScenario, rng: np.random.Generator) -> np.ndarray:
    if scenario.data is not None:
        return scenario.data.copy()
    return rng.normal(scenario.theta_true, np.sqrt(scenario.sigma2))


def generate(scenario: GaussianScenario) -> SimulatedProblem:
    """
    Draws the data (unless fixed by the scenario), computes the exact posterior and draws ``S`` posterior samples
    of ``theta``, recording ``1{theta_i > c}`` for every draw. Reproducible from ``scenario.seed``.
    """
    rng = np.random.default_rng(scenario.seed)
    data = _observations(scenario, rng)
    mean, covariance = conjugate_posterior(scenario, data)
    draws = rng.multivariate_normal(mean, covariance, size=scenario.samples, method='cholesky')
    indicators = (draws > scenario.cutpoint).astype(np.int8)
    truth = (scenario.theta_true > scenario.cutpoint).astype(np.int8)
    logger.info('generated %d draws for %d hypotheses (seed %d)', scenario.samples, scenario.m, scenario.seed)
    return SimulatedProblem(scenario, data, truth, IndicatorSampleMatrix(indicators), mean, covariance)


def replicate(scenario: GaussianScenario, count: int, threads: int = None) -> list[SimulatedProblem]:
    """
    Generates ``count`` independent replications, replication ``k`` using the seed ``scenario.seed + k``.
    """
    threads = resolve(threads, 'threads')
    scenarios = [scenario.with_seed(scenario.seed + k) for k in range(count)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(generate, scenarios))
    return [generate(item) for item in scenarios]


# pylint: disable=too-few-public-methods
class MultiplicityReport():
    """
    Output of :func:`multiplicity_probe`.

    Attributes:
        m_small: size of the smaller problem.
        m_large: size of the larger problem.
        v_small: ``Pr(theta_1 > c | D)`` in the smaller problem.
        v_large: ``Pr(theta_1 > c | D)`` in the larger problem.
        difference: ``v_large - v_small``.
    """
    def __init__(self, m_small: int, m_large: int, v_small: float, v_large: float):
        self.m_small = m_small
        self.m_large = m_large
        self.v_small = v_small
        self.v_large = v_large
        self.difference = v_large - v_small

    def as_dict(self) -> dict:
        """
        Returns:
            JSON-compatible :obj:`dict`.
        """
        return {'m_small': self.m_small, 'm_large': self.m_large, 'v_small': self.v_small,
                'v_large': self.v_large, 'difference': self.difference}


def multiplicity_probe(scenario: GaussianScenario, m_small: int, m_large: int) -> MultiplicityReport:
    """
    Compares the exact marginal posterior of hypothesis 1 when tested together with ``m_small - 1`` and with
    ``m_large - 1`` other hypotheses. Both problems share ``X_1``, ``theta_true_1`` and the prior marginal of
    ``theta_1``. Without prior correlation the two values coincide.

    Args:
        scenario: scenario with at least ``m_large`` hypotheses.
        m_small: size of the smaller problem, ``>= 1``.
        m_large: size of the larger problem, ``>= m_small``.
    """
    if not 1 <= m_small <= m_large <= scenario.m:
        raise ScenarioError(f'invalid probe sizes {m_small}, {m_large} for m={scenario.m}')
    data = _observations(scenario, np.random.default_rng(scenario.seed))
    values = list[float]()
    for size in (m_small, m_large):
        problem = scenario.truncated(size, data[:size])
        mean, covariance = conjugate_posterior(problem, problem.data)
        values.append(float(analytic_marginals(mean, covariance, scenario.cutpoint)[0]))
    report = MultiplicityReport(m_small, m_large, values[0], values[1])
    logger.info('hypothesis 1: v=%r with m=%d, v=%r with m=%d', values[0], m_small, values[1], m_large)
    return report
