# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Module containing the posterior sources and every posterior probability used by the decision criteria.

A posterior source is either an :class:`IndicatorSampleMatrix` holding ``S`` posterior draws of the hypothesis
indicators, or an exact :class:`ProbabilityTable` over all ``2**m`` indicator configurations. Both answer the same
question: the probability of an event that fixes some indicators to given values. For a sample matrix every event is
estimated from the same rows, so nested events have nested estimates and disjoint unions add up on the counts.

Hypotheses are addressed by 0-based indices throughout the Python API.
"""

import enum
import logging
from collections.abc import Mapping, Sequence
from fractions import Fraction

import numpy as np

from .errors import DataError, UndefinedConditionalError

logger = logging.getLogger(__name__)

TABLE_TOLERANCE = 1e-12
"""Tolerance for the total mass of a :class:`ProbabilityTable`."""


class ConditioningMode(enum.Enum):
    """
    Enum for the set of other hypotheses whose decisions must be correct in a joint probability.
    """

    GENERAL = 'general'
    """All other hypotheses, ``{j != i}``."""

    ORDERED = 'ordered'
    """Preceding hypotheses in the working order, ``{j < i}``."""


def conditioning_set(i: int, m: int, mode: ConditioningMode) -> list[int]:
    """
    Args:
        i: index of the hypothesis.
        m: number of hypotheses.
        mode: see :class:`ConditioningMode`.

    Returns:
        Indices ``j`` whose decisions enter the event of hypothesis ``i``.
    """
    if mode == ConditioningMode.ORDERED:
        return list(range(i))
    return [j for j in range(m) if j != i]


class PosteriorSource():
    """
    Virtual base class of the posterior backends.

    Attributes:
        names: :obj:`list` of :obj:`str` with one name per hypothesis.
    """
    def __init__(self, names: Sequence[str] = None):
        m = self.n_hypotheses
        if names is None:
            names = [f'h{index + 1}' for index in range(m)]
        names = [str(name) for name in names]
        if len(names) != m:
            raise DataError(f'got {len(names)} hypothesis names for {m} hypotheses')
        self.names = names

    @property
    def n_hypotheses(self) -> int:
        """Number of hypotheses ``m``."""
        raise NotImplementedError

    def event_probability(self, columns: Sequence[int], values: Sequence[int]) -> float:
        """
        Virtual function returning the posterior probability of ``{h_c = v for c, v in zip(columns, values)}``.
        An empty event is the sure event.
        """
        raise NotImplementedError

    def marginals(self) -> np.ndarray:
        """
        Virtual function returning the vector of marginal posterior probabilities ``v_i``.
        """
        raise NotImplementedError

    def reordered(self, order: Sequence[int]) -> 'PosteriorSource':
        """
        Virtual function returning the same posterior with hypotheses relabeled such that new hypothesis ``k`` is the
        old hypothesis ``order[k]``.
        """
        raise NotImplementedError

    def check_index(self, i: int) -> int:
        """
        Validates a hypothesis index.

        Args:
            i: 0-based index.

        Returns:
            ``i`` as :obj:`int`.
        """
        m = self.n_hypotheses
        if not 0 <= int(i) < m:
            raise DataError(f'hypothesis index {i} out of range for m={m}')
        return int(i)

    def check_decisions(self, d: Sequence[int]) -> np.ndarray:
        """
        Validates a decision vector against this source.

        Args:
            d: binary sequence of length ``m``.

        Returns:
            The decisions as :obj:`numpy.ndarray` of ``int8``.
        """
        return as_binary_vector(d, self.n_hypotheses)


def as_binary_vector(d: Sequence[int], m: int = None) -> np.ndarray:
    """
    Converts a sequence into a binary vector, checking the entries and optionally the length.

    Args:
        d: sequence of 0/1 values.
        m: expected length or :obj:`None`.

    Returns:
        :obj:`numpy.ndarray` of ``int8``.
    """
    array = np.asarray(d)
    if array.ndim != 1:
        raise DataError('decision vectors must be one-dimensional')
    if m is not None and array.shape[0] != m:
        raise DataError(f'vector of length {array.shape[0]} does not match m={m}')
    if not np.isin(array, (0, 1)).all():
        raise DataError('vector entries must be 0 or 1')
    return array.astype(np.int8)


def check_permutation(order: Sequence[int], m: int) -> list[int]:
    """
    Validates a 0-based permutation of ``range(m)``.

    Returns:
        The permutation as :obj:`list` of :obj:`int`.
    """
    order = [int(index) for index in order]
    if sorted(order) != list(range(m)):
        raise DataError(f'{[index + 1 for index in order]} is not a permutation of 1..{m}')
    return order


class IndicatorSampleMatrix(PosteriorSource):
    """
    ``S x m`` binary matrix of posterior draws, ``values[s, i] == 1`` meaning that draw ``s`` has ``theta_i`` in the
    alternative. The matrix is read-only after construction.

    Args:
        values: array-like of shape ``(S, m)`` with entries 0 or 1.
        names: optional hypothesis names.
    """
    def __init__(self, values, names: Sequence[str] = None):
        array = np.asarray(values)
        if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] < 1:
            raise DataError(f'sample matrix must have shape (S>=1, m>=1), got {array.shape}')
        if not np.isin(array, (0, 1)).all():
            raise DataError('sample matrix entries must be exactly 0 or 1')
        self.values = array.astype(bool)
        self.values.flags.writeable = False
        super().__init__(names)

    @property
    def n_hypotheses(self) -> int:
        return self.values.shape[1]

    @property
    def n_samples(self) -> int:
        """Number of posterior draws ``S``."""
        return self.values.shape[0]

    def event_count(self, columns: Sequence[int], values: Sequence[int]) -> int:
        """
        Returns:
            Number of rows matching the pattern ``{h_c = v}``.
        """
        columns = list(columns)
        if not columns:
            return self.n_samples
        pattern = np.asarray(values, dtype=bool)
        matches = np.all(self.values[:, columns] == pattern, axis=1)
        return int(np.count_nonzero(matches))

    def event_probability(self, columns: Sequence[int], values: Sequence[int]) -> float:
        return self.event_count(columns, values) / self.n_samples

    def event_fraction(self, columns: Sequence[int], values: Sequence[int]) -> Fraction:
        """
        Returns:
            Exact relative frequency of the pattern ``{h_c = v}``.
        """
        return Fraction(self.event_count(columns, values), self.n_samples)

    def marginals(self) -> np.ndarray:
        return self.values.sum(axis=0) / self.n_samples

    def reordered(self, order: Sequence[int]) -> 'IndicatorSampleMatrix':
        order = check_permutation(order, self.n_hypotheses)
        return IndicatorSampleMatrix(self.values[:, order], [self.names[index] for index in order])


class ProbabilityTable(PosteriorSource):
    """
    Exact posterior over the ``2**m`` indicator configurations.

    The mass is stored as an array of shape ``(2,) * m`` such that ``mass[h_1, ..., h_m]`` is the probability of the
    configuration. A flat array of length ``2**m`` is interpreted in the same (C) order, i.e. hypothesis 1 is the most
    significant bit of the flat index.

    Args:
        mass: :obj:`dict` mapping configuration tuples to probabilities, or an array as described above.
        m: number of hypotheses, required when ``mass`` is a :obj:`dict`.
        names: optional hypothesis names.
    """
    def __init__(self, mass, m: int = None, names: Sequence[str] = None):
        if isinstance(mass, Mapping):
            if m is None:
                raise DataError('m is required when the table is given as a mapping')
            array = np.zeros((2,) * m)
            for config, probability in mass.items():
                array[tuple(as_binary_vector(config, m))] = probability
        else:
            array = np.array(mass, dtype=float)
            if array.ndim == 1:
                size = array.shape[0]
                m = size.bit_length() - 1
                if size < 2 or 2 ** m != size:
                    raise DataError(f'flat table length {size} is not a power of two')
                array = array.reshape((2,) * m)
            elif array.shape != (2,) * array.ndim:
                raise DataError(f'table of shape {array.shape} is not of shape (2,)*m')
        if array.ndim < 1:
            raise DataError('a table needs at least one hypothesis')
        if np.any(array < 0) or not np.all(np.isfinite(array)):
            raise DataError('table masses must be finite and non-negative')
        total = float(array.sum())
        if abs(total - 1.0) > TABLE_TOLERANCE:
            raise DataError(f'table masses sum to {total!r}, not 1')
        self.mass = array
        self.mass.flags.writeable = False
        super().__init__(names)

    @classmethod
    def from_marginals(cls, marginals: Sequence[float], names: Sequence[str] = None) -> 'ProbabilityTable':
        """
        Builds the product table of independent hypotheses.

        Args:
            marginals: ``v_i`` for every hypothesis, each in ``[0, 1]``.
        """
        marginals = check_marginals(marginals)
        mass = np.ones(())
        for probability in marginals:
            mass = np.multiply.outer(mass, np.array([1.0 - probability, probability]))
        return cls(mass, names=names)

    @classmethod
    def from_samples(cls, samples: IndicatorSampleMatrix) -> 'ProbabilityTable':
        """
        Builds the empirical table of a sample matrix.
        """
        m = samples.n_hypotheses
        weights = 2 ** np.arange(m - 1, -1, -1)
        flat = np.bincount(samples.values.astype(np.int64) @ weights, minlength=2 ** m)
        return cls(flat / samples.n_samples, names=samples.names)

    @property
    def n_hypotheses(self) -> int:
        return self.mass.ndim

    def event_probability(self, columns: Sequence[int], values: Sequence[int]) -> float:
        index = [slice(None)] * self.n_hypotheses
        for column, value in zip(columns, values):
            index[column] = int(value)
        return float(np.sum(self.mass[tuple(index)]))

    def marginals(self) -> np.ndarray:
        m = self.n_hypotheses
        return np.array([self.event_probability([i], [1]) for i in range(m)])

    def reordered(self, order: Sequence[int]) -> 'ProbabilityTable':
        order = check_permutation(order, self.n_hypotheses)
        return ProbabilityTable(np.transpose(self.mass, order), names=[self.names[index] for index in order])


class HypothesisPriorOdds():
    """
    Prior odds ``Pr(H_0i) / Pr(H_1i)`` for every hypothesis.

    Args:
        odds: strictly positive and finite values.
    """
    def __init__(self, odds: Sequence[float]):
        values = np.asarray(odds, dtype=float)
        if values.ndim != 1 or values.shape[0] < 1:
            raise DataError('prior odds must be a non-empty vector')
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise DataError('prior odds must be strictly positive and finite')
        self.values = values

    @classmethod
    def uniform(cls, m: int) -> 'HypothesisPriorOdds':
        """
        Returns:
            Prior odds of one for ``m`` hypotheses.
        """
        return cls(np.ones(m))

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i: int) -> float:
        return float(self.values[i])


def check_marginals(marginals: Sequence[float]) -> np.ndarray:
    """
    Returns:
        ``marginals`` as float array after checking that every entry is in ``[0, 1]``.
    """
    values = np.asarray(marginals, dtype=float)
    if values.ndim != 1:
        raise DataError('marginal probabilities must be a vector')
    if np.any(~np.isfinite(values)) or np.any(values < 0) or np.any(values > 1):
        raise DataError('marginal probabilities must lie in [0, 1]')
    return values


def marginal_posterior(source: PosteriorSource, i: int) -> float:
    """
    Args:
        source: posterior backend.
        i: index of the hypothesis.

    Returns:
        ``v_i = Pr(H_1i | D)``.
    """
    i = source.check_index(i)
    return source.event_probability([i], [1])


def joint_event(source: PosteriorSource, d: Sequence[int], i: int,
                mode: ConditioningMode = ConditioningMode.GENERAL, target: int = 1) -> tuple[list[int], list[int]]:
    """
    Returns:
        Columns and values of the event of :func:`joint_probability`, hypothesis ``i`` first.
    """
    i = source.check_index(i)
    d = source.check_decisions(d)
    if target not in (0, 1):
        raise DataError(f'target must be 0 or 1, got {target}')
    others = conditioning_set(i, source.n_hypotheses, mode)
    return [i] + others, [target] + [int(d[j]) for j in others]


def joint_probability(source: PosteriorSource, d: Sequence[int], i: int,
                      mode: ConditioningMode = ConditioningMode.GENERAL, target: int = 1) -> float:
    """
    Probability that hypothesis ``i`` has indicator ``target`` and every decision in the conditioning set is correct.
    In ordered mode the hypotheses must already be arranged in the working order.

    Args:
        source: posterior backend.
        d: decision vector; ``d[i]`` itself is ignored.
        i: index of the hypothesis.
        mode: see :class:`ConditioningMode`.
        target: 0 or 1.

    Returns:
        ``Pr({h_i = target} and {h_j = d_j for j in the conditioning set} | D)``.
    """
    return source.event_probability(*joint_event(source, d, i, mode, target))


def rest_event_probability(source: PosteriorSource, d: Sequence[int], i: int,
                           mode: ConditioningMode = ConditioningMode.GENERAL) -> float:
    """
    Returns:
        ``w_-i``, the probability that every decision in the conditioning set of ``i`` is correct. It does not depend
        on ``d[i]`` and equals the sum of the joint probabilities of both targets exactly.
    """
    return joint_probability(source, d, i, mode, 1) + joint_probability(source, d, i, mode, 0)


def conditional_probability(source: PosteriorSource, d: Sequence[int], i: int,
                            mode: ConditioningMode = ConditioningMode.GENERAL, target: int = 1) -> float:
    """
    Conditional probability of ``{h_i = target}`` given that all decisions in the conditioning set are correct.
    Diagnostic only, the optimizers never divide by ``w_-i``.

    Raises:
        UndefinedConditionalError: if ``w_-i`` is zero.
    """
    rest = rest_event_probability(source, d, i, mode)
    if rest <= 0:
        raise UndefinedConditionalError(f'conditioning event of hypothesis {i + 1} has probability zero')
    return joint_probability(source, d, i, mode, target) / rest


def conditional_threshold(lam: float, rest: float) -> float:
    """
    Threshold ``lambda / ((1 + lambda) * w_-i)`` that the conditional probability of :func:`conditional_probability`
    has to exceed once the coordinate objective is divided by ``w_-i``.

    Raises:
        UndefinedConditionalError: if ``rest`` is zero.
    """
    if rest <= 0:
        raise UndefinedConditionalError('conditioning event has probability zero')
    return lam / ((1.0 + lam) * rest)


def bayes_factor(source: PosteriorSource, odds: HypothesisPriorOdds, i: int) -> float:
    """
    Marginal Bayes factor of hypothesis ``i``, posterior odds of the alternative times prior odds of the null.

    Returns:
        ``v_i / (1 - v_i) * odds_i``, :obj:`math.inf` when ``v_i == 1``.
    """
    v = marginal_posterior(source, i)
    if v >= 1.0:
        return float('inf')
    return v / (1.0 - v) * odds[i]


def rank_by_bayes_factor(source: PosteriorSource, odds: HypothesisPriorOdds = None) -> list[int]:
    """
    Orders the hypotheses by non-increasing Bayes factor, ties keep the original order.

    Args:
        source: posterior backend.
        odds: prior odds, uniform if :obj:`None`.

    Returns:
        Permutation of the 0-based hypothesis indices.
    """
    m = source.n_hypotheses
    if odds is None:
        odds = HypothesisPriorOdds.uniform(m)
    if len(odds) != m:
        raise DataError(f'got {len(odds)} prior odds for m={m}')
    factors = [bayes_factor(source, odds, i) for i in range(m)]
    logger.debug('Bayes factors %s', factors)
    return sorted(range(m), key=lambda index: -factors[index])


def factorized_joint(marginals: Sequence[float], d: Sequence[int], i: int, target: int = 1,
                     mode: ConditioningMode = ConditioningMode.GENERAL) -> float:
    """
    Joint probability of :func:`joint_probability` under independence, as a product of marginals.

    Args:
        marginals: ``v_j`` for every hypothesis.
        d: decision vector.
        i: index of the hypothesis.
        target: 0 or 1.
        mode: see :class:`ConditioningMode`.
    """
    v = check_marginals(marginals)
    m = v.shape[0]
    d = as_binary_vector(d, m)
    if not 0 <= i < m:
        raise DataError(f'hypothesis index {i} out of range for m={m}')
    probability = v[i] if target == 1 else 1.0 - v[i]
    for j in conditioning_set(i, m, mode):
        probability *= v[j] if d[j] == 1 else 1.0 - v[j]
    return float(probability)


def nested_probabilities(source: PosteriorSource, order: Sequence[int] = None) -> np.ndarray:
    """
    Probabilities of the nested events ``{h_o1 = 1, ..., h_ok = 1}`` for ``k = 1..m`` along ``order``.
    On a sample matrix they are non-increasing exactly.

    Args:
        source: posterior backend.
        order: working order, identity if :obj:`None`.
    """
    m = source.n_hypotheses
    order = list(range(m)) if order is None else check_permutation(order, m)
    return np.array([source.event_probability(order[:k + 1], [1] * (k + 1)) for k in range(m)])
