# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Module containing the decision criteria, the :class:`CriterionSpec` and the error decomposition.

Every objective is written in the maximization form ``g(d) = sum_i d_i * (v_i - lambda / (1 + lambda))``, where
``v_i`` is the marginal posterior (marginal criterion), the joint probability with all other decisions correct
(general criterion) or the joint probability with all preceding decisions correct (ordered criterion). The posterior
risk that is minimized instead equals ``-(1 + lambda) * g(d)``.
"""

import enum
import math
from collections.abc import Sequence
from fractions import Fraction

import numpy as np

from .errors import DataError, InvalidCriterionError
from .posterior_core import (ConditioningMode, IndicatorSampleMatrix, PosteriorSource, as_binary_vector,
                             check_marginals, check_permutation, conditioning_set, joint_event, joint_probability)


class CriterionKind(enum.Enum):
    """
    Enum for the objective that is maximized.
    """

    MARGINAL = 'marginal'
    """Additive marginal risk, decisions depend on the marginal posteriors only."""

    GENERAL = 'nonmarginal-general'
    """Non-marginal criterion, each term requires all other decisions to be correct."""

    ORDERED = 'nonmarginal-ordered'
    """Non-marginal criterion, each term requires all preceding decisions in the working order to be correct."""

    @property
    def mode(self) -> ConditioningMode:
        """:class:`~.ConditioningMode` of the kind, :obj:`None` for :attr:`MARGINAL`."""
        if self == CriterionKind.GENERAL:
            return ConditioningMode.GENERAL
        if self == CriterionKind.ORDERED:
            return ConditioningMode.ORDERED
        return None

    @classmethod
    def from_name(cls, name: str) -> 'CriterionKind':
        """
        Looks up a kind from its value or the short CLI names ``general`` and ``ordered``.
        """
        short_names = {'general': cls.GENERAL, 'ordered': cls.ORDERED}
        if name in short_names:
            return short_names[name]
        try:
            return cls(name)
        except ValueError as error:
            raise InvalidCriterionError(f'unknown criterion {name}') from error


class InitKind(enum.Enum):
    """
    Enum for the named initial decision vectors.
    """

    ZEROS = 'zeros'
    """Accept every null hypothesis."""

    ONES = 'ones'
    """Accept every alternative hypothesis."""


# pylint: disable=too-many-arguments
class CriterionSpec():
    """
    Class describing which objective is maximized and how block relaxation runs on it.

    Args:
        kind: see :class:`CriterionKind`.
        lam: Lagrange multiplier ``lambda``; ``> 0`` for the marginal kind and ``>= 1`` otherwise.
        order: working order of the hypotheses (0-based permutation), only used by the ordered kind.
        sweep: coordinate update order (0-based permutation), ascending index if :obj:`None`.
        init: :class:`InitKind` or an explicit decision vector.
    """
    def __init__(self, kind: CriterionKind, lam: float, order: Sequence[int] = None, sweep: Sequence[int] = None,
                 init=InitKind.ONES):
        lam = float(lam)
        if not math.isfinite(lam):
            raise InvalidCriterionError(f'lambda must be finite, got {lam}')
        if kind == CriterionKind.MARGINAL:
            if lam <= 0:
                raise InvalidCriterionError(f'the marginal criterion requires lambda > 0, got {lam}')
        elif lam < 1:
            raise InvalidCriterionError(
                f'{kind.value} requires lambda >= 1 (the coordinate update threshold argument needs it), got {lam}')
        self.kind = kind
        self.lam = lam
        self.order = self._check_sequence(order, 'order')
        self.sweep = self._check_sequence(sweep, 'sweep')
        if isinstance(init, InitKind):
            self.init = init
        else:
            self.init = as_binary_vector(init)

    @staticmethod
    def _check_sequence(sequence, what: str):
        if sequence is None:
            return None
        sequence = [int(index) for index in sequence]
        try:
            return check_permutation(sequence, len(sequence))
        except DataError as error:
            raise InvalidCriterionError(f'{what}: {error}') from error

    @property
    def threshold(self) -> float:
        """``lambda / (1 + lambda)``."""
        return self.lam / (1.0 + self.lam)

    def _fit(self, sequence, m: int, what: str) -> list[int]:
        if len(sequence) != m:
            raise InvalidCriterionError(f'{what} has length {len(sequence)} but m={m}')
        return list(sequence)

    def working_order(self, m: int) -> list[int]:
        """
        Returns:
            The working order for ``m`` hypotheses, identity if none was given.
        """
        if self.order is None:
            return list(range(m))
        return self._fit(self.order, m, 'order')

    def sweep_order(self, m: int) -> list[int]:
        """
        Returns:
            The coordinate update order for ``m`` hypotheses, ascending index if none was given.
        """
        if self.sweep is None:
            return list(range(m))
        return self._fit(self.sweep, m, 'sweep')

    def initial_vector(self, m: int) -> np.ndarray:
        """
        Returns:
            The initial decision vector for ``m`` hypotheses.
        """
        if not isinstance(self.init, InitKind):
            return as_binary_vector(self.init, m)
        if self.init == InitKind.ZEROS:
            return np.zeros(m, dtype=np.int8)
        return np.ones(m, dtype=np.int8)

    def replace(self, **changes) -> 'CriterionSpec':
        """
        Returns:
            A copy with the given constructor arguments replaced, e.g. ``spec.replace(lam=2.0)``.
        """
        arguments = {'kind': self.kind, 'lam': self.lam, 'order': self.order, 'sweep': self.sweep,
                     'init': self.init}
        arguments.update(changes)
        return CriterionSpec(**arguments)

    def as_dict(self) -> dict:
        """
        Returns:
            JSON-compatible :obj:`dict`, hypothesis indices 1-based.
        """
        init = self.init.value if isinstance(self.init, InitKind) else [int(x) for x in self.init]
        return {
            'kind': self.kind.value,
            'lambda': self.lam,
            'order': None if self.order is None else [index + 1 for index in self.order],
            'sweep': None if self.sweep is None else [index + 1 for index in self.sweep],
            'init': init,
        }


# pylint: disable=too-many-instance-attributes
class ErrorDecomposition():
    """
    Break-up of the ``m`` hypotheses into the two non-error and six error counts of a ``(d, r)`` pair.

    Attributes:
        ne1: ``d=1, r=1, z=1``, correct acceptance of the alternative with all other decisions correct.
        ne2: ``d=0, r=0, z=1``, correct acceptance of the null with all other decisions correct.
        e1: ``d=1, r=0, z=1``.
        e2: ``d=1, r=0, z=0``.
        e3: ``d=1, r=1, z=0``.
        e4: ``d=0, r=0, z=0``.
        e5: ``d=0, r=1, z=1``.
        e6: ``d=0, r=1, z=0``.
    """
    FIELDS = ('ne1', 'ne2', 'e1', 'e2', 'e3', 'e4', 'e5', 'e6')

    def __init__(self, ne1: int, ne2: int, e1: int, e2: int, e3: int, e4: int, e5: int, e6: int):
        self.ne1 = ne1
        self.ne2 = ne2
        self.e1 = e1
        self.e2 = e2
        self.e3 = e3
        self.e4 = e4
        self.e5 = e5
        self.e6 = e6

    def as_tuple(self) -> tuple[int, ...]:
        """
        Returns:
            The counts in the order ``(NE1, NE2, E1, ..., E6)``.
        """
        return tuple(getattr(self, name) for name in self.FIELDS)

    def as_dict(self) -> dict:
        """
        Returns:
            :obj:`dict` of the counts keyed by upper-case names, plus the total.
        """
        counts = {name.upper(): getattr(self, name) for name in self.FIELDS}
        counts['total'] = self.total
        return counts

    @property
    def total(self) -> int:
        """Sum of all eight counts, always ``m``."""
        return sum(self.as_tuple())

    @property
    def true_positives(self) -> int:
        """``TP``, equal to ``NE1``."""
        return self.ne1

    @property
    def controlled_error(self) -> int:
        """``E = E1 + E2 + E3``, the error count that ``lambda`` controls."""
        return self.e1 + self.e2 + self.e3

    def __eq__(self, other) -> bool:
        return isinstance(other, ErrorDecomposition) and self.as_tuple() == other.as_tuple()

    def __repr__(self) -> str:
        return f'ErrorDecomposition{self.as_tuple()}'


def _pair(d: Sequence[int], r: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    d = as_binary_vector(d)
    r = as_binary_vector(r)
    if d.shape != r.shape:
        raise DataError(f'decisions of length {d.shape[0]} and truth of length {r.shape[0]} differ')
    return d, r


def z_vector(d: Sequence[int], r: Sequence[int], mode: ConditioningMode = ConditioningMode.GENERAL) -> np.ndarray:
    """
    Args:
        d: decision vector.
        r: truth vector.
        mode: see :class:`~.ConditioningMode`.

    Returns:
        ``z`` with ``z_i = 1`` iff ``d_j == r_j`` for every ``j`` in the conditioning set of ``i``.
    """
    d, r = _pair(d, r)
    m = d.shape[0]
    correct = d == r
    return np.array([int(all(correct[j] for j in conditioning_set(i, m, mode))) for i in range(m)], dtype=np.int8)


def decompose(d: Sequence[int], r: Sequence[int],
              mode: ConditioningMode = ConditioningMode.GENERAL) -> ErrorDecomposition:
    """
    Counts the non-error and error terms of a decision vector against the truth.

    Returns:
        :class:`ErrorDecomposition`, whose counts sum to ``m``.
    """
    d, r = _pair(d, r)
    z = z_vector(d, r, mode)

    def count(d_value: int, r_value: int, z_value: int) -> int:
        return int(np.count_nonzero((d == d_value) & (r == r_value) & (z == z_value)))

    return ErrorDecomposition(ne1=count(1, 1, 1), ne2=count(0, 0, 1),
                              e1=count(1, 0, 1), e2=count(1, 0, 0), e3=count(1, 1, 0),
                              e4=count(0, 0, 0), e5=count(0, 1, 1), e6=count(0, 1, 0))


def threshold(lam: float) -> float:
    """
    Returns:
        ``lambda / (1 + lambda)``.
    """
    return lam / (1.0 + lam)


def exact_threshold(lam: float) -> Fraction:
    """
    Returns:
        ``lambda / (1 + lambda)`` as exact fraction of the binary value of ``lam``.
    """
    lam = Fraction(float(lam))
    return lam / (1 + lam)


def ordered_event(d: Sequence[int], position: int, order: Sequence[int],
                  target: int = 1) -> tuple[list[int], list[int]]:
    """
    Returns:
        Columns and values of the event of :func:`ordered_joint`.
    """
    columns = [order[k] for k in range(position + 1)]
    return columns, [int(d[column]) for column in columns[:-1]] + [target]


def ordered_joint(source: PosteriorSource, d: Sequence[int], position: int, order: Sequence[int],
                  target: int = 1) -> float:
    """
    Joint probability of the ordered criterion for the hypothesis at ``position`` of the working order, evaluated on
    the original labels (no relabeled copy of the source is made).

    Args:
        source: posterior backend.
        d: decision vector in original labels.
        position: 0-based position in ``order``.
        order: working order.
        target: 0 or 1.
    """
    return source.event_probability(*ordered_event(d, position, order, target))


def objective_general(source: PosteriorSource, d: Sequence[int], lam: float) -> float:
    """
    Returns:
        ``g(d) = sum_i d_i * (v_{i|d_j, j != i} - lambda / (1 + lambda))``.
    """
    d = source.check_decisions(d)
    cut = threshold(lam)
    return float(sum(joint_probability(source, d, i, ConditioningMode.GENERAL, 1) - cut
                     for i in np.flatnonzero(d)))


def objective_ordered(source: PosteriorSource, d: Sequence[int], lam: float, order: Sequence[int] = None) -> float:
    """
    Args:
        source: posterior backend.
        d: decision vector in original labels.
        lam: ``lambda``.
        order: working order, identity if :obj:`None`.

    Returns:
        ``sum_i d_i * (v_{i|1..i-1} - lambda / (1 + lambda))`` along the working order.
    """
    d = source.check_decisions(d)
    m = source.n_hypotheses
    order = list(range(m)) if order is None else check_permutation(order, m)
    cut = threshold(lam)
    return float(sum(ordered_joint(source, d, position, order) - cut
                     for position, index in enumerate(order) if d[index] == 1))


def guindani_risk(v: Sequence[float], d: Sequence[int], lam: float) -> float:
    """
    Posterior risk of the additive marginal loss.

    Returns:
        ``-(1 + lambda) * sum_i d_i * (v_i - lambda / (1 + lambda))``.
    """
    v = check_marginals(v)
    d = as_binary_vector(d, v.shape[0])
    return float(-(1.0 + lam) * np.sum(d * (v - threshold(lam))))


def objective_marginal(v: Sequence[float], d: Sequence[int], lam: float) -> float:
    """
    Returns:
        ``sum_i d_i * (v_i - lambda / (1 + lambda))``, the maximization form of :func:`guindani_risk`.
    """
    v = check_marginals(v)
    d = as_binary_vector(d, v.shape[0])
    return float(np.sum(d * (v - threshold(lam))))


def marginal_expected_error(v: Sequence[float], d: Sequence[int]) -> float:
    """
    Returns:
        Posterior expected number of false positives ``sum_i d_i * (1 - v_i)``.
    """
    v = check_marginals(v)
    d = as_binary_vector(d, v.shape[0])
    return float(np.sum(d * (1.0 - v)))


def expected_error(source: PosteriorSource, d: Sequence[int], mode: ConditioningMode = ConditioningMode.GENERAL,
                   order: Sequence[int] = None) -> float:
    """
    Posterior expectation of the controlled error ``E = sum_i d_i * (1 - r_i * z_i)``.

    Args:
        source: posterior backend.
        d: decision vector.
        mode: see :class:`~.ConditioningMode`.
        order: working order for the ordered mode, identity if :obj:`None`.
    """
    d = source.check_decisions(d)
    m = source.n_hypotheses
    if mode == ConditioningMode.ORDERED:
        order = list(range(m)) if order is None else check_permutation(order, m)
        return float(sum(1.0 - ordered_joint(source, d, position, order)
                         for position, index in enumerate(order) if d[index] == 1))
    return float(sum(1.0 - joint_probability(source, d, i, mode, 1) for i in np.flatnonzero(d)))


def evaluate(source: PosteriorSource, spec: CriterionSpec, d: Sequence[int]) -> float:
    """
    Evaluates the objective selected by ``spec.kind`` in its maximization form.
    """
    if spec.kind == CriterionKind.MARGINAL:
        return objective_marginal(source.marginals(), d, spec.lam)
    if spec.kind == CriterionKind.GENERAL:
        return objective_general(source, d, spec.lam)
    return objective_ordered(source, d, spec.lam, spec.working_order(source.n_hypotheses))


def exact_objective(samples: IndicatorSampleMatrix, spec: CriterionSpec, d: Sequence[int]) -> Fraction:
    """
    Objective of :func:`evaluate` computed on the event counts of a sample matrix. Equal objectives compare
    equal.
    """
    d = samples.check_decisions(d)
    m = samples.n_hypotheses
    if spec.kind == CriterionKind.MARGINAL:
        events = [([i], [1]) for i in np.flatnonzero(d)]
    elif spec.kind == CriterionKind.GENERAL:
        events = [joint_event(samples, d, i, ConditioningMode.GENERAL) for i in np.flatnonzero(d)]
    else:
        order = spec.working_order(m)
        events = [ordered_event(d, position, order) for position, index in enumerate(order) if d[index] == 1]
    cut = exact_threshold(spec.lam)
    return sum((samples.event_fraction(columns, values) - cut for columns, values in events), Fraction(0))


def constraint(source: PosteriorSource, spec: CriterionSpec, d: Sequence[int]) -> float:
    """
    Evaluates the expected error that calibration keeps below ``alpha`` for the kind of ``spec``.
    """
    if spec.kind == CriterionKind.MARGINAL:
        return marginal_expected_error(source.marginals(), d)
    return expected_error(source, d, spec.kind.mode, spec.working_order(source.n_hypotheses))
