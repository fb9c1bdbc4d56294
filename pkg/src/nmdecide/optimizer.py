# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Module producing optimal decision vectors.

Contains the closed-form marginal oracle and its λ calibration, block relaxation (coordinate-wise maximization over
binary vectors) for every :class:`~.CriterionKind`, the step-down and step-up procedures of the ordered criterion, the
brute-force global oracle and the thumb-rule calibration of λ for the non-marginal criteria.

A coordinate update sets ``d_i = 1`` if and only if the objective with ``d_i = 1`` strictly exceeds the objective
with ``d_i = 0``, all other coordinates held at their current values. Ties keep ``d_i = 0``.
"""

import functools
import itertools
import logging
from collections.abc import Callable, Sequence

import numpy as np

from .config import Settings, resolve
from .criteria import (CriterionKind, CriterionSpec, InitKind, constraint, evaluate, exact_objective,
                       marginal_expected_error, objective_marginal, threshold)
from .errors import (DataError, InvalidCriterionError, MaxSweepsExceededError, NonConvergenceError,
                     ProblemTooLargeError, RelaxationCycleError, UndefinedConditionalError)
from .posterior_core import (ConditioningMode, IndicatorSampleMatrix, PosteriorSource, check_marginals,
                             check_permutation, conditional_probability, conditional_threshold, marginal_posterior,
                             rest_event_probability)

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-12
"""Largest objective gain on a :class:`~.ProbabilityTable` that still counts as a tie."""


class Objective():
    """
    Objective of a criterion bound to a posterior source.

    On an :class:`~.IndicatorSampleMatrix` the values are exact :class:`~fractions.Fraction` objects computed on the
    event counts. On a :class:`~.ProbabilityTable` they are floats and gains up to :data:`TIE_TOLERANCE` are ties.

    Args:
        source: posterior backend.
        spec: see :class:`~.CriterionSpec`.
    """
    def __init__(self, source: PosteriorSource, spec: CriterionSpec):
        self.exact = isinstance(source, IndicatorSampleMatrix)
        self.tolerance = 0 if self.exact else TIE_TOLERANCE
        if self.exact:
            self._evaluate = functools.partial(exact_objective, source, spec)
        elif spec.kind == CriterionKind.MARGINAL:
            marginals = source.marginals()
            self._evaluate = lambda d: objective_marginal(marginals, d, spec.lam)
        else:
            self._evaluate = lambda d: evaluate(source, spec, d)

    def __call__(self, d: np.ndarray):
        return self._evaluate(d)

    def improves(self, value, reference) -> bool:
        """
        Returns:
            :obj:`True` if ``value`` exceeds ``reference`` by more than the tie tolerance.
        """
        return value - reference > self.tolerance


def make_objective(source: PosteriorSource, spec: CriterionSpec) -> Objective:
    """
    Binds the objective of ``spec`` to ``source``.
    """
    return Objective(source, spec)


def best_response(objective: Objective, d: np.ndarray, i: int) -> tuple[int, float]:
    """
    Evaluates the objective at ``d_i = 1`` and ``d_i = 0``.

    Returns:
        Tuple of the maximizing value of ``d_i`` (``1`` only on strict improvement) and the objective value there.
    """
    with_one = d.copy()
    with_one[i] = 1
    with_zero = d.copy()
    with_zero[i] = 0
    value_one = objective(with_one)
    value_zero = objective(with_zero)
    if objective.improves(value_one, value_zero):
        return 1, value_one
    return 0, value_zero


def is_fixed_point(source: PosteriorSource, spec: CriterionSpec, d: Sequence[int]) -> bool:
    """
    Returns:
        :obj:`True` if no single coordinate update changes ``d``.
    """
    d = source.check_decisions(d)
    objective = make_objective(source, spec)
    return all(best_response(objective, d, i)[0] == d[i] for i in range(d.shape[0]))


# pylint: disable=too-many-instance-attributes
class RelaxationTrace():
    """
    Record of a relaxation run.

    Attributes:
        initial: initial decision vector.
        sweep_order: coordinate update order (0-based).
        snapshots: decision vector after every evaluated sweep.
        values: objective value at the start and after every coordinate update.
        sweeps: number of sweeps that changed the vector (the sweeps to converge).
        evaluated_sweeps: number of sweeps run, including the final confirming sweep.
        converged: :obj:`True` once a sweep left the vector unchanged.
        cycle_detected: :obj:`True` if the sweep map revisited a state.
        cycle_states: the revisited states, in visiting order.
        shortcut: :obj:`True` for the step-down and step-up procedures.
        shortcut_is_fixed_point: whether the shortcut output is a fixed point of the full relaxation.
        refined: fixed point of the full relaxation started at the shortcut output.
    """
    def __init__(self, initial: np.ndarray, sweep_order: Sequence[int], shortcut: bool = False):
        self.initial = initial.copy()
        self.sweep_order = list(sweep_order)
        self.snapshots = list[np.ndarray]()
        self.values = list[float]()
        self.sweeps = 0
        self.evaluated_sweeps = 0
        self.converged = False
        self.cycle_detected = False
        self.cycle_states = list[np.ndarray]()
        self.shortcut = shortcut
        self.shortcut_is_fixed_point = None
        self.refined = None

    @property
    def final(self) -> np.ndarray:
        """Last snapshot, the initial vector if no sweep ran."""
        if self.snapshots:
            return self.snapshots[-1]
        return self.initial

    def is_ascending(self) -> bool:
        """
        Returns:
            :obj:`True` if the objective never decreased between consecutive recorded values, up to
            :data:`TIE_TOLERANCE`.
        """
        return all(later >= earlier - TIE_TOLERANCE for earlier, later in zip(self.values, self.values[1:]))

    def as_dict(self) -> dict:
        """
        Returns:
            JSON-compatible :obj:`dict`, hypothesis indices 1-based.
        """
        return {
            'initial': _as_list(self.initial),
            'sweep_order': [index + 1 for index in self.sweep_order],
            'snapshots': [_as_list(snapshot) for snapshot in self.snapshots],
            'sweeps': self.sweeps,
            'evaluated_sweeps': self.evaluated_sweeps,
            'converged': self.converged,
            'cycle_detected': self.cycle_detected,
            'cycle_states': [_as_list(state) for state in self.cycle_states],
            'shortcut': self.shortcut,
            'shortcut_is_fixed_point': self.shortcut_is_fixed_point,
            'refined': None if self.refined is None else _as_list(self.refined),
        }


def _as_list(d: np.ndarray) -> list[int]:
    return [int(x) for x in d]


class _SweepRecorder():
    """
    Bookkeeping shared by all relaxation loops: sweep counting, convergence and cycle detection.
    """
    def __init__(self, trace: RelaxationTrace, max_sweeps: int):
        self.trace = trace
        self.max_sweeps = max_sweeps
        self.visited = {tuple(trace.initial): 0}
        self.history = [trace.initial.copy()]

    def run(self, d: np.ndarray, sweep: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        trace = self.trace
        while trace.evaluated_sweeps < self.max_sweeps:
            new = sweep(d)
            trace.evaluated_sweeps += 1
            trace.snapshots.append(new.copy())
            logger.debug('sweep %d: %s', trace.evaluated_sweeps, _as_list(new))
            if np.array_equal(new, d):
                trace.converged = True
                return new
            trace.sweeps += 1
            key = tuple(new)
            if key in self.visited:
                trace.cycle_detected = True
                trace.cycle_states = [state.copy() for state in self.history[self.visited[key]:]]
                raise RelaxationCycleError(f'sweep map revisited {_as_list(new)} after {trace.sweeps} sweeps', trace)
            self.visited[key] = len(self.history)
            self.history.append(new.copy())
            d = new
        raise MaxSweepsExceededError(f'no fixed point after {self.max_sweeps} sweeps', trace)


def block_relaxation(source: PosteriorSource, spec: CriterionSpec,
                     max_sweeps: int = None) -> tuple[np.ndarray, RelaxationTrace]:
    """
    Maximizes the objective of ``spec`` coordinate by coordinate, sweeping in ``spec.sweep`` order from
    ``spec.init`` until a sweep leaves the decisions unchanged.

    Args:
        source: posterior backend.
        spec: see :class:`~.CriterionSpec`. The marginal kind reproduces the closed-form oracle.
        max_sweeps: sweep cap, see :class:`~.Settings`.

    Returns:
        Tuple of the fixed point and the :class:`RelaxationTrace`.

    Raises:
        RelaxationCycleError: the sweep map revisited a state.
        MaxSweepsExceededError: no fixed point within ``max_sweeps``.
    """
    m = source.n_hypotheses
    max_sweeps = resolve(max_sweeps, 'max_sweeps')
    objective = make_objective(source, spec)
    order = spec.sweep_order(m)
    d = spec.initial_vector(m)
    trace = RelaxationTrace(d, order)
    trace.values.append(float(objective(d)))

    def sweep(current: np.ndarray) -> np.ndarray:
        new = current.copy()
        for i in order:
            new[i], value = best_response(objective, new, i)
            trace.values.append(float(value))
        return new

    result = _SweepRecorder(trace, max_sweeps).run(d, sweep)
    logger.info('%s relaxation converged after %d sweeps to %s', spec.kind.value, trace.sweeps, _as_list(result))
    return result, trace


def _refine(source: PosteriorSource, spec: CriterionSpec, d: np.ndarray, trace: RelaxationTrace,
            max_sweeps: int) -> None:
    trace.shortcut_is_fixed_point = is_fixed_point(source, spec, d)
    try:
        trace.refined, _ = block_relaxation(source, spec.replace(init=d), max_sweeps)
    except NonConvergenceError as error:
        logger.warning('full relaxation from the shortcut output did not converge: %s', error)
    if not trace.shortcut_is_fixed_point:
        logger.warning('shortcut output %s is not a fixed point of the full relaxation', _as_list(d))


def step_down_ordered(source: PosteriorSource, lam: float, order: Sequence[int] = None,
                      max_sweeps: int = None) -> tuple[np.ndarray, RelaxationTrace]:
    """
    Step-down procedure of the ordered criterion. Starts from all ones and updates the decisions from the last to the
    first hypothesis of the working order. Once an update yields ``d_i = 1``, all decisions before ``i`` are set to
    one and the sweep ends. Sweeps repeat until one leaves the decisions unchanged.

    Args:
        source: posterior backend.
        lam: ``lambda >= 1``.
        order: working order, typically :func:`~.rank_by_bayes_factor`; identity if :obj:`None`.
        max_sweeps: sweep cap, see :class:`~.Settings`.

    Returns:
        Tuple of the decisions (monotone along the working order) and the :class:`RelaxationTrace`.
    """
    return _stepwise(source, lam, order, max_sweeps, step_down=True)


def step_up_ordered(source: PosteriorSource, lam: float, order: Sequence[int] = None,
                    max_sweeps: int = None) -> tuple[np.ndarray, RelaxationTrace]:
    """
    Step-up procedure of the ordered criterion, the mirror image of :func:`step_down_ordered`: starts from all zeros,
    updates from the first to the last hypothesis and, once an update yields ``d_i = 0``, sets all later decisions
    to zero.
    """
    return _stepwise(source, lam, order, max_sweeps, step_down=False)


# pylint: disable=too-many-arguments
def _stepwise(source: PosteriorSource, lam: float, order: Sequence[int], max_sweeps: int,
              step_down: bool) -> tuple[np.ndarray, RelaxationTrace]:
    m = source.n_hypotheses
    order = list(range(m)) if order is None else check_permutation(order, m)
    max_sweeps = resolve(max_sweeps, 'max_sweeps')
    positions = list(reversed(range(m))) if step_down else list(range(m))
    sweep_order = [order[position] for position in positions]
    init = InitKind.ONES if step_down else InitKind.ZEROS
    spec = CriterionSpec(CriterionKind.ORDERED, lam, order=order, sweep=sweep_order, init=init)
    objective = make_objective(source, spec)
    d = spec.initial_vector(m)
    trace = RelaxationTrace(d, sweep_order, shortcut=True)
    trace.values.append(float(objective(d)))
    stop_value = 1 if step_down else 0

    def sweep(current: np.ndarray) -> np.ndarray:
        new = current.copy()
        for position in positions:
            i = order[position]
            new[i], value = best_response(objective, new, i)
            trace.values.append(float(value))
            if new[i] == stop_value:
                rest = order[:position] if step_down else order[position + 1:]
                new[rest] = stop_value
                trace.values.append(float(objective(new)))
                break
        return new

    result = _SweepRecorder(trace, max_sweeps).run(d, sweep)
    name = 'step-down' if step_down else 'step-up'
    logger.info('%s converged after %d sweeps to %s', name, trace.sweeps, _as_list(result))
    _refine(source, spec, result, trace, max_sweeps)
    return result, trace


def conditional_updates(source: PosteriorSource, spec: CriterionSpec, d: Sequence[int]) -> list[dict]:
    """
    Conditional form of the own term of every coordinate update at ``d``: the probability of ``h_i = 1`` given that
    the decisions in the conditioning set of ``i`` are correct, and the threshold ``lambda / ((1 + lambda) w_-i)`` it
    is compared with. The other active terms of the general criterion are not part of this view.

    Returns:
        One :obj:`dict` per hypothesis with the 1-based ``hypothesis``, ``rest`` (``w_-i``), ``conditional`` and
        ``threshold``. The last two are :obj:`None` when ``w_-i`` is zero.
    """
    d = source.check_decisions(d)
    m = source.n_hypotheses
    if spec.kind == CriterionKind.ORDERED:
        order = spec.working_order(m)
        view, view_d, mode = source.reordered(order), d[order], ConditioningMode.ORDERED
    else:
        order = list(range(m))
        view, view_d, mode = source, d, ConditioningMode.GENERAL
    entries = list[dict]()
    for position, index in enumerate(order):
        if spec.kind == CriterionKind.MARGINAL:
            rest = 1.0
            conditional = marginal_posterior(source, index)
        else:
            rest = rest_event_probability(view, view_d, position, mode)
            try:
                conditional = conditional_probability(view, view_d, position, mode)
            except UndefinedConditionalError:
                conditional = None
        cut = None if conditional is None else conditional_threshold(spec.lam, rest)
        entries.append({'hypothesis': index + 1, 'rest': rest, 'conditional': conditional, 'threshold': cut})
    return sorted(entries, key=lambda entry: entry['hypothesis'])


def is_monotone(d: Sequence[int], order: Sequence[int]) -> bool:
    """
    Returns:
        :obj:`True` if ``d_i = 1`` implies ``d_j = 1`` for every ``j`` before ``i`` in the working order.
    """
    along = [int(d[index]) for index in order]
    return all(earlier >= later for earlier, later in zip(along, along[1:]))


def brute_force(source: PosteriorSource, spec: CriterionSpec,
                max_m: int = None) -> tuple[np.ndarray, float, bool]:
    """
    Evaluates the objective of ``spec`` at all ``2**m`` decision vectors.

    Args:
        source: posterior backend.
        spec: see :class:`~.CriterionSpec`, only kind, λ and order are used.
        max_m: enumeration guard, see :class:`~.Settings`.

    Returns:
        Tuple of the maximizer, the maximum and whether it is attained uniquely. Ties are resolved toward fewer ones,
        then the lexicographically smallest vector.
    """
    m = source.n_hypotheses
    max_m = resolve(max_m, 'brute_force_max_m')
    if m > max_m:
        raise ProblemTooLargeError(f'brute force over 2**{m} vectors exceeds the cap m<={max_m}')
    objective = make_objective(source, spec)
    candidates = sorted(itertools.product((0, 1), repeat=m), key=sum)
    best = None
    best_value = None
    ties = 0
    for candidate in candidates:
        d = np.array(candidate, dtype=np.int8)
        value = objective(d)
        if best is None or objective.improves(value, best_value):
            best, best_value, ties = d, value, 1
        elif not objective.improves(best_value, value):
            ties += 1
    return best, float(best_value), ties == 1


# pylint: disable=too-few-public-methods,too-many-arguments
class OracleComparison():
    """
    Result of :func:`compare_with_brute_force`.

    Attributes:
        relaxed: block relaxation fixed point.
        relaxed_value: objective at :attr:`relaxed`.
        optimum: brute-force maximizer.
        optimum_value: global maximum.
        unique: whether the maximum is attained uniquely.
        agrees: whether :attr:`relaxed` attains the global maximum.
        trace: :class:`RelaxationTrace` of the relaxation.
    """
    def __init__(self, relaxed: np.ndarray, relaxed_value: float, optimum: np.ndarray, optimum_value: float,
                 unique: bool, agrees: bool, trace: RelaxationTrace):
        self.relaxed = relaxed
        self.relaxed_value = relaxed_value
        self.optimum = optimum
        self.optimum_value = optimum_value
        self.unique = unique
        self.agrees = agrees
        self.trace = trace


def compare_with_brute_force(source: PosteriorSource, spec: CriterionSpec,
                             max_sweeps: int = None) -> OracleComparison:
    """
    Runs block relaxation and the brute-force oracle on the same instance, logging any discrepancy.
    """
    relaxed, trace = block_relaxation(source, spec, max_sweeps)
    objective = make_objective(source, spec)
    optimum, _, unique = brute_force(source, spec)
    relaxed_value = objective(relaxed)
    optimum_value = objective(optimum)
    agrees = not objective.improves(optimum_value, relaxed_value)
    comparison = OracleComparison(relaxed, float(relaxed_value), optimum, float(optimum_value), unique, agrees,
                                  trace)
    if not comparison.agrees:
        logger.warning('relaxation stopped at %s with g=%r, global maximum %s with g=%r',
                       _as_list(relaxed), relaxed_value, _as_list(optimum), optimum_value)
    return comparison


def guindani_oracle(v: Sequence[float], lam: float) -> np.ndarray:
    """
    Closed-form optimal decisions of the additive marginal risk.

    Returns:
        ``d_i = 1{v_i > lambda / (1 + lambda)}``.
    """
    if lam <= 0:
        raise InvalidCriterionError(f'the marginal criterion requires lambda > 0, got {lam}')
    v = check_marginals(v)
    return (v > threshold(lam)).astype(np.int8)


class LambdaGrid():
    """
    Geometrically spaced grid of λ values.

    Args:
        lower: smallest value, ``> 0``.
        upper: largest value, ``>= lower``.
        points: number of grid points.
    """
    def __init__(self, lower: float, upper: float, points: int):
        if not 0 < lower <= upper or points < 1:
            raise InvalidCriterionError(f'invalid lambda grid [{lower}, {upper}] with {points} points')
        self.lower = float(lower)
        self.upper = float(upper)
        self.points = int(points)

    @classmethod
    def default(cls, kind: CriterionKind) -> 'LambdaGrid':
        """
        Returns:
            The default grid of ``kind`` from :class:`~.Settings`.
        """
        settings = Settings()
        bounds = settings.marginal_grid if kind == CriterionKind.MARGINAL else settings.nonmarginal_grid
        return cls(bounds[0], bounds[1], settings.grid_points)

    @property
    def values(self) -> np.ndarray:
        """Ascending grid values."""
        if self.points == 1:
            return np.array([self.lower])
        return np.geomspace(self.lower, self.upper, self.points)

    def as_dict(self) -> dict:
        """
        Returns:
            JSON-compatible :obj:`dict`.
        """
        return {'lower': self.lower, 'upper': self.upper, 'points': self.points}


# pylint: disable=too-few-public-methods,too-many-arguments
class CalibrationResult():
    """
    Result of a λ calibration.

    Attributes:
        lam: calibrated λ (the largest grid value when infeasible).
        decisions: decisions at :attr:`lam`.
        achieved: constraint value at :attr:`lam`.
        feasible: whether :attr:`achieved` is at most ``alpha``.
        alpha: requested level.
        path: :obj:`list` of ``(lambda, constraint)`` pairs evaluated, in evaluation order.
    """
    def __init__(self, lam: float, decisions: np.ndarray, achieved: float, feasible: bool, alpha: float,
                 path: list[tuple[float, float]]):
        self.lam = lam
        self.decisions = decisions
        self.achieved = achieved
        self.feasible = feasible
        self.alpha = alpha
        self.path = path

    def as_dict(self) -> dict:
        """
        Returns:
            JSON-compatible :obj:`dict`.
        """
        return {
            'lambda': self.lam,
            'decisions': None if self.decisions is None else _as_list(self.decisions),
            'achieved_constraint': self.achieved if np.isfinite(self.achieved) else None,
            'feasible': self.feasible,
            'alpha': self.alpha,
            'path': [[lam, value] for lam, value in self.path],
        }


def _check_alpha(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise DataError(f'alpha must lie in (0, 1), got {alpha}')
    return float(alpha)


def calibrate_lambda_marginal(v: Sequence[float], alpha: float, grid: LambdaGrid = None) -> CalibrationResult:
    """
    Finds the smallest grid λ whose oracle decisions keep the expected number of false positives at most ``alpha``.
    The constraint is non-increasing in λ, so the grid is bisected.

    Args:
        v: marginal posterior probabilities.
        alpha: level in ``(0, 1)``.
        grid: λ grid, :meth:`LambdaGrid.default` if :obj:`None`.
    """
    v = check_marginals(v)
    alpha = _check_alpha(alpha)
    values = (grid or LambdaGrid.default(CriterionKind.MARGINAL)).values
    path = list[tuple[float, float]]()

    def achieved(k: int) -> tuple[np.ndarray, float]:
        decisions = guindani_oracle(v, values[k])
        value = marginal_expected_error(v, decisions)
        path.append((float(values[k]), value))
        logger.debug('lambda=%g: constraint %r', values[k], value)
        return decisions, value

    last = len(values) - 1
    decisions, value = achieved(last)
    if value > alpha:
        logger.warning('no grid lambda satisfies alpha=%g, best constraint %r', alpha, value)
        return CalibrationResult(float(values[last]), decisions, value, False, alpha, path)
    low, high = -1, last
    best = (decisions, value)
    while high - low > 1:
        middle = (low + high) // 2
        candidate = achieved(middle)
        if candidate[1] <= alpha:
            high, best = middle, candidate
        else:
            low = middle
    return CalibrationResult(float(values[high]), best[0], best[1], True, alpha, path)


# pylint: disable=too-many-arguments
def calibrate_lambda_nonmarginal(source: PosteriorSource, alpha: float,
                                 kind: CriterionKind = CriterionKind.GENERAL, grid: LambdaGrid = None,
                                 spec: CriterionSpec = None, max_sweeps: int = None) -> CalibrationResult:
    """
    Thumb-rule calibration: scans the grid in ascending order, computes the block relaxation fixed point at every λ
    and returns the first λ whose expected error is at most ``alpha``. No monotonicity is assumed.

    Args:
        source: posterior backend.
        alpha: level in ``(0, 1)``.
        kind: :attr:`~.CriterionKind.GENERAL` or :attr:`~.CriterionKind.ORDERED`.
        grid: λ grid confined to ``lambda >= 1``, :meth:`LambdaGrid.default` if :obj:`None`.
        spec: template for order, sweep and init; its λ is replaced at every grid point.
        max_sweeps: sweep cap, see :class:`~.Settings`.
    """
    alpha = _check_alpha(alpha)
    if kind == CriterionKind.MARGINAL:
        raise InvalidCriterionError('use calibrate_lambda_marginal for the marginal criterion')
    grid = grid or LambdaGrid.default(kind)
    if grid.lower < 1:
        raise InvalidCriterionError(f'non-marginal calibration requires a grid with lambda >= 1, got {grid.lower}')
    template = spec.replace(kind=kind) if spec is not None else CriterionSpec(kind, grid.lower)
    path = list[tuple[float, float]]()
    best = None
    for lam in grid.values:
        current = template.replace(lam=float(lam))
        try:
            decisions, _ = block_relaxation(source, current, max_sweeps)
        except NonConvergenceError as error:
            logger.warning('lambda=%g skipped: %s', lam, error)
            continue
        value = constraint(source, current, decisions)
        path.append((float(lam), value))
        logger.debug('lambda=%g: decisions %s, constraint %r', lam, _as_list(decisions), value)
        if value <= alpha:
            return CalibrationResult(float(lam), decisions, value, True, alpha, path)
        if best is None or value < best[2]:
            best = (float(lam), decisions, value)
    if best is None:
        logger.warning('no grid lambda converged')
        return CalibrationResult(grid.upper, None, float('inf'), False, alpha, path)
    logger.warning('no grid lambda satisfies alpha=%g, best constraint %r at lambda=%g', alpha, best[2], best[0])
    return CalibrationResult(best[0], best[1], best[2], False, alpha, path)
