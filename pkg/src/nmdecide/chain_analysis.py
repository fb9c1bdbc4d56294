# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Module treating the deterministic sweep map of block relaxation as an absorbing Markov chain over ``{0,1}^m``.

One chain step is one full sweep over all coordinates. Fixed points of the sweep map are the absorbing states. The
expected number of sweeps to absorption from each transient state is ``t = N 1`` with the fundamental matrix
``N = (I - Q)^-1``, where ``Q`` holds the transient-to-transient transition probabilities of the canonical form

.. code-block:: text

    P = | Q  R |
        | 0  I |

States are numbered by reading a decision vector as a binary number with hypothesis 1 as most significant bit.
"""

import logging
from collections import deque
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.linalg

from .config import resolve
from .criteria import CriterionSpec
from .errors import (ChainStructureError, DataError, NoAbsorbingStateError, ProblemTooLargeError,
                     SingularSystemError, UnabsorbableStateError)
from .optimizer import best_response, make_objective
from .posterior_core import PosteriorSource, as_binary_vector

logger = logging.getLogger(__name__)

STOCHASTIC_TOLERANCE = 1e-9
"""Tolerance for row sums of explicit transition matrices and for ``N (I - Q) = I``."""


def encode(d: Sequence[int]) -> int:
    """
    Returns:
        State number of the decision vector ``d``.
    """
    state = 0
    for value in as_binary_vector(d):
        state = 2 * state + int(value)
    return state


def decode(state: int, m: int) -> np.ndarray:
    """
    Returns:
        Decision vector of length ``m`` of the state number ``state``.
    """
    return np.array([(state >> (m - 1 - i)) & 1 for i in range(m)], dtype=np.int8)


class SweepKernel():
    """
    Deterministic transition structure of the sweep map.

    Args:
        m: number of hypotheses.
        successors: successor state number of each of the ``2**m`` states.
    """
    def __init__(self, m: int, successors: Sequence[int]):
        successors = np.asarray(successors, dtype=np.int64)
        if successors.shape != (2 ** m,):
            raise DataError(f'a kernel over m={m} needs {2 ** m} successors, got {successors.shape[0]}')
        if np.any(successors < 0) or np.any(successors >= 2 ** m):
            raise DataError('successor state out of range')
        self.m = m
        self.successors = successors

    @property
    def n_states(self) -> int:
        """Number of states ``2**m``."""
        return self.successors.shape[0]

    @property
    def fixed_points(self) -> list[int]:
        """State numbers that map to themselves."""
        return [int(state) for state in np.flatnonzero(self.successors == np.arange(self.n_states))]

    def to_matrix(self) -> np.ndarray:
        """
        Returns:
            Dense row-stochastic transition matrix with a single unit entry per row.
        """
        matrix = np.zeros((self.n_states, self.n_states))
        matrix[np.arange(self.n_states), self.successors] = 1.0
        return matrix


def build_sweep_kernel(source: PosteriorSource, spec: CriterionSpec, max_m: int = None,
                       threads: int = None) -> SweepKernel:
    """
    Applies one full sweep of coordinate updates in ``spec.sweep`` order to every state.

    Args:
        source: posterior backend.
        spec: see :class:`~.CriterionSpec`; ``spec.init`` is ignored.
        max_m: state-space cap, see :class:`~.Settings`.
        threads: number of worker threads, see :class:`~.Settings`.
    """
    m = source.n_hypotheses
    max_m = resolve(max_m, 'chain_max_m')
    threads = resolve(threads, 'threads')
    if m > max_m:
        raise ProblemTooLargeError(f'sweep kernel over 2**{m} states exceeds the cap m<={max_m}')
    objective = make_objective(source, spec)
    order = spec.sweep_order(m)

    def successor(state: int) -> int:
        d = decode(state, m)
        for i in order:
            d[i], _ = best_response(objective, d, i)
        return encode(d)

    states = range(2 ** m)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            successors = list(executor.map(successor, states, chunksize=64))
    else:
        successors = [successor(state) for state in states]
    kernel = SweepKernel(m, successors)
    logger.info('sweep kernel over %d states has %d fixed points', kernel.n_states, len(kernel.fixed_points))
    return kernel


# pylint: disable=too-few-public-methods
class CanonicalForm():
    """
    Blocks of the canonical form of an absorbing chain.

    Attributes:
        q: transient-to-transient block.
        r: transient-to-absorbing block.
        transient: state numbers of the transient states, in block order.
        absorbing: state numbers of the absorbing states, in block order.
    """
    def __init__(self, q: np.ndarray, r: np.ndarray, transient: list[int], absorbing: list[int]):
        self.q = q
        self.r = r
        self.transient = transient
        self.absorbing = absorbing

    def matrix(self) -> np.ndarray:
        """
        Returns:
            The reassembled canonical matrix with transient states first.
        """
        n_absorbing = len(self.absorbing)
        top = np.hstack([self.q, self.r])
        bottom = np.hstack([np.zeros((n_absorbing, len(self.transient))), np.eye(n_absorbing)])
        return np.vstack([top, bottom])


def _kernel_form(kernel: SweepKernel, dense_max_states: int) -> CanonicalForm:
    absorbing = kernel.fixed_points
    if not absorbing:
        raise NoAbsorbingStateError('the sweep map has no fixed point')
    _walk_to_fixed_points(kernel)
    absorbing_set = set(absorbing)
    transient = [state for state in range(kernel.n_states) if state not in absorbing_set]
    if len(transient) > dense_max_states:
        raise ProblemTooLargeError(
            f'{len(transient)} transient states exceed the dense cap of {dense_max_states}')
    transient_position = {state: position for position, state in enumerate(transient)}
    absorbing_position = {state: position for position, state in enumerate(absorbing)}
    q = np.zeros((len(transient), len(transient)))
    r = np.zeros((len(transient), len(absorbing)))
    for position, state in enumerate(transient):
        target = int(kernel.successors[state])
        if target in absorbing_position:
            r[position, absorbing_position[target]] = 1.0
        else:
            q[position, transient_position[target]] = 1.0
    return CanonicalForm(q, r, transient, absorbing)


def _matrix_form(matrix: np.ndarray) -> CanonicalForm:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise DataError(f'transition matrix must be square and non-empty, got shape {matrix.shape}')
    if np.any(matrix < 0) or np.any(np.abs(matrix.sum(axis=1) - 1.0) > STOCHASTIC_TOLERANCE):
        raise DataError('transition matrix must be row-stochastic')
    n_states = matrix.shape[0]
    absorbing = [state for state in range(n_states) if matrix[state, state] == 1.0]
    if not absorbing:
        raise NoAbsorbingStateError('the transition matrix has no absorbing state')
    # backward search from the absorbing states over positive transitions
    reaches = set(absorbing)
    queue = deque(absorbing)
    while queue:
        state = queue.popleft()
        for source_state in np.flatnonzero(matrix[:, state] > 0):
            if int(source_state) not in reaches:
                reaches.add(int(source_state))
                queue.append(int(source_state))
    stuck = [state for state in range(n_states) if state not in reaches]
    if stuck:
        raise UnabsorbableStateError(f'states {stuck} cannot reach an absorbing state', stuck)
    absorbing_set = set(absorbing)
    transient = [state for state in range(n_states) if state not in absorbing_set]
    q = matrix[np.ix_(transient, transient)]
    r = matrix[np.ix_(transient, absorbing)]
    return CanonicalForm(q, r, transient, absorbing)


def canonical_decomposition(chain, dense_max_states: int = None) -> CanonicalForm:
    """
    Splits a chain into the canonical blocks, transient states first.

    Args:
        chain: :class:`SweepKernel` or explicit row-stochastic matrix.
        dense_max_states: cap on the number of transient states of a kernel, see :class:`~.Settings`.

    Raises:
        NoAbsorbingStateError: there is no absorbing state.
        UnabsorbableStateError: some state never reaches an absorbing state, e.g. a cycle of non-fixed states.
    """
    if isinstance(chain, SweepKernel):
        return _kernel_form(chain, resolve(dense_max_states, 'dense_max_states'))
    return _matrix_form(chain)


def fundamental_matrix(q: np.ndarray) -> np.ndarray:
    """
    Args:
        q: transient block, any sub-stochastic matrix.

    Returns:
        ``N = (I - Q)^-1``.

    Raises:
        SingularSystemError: ``I - Q`` is singular.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise DataError(f'Q must be square, got shape {q.shape}')
    if q.shape[0] == 0:
        return np.zeros((0, 0))
    try:
        return scipy.linalg.inv(np.eye(q.shape[0]) - q)
    except (np.linalg.LinAlgError, ValueError) as error:
        raise SingularSystemError(f'I - Q is not invertible: {error}') from error


def absorption_times(n: np.ndarray) -> np.ndarray:
    """
    Returns:
        ``t = N 1``, the expected number of steps to absorption from every transient state.
    """
    n = np.asarray(n, dtype=float)
    return n @ np.ones(n.shape[1]) if n.size else np.zeros(n.shape[0])


def _walk_to_fixed_points(kernel: SweepKernel) -> dict[int, tuple[int, int]]:
    successors = kernel.successors
    walks = {state: (0, state) for state in kernel.fixed_points}
    for start in range(kernel.n_states):
        path = list[int]()
        on_path = {}
        state = start
        while state not in walks:
            if state in on_path:
                cycle = path[on_path[state]:]
                raise UnabsorbableStateError(
                    f'states {[decode(s, kernel.m).tolist() for s in cycle]} form a cycle without fixed point', cycle)
            on_path[state] = len(path)
            path.append(state)
            state = int(successors[state])
        steps, target = walks[state]
        # each state is walked once, later starts stop at a known state
        for offset, visited in enumerate(reversed(path), start=1):
            walks[visited] = (steps + offset, target)
    return walks


def simulate_absorption(kernel: SweepKernel) -> dict[int, tuple[int, int]]:
    """
    Follows the sweep map from every state until a fixed point.

    Returns:
        :obj:`dict` mapping each state number to the tuple of the number of sweeps and the reached fixed point.
    """
    walks = _walk_to_fixed_points(kernel)
    return {state: walks[state] for state in range(kernel.n_states)}


# pylint: disable=too-many-instance-attributes
class AbsorbingChainReport():
    """
    Complete analysis of the sweep chain of one instance.

    Attributes:
        kernel: the :class:`SweepKernel`.
        form: :class:`CanonicalForm`, :obj:`None` if the dense stage was skipped.
        n: fundamental matrix, :obj:`None` if skipped.
        t: absorption times of the transient states in :attr:`CanonicalForm.transient` order, :obj:`None` if skipped.
        simulated: result of :func:`simulate_absorption`.
        residual: ``max |N (I - Q) - I|``, :obj:`None` if skipped.
        verdict: ``exact`` if ``t = N 1`` matches the simulated sweep counts, ``mismatch`` otherwise, ``skipped``
                 if the dense stage was not run.
    """
    def __init__(self, kernel: SweepKernel, form: CanonicalForm, n: np.ndarray, t: np.ndarray,
                 simulated: dict[int, tuple[int, int]], residual: float, verdict: str):
        self.kernel = kernel
        self.form = form
        self.n = n
        self.t = t
        self.simulated = simulated
        self.residual = residual
        self.verdict = verdict

    @property
    def absorbing(self) -> list[int]:
        """State numbers of the fixed points."""
        return self.kernel.fixed_points

    @property
    def transient(self) -> list[int]:
        """State numbers of the transient states."""
        fixed = set(self.absorbing)
        return [state for state in range(self.kernel.n_states) if state not in fixed]

    def as_dict(self) -> dict:
        """
        Returns:
            JSON-compatible summary with decision vectors as lists of 0/1.
        """
        m = self.kernel.m
        transient = self.transient
        return {
            'states': self.kernel.n_states,
            'fixed_points': [decode(state, m).tolist() for state in self.absorbing],
            'transient': [
                {
                    'state': decode(state, m).tolist(),
                    'sweeps': self.simulated[state][0],
                    'target': decode(self.simulated[state][1], m).tolist(),
                    'expected_sweeps': None if self.t is None else float(self.t[position]),
                }
                for position, state in enumerate(transient)
            ],
            'max_sweeps': max((self.simulated[state][0] for state in transient), default=0),
            'residual': self.residual,
            'verification': self.verdict,
        }


def analyze(source: PosteriorSource, spec: CriterionSpec, max_m: int = None, dense_max_states: int = None,
            threads: int = None) -> AbsorbingChainReport:
    """
    Builds the sweep kernel of an instance, computes the absorption times with the fundamental matrix and verifies
    them against direct simulation of the sweep map.

    Args:
        source: posterior backend.
        spec: see :class:`~.CriterionSpec`.
        max_m: state-space cap, see :class:`~.Settings`.
        dense_max_states: transient-state cap of the dense stage, see :class:`~.Settings`.
        threads: worker threads for the kernel, see :class:`~.Settings`.

    Raises:
        ChainStructureError: the chain is not absorbing.
    """
    kernel = build_sweep_kernel(source, spec, max_m, threads)
    try:
        form = canonical_decomposition(kernel, dense_max_states)
    except ProblemTooLargeError as error:
        logger.warning('dense stage skipped: %s', error)
        return AbsorbingChainReport(kernel, None, None, None, simulate_absorption(kernel), None, 'skipped')
    simulated = simulate_absorption(kernel)
    n = fundamental_matrix(form.q)
    t = absorption_times(n)
    identity = np.eye(len(form.transient))
    residual = float(np.max(np.abs(n @ (identity - form.q) - identity))) if form.transient else 0.0
    if residual > STOCHASTIC_TOLERANCE:
        raise ChainStructureError(f'N (I - Q) deviates from I by {residual}')
    counts = np.array([simulated[state][0] for state in form.transient])
    rounded = np.rint(t)
    exact = bool(np.all(np.abs(t - rounded) <= STOCHASTIC_TOLERANCE) and np.array_equal(rounded, counts))
    verdict = 'exact' if exact else 'mismatch'
    if not exact:
        logger.warning('absorption times N 1 do not match the simulated sweep counts')
    return AbsorbingChainReport(kernel, form, n, t, simulated, residual, verdict)
