# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Module containing the exception hierarchy of nmdecide.

All exceptions raised on purpose derive from :class:`NmdecideError`, which allows the CLI to tell data and usage
problems (exit code ``1``) apart from algorithmic non-convergence (exit code ``2``).
"""


class NmdecideError(Exception):
    """
    Base class of all nmdecide errors.
    """


class DataError(NmdecideError):
    """
    Invalid input data, e.g. non-binary indicators, ragged rows, length mismatches or indices out of range.
    """


class SampleFormatError(DataError):
    """
    Error while parsing a sample file.

    Args:
        message: Human readable description.
        line: 1-based line number in the file, :obj:`None` if not tied to a line.
        token: Offending token, :obj:`None` if not tied to a token.
    """
    def __init__(self, message: str, line: int = None, token: str = None):
        self.line = line
        self.token = token
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


class ScenarioError(DataError):
    """
    Invalid simulation scenario (see :class:`~.simulator.GaussianScenario`).
    """


class UndefinedConditionalError(NmdecideError):
    """
    Conditional probability requested for a conditioning event of probability zero.
    """


class InvalidCriterionError(NmdecideError):
    """
    Criterion settings are not usable, e.g. ``lambda < 1`` for a non-marginal criterion or an invalid permutation.
    """


class ProblemTooLargeError(NmdecideError):
    """
    An exhaustive enumeration over ``2**m`` states was requested above the configured cap.
    """


class NonConvergenceError(NmdecideError):
    """
    Block relaxation did not reach a fixed point.

    Args:
        message: Human readable description.
        trace: :class:`~.optimizer.RelaxationTrace` of the failed run.
    """
    def __init__(self, message: str, trace=None):
        self.trace = trace
        super().__init__(message)


class RelaxationCycleError(NonConvergenceError):
    """
    The sweep map revisited a state without converging.
    """


class MaxSweepsExceededError(NonConvergenceError):
    """
    The sweep cap was reached before a fixed point.
    """


class ChainStructureError(NmdecideError):
    """
    The sweep chain does not have the structure of an absorbing Markov chain.
    """


class NoAbsorbingStateError(ChainStructureError):
    """
    The transition matrix has no absorbing state.
    """


class UnabsorbableStateError(ChainStructureError):
    """
    Some transient state can never reach an absorbing state.

    Args:
        message: Human readable description.
        states: indices of the states in the closed non-absorbing class.
    """
    def __init__(self, message: str, states: list[int] = None):
        self.states = list(states) if states is not None else []
        super().__init__(message)


class SingularSystemError(ChainStructureError):
    """
    ``I - Q`` could not be inverted.
    """
