# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Module containing the machine-readable :class:`RunReport` written by every CLI subcommand.

The report is a JSON object. Its layout is versioned by ``schema_version`` and documented in the
``report`` page of the documentation.
"""

import json
import pathlib
import sys

from . import __version__
from .errors import DataError

SCHEMA_VERSION = 1
"""Current version of the report layout."""

COMMANDS = ('decide', 'chain', 'simulate', 'decompose')
"""Subcommands that produce a report."""

STATUSES = ('ok', 'nonconvergence')
"""Possible values of the ``status`` entry."""

# key: (allowed types, required)
SCHEMA = {
    'schema_version': ((int,), True),
    'command': ((str,), True),
    'status': ((str,), True),
    'version': ((str,), True),
    'wall_clock': ((float, int), True),
    'inputs': ((dict,), True),
    'spec': ((dict, type(None)), True),
    'decisions': ((list, type(None)), True),
    'objective': ((float, int, type(None)), True),
    'sweeps': ((int, type(None)), True),
    'lambda': ((float, int, type(None)), True),
    'calibration': ((dict, type(None)), True),
    'expected_error': ((float, int, type(None)), True),
    'decomposition': ((dict, type(None)), True),
    'trace': ((dict, type(None)), True),
    'chain': ((dict, type(None)), True),
    'details': ((dict,), True),
}


# pylint: disable=too-many-instance-attributes
class RunReport():
    """
    Result of one CLI run.

    Attributes:
        command: subcommand name, one of :data:`COMMANDS`.
        status: ``ok`` or ``nonconvergence``.
        inputs: echo of the input files and flags.
        spec: :meth:`~.CriterionSpec.as_dict` of the criterion used, if any.
        decisions: decision vector, list of 0/1.
        objective: objective value of :attr:`decisions`.
        sweeps: sweeps to converge.
        lam: λ used.
        calibration: :meth:`~.CalibrationResult.as_dict` if λ was calibrated.
        expected_error: posterior expected error of :attr:`decisions`.
        decomposition: error decomposition against a truth vector.
        trace: :meth:`~.RelaxationTrace.as_dict` of the run.
        chain: :meth:`~.AbsorbingChainReport.as_dict` of a chain analysis.
        details: subcommand-specific entries.
        wall_clock: run time in seconds.
        version: version of nmdecide.
    """
    def __init__(self, command: str, inputs: dict = None):
        self.command = command
        self.status = 'ok'
        self.inputs = inputs or {}
        self.spec = None
        self.decisions = None
        self.objective = None
        self.sweeps = None
        self.lam = None
        self.calibration = None
        self.expected_error = None
        self.decomposition = None
        self.trace = None
        self.chain = None
        self.details = {}
        self.wall_clock = 0.0
        self.version = __version__

    def to_dict(self) -> dict:
        """
        Returns:
            JSON-compatible :obj:`dict` following :data:`SCHEMA`.
        """
        return {
            'schema_version': SCHEMA_VERSION,
            'command': self.command,
            'status': self.status,
            'version': self.version,
            'wall_clock': self.wall_clock,
            'inputs': self.inputs,
            'spec': self.spec,
            'decisions': self.decisions,
            'objective': self.objective,
            'sweeps': self.sweeps,
            'lambda': self.lam,
            'calibration': self.calibration,
            'expected_error': self.expected_error,
            'decomposition': self.decomposition,
            'trace': self.trace,
            'chain': self.chain,
            'details': self.details,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'RunReport':
        """
        Rebuilds a report from :meth:`to_dict` output after validating it.

        Raises:
            DataError: the data does not follow :data:`SCHEMA`.
        """
        validate(data)
        report = cls(data['command'], data['inputs'])
        for key in SCHEMA:
            if key in ('schema_version', 'command', 'inputs'):
                continue
            setattr(report, 'lam' if key == 'lambda' else key, data[key])
        return report

    def to_json(self) -> str:
        """
        Returns:
            Indented JSON text with sorted keys and a trailing newline.
        """
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + '\n'

    def write(self, path: str) -> None:
        """
        Writes the report to ``path``, ``-`` meaning standard output.
        """
        text = self.to_json()
        if str(path) == '-':
            sys.stdout.write(text)
            sys.stdout.flush()
        else:
            pathlib.Path(path).write_text(text, encoding='utf-8')

    def __eq__(self, other) -> bool:
        return isinstance(other, RunReport) and self.to_dict() == other.to_dict()


def validate(data: dict) -> None:
    """
    Checks that ``data`` follows :data:`SCHEMA`.

    Raises:
        DataError: unknown or missing keys, wrong types or an inconsistent decision vector.
    """
    if not isinstance(data, dict):
        raise DataError('a report must be a JSON object')
    unknown = sorted(set(data) - set(SCHEMA))
    if unknown:
        raise DataError(f'unknown report keys {unknown}')
    for key, (types, required) in SCHEMA.items():
        if key not in data:
            if required:
                raise DataError(f'report is missing the key {key}')
            continue
        # bool is an int subclass but never a valid number here
        if isinstance(data[key], bool) or not isinstance(data[key], types):
            raise DataError(f'report key {key} has type {type(data[key]).__name__}')
    if data['schema_version'] != SCHEMA_VERSION:
        raise DataError(f'unsupported schema version {data["schema_version"]}')
    if data['command'] not in COMMANDS:
        raise DataError(f'unknown command {data["command"]}')
    if data['status'] not in STATUSES:
        raise DataError(f'unknown status {data["status"]}')
    decisions = data['decisions']
    if decisions is not None:
        if any(value not in (0, 1) or isinstance(value, bool) for value in decisions):
            raise DataError('decisions must be 0/1 values')
        m = data['inputs'].get('m')
        if m is not None and len(decisions) != m:
            raise DataError(f'{len(decisions)} decisions for m={m}')


def read_report(path: pathlib.Path) -> RunReport:
    """
    Reads and validates a report file.
    """
    with open(path, mode='rt', encoding='utf-8') as file_io:
        try:
            data = json.load(file_io)
        except json.JSONDecodeError as error:
            raise DataError(f'{pathlib.Path(path).as_posix()} is not valid JSON: {error}') from error
    return RunReport.from_dict(data)
