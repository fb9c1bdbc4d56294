# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Module containing the file formats used by the CLI.

- Sample files: comma-separated rows of 0/1 indicators, one row per posterior draw, with an optional single header
  line of hypothesis names.
- Vector files (decisions, truth): one 0/1 token per line.
- Ordering files: one 1-based hypothesis index per line, forming a permutation.
- Prior odds files: one positive number per line.
- Scenario files: flat ``key = value`` lines, vectors given as comma-separated numbers.

Blank lines and lines starting with ``#`` are ignored in vector, ordering and odds files.
"""

import configparser
import csv
import pathlib

import numpy as np

from .errors import DataError, SampleFormatError, ScenarioError
from .posterior_core import HypothesisPriorOdds, IndicatorSampleMatrix, check_permutation
from .simulator import GaussianScenario

BINARY_TOKENS = ('0', '1')


def _read_lines(path: pathlib.Path) -> list[str]:
    path = pathlib.Path(path)
    if not path.is_file():
        raise FileNotFoundError(f'File {path.as_posix()} does not exist')
    data = path.read_bytes()
    try:
        return data.decode('utf-8').splitlines()
    except UnicodeDecodeError as error:
        line = data[:error.start].count(b'\n') + 1
        raise SampleFormatError(f'{path.as_posix()} is not UTF-8 text ({error.reason})', line) from error


def parse_samples(path: pathlib.Path) -> IndicatorSampleMatrix:
    """
    Parses a sample file.

    Args:
        path: :class:`pathlib.Path` of the CSV file.

    Returns:
        :class:`~.IndicatorSampleMatrix` with hypothesis names from the header if present.

    Raises:
        SampleFormatError: empty file, undecodable bytes, ragged rows or a token that is not 0 or 1.
    """
    names = None
    rows = list[list[int]]()
    width = None
    for line_number, row in enumerate(csv.reader(_read_lines(path)), start=1):
        tokens = [token.strip() for token in row]
        if not tokens or tokens == ['']:
            continue
        if width is None:
            width = len(tokens)
            # only a first row without any number holds the names
            if not any(_is_number(token) for token in tokens):
                names = tokens
                continue
        if len(tokens) != width:
            raise SampleFormatError(f'expected {width} values, got {len(tokens)}', line_number)
        for token in tokens:
            if token not in BINARY_TOKENS:
                raise SampleFormatError(f'token "{token}" is not 0 or 1', line_number, token)
        rows.append([int(token) for token in tokens])
    if not rows:
        raise SampleFormatError(f'{pathlib.Path(path).as_posix()} contains no samples')
    return IndicatorSampleMatrix(np.array(rows, dtype=np.int8), names)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def write_samples(path: pathlib.Path, samples: IndicatorSampleMatrix) -> None:
    """
    Writes a sample file with a header line of hypothesis names.
    """
    with open(path, mode='wt', encoding='utf-8', newline='') as file_io:
        writer = csv.writer(file_io, lineterminator='\n')
        writer.writerow(samples.names)
        writer.writerows(samples.values.astype(np.int8).tolist())


def _tokens(path: pathlib.Path) -> list[tuple[int, str]]:
    lines = [(number, line.strip()) for number, line in enumerate(_read_lines(path), start=1)]
    return [(number, line) for number, line in lines if line and not line.startswith('#')]


def read_vector(path: pathlib.Path, m: int = None) -> np.ndarray:
    """
    Reads a decision or truth vector.

    Args:
        path: file with one 0/1 token per line.
        m: expected length or :obj:`None`.
    """
    values = list[int]()
    for number, token in _tokens(path):
        if token not in BINARY_TOKENS:
            raise SampleFormatError(f'token "{token}" is not 0 or 1', number, token)
        values.append(int(token))
    if not values:
        raise DataError(f'{pathlib.Path(path).as_posix()} is empty')
    if m is not None and len(values) != m:
        raise DataError(f'{pathlib.Path(path).as_posix()} has {len(values)} entries, expected {m}')
    return np.array(values, dtype=np.int8)


def write_vector(path: pathlib.Path, d) -> None:
    """
    Writes a vector with one 0/1 token per line.
    """
    pathlib.Path(path).write_text(''.join(f'{int(value)}\n' for value in d), encoding='utf-8')


def read_order(path: pathlib.Path, m: int) -> list[int]:
    """
    Reads a 1-based ordering file.

    Returns:
        0-based permutation.
    """
    order = list[int]()
    for number, token in _tokens(path):
        try:
            order.append(int(token) - 1)
        except ValueError as error:
            raise SampleFormatError(f'token "{token}" is not an index', number, token) from error
    return check_permutation(order, m)


def read_odds(path: pathlib.Path, m: int) -> HypothesisPriorOdds:
    """
    Reads prior odds ``Pr(H_0i) / Pr(H_1i)``, one per line.
    """
    values = list[float]()
    for number, token in _tokens(path):
        try:
            values.append(float(token))
        except ValueError as error:
            raise SampleFormatError(f'token "{token}" is not a number', number, token) from error
    if len(values) != m:
        raise DataError(f'{pathlib.Path(path).as_posix()} has {len(values)} prior odds, expected {m}')
    return HypothesisPriorOdds(values)


SCENARIO_KEYS = ('m', 'sigma2', 'tau2', 'rho', 'mu0', 'theta_true', 'cutpoint', 'seed', 'samples', 'data')
"""Keys accepted in scenario files."""


def read_scenario(path: pathlib.Path) -> GaussianScenario:
    """
    Reads a flat ``key = value`` scenario file, see :class:`~.GaussianScenario` for the keys.
    """
    text = '\n'.join(_read_lines(path))
    parser = configparser.ConfigParser(comment_prefixes=('#', ';'), inline_comment_prefixes=('#',))
    try:
        parser.read_string('[scenario]\n' + text)
    except configparser.Error as error:
        raise ScenarioError(f'cannot parse {pathlib.Path(path).as_posix()}: {error}') from error
    section = parser['scenario']
    unknown = sorted(set(section.keys()) - set(SCENARIO_KEYS))
    if unknown:
        raise ScenarioError(f'unknown scenario keys {unknown}')
    if 'm' not in section:
        raise ScenarioError('scenario is missing the key m')
    kwargs = {}
    try:
        for key in ('m', 'seed', 'samples'):
            if key in section:
                kwargs[key] = section.getint(key)
        for key in ('sigma2', 'tau2', 'rho', 'cutpoint'):
            if key in section:
                kwargs[key] = section.getfloat(key)
        for key in ('mu0', 'theta_true', 'data'):
            if key in section:
                values = [float(token) for token in section[key].split(',') if token.strip()]
                kwargs[key] = values[0] if len(values) == 1 and key != 'data' else values
    except ValueError as error:
        raise ScenarioError(f'invalid scenario value: {error}') from error
    return GaussianScenario(**kwargs)
