# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Global configuration for testsuite.
"""


import pathlib
import sys

import numpy as np
import pytest


# add folder with module source to sys.path
srcdir = pathlib.Path(__file__).resolve().parents[1].joinpath('src')
sys.path.insert(0, srcdir.as_posix())

# pylint: disable=wrong-import-position
from nmdecide.config import Settings  # noqa: E402
from nmdecide.posterior_core import IndicatorSampleMatrix, ProbabilityTable  # noqa: E402


@pytest.fixture(autouse=True)
def fresh_settings():
    """Every test starts from the default settings, single-threaded."""
    Settings.reset()
    Settings().update(threads=1)
    yield Settings()
    Settings.reset()


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator."""
    return np.random.default_rng(20260417)


@pytest.fixture
def four_rows() -> IndicatorSampleMatrix:
    """m=2 with rows (1,1), (1,0), (0,1), (1,1)."""
    return IndicatorSampleMatrix([[1, 1], [1, 0], [0, 1], [1, 1]])


@pytest.fixture
def divergent() -> IndicatorSampleMatrix:
    """m=2 where the marginal and the general rule disagree at lambda=1."""
    return IndicatorSampleMatrix([[1, 0], [0, 1], [1, 0], [0, 1], [1, 1]])


@pytest.fixture
def two_fixed_points() -> IndicatorSampleMatrix:
    """m=2 with rows 3x(1,1), (0,0), (1,0); both (0,0) and (1,1) are fixed points at lambda=1."""
    return IndicatorSampleMatrix([[1, 1], [1, 1], [1, 1], [0, 0], [1, 0]])


@pytest.fixture
def nested() -> IndicatorSampleMatrix:
    """m=3 with rows 3x(1,1,1), 4x(1,1,0), 2x(1,0,0), 1x(0,0,0), nested probabilities (0.9, 0.7, 0.3)."""
    rows = [[1, 1, 1]] * 3 + [[1, 1, 0]] * 4 + [[1, 0, 0]] * 2 + [[0, 0, 0]]
    return IndicatorSampleMatrix(rows)


def random_table(rng: np.random.Generator, m: int) -> ProbabilityTable:
    """Table with generic masses drawn from a flat Dirichlet distribution."""
    mass = rng.dirichlet(np.ones(2 ** m))
    # renormalize so that the total is within the table tolerance
    return ProbabilityTable(mass / mass.sum())


def random_samples(rng: np.random.Generator, m: int, n_samples: int = 60) -> IndicatorSampleMatrix:
    """Correlated indicator samples: a shared latent draw thresholded at column-specific levels."""
    latent = rng.normal(size=(n_samples, 1)) + rng.normal(size=(n_samples, m))
    levels = rng.normal(scale=0.8, size=m)
    return IndicatorSampleMatrix((latent > levels).astype(np.int8))


def write_rows(path: pathlib.Path, rows, header: str = None) -> pathlib.Path:
    """Writes a sample file."""
    lines = [header] if header else []
    lines += [','.join(str(value) for value in row) for row in rows]
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return path
