# SPDX-FileCopyrightText: 2026 nmdecide developers
# SPDX-License-Identifier: EUPL-1.2

"""
Module containing the process-wide :class:`Settings` and the singleton metaclass backing it.

Library functions accept their limits as keyword arguments. When an argument is left at :obj:`None`, the value from
:class:`Settings` is used instead. The CLI writes its flags into :class:`Settings` once at start-up.
"""

import os


class Singleton(type):
    """
    Metaclass implementing a common Singleton pattern, with :func:`reset` to drop the cached instance.
    """
    _instances = {}

    def __call__(cls, *args, **kwargs):
        if cls not in cls._instances:
            cls._instances[cls] = super(Singleton, cls).__call__(*args, **kwargs)
        return cls._instances[cls]

    def reset(cls) -> None:
        """
        Forgets the instance of the class, the next call creates a fresh one with default values.
        """
        cls._instances.pop(cls, None)


# pylint: disable=too-many-instance-attributes,too-few-public-methods
class Settings(metaclass=Singleton):
    """
    Singleton class holding the default limits and grids.

    Attributes:
        max_sweeps: Maximum number of sweeps of a block relaxation run.
        chain_max_m: Largest ``m`` for which the sweep kernel over ``2**m`` states is built.
        dense_max_states: Largest number of transient states for which the fundamental matrix is formed densely.
        brute_force_max_m: Largest ``m`` accepted by the brute-force oracle.
        threads: Number of worker threads for independent runs.
        grid_points: Number of points of the default λ grids.
        marginal_grid: ``(lower, upper)`` bounds of the default λ grid for the marginal criterion.
        nonmarginal_grid: ``(lower, upper)`` bounds of the default λ grid for non-marginal criteria.
    """
    def __init__(self) -> None:
        self.max_sweeps = 1000
        self.chain_max_m = 16
        self.dense_max_states = 2048
        self.brute_force_max_m = 24
        self.threads = os.cpu_count() or 1
        self.grid_points = 64
        self.marginal_grid = (1e-3, 1e3)
        self.nonmarginal_grid = (1.0, 1e3)

    def update(self, **kwargs) -> None:
        """
        Sets several settings at once, ignoring values that are :obj:`None`.

        Args:
            kwargs: attribute names and their new values.
        """
        for name, value in kwargs.items():
            if not hasattr(self, name):
                raise AttributeError(f'unknown setting {name}')
            if value is not None:
                setattr(self, name, value)


def resolve(value, name: str):
    """
    Returns ``value`` unless it is :obj:`None`, in which case the setting ``name`` is returned.

    Args:
        value: explicitly passed value or :obj:`None`.
        name: attribute name in :class:`Settings`.
    """
    if value is None:
        return getattr(Settings(), name)
    return value
