"""Deterministic verification grids on the unit cube."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import ValidationError

__all__ = ["GridSpec", "default_grid"]

_DEFAULT_PER_AXIS = {1: 4096, 2: 64, 3: 16}


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid on [0, 1]^m plus a companion grid shifted by half a step.

    The shifted points that would fall outside [0, 1] are dropped.  Any sup
    taken over these points is a lower estimate of the true sup.
    """

    m: int = 1
    n: int = 4096
    shifted: bool = True

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError("grid dimension m must be >= 1")
        if self.n < 2:
            raise ValidationError("grid needs at least 2 points per axis")

    @cached_property
    def base_axis(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)

    @cached_property
    def shifted_axis(self) -> np.ndarray:
        s = self.base_axis + 1.0 / (2 * self.n)
        return s[s <= 1.0]

    def axis_values(self) -> np.ndarray:
        """Sorted distinct values taken by any single coordinate."""
        if not self.shifted:
            return self.base_axis
        return np.union1d(self.base_axis, self.shifted_axis)

    @cached_property
    def points(self) -> np.ndarray:
        blocks = [_tensor(self.base_axis, self.m)]
        if self.shifted:
            blocks.append(_tensor(self.shifted_axis, self.m))
        return np.concatenate(blocks, axis=0)

    def __len__(self) -> int:
        return self.points.shape[0]

    def describe(self) -> dict:
        return {"m": self.m, "n_per_axis": self.n, "shifted": self.shifted, "n_points": len(self)}


def _tensor(axis: np.ndarray, m: int) -> np.ndarray:
    mesh = np.meshgrid(*([axis] * m), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def default_grid(m: int) -> GridSpec:
    """4096 points for one coordinate, 64 per axis for two, 16 for three, 8 beyond."""
    return GridSpec(m=m, n=_DEFAULT_PER_AXIS.get(m, 8))
