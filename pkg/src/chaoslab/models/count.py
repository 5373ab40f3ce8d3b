"""Total point count, the tight case of the Poincare inequality."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..functional import ChaoticSetKind, Functional
from ..pointproc import Intensity, PointPattern, Window


@dataclass(frozen=True)
class CountModel(Functional):
    """F(mu) = |mu|.  Every cost operator is identically 1."""

    d: int = 2
    s: float = 100.0

    constant_remove_cost = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be a positive integer")
        if self.s <= 0:
            raise ValueError("intensity must be > 0")

    def intensity(self) -> Intensity:
        return Intensity(self.s, Window.torus(self.d))

    def evaluate(self, pattern: PointPattern) -> float:
        return float(len(pattern))

    def add_one_cost(self, x, pattern) -> float:
        return 1.0

    def remove_one_cost(self, i, pattern) -> float:
        return 1.0

    def add_one_costs(self, xs, pattern) -> np.ndarray:
        return np.ones(len(np.atleast_2d(xs)))

    @property
    def has_scores(self) -> bool:
        return True

    def scores(self, pattern) -> np.ndarray:
        return np.ones(len(pattern))

    def score_insert(self, xs, pattern) -> np.ndarray:
        return np.ones(len(np.atleast_2d(xs)))

    def score_pair_insert(self, xs, ys, pattern) -> np.ndarray:
        return np.ones(len(np.atleast_2d(xs)))

    def score_perturbation(self, y, pattern) -> float:
        return 0.0

    set_kinds = (ChaoticSetKind.PIVOTAL,)
    default_set_kind = ChaoticSetKind.PIVOTAL
