"""Small-degree vertex count in a random geometric graph on the torus.

The functional counts pattern points whose closed ball of radius r holds
at most k points of the pattern (the point itself included), i.e.
vertices of degree at most k-1.  It is a sum of per-point indicator
scores, which gives exact local cost operators:

    D_x F  = 1(|B(x,r) ∩ mu| <= k-1) - #{y in mu ∩ B(x,r) : c_y = k}
    D_x- F = 1(c_x <= k)             - #{y != x in B(x,r) : c_y = k+1}

where c_y is the ball count of y.  The two subtracted terms are the
nonnegative decomposition parts g2; the indicator terms are g1.  The
associated chaotic sets are the small-degree vertices M_k (ball count
<= k) and the vertices N_k that have a neighbor of ball count exactly
k+1 (removing such a vertex creates a new small-degree vertex).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..functional import ChaoticSetKind, Functional
from ..geometry import ball_counts, count_near, unit_ball_volume
from ..pointproc import Intensity, PointPattern, Window


@dataclass(frozen=True)
class KIsoModel(Functional):
    k: int = 1
    r: float = 0.1
    d: int = 2
    s: float = 100.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if not 0.0 < self.r < 0.5:
            raise ValueError("radius must lie in (0, 1/2) on the unit torus")
        if self.d < 1:
            raise ValueError("dimension must be a positive integer")
        if self.s <= 0:
            raise ValueError("intensity must be > 0")

    def intensity(self) -> Intensity:
        return Intensity(self.s, Window.torus(self.d))

    @property
    def mean_ball_mass(self) -> float:
        """kappa_d * s * r^d, the expected ball occupancy."""
        return unit_ball_volume(self.d) * self.s * self.r**self.d

    def analytic_mean(self) -> float:
        """Exact expectation s * P(Poisson(kappa_d s r^d) <= k-1) (torus, r < 1/2)."""
        return float(self.s * stats.poisson.cdf(self.k - 1, self.mean_ball_mass))

    # ---- core ------------------------------------------------------------
    def _counts(self, pattern: PointPattern) -> np.ndarray:
        self._check_window(pattern)
        return ball_counts(pattern, self.r)

    def _check_window(self, pattern: PointPattern):
        if pattern.window.kind != "torus" or pattern.window.dim != self.d:
            raise ValueError("pattern window must be the unit torus of the model dimension")

    def evaluate(self, pattern: PointPattern) -> float:
        if len(pattern) == 0:
            return 0.0
        return float(np.count_nonzero(self._counts(pattern) <= self.k))

    @property
    def has_scores(self) -> bool:
        return True

    def scores(self, pattern: PointPattern) -> np.ndarray:
        return (self._counts(pattern) <= self.k).astype(float)

    def score_insert(self, xs, pattern: PointPattern) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if len(pattern) == 0:
            return (np.ones(len(xs)) <= self.k).astype(float)
        near = count_near(pattern.points, xs, self.r, pattern.window)
        return (near + 1 <= self.k).astype(float)

    def score_pair_insert(self, xs, ys, pattern: PointPattern) -> np.ndarray:
        from ..geometry import displacements, within_radius_sq

        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        if len(pattern):
            cx = count_near(pattern.points, xs, self.r, pattern.window)
            cy = count_near(pattern.points, ys, self.r, pattern.window)
        else:
            cx = cy = np.zeros(len(xs), dtype=np.int64)
        diff = displacements(xs, ys, pattern.window)
        adj = within_radius_sq(np.einsum("ij,ij->i", diff, diff), self.r).astype(np.int64)
        fx = (cx + 1 + adj) <= self.k
        fy = (cy + 1 + adj) <= self.k
        return (fx & fy).astype(float)

    def score_perturbation(self, y, pattern: PointPattern) -> float:
        # adding y can only push ball counts up: sum_x D_y f(x, mu) = -g2(y)
        y = np.asarray(y, dtype=float)[None, :]
        return -float(self.decomposition_insert(y, pattern)[1][0])

    # ---- incremental costs -------------------------------------------------
    def decomposition_insert(self, xs, pattern: PointPattern):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        g1 = self.score_insert(xs, pattern)
        if len(pattern) == 0:
            return g1, np.zeros(len(xs))
        counts = self._counts(pattern)
        at_k = pattern.points[counts == self.k]
        if len(at_k) == 0:
            g2 = np.zeros(len(xs))
        else:
            g2 = count_near(at_k, xs, self.r, pattern.window).astype(float)
        return g1, g2

    def decomposition_point(self, pattern: PointPattern):
        n = len(pattern)
        if n == 0:
            return np.zeros(0), np.zeros(0)
        counts = self._counts(pattern)
        g1 = (counts <= self.k).astype(float)
        at_k1 = counts == self.k + 1
        if not at_k1.any():
            g2 = np.zeros(n)
        else:
            near = count_near(pattern.points[at_k1], pattern.points, self.r, pattern.window)
            g2 = (near - at_k1).astype(float)  # exclude the point itself
        return g1, g2

    def add_one_costs(self, xs, pattern: PointPattern) -> np.ndarray:
        g1, g2 = self.decomposition_insert(xs, pattern)
        return g1 - g2

    def add_one_cost(self, x, pattern: PointPattern) -> float:
        return float(self.add_one_costs(np.asarray(x, dtype=float)[None, :], pattern)[0])

    def remove_one_costs(self, pattern: PointPattern) -> np.ndarray:
        g1, g2 = self.decomposition_point(pattern)
        return g1 - g2

    def remove_one_cost(self, i: int, pattern: PointPattern) -> float:
        return float(self.remove_one_costs(pattern)[i])

    def g1_point(self, pattern):
        return self.decomposition_point(pattern)[0]

    def g2_point(self, pattern):
        return self.decomposition_point(pattern)[1]

    def g1_insert(self, xs, pattern):
        return self.decomposition_insert(xs, pattern)[0]

    def g2_insert(self, xs, pattern):
        return self.decomposition_insert(xs, pattern)[1]

    # ---- chaotic sets ------------------------------------------------------
    set_kinds = (
        ChaoticSetKind.PIVOTAL,
        ChaoticSetKind.SMALL_DEGREE,
        ChaoticSetKind.PIVOTAL_DEGREE,
    )
    default_set_kind = ChaoticSetKind.PIVOTAL_DEGREE

    def set_members(self, pattern: PointPattern, kind=None) -> np.ndarray:
        kind = ChaoticSetKind(kind or self.default_set_kind)
        if kind == ChaoticSetKind.SMALL_DEGREE:
            return self._counts(pattern) <= self.k
        if kind == ChaoticSetKind.PIVOTAL_DEGREE:
            counts = self._counts(pattern)
            at_k1 = counts == self.k + 1
            if not at_k1.any():
                return np.zeros(len(pattern), dtype=bool)
            near = count_near(pattern.points[at_k1], pattern.points, self.r, pattern.window)
            return (near - at_k1) >= 1
        if kind == ChaoticSetKind.PIVOTAL:
            return self.remove_one_costs(pattern) != 0.0
        raise ValueError(f"no set kind {kind.value!r} for this model")


def extract_sets_kiso(model: KIsoModel, pattern: PointPattern) -> tuple[np.ndarray, np.ndarray]:
    """Index sets (M_k, N_k): small-degree vertices and their pivotal neighbors."""
    m = np.flatnonzero(model.set_members(pattern, ChaoticSetKind.SMALL_DEGREE))
    n = np.flatnonzero(model.set_members(pattern, ChaoticSetKind.PIVOTAL_DEGREE))
    return m, n
