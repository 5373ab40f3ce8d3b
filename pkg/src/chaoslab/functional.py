"""Poisson-functional interface and the core Monte-Carlo estimators.

A :class:`Functional` bundles the map F on point patterns with its
add-one and remove-one costs

    D_x F(mu)  = F(mu + delta_x) - F(mu)
    D_x- F(mu) = F(mu) - F(mu - delta_x),   x in mu,

plus optional extras: a per-point score representation (when F is a sum
of local scores), named chaotic-set extractors, and a nonnegative
decomposition D_x F = g1 - g2 used by the variance-decomposition
diagnostics.  Defaults compute costs by re-evaluation; models override
them with local incremental logic, and the override is required to equal
the default exactly (property-tested).

Estimators are unbiased by construction.  Point-sum estimators rest on
the Mecke identity E sum_{x in eta} h(x, eta) = int E h(x, eta+delta_x)
lambda(dx); insertion estimators sample uniform locations and reweight
by the intensity mass.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .parallel import replication_map
from .pointproc import Intensity, PointPattern, sample_poisson
from .rng import RngStream

VARIANCE_BATCHES = 30
DEFAULT_INSERTIONS = 32


class EvaluationError(RuntimeError):
    """Functional evaluation failed; message carries the offending stream."""


class ChaoticSetKind(str, Enum):
    PIVOTAL = "pivotal"
    SMALL_DEGREE = "small_degree"
    PIVOTAL_DEGREE = "pivotal_degree"
    GAMMA_MEMBERSHIP = "gamma_membership"


class Functional:
    """Base class: re-evaluation defaults for every derived quantity."""

    #: set when D_x- F is a configuration-independent constant (fast paths)
    constant_remove_cost: float | None = None

    def evaluate(self, pattern: PointPattern) -> float:
        raise NotImplementedError

    # ---- costs -----------------------------------------------------------
    def add_one_cost(self, x, pattern: PointPattern) -> float:
        return self.evaluate(pattern.with_point(x)) - self.evaluate(pattern)

    def remove_one_cost(self, i: int, pattern: PointPattern) -> float:
        return self.evaluate(pattern) - self.evaluate(pattern.without_index(i))

    def add_one_costs(self, xs: np.ndarray, pattern: PointPattern) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return np.asarray([self.add_one_cost(x, pattern) for x in xs], dtype=float)

    def remove_one_costs(self, pattern: PointPattern) -> np.ndarray:
        if self.constant_remove_cost is not None:
            return np.full(len(pattern), float(self.constant_remove_cost))
        return np.asarray(
            [self.remove_one_cost(i, pattern) for i in range(len(pattern))], dtype=float
        )

    # ---- optional score representation ----------------------------------
    @property
    def has_scores(self) -> bool:
        return False

    def scores(self, pattern: PointPattern) -> np.ndarray:
        raise NotImplementedError("functional does not expose a score representation")

    def score(self, i: int, pattern: PointPattern) -> float:
        return float(self.scores(pattern)[i])

    def score_insert(self, xs: np.ndarray, pattern: PointPattern) -> np.ndarray:
        """Scores f(x, mu + delta_x) of freshly inserted points."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        out = np.empty(len(xs))
        for j, x in enumerate(xs):
            aug = pattern.with_point(x)
            out[j] = self.score(len(aug) - 1, aug)
        return out

    def score_pair_insert(self, xs: np.ndarray, ys: np.ndarray, pattern: PointPattern) -> np.ndarray:
        """Products f(x, mu+dx+dy) * f(y, mu+dx+dy) for paired insertions."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        out = np.empty(len(xs))
        for j in range(len(xs)):
            aug = pattern.with_point(xs[j]).with_point(ys[j])
            s = self.scores(aug)
            out[j] = s[-2] * s[-1]
        return out

    def score_perturbation(self, y, pattern: PointPattern) -> float:
        """sum over pattern points x of D_y f(x, mu)."""
        if len(pattern) == 0:
            return 0.0
        aug = pattern.with_point(y)
        return float(np.sum(self.scores(aug)[:-1] - self.scores(pattern)))

    # ---- chaotic sets ----------------------------------------------------
    set_kinds: tuple[ChaoticSetKind, ...] = (ChaoticSetKind.PIVOTAL,)
    default_set_kind: ChaoticSetKind = ChaoticSetKind.PIVOTAL

    def set_members(self, pattern: PointPattern, kind: ChaoticSetKind | None = None) -> np.ndarray:
        """Boolean membership mask of the named chaotic set."""
        kind = ChaoticSetKind(kind or self.default_set_kind)
        if kind == ChaoticSetKind.PIVOTAL:
            return self.remove_one_costs(pattern) != 0.0
        raise ValueError(f"functional does not expose set kind {kind.value!r}")

    def chaotic_set(self, pattern: PointPattern, kind: ChaoticSetKind | None = None) -> np.ndarray:
        """Point indices of the chaotic set (positional indices)."""
        return np.flatnonzero(self.set_members(pattern, kind))

    # ---- decomposition D_x F = g1 - g2 (disjoint nonnegative parts) ------
    def decomposition_point(self, pattern: PointPattern) -> tuple[np.ndarray, np.ndarray]:
        """Per-point (g1, g2) with x a pattern point; default: +/- parts of D_x-."""
        costs = self.remove_one_costs(pattern)
        return np.clip(costs, 0.0, None), np.clip(-costs, 0.0, None)

    def decomposition_insert(self, xs: np.ndarray, pattern: PointPattern) -> tuple[np.ndarray, np.ndarray]:
        """(g1, g2) at inserted locations; default: +/- parts of D_x."""
        costs = self.add_one_costs(xs, pattern)
        return np.clip(costs, 0.0, None), np.clip(-costs, 0.0, None)

    def g1_point(self, pattern: PointPattern) -> np.ndarray:
        return self.decomposition_point(pattern)[0]

    def g2_point(self, pattern: PointPattern) -> np.ndarray:
        return self.decomposition_point(pattern)[1]

    def g1_insert(self, xs: np.ndarray, pattern: PointPattern) -> np.ndarray:
        return self.decomposition_insert(xs, pattern)[0]

    def g2_insert(self, xs: np.ndarray, pattern: PointPattern) -> np.ndarray:
        return self.decomposition_insert(xs, pattern)[1]


# --------------------------------------------------------------------------
# Estimates


@dataclass(frozen=True)
class Estimate:
    """Monte-Carlo point value with its standard error."""

    value: float
    std_error: float
    replications: int
    seed: RngStream

    def to_json(self) -> dict:
        return {
            "value": float(self.value),
            "se": float(self.std_error),
            "n": int(self.replications),
            "seed": self.seed.descriptor(),
        }


@dataclass(frozen=True)
class RatioEstimate(Estimate):
    """Ratio estimate; ``defined`` is False when the denominator is noise-level."""

    defined: bool = True
    numerator: float = float("nan")
    denominator: float = float("nan")

    def to_json(self) -> dict:
        d = super().to_json()
        d.update(
            defined=bool(self.defined),
            numerator=float(self.numerator),
            denominator=float(self.denominator),
        )
        return d


def mean_se(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return float("inf")
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


def batch_split(values: np.ndarray, n_batches: int = VARIANCE_BATCHES) -> list[np.ndarray]:
    """Contiguous batches for batch-means standard errors."""
    n = len(values)
    b = max(2, min(n_batches, n // 2))
    edges = np.linspace(0, n, b + 1).astype(int)
    return [values[edges[i] : edges[i + 1]] for i in range(b)]


def batch_variance_se(values: np.ndarray, n_batches: int = VARIANCE_BATCHES) -> float:
    """Standard error of the sample variance via batch means."""
    batches = batch_split(values, n_batches)
    bv = np.asarray([np.var(b, ddof=1) for b in batches])
    return float(np.std(bv, ddof=1) / np.sqrt(len(bv)))


def ratio_delta_se(num_batch: np.ndarray, den_batch: np.ndarray) -> float:
    """Delta-method standard error of mean(num)/mean(den) from batch values."""
    b = len(num_batch)
    v = float(np.mean(num_batch))
    p = float(np.mean(den_batch))
    if p == 0.0:
        return float("inf")
    var_v = np.var(num_batch, ddof=1) / b
    var_p = np.var(den_batch, ddof=1) / b
    cov_vp = np.cov(num_batch, den_batch, ddof=1)[0, 1] / b
    se2 = var_v / p**2 + v**2 * var_p / p**4 - 2.0 * v * cov_vp / p**3
    return float(np.sqrt(max(se2, 0.0)))


# --------------------------------------------------------------------------
# Replication workers (top level so they pickle for process pools)


def _eval_worker(payload, rep_rng: RngStream) -> float:
    functional, intensity = payload
    pattern = sample_poisson(intensity, rep_rng)
    try:
        return float(functional.evaluate(pattern))
    except Exception as e:  # noqa: BLE001 - propagate with the offending seed
        raise EvaluationError(f"evaluation failed for pattern seed {rep_rng.descriptor()}") from e


def _poincare_worker(payload, rep_rng: RngStream) -> float:
    functional, intensity = payload
    pattern = sample_poisson(intensity, rep_rng)
    try:
        costs = functional.remove_one_costs(pattern)
    except Exception as e:  # noqa: BLE001
        raise EvaluationError(f"evaluation failed for pattern seed {rep_rng.descriptor()}") from e
    return float(np.sum(costs * costs))


def _ratio_worker(payload, rep_rng: RngStream) -> tuple[float, float]:
    functional, intensity = payload
    pattern = sample_poisson(intensity, rep_rng)
    costs = functional.remove_one_costs(pattern)
    return float(functional.evaluate(pattern)), float(np.sum(costs * costs))


def _mecke_worker(payload, rep_rng: RngStream) -> tuple[float, float]:
    kernel, intensity, insertions = payload
    pattern = sample_poisson(intensity, rep_rng)
    pv = np.asarray(kernel.point_values(pattern), dtype=float)
    if pv.size and pv.min() < 0:
        raise ValueError("Mecke kernel must be nonnegative")
    gen = rep_rng.child("insert").generator()
    xs = intensity.window.sample_uniform(insertions, gen)
    iv = np.asarray(kernel.insert_values(pattern, xs), dtype=float)
    if iv.size and iv.min() < 0:
        raise ValueError("Mecke kernel must be nonnegative")
    return float(pv.sum()), float(intensity.mass * iv.mean() if insertions else 0.0)


# --------------------------------------------------------------------------
# Estimator operations


def estimate_mean(
    functional: Functional,
    intensity: Intensity,
    n: int,
    rng: RngStream,
    threads: int = 1,
) -> Estimate:
    """Sample mean of F over fresh Poisson patterns."""
    if n < 2:
        raise ValueError("need at least 2 replications")
    vals = np.asarray(replication_map(_eval_worker, (functional, intensity), n, rng, threads))
    return Estimate(float(vals.mean()), mean_se(vals), n, rng)


def estimate_variance(
    functional: Functional,
    intensity: Intensity,
    n: int,
    rng: RngStream,
    threads: int = 1,
) -> Estimate:
    """Unbiased sample variance of F; standard error by batch means."""
    if n < 2:
        raise ValueError("need at least 2 replications")
    vals = np.asarray(replication_map(_eval_worker, (functional, intensity), n, rng, threads))
    return Estimate(float(np.var(vals, ddof=1)), batch_variance_se(vals), n, rng)


def poincare_rhs(
    functional: Functional,
    intensity: Intensity,
    n: int,
    rng: RngStream,
    threads: int = 1,
) -> Estimate:
    """Poincare upper bound int E (D_x F)^2 lambda(dx), by the point sum.

    The Mecke identity with h = (D_x- F)^2 makes E sum_{x in eta}
    (D_x- F(eta))^2 an unbiased estimator of the insertion integral.
    """
    if n < 2:
        raise ValueError("need at least 2 replications")
    vals = np.asarray(replication_map(_poincare_worker, (functional, intensity), n, rng, threads))
    return Estimate(float(vals.mean()), mean_se(vals), n, rng)


def superconcentration_ratio(
    functional: Functional,
    intensity: Intensity,
    n: int,
    rng: RngStream,
    threads: int = 1,
) -> RatioEstimate:
    """Var(F) divided by the Poincare bound, from common random numbers.

    Flagged undefined when the denominator is not separated from zero by
    three standard errors.
    """
    if n < 2:
        raise ValueError("need at least 2 replications")
    out = replication_map(_ratio_worker, (functional, intensity), n, rng, threads)
    f_vals = np.asarray([v for v, _ in out])
    p_vals = np.asarray([p for _, p in out])

    var_hat = float(np.var(f_vals, ddof=1))
    p_hat = float(np.mean(p_vals))
    p_se = mean_se(p_vals)

    fb = batch_split(f_vals)
    pb = batch_split(p_vals)
    v_batch = np.asarray([np.var(b, ddof=1) for b in fb])
    p_batch = np.asarray([np.mean(b) for b in pb])

    defined = p_hat > 3.0 * p_se and p_hat > 0.0
    value = var_hat / p_hat if defined else float("nan")
    se = ratio_delta_se(v_batch, p_batch) if defined else float("inf")
    return RatioEstimate(value, se, n, rng, defined=defined, numerator=var_hat, denominator=p_hat)


class MeckeKernel:
    """Nonnegative h(x, mu) evaluated at pattern points or inserted points."""

    name = "kernel"

    def point_values(self, pattern: PointPattern) -> np.ndarray:
        raise NotImplementedError

    def insert_values(self, pattern: PointPattern, xs: np.ndarray) -> np.ndarray:
        """h(u, mu + delta_u) for each inserted location u."""
        raise NotImplementedError


class UnitKernel(MeckeKernel):
    name = "unit"

    def point_values(self, pattern):
        return np.ones(len(pattern))

    def insert_values(self, pattern, xs):
        return np.ones(len(np.atleast_2d(xs)))


class BallCountIsOne(MeckeKernel):
    """h(x, mu) = 1 when x has no other pattern point within radius r."""

    name = "void_ball"

    def __init__(self, radius: float):
        self.radius = float(radius)

    def point_values(self, pattern):
        from .geometry import ball_counts

        return (ball_counts(pattern, self.radius) == 1).astype(float)

    def insert_values(self, pattern, xs):
        from .geometry import count_near

        xs = np.atleast_2d(xs)
        if len(pattern) == 0:
            return np.ones(len(xs))
        near = count_near(pattern.points, xs, self.radius, pattern.window)
        return (near == 0).astype(float)


class RemoveCostSquared(MeckeKernel):
    """h(x, mu) = (D_x- F(mu))^2 for a wrapped functional."""

    name = "remove_cost_sq"

    def __init__(self, functional: Functional):
        self.functional = functional

    def point_values(self, pattern):
        c = self.functional.remove_one_costs(pattern)
        return c * c

    def insert_values(self, pattern, xs):
        c = self.functional.add_one_costs(np.atleast_2d(xs), pattern)
        return c * c


def mecke_check(
    kernel: MeckeKernel,
    intensity: Intensity,
    n: int,
    rng: RngStream,
    threads: int = 1,
    insertions: int = DEFAULT_INSERTIONS,
) -> tuple[Estimate, Estimate]:
    """Point-sum and insertion estimates of the same Mecke integral.

    Returns (E sum_{x in eta} h(x, eta),  int E h(x, eta+delta_x) lambda(dx))
    as two unbiased estimates that must agree within Monte-Carlo error.
    """
    if n < 2:
        raise ValueError("need at least 2 replications")
    out = replication_map(_mecke_worker, (kernel, intensity, insertions), n, rng, threads)
    pt = np.asarray([a for a, _ in out])
    ins = np.asarray([b for _, b in out])
    return (
        Estimate(float(pt.mean()), mean_se(pt), n, rng),
        Estimate(float(ins.mean()), mean_se(ins), n, rng),
    )
