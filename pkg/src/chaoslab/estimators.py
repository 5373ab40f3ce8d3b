"""Chaos and variance diagnostics built on coupled birth-death trajectories.

Everything here reduces to one mechanism.  For a pair (eta, eta^t) from a
shared trajectory and per-point values phi, psi, the coupled point sum

    S(t) = sum over x in eta ∩ eta^t of phi(x, eta) * psi(x, eta^t)

is an unbiased estimator of e^{-t} int E[phi(x, eta) psi(x, eta^t)]
lambda(dx) (set overlaps are the special case of 0/1 memberships, and the
remove-one cost pair gives the variance identity integrand).  One
trajectory serves the entire t grid: estimates are correlated across t
but unbiased pointwise, and standard errors come from the replication
spread, which remains valid.

Integrals over t use trapezoid quadrature on a geometric grid plus an
explicit tail bound e^{-t_max} * S(0), valid because e^t S(t) is
non-increasing in t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .functional import (
    ChaoticSetKind,
    Estimate,
    Functional,
    RatioEstimate,
    batch_split,
    batch_variance_se,
    mean_se,
    ratio_delta_se,
)
from .geometry import unit_ball_volume
from .parallel import replication_map
from .pointproc import Intensity, PointPattern, sample_poisson, simulate_trajectory
from .rng import RngStream

DEFAULT_T_MAX = 10.0
DEFAULT_T_NODES = 40
DEFAULT_T_DELTA = 0.01


class DecompositionOverlapError(ValueError):
    """The supplied decomposition has overlapping supports."""


def build_t_grid(
    t_max: float = DEFAULT_T_MAX,
    nodes: int = DEFAULT_T_NODES,
    delta: float = DEFAULT_T_DELTA,
) -> np.ndarray:
    """{0} followed by a geometric grid from delta to t_max.

    The integrands decay like e^{-t}, so nodes concentrate near 0.
    """
    if not 0 < delta < t_max:
        raise ValueError("need 0 < delta < t_max")
    if nodes < 3:
        raise ValueError("need at least 3 grid nodes")
    return np.concatenate([[0.0], np.geomspace(delta, t_max, nodes - 1)])


def trapezoid(values: np.ndarray, t_grid: np.ndarray) -> float:
    return float(np.trapz(values, t_grid))


def quad_curvature_bound(curve0: float, t_grid: np.ndarray) -> float:
    """Trapezoid error proxy: per-interval h^3/12 curvature of the
    dominating envelope curve0 * e^{-t}."""
    h = np.diff(t_grid)
    return float(np.sum(h**3 / 12.0 * abs(curve0) * np.exp(-t_grid[:-1])))


# --------------------------------------------------------------------------
# Per-point field providers (picklable, shared by all trajectory estimators)


class FunctionalFields:
    """Named per-point vectors of a functional on one pattern."""

    def __init__(self, functional: Functional, names: tuple[str, ...]):
        self.functional = functional
        self.names = tuple(names)

    @property
    def constant_value(self) -> float | None:
        """Set when every requested field is the same known constant."""
        c = self.functional.constant_remove_cost
        if c is not None and all(n == "dminus" for n in self.names):
            return float(c)
        return None

    def __call__(self, pattern: PointPattern) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        want = set(self.names)
        if "g1" in want or "g2" in want:
            g1, g2 = self.functional.decomposition_point(pattern)
            out["g1"], out["g2"] = g1, g2
            if "dminus" in want:
                out["dminus"] = g1 - g2
        if "dminus" in want and "dminus" not in out:
            out["dminus"] = self.functional.remove_one_costs(pattern)
        for name in want:
            if name.startswith("set:"):
                kind = ChaoticSetKind(name[4:])
                out[name] = self.functional.set_members(pattern, kind).astype(float)
        return out


class KernelFields:
    """Single per-point field from a nonnegative kernel's point form."""

    def __init__(self, kernel, name: str = "g"):
        self.kernel = kernel
        self.names = (name,)

    constant_value = None

    def __call__(self, pattern: PointPattern) -> dict[str, np.ndarray]:
        return {self.names[0]: np.asarray(self.kernel.point_values(pattern), dtype=float)}


@dataclass(frozen=True)
class _CurveJob:
    provider: object  # FunctionalFields | KernelFields
    curves: tuple  # ((field_at_0, field_at_t), ...)
    intensity: Intensity
    t_grid: np.ndarray
    evaluate: object = None  # optional functional whose F(slice 0) is collected


def _curve_worker(job: _CurveJob, rep_rng: RngStream):
    t_grid = job.t_grid
    traj = simulate_trajectory(job.intensity, float(t_grid[-1]), rep_rng)
    p0 = traj.slice(0.0)
    n0 = len(p0)
    f_value = float(job.evaluate.evaluate(p0)) if job.evaluate is not None else 0.0

    const = getattr(job.provider, "constant_value", None)
    if const is not None:
        counts = traj.survivor_counts(t_grid).astype(float)
        curves = np.tile(const * const * counts, (len(job.curves), 1))
        return curves, f_value

    f0 = job.provider(p0)
    n_curves = len(job.curves)
    curves = np.zeros((n_curves, len(t_grid)))
    for c, (a, b) in enumerate(job.curves):
        curves[c, 0] = float(np.dot(f0[a], f0[b]))
    for ti in range(1, len(t_grid)):
        pt = traj.slice(float(t_grid[ti]))
        ft = job.provider(pt)
        surv_pos = pt.ids < n0  # positions in the slice of surviving initial points
        surv_ids = pt.ids[surv_pos]  # equal to their positions in slice(0)
        if not surv_ids.size:
            continue
        for c, (a, b) in enumerate(job.curves):
            curves[c, ti] = float(np.dot(f0[a][surv_ids], ft[b][surv_pos]))
    return curves, f_value


def _run_curves(job: _CurveJob, n: int, rng: RngStream, threads: int):
    if n < 2:
        raise ValueError("need at least 2 replications")
    out = replication_map(_curve_worker, job, n, rng, threads)
    curves = np.stack([c for c, _ in out])  # (n, C, T)
    f_vals = np.asarray([f for _, f in out])
    return curves, f_vals


def _batch_curve_means(rep_curves: np.ndarray) -> np.ndarray:
    """(B, T) batch means of a per-replication curve array (n, T)."""
    batches = batch_split(rep_curves)
    return np.stack([b.mean(axis=0) for b in batches])


# --------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class OverlapCurve:
    """Per-t estimates of E|A^0 ∩ B^t| for chaotic sets A, B."""

    t_grid: np.ndarray
    values: list[Estimate]
    kinds: tuple[str, str]
    rep_curves: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def batch_means(self) -> np.ndarray:
        return _batch_curve_means(self.rep_curves)

    def integral(self) -> tuple[Estimate, float]:
        """Quadrature over the grid and the e^{-t_max} tail bound."""
        per_rep = np.trapz(self.rep_curves, self.t_grid, axis=1)
        est = Estimate(float(per_rep.mean()), mean_se(per_rep), len(per_rep), self.values[0].seed)
        tail = math.exp(-float(self.t_grid[-1])) * self.values[0].value
        return est, tail

    def normalized(self) -> tuple[np.ndarray, np.ndarray]:
        """Set-chaos profile e^{-t} E|A^0 ∩ B^t| / E|A^0| with batch ses."""
        bm = self.batch_means
        base = bm[:, 0]
        vals = np.exp(-self.t_grid) * np.asarray([v.value for v in self.values])
        vals = vals / self.values[0].value
        ses = np.empty_like(vals)
        for ti in range(len(self.t_grid)):
            num = np.exp(-self.t_grid[ti]) * bm[:, ti]
            ses[ti] = ratio_delta_se(num, base)
        return vals, ses

    def to_json(self) -> dict:
        return {
            "kinds": list(self.kinds),
            "t_grid": [float(t) for t in self.t_grid],
            "values": [v.to_json() for v in self.values],
        }


@dataclass(frozen=True)
class IdentityReport:
    """Sample variance against the coupled remove-cost integral."""

    lhs: Estimate
    rhs: Estimate
    tail_bound: float
    quad_bound: float
    residual: float
    residual_se: float

    @property
    def tolerance(self) -> float:
        return 3.0 * self.residual_se + self.tail_bound + self.quad_bound

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
            "tail_bound": float(self.tail_bound),
            "quad_bound": float(self.quad_bound),
            "residual": float(self.residual),
            "residual_se": float(self.residual_se),
            "passed": bool(self.passed),
        }


@dataclass(frozen=True)
class ChaosCurve:
    """Chaos coefficients across the t grid (value 1 at t = 0 by construction)."""

    t_grid: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    replications: int
    seed: RngStream

    def at(self, t: float) -> RatioEstimate:
        i = int(np.argmin(np.abs(self.t_grid - t)))
        return RatioEstimate(
            float(self.values[i]), float(self.std_errors[i]), self.replications, self.seed
        )

    def to_json(self) -> dict:
        return {
            "t_grid": [float(t) for t in self.t_grid],
            "values": [float(v) for v in self.values],
            "se": [float(s) for s in self.std_errors],
            "n": int(self.replications),
        }


@dataclass(frozen=True)
class DecompositionReport:
    """Terms T1, T2, T3 of the variance decomposition and its closure."""

    t1: Estimate
    t2: Estimate
    t3: Estimate
    variance: Estimate
    tail_bounds: tuple[float, float, float]
    quad_bound: float
    closure_residual: float
    closure_se: float

    @property
    def combination(self) -> float:
        return self.t1.value + self.t2.value - 2.0 * self.t3.value

    @property
    def tolerance(self) -> float:
        return 3.0 * self.closure_se + sum(self.tail_bounds) + self.quad_bound

    @property
    def passed(self) -> bool:
        return self.closure_residual <= self.tolerance

    def to_json(self) -> dict:
        return {
            "t1": self.t1.to_json(),
            "t2": self.t2.to_json(),
            "t3": self.t3.to_json(),
            "variance": self.variance.to_json(),
            "tail_bounds": [float(x) for x in self.tail_bounds],
            "quad_bound": float(self.quad_bound),
            "closure_residual": float(self.closure_residual),
            "closure_se": float(self.closure_se),
            "passed": bool(self.passed),
        }


@dataclass(frozen=True)
class BoundReport:
    """One-sided bound check: lhs <= rhs within Monte-Carlo error."""

    lhs: Estimate
    rhs_plain: Estimate
    rhs_improved: Estimate | None
    tail_bound: float
    dg_nonpositive_claimed: bool
    dg_nonpositive_verified: bool

    def _holds(self, rhs: Estimate) -> bool:
        slack = 3.0 * math.hypot(self.lhs.std_error, rhs.std_error)
        return self.lhs.value - self.tail_bound <= rhs.value + slack

    @property
    def holds_plain(self) -> bool:
        return self._holds(self.rhs_plain)

    @property
    def holds_improved(self) -> bool:
        return self.rhs_improved is None or self._holds(self.rhs_improved)

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs.to_json(),
            "rhs_plain": self.rhs_plain.to_json(),
            "rhs_improved": self.rhs_improved.to_json() if self.rhs_improved else None,
            "tail_bound": float(self.tail_bound),
            "dg_nonpositive_claimed": self.dg_nonpositive_claimed,
            "dg_nonpositive_verified": self.dg_nonpositive_verified,
            "holds_plain": bool(self.holds_plain),
            "holds_improved": bool(self.holds_improved),
        }


@dataclass(frozen=True)
class LowerBoundReport:
    """Check of lhs >= denom / (alpha + 1) within Monte-Carlo error."""

    lhs: Estimate
    denom: Estimate
    alpha: RatioEstimate
    tail_bound: float

    @property
    def rhs_value(self) -> float:
        return self.denom.value / (self.alpha.value + 1.0)

    @property
    def holds(self) -> bool:
        if not self.alpha.defined:
            return True  # vacuous: no alpha separates from zero
        slack = 3.0 * math.hypot(self.lhs.std_error, self.denom.std_error / (self.alpha.value + 1.0))
        return self.lhs.value + self.tail_bound >= self.rhs_value - slack

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs.to_json(),
            "denom": self.denom.to_json(),
            "alpha": self.alpha.to_json(),
            "tail_bound": float(self.tail_bound),
            "rhs_value": float(self.rhs_value) if self.alpha.defined else None,
            "holds": bool(self.holds),
        }


@dataclass(frozen=True)
class ConditionsReport:
    """Score-sum diagnostics: pair-correlation excess and score smallness."""

    t_s: Estimate
    score_l2: Estimate  # int E f(x, eta+delta_x)^2 lambda(dx)
    epsilon: RatioEstimate

    @property
    def ts_ratio(self) -> float:
        return self.t_s.value / self.score_l2.value if self.score_l2.value else float("nan")

    def to_json(self) -> dict:
        return {
            "t_s": self.t_s.to_json(),
            "score_l2": self.score_l2.to_json(),
            "ts_ratio": float(self.ts_ratio),
            "epsilon": self.epsilon.to_json(),
        }


# --------------------------------------------------------------------------
# Trajectory-based estimators


def overlap_curve(
    functional: Functional,
    intensity: Intensity,
    t_grid: np.ndarray,
    n: int,
    rng: RngStream,
    threads: int = 1,
    kinds: tuple[str, str] | str | None = None,
) -> OverlapCurve:
    """Per-t estimates of E|A^0 ∩ B^t| from shared trajectories."""
    if kinds is None:
        kinds = functional.default_set_kind
    if isinstance(kinds, (str, ChaoticSetKind)):
        kinds = (kinds, kinds)
    kinds = tuple(ChaoticSetKind(k) for k in kinds)
    for k in kinds:
        if k not in functional.set_kinds:
            raise ValueError(f"functional has no chaotic-set extractor {k.value!r}")
    fields = tuple(sorted({f"set:{k.value}" for k in kinds}))
    job = _CurveJob(
        FunctionalFields(functional, fields),
        ((f"set:{kinds[0].value}", f"set:{kinds[1].value}"),),
        intensity,
        np.asarray(t_grid, dtype=float),
    )
    curves, _ = _run_curves(job, n, rng, threads)
    rep = curves[:, 0, :]
    ests = [
        Estimate(float(rep[:, t].mean()), mean_se(rep[:, t]), n, rng) for t in range(rep.shape[1])
    ]
    return OverlapCurve(np.asarray(t_grid, dtype=float), ests, (kinds[0].value, kinds[1].value), rep)


def variance_identity_check(
    functional: Functional,
    intensity: Intensity,
    t_grid: np.ndarray,
    n: int,
    rng: RngStream,
    threads: int = 1,
) -> IdentityReport:
    """Sample variance of F against the quadrature of the coupled point sum
    E sum_{x in eta ∩ eta^t} D_x- F(eta) D_x- F(eta^t)."""
    t_grid = np.asarray(t_grid, dtype=float)
    job = _CurveJob(
        FunctionalFields(functional, ("dminus",)),
        (("dminus", "dminus"),),
        intensity,
        t_grid,
        evaluate=functional,
    )
    curves, f_vals = _run_curves(job, n, rng, threads)
    rep = curves[:, 0, :]

    lhs = Estimate(float(np.var(f_vals, ddof=1)), batch_variance_se(f_vals), n, rng)
    per_rep_quad = np.trapz(rep, t_grid, axis=1)
    rhs = Estimate(float(per_rep_quad.mean()), mean_se(per_rep_quad), n, rng)

    curve0 = float(rep[:, 0].mean())
    tail = math.exp(-float(t_grid[-1])) * curve0
    quad = quad_curvature_bound(curve0, t_grid)

    f_batches = batch_split(f_vals)
    q_batches = batch_split(per_rep_quad)
    resid_b = np.asarray(
        [np.var(fb, ddof=1) - qb.mean() for fb, qb in zip(f_batches, q_batches)]
    )
    residual_se = float(np.std(resid_b, ddof=1) / np.sqrt(len(resid_b)))
    residual = abs(lhs.value - rhs.value)
    return IdentityReport(lhs, rhs, tail, quad, residual, residual_se)


def coupled_cost_curve(
    functional: Functional,
    intensity: Intensity,
    t_grid: np.ndarray,
    n: int,
    rng: RngStream,
    threads: int = 1,
) -> OverlapCurve:
    """Raw integrand curve E sum_{x in eta ∩ eta^t} D_x- F D_x- F^t."""
    t_grid = np.asarray(t_grid, dtype=float)
    job = _CurveJob(
        FunctionalFields(functional, ("dminus",)),
        (("dminus", "dminus"),),
        intensity,
        t_grid,
    )
    curves, _ = _run_curves(job, n, rng, threads)
    rep = curves[:, 0, :]
    ests = [
        Estimate(float(rep[:, t].mean()), mean_se(rep[:, t]), n, rng) for t in range(rep.shape[1])
    ]
    return OverlapCurve(t_grid, ests, ("dminus", "dminus"), rep)


def chaos_curve(
    functional: Functional,
    intensity: Intensity,
    t_grid: np.ndarray,
    n: int,
    rng: RngStream,
    threads: int = 1,
) -> ChaosCurve:
    """Chaos coefficient int E[D_x F D_x F^t] / int E[(D_x F)^2] per grid t.

    The numerator uses the coupled-pair identity (e^t times the coupled
    point sum); the denominator is the t = 0 point sum from the same
    replications, so the coefficient is exactly 1 at t = 0.
    """
    curve = coupled_cost_curve(functional, intensity, t_grid, n, rng, threads)
    t_grid = curve.t_grid
    bm = curve.batch_means
    base = bm[:, 0]
    denom = float(base.mean())
    if denom <= 3.0 * mean_se(curve.rep_curves[:, 0]):
        raise ValueError("chaos coefficient undefined: denominator is at noise level")
    vals = np.exp(t_grid) * np.asarray([v.value for v in curve.values]) / denom
    ses = np.asarray(
        [
            ratio_delta_se(np.exp(t_grid[ti]) * bm[:, ti], base)
            for ti in range(len(t_grid))
        ]
    )
    return ChaosCurve(t_grid, vals, ses, curve.values[0].replications, rng)


def chaos_coefficient(
    functional: Functional,
    intensity: Intensity,
    t: float,
    n: int,
    rng: RngStream,
    threads: int = 1,
) -> RatioEstimate:
    """Chaos coefficient at a single evolution time t >= 0."""
    if t < 0:
        raise ValueError("evolution time must be >= 0")
    if t == 0.0:
        return RatioEstimate(1.0, 0.0, n, rng)
    grid = np.asarray([0.0, float(t)])
    return chaos_curve(functional, intensity, grid, n, rng, threads).at(t)


def check_decomposition_supports(
    functional: Functional,
    intensity: Intensity,
    rng: RngStream,
    patterns: int = 16,
    insertions: int = 8,
) -> None:
    """Sampled check that g1 and g2 never fire together; raises on overlap."""
    for i in range(patterns):
        rep = rng.replication(i)
        pattern = sample_poisson(intensity, rep)
        g1p, g2p = functional.decomposition_point(pattern)
        if np.any((g1p > 0) & (g2p > 0)):
            raise DecompositionOverlapError(
                "decomposition supports overlap at a pattern point "
                f"(pattern seed {rep.descriptor()})"
            )
        xs = intensity.window.sample_uniform(insertions, rep.child("ins").generator())
        g1i, g2i = functional.decomposition_insert(xs, pattern)
        if np.any((g1i > 0) & (g2i > 0)):
            raise DecompositionOverlapError(
                "decomposition supports overlap at an inserted location "
                f"(pattern seed {rep.descriptor()})"
            )


def decomposition_terms(
    functional: Functional,
    intensity: Intensity,
    t_grid: np.ndarray,
    n: int,
    rng: RngStream,
    threads: int = 1,
    support_check: bool = True,
) -> DecompositionReport:
    """Coupled estimates of the three decomposition integrals T1, T2, T3.

    T1 pairs g1 with g1, T2 pairs g2 with g2 and T3 is the symmetrized
    cross term, so T1 + T2 - 2 T3 estimates Var(F) exactly.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if support_check:
        check_decomposition_supports(functional, intensity, rng.child("support_check"))
    job = _CurveJob(
        FunctionalFields(functional, ("g1", "g2")),
        (("g1", "g1"), ("g2", "g2"), ("g1", "g2"), ("g2", "g1")),
        intensity,
        t_grid,
        evaluate=functional,
    )
    curves, f_vals = _run_curves(job, n, rng, threads)
    t11, t22 = curves[:, 0, :], curves[:, 1, :]
    t12 = 0.5 * (curves[:, 2, :] + curves[:, 3, :])

    def _term(rep: np.ndarray) -> tuple[Estimate, float]:
        per_rep = np.trapz(rep, t_grid, axis=1)
        tail = math.exp(-float(t_grid[-1])) * float(rep[:, 0].mean())
        return Estimate(float(per_rep.mean()), mean_se(per_rep), n, rng), tail

    e1, tail1 = _term(t11)
    e2, tail2 = _term(t22)
    e3, tail3 = _term(t12)
    var = Estimate(float(np.var(f_vals, ddof=1)), batch_variance_se(f_vals), n, rng)

    combo_rep = np.trapz(t11 + t22 - 2.0 * t12, t_grid, axis=1)
    f_batches = batch_split(f_vals)
    c_batches = batch_split(combo_rep)
    resid_b = np.asarray(
        [np.var(fb, ddof=1) - cb.mean() for fb, cb in zip(f_batches, c_batches)]
    )
    closure_se = float(np.std(resid_b, ddof=1) / np.sqrt(len(resid_b)))
    closure_residual = abs(var.value - (e1.value + e2.value - 2.0 * e3.value))
    quad = quad_curvature_bound(float((t11 + t22)[:, 0].mean()), t_grid)
    return DecompositionReport(
        e1, e2, e3, var, (tail1, tail2, 2.0 * tail3), quad, closure_residual, closure_se
    )


# --------------------------------------------------------------------------
# Kernel-based bound checks


class GKernel:
    """Nonnegative g(x, mu) with an insertion form and a point form.

    ``insert_values(pattern, xs)`` evaluates g at free locations against
    the pattern; ``point_values(pattern)`` evaluates the point form
    g(x, mu - delta_x) at every pattern point, which is what the coupled
    point-sum estimators need.
    """

    name = "g"
    claims_dg_nonpositive = False

    def insert_values(self, pattern: PointPattern, xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def point_values(self, pattern: PointPattern) -> np.ndarray:
        raise NotImplementedError


class UnitGKernel(GKernel):
    name = "unit"
    claims_dg_nonpositive = True  # Dg = 0

    def insert_values(self, pattern, xs):
        return np.ones(len(np.atleast_2d(xs)))

    def point_values(self, pattern):
        return np.ones(len(pattern))


class ScoreGKernel(GKernel):
    """g1 of a score functional: the inserted-point score f(x, mu + delta_x)."""

    name = "score"

    def __init__(self, functional: Functional, claims_dg_nonpositive: bool = True):
        self.functional = functional
        self.claims_dg_nonpositive = claims_dg_nonpositive

    def insert_values(self, pattern, xs):
        return self.functional.score_insert(np.atleast_2d(xs), pattern)

    def point_values(self, pattern):
        return self.functional.scores(pattern)


class SetIndicatorGKernel(GKernel):
    """Membership indicator of a chaotic set, in insertion and point form."""

    def __init__(self, functional: Functional, kind: ChaoticSetKind):
        self.functional = functional
        self.kind = ChaoticSetKind(kind)
        self.name = f"set_{self.kind.value}"

    def insert_values(self, pattern, xs):
        xs = np.atleast_2d(xs)
        out = np.empty(len(xs))
        for j, x in enumerate(xs):
            aug = pattern.with_point(x)
            out[j] = float(self.functional.set_members(aug, self.kind)[len(aug) - 1])
        return out

    def point_values(self, pattern):
        return self.functional.set_members(pattern, self.kind).astype(float)


def _fixed_locations(intensity: Intensity, rng: RngStream, m: int) -> np.ndarray:
    return intensity.window.sample_uniform(m, rng.child("locations").generator())


def _lhs_worker(payload, rep_rng):
    kernel, intensity, t_grid = payload
    job = _CurveJob(KernelFields(kernel), (("g", "g"),), intensity, t_grid)
    return _curve_worker(job, rep_rng)


def _kernel_lhs(kernel, intensity, t_grid, n, rng, threads):
    out = replication_map(_lhs_worker, (kernel, intensity, np.asarray(t_grid, dtype=float)), n, rng, threads)
    rep = np.stack([c for c, _ in out])[:, 0, :]
    per_rep = np.trapz(rep, np.asarray(t_grid, dtype=float), axis=1)
    est = Estimate(float(per_rep.mean()), mean_se(per_rep), n, rng)
    tail = math.exp(-float(np.asarray(t_grid)[-1])) * float(rep[:, 0].mean())
    return est, tail


def _insert_sq_worker(payload, rep_rng):
    kernel, intensity, xs = payload
    pattern = sample_poisson(intensity, rep_rng)
    vals = np.asarray(kernel.insert_values(pattern, xs), dtype=float)
    return vals, vals * vals


def verify_dg_nonpositive(
    kernel: GKernel,
    intensity: Intensity,
    rng: RngStream,
    patterns: int = 12,
    probes: int = 8,
) -> bool:
    """Sampled verification that inserting a point never increases g."""
    for i in range(patterns):
        rep = rng.replication(i)
        pattern = sample_poisson(intensity, rep)
        gen = rep.child("probe").generator()
        xs = intensity.window.sample_uniform(probes, gen)
        ys = intensity.window.sample_uniform(probes, gen)
        base = np.asarray(kernel.insert_values(pattern, xs), dtype=float)
        for j in range(probes):
            pert = np.asarray(
                kernel.insert_values(pattern.with_point(ys[j]), xs), dtype=float
            )
            if np.any(pert > base + 1e-12):
                return False
    return True


def l1l2_bound_check(
    kernel: GKernel,
    intensity: Intensity,
    t_grid: np.ndarray,
    n: int,
    rng: RngStream,
    threads: int = 1,
    locations: int | None = None,
) -> BoundReport:
    """Check int_0^inf e^{-t} int E[g g^t] <= int E[g^2] (and the
    log-improved bound when inserting points can only decrease g)."""
    if locations is None:
        locations = 1 if intensity.window.kind == "torus" else 32
    xs = _fixed_locations(intensity, rng, locations)
    lhs, tail = _kernel_lhs(kernel, intensity, t_grid, n, rng.child("lhs"), threads)

    out = replication_map(_insert_sq_worker, (kernel, intensity, xs), n, rng.child("rhs"), threads)
    vals = np.stack([v for v, _ in out])  # (n, m)
    sq = np.stack([s for _, s in out])
    mass = intensity.mass
    plain_rep = mass * sq.mean(axis=1)
    rhs_plain = Estimate(float(plain_rep.mean()), mean_se(plain_rep), n, rng)

    claimed = bool(kernel.claims_dg_nonpositive)
    verified = claimed and verify_dg_nonpositive(kernel, intensity, rng.child("dgcheck"))
    rhs_improved = None
    if verified:
        vb = np.stack([b.mean(axis=0) for b in batch_split(vals)])  # (B, m)
        sb = np.stack([b.mean(axis=0) for b in batch_split(sq)])

        def improved(l1: np.ndarray, l2sq: np.ndarray) -> float:
            l2 = np.sqrt(np.clip(l2sq, 0.0, None))
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where((l1 > 0) & (l2 > 0), l2 / l1, 1.0)
            return float(mass * np.mean(2.0 * l2sq / (1.0 + 0.5 * np.log(ratio))))

        value = improved(vals.mean(axis=0), sq.mean(axis=0))
        per_batch = np.asarray([improved(vb[b], sb[b]) for b in range(len(vb))])
        rhs_improved = Estimate(
            value, float(np.std(per_batch, ddof=1) / np.sqrt(len(per_batch))), n, rng
        )
    return BoundReport(lhs, rhs_plain, rhs_improved, tail, claimed, verified)


def _pair_perturb_worker(payload, rep_rng):
    kernel, intensity, pairs = payload
    pattern = sample_poisson(intensity, rep_rng)
    gen = rep_rng.child("pairs").generator()
    xs = intensity.window.sample_uniform(pairs, gen)
    ys = intensity.window.sample_uniform(pairs, gen)
    base = np.asarray(kernel.insert_values(pattern, xs), dtype=float)
    diffs = np.empty(pairs)
    for j in range(pairs):
        pert = np.asarray(kernel.insert_values(pattern.with_point(ys[j]), xs[j][None, :]))
        diffs[j] = float(pert[0]) - base[j]
    sq = np.asarray(kernel.insert_values(pattern, xs), dtype=float) ** 2
    return float(np.mean(diffs * diffs)), float(np.mean(sq))


def variance_lower_bound_check(
    kernel: GKernel,
    intensity: Intensity,
    t_grid: np.ndarray,
    n: int,
    rng: RngStream,
    threads: int = 1,
    pairs: int = 32,
) -> LowerBoundReport:
    """Check int_0^inf e^{-t} int E[g g^t] >= int E[g^2] / (alpha + 1) with
    alpha estimated by two-point insertion sampling."""
    lhs, tail = _kernel_lhs(kernel, intensity, t_grid, n, rng.child("lhs"), threads)
    out = replication_map(_pair_perturb_worker, (kernel, intensity, pairs), n, rng.child("alpha"), threads)
    mass = intensity.mass
    num_rep = mass * mass * np.asarray([a for a, _ in out])
    den_rep = mass * np.asarray([b for _, b in out])
    denom = Estimate(float(den_rep.mean()), mean_se(den_rep), n, rng)

    nb = np.asarray([b.mean() for b in batch_split(num_rep)])
    db = np.asarray([b.mean() for b in batch_split(den_rep)])
    defined = denom.value > 3.0 * denom.std_error and denom.value > 0
    alpha = RatioEstimate(
        float(num_rep.mean() / den_rep.mean()) if defined else float("nan"),
        ratio_delta_se(nb, db) if defined else float("inf"),
        n,
        rng,
        defined=defined,
        numerator=float(num_rep.mean()),
        denominator=float(den_rep.mean()),
    )
    return LowerBoundReport(lhs, denom, alpha, tail)


# --------------------------------------------------------------------------
# Score-sum conditions


def _conditions_worker(payload, rep_rng):
    functional, intensity, pairs, ys = payload
    pattern = sample_poisson(intensity, rep_rng)
    gen = rep_rng.child("pairs").generator()
    xs = intensity.window.sample_uniform(pairs, gen)
    xs2 = intensity.window.sample_uniform(pairs, gen)
    prod = functional.score_pair_insert(xs, xs2, pattern)
    f_val = float(functional.evaluate(pattern))

    gen_i = rep_rng.child("ins").generator()
    zs = intensity.window.sample_uniform(pairs, gen_i)
    sq = np.asarray(functional.score_insert(zs, pattern), dtype=float) ** 2

    num = np.asarray(functional.score_insert(ys, pattern), dtype=float) ** 2
    den = np.empty(len(ys))
    for j, y in enumerate(ys):
        den[j] = float(functional.score_perturbation(y, pattern)) ** 2
    return float(prod.mean()), f_val, float(sq.mean()), num, den


def sums_of_scores_conditions(
    functional: Functional,
    intensity: Intensity,
    n: int,
    rng: RngStream,
    threads: int = 1,
    pairs: int = 32,
    locations: int | None = None,
) -> ConditionsReport:
    """Estimates of the score-pair excess T_s and the smallness ratio eps.

    T_s = int int E[f(x, eta+dx+dy) f(y, eta+dx+dy)] - (int E f(x, eta+dx))^2,
    estimated with two-point insertion sampling; eps is the largest sampled
    ratio E[f(y, eta+dy)^2] / E[(sum_x D_y f(x, eta))^2].
    """
    if not functional.has_scores:
        raise ValueError("functional does not expose a score representation")
    if locations is None:
        locations = 1 if intensity.window.kind == "torus" else 64
    ys = _fixed_locations(intensity, rng, locations)
    out = replication_map(
        _conditions_worker, (functional, intensity, pairs, ys), n, rng, threads
    )
    mass = intensity.mass
    prod_rep = mass * mass * np.asarray([o[0] for o in out])
    f_rep = np.asarray([o[1] for o in out])
    sq_rep = mass * np.asarray([o[2] for o in out])
    num_rep = np.stack([o[3] for o in out])  # (n, m)
    den_rep = np.stack([o[4] for o in out])

    t_value = float(prod_rep.mean() - f_rep.mean() ** 2)
    pb = np.asarray([b.mean() for b in batch_split(prod_rep)])
    fb = np.asarray([b.mean() for b in batch_split(f_rep)])
    tb = pb - fb * fb
    t_s = Estimate(t_value, float(np.std(tb, ddof=1) / np.sqrt(len(tb))), n, rng)

    score_l2 = Estimate(float(sq_rep.mean()), mean_se(sq_rep), n, rng)

    ratios = num_rep.mean(axis=0) / np.where(den_rep.mean(axis=0) > 0, den_rep.mean(axis=0), np.nan)
    if np.all(np.isnan(ratios)):
        eps = RatioEstimate(float("nan"), float("inf"), n, rng, defined=False)
    else:
        j = int(np.nanargmax(ratios))
        nb = np.asarray([b.mean() for b in batch_split(num_rep[:, j])])
        db = np.asarray([b.mean() for b in batch_split(den_rep[:, j])])
        den_mean = float(den_rep[:, j].mean())
        den_se = mean_se(den_rep[:, j])
        defined = den_mean > 3.0 * den_se
        eps = RatioEstimate(
            float(ratios[j]) if defined else float("nan"),
            ratio_delta_se(nb, db) if defined else float("inf"),
            n,
            rng,
            defined=defined,
            numerator=float(num_rep[:, j].mean()),
            denominator=den_mean,
        )
    return ConditionsReport(t_s, score_l2, eps)
