"""Parameter scans: run diagnostics across a grid and fit trends.

A scan point bundles a functional with its ambient intensity and a dict
of labeling parameters.  Rows collect per-diagnostic values and standard
errors; per-point failures are recorded in the row and the scan
continues.  When the grid has at least three points, log-log and linear
slope fits over the scan parameter are appended as a summary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import estimators as est
from .functional import (
    Estimate,
    Functional,
    estimate_mean,
    estimate_variance,
    poincare_rhs,
    superconcentration_ratio,
)
from .geometry import unit_ball_volume
from .pointproc import Intensity
from .rng import RngStream

KNOWN_DIAGNOSTICS = (
    "mean",
    "variance",
    "poincare",
    "ratio",
    "identity",
    "overlap",
    "chaos",
    "decomposition",
    "conditions",
    "l1l2",
    "lower_bound",
)


@dataclass(frozen=True)
class ScanPoint:
    params: dict  # labeling parameters; "x" names the scan abscissa key
    functional: Functional
    intensity: Intensity
    kernels: tuple = ()  # GKernel objects for the bound checks


@dataclass
class ScanReport:
    x_key: str
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.asarray([row.get(name, float("nan")) for row in self.rows], dtype=float)

    def defined(self, name: str) -> np.ndarray:
        col = self.column(name)
        return col[np.isfinite(col)]


def loglog_slope(x: np.ndarray, y: np.ndarray) -> dict:
    """Least-squares slope of log y against log x, with R^2."""
    ok = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if ok.sum() < 2:
        return {"slope": float("nan"), "intercept": float("nan"), "r2": float("nan"), "points": int(ok.sum())}
    lx, ly = np.log(x[ok]), np.log(y[ok])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else float("nan")
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2, "points": int(ok.sum())}


def linear_slope(x: np.ndarray, y: np.ndarray) -> dict:
    ok = np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 2:
        return {"slope": float("nan"), "intercept": float("nan"), "r2": float("nan"), "points": int(ok.sum())}
    slope, intercept = np.polyfit(x[ok], y[ok], 1)
    resid = y[ok] - (slope * x[ok] + intercept)
    ss_tot = float(np.sum((y[ok] - y[ok].mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else float("nan")
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2, "points": int(ok.sum())}


def _put(row: dict, prefix: str, e: Estimate):
    row[f"{prefix}_value"] = float(e.value)
    row[f"{prefix}_se"] = float(e.std_error)


def run_scan(
    points: list[ScanPoint],
    diagnostics: list[str],
    n: int,
    rng: RngStream,
    t_grid: np.ndarray,
    threads: int = 1,
    insertions: int = 32,
    chaos_probe_t: float = 0.5,
) -> ScanReport:
    """Run the selected diagnostics at every grid point."""
    if not points:
        raise ValueError("scan grid must be nonempty")
    for d in diagnostics:
        if d not in KNOWN_DIAGNOSTICS:
            raise ValueError(f"unknown diagnostic {d!r}")
    x_key = points[0].params.get("x_key", next(iter(points[0].params)))
    report = ScanReport(x_key=x_key)

    for i, point in enumerate(points):
        prng = rng.child(f"grid{i}")
        row = dict(point.params)
        row.pop("x_key", None)
        row["status"] = "ok"
        for diag in diagnostics:
            try:
                _run_one(diag, point, n, prng.child(diag), t_grid, threads, insertions, chaos_probe_t, row)
            except Exception as e:  # noqa: BLE001 - per-point failures recorded
                row["status"] = "error"
                row[f"{diag}_error"] = f"{type(e).__name__}: {e}"
        report.rows.append(row)

    if len(points) >= 3:
        x = report.column(x_key)
        slopes = {}
        if "ratio" in diagnostics:
            slopes["ratio_loglog"] = loglog_slope(x, report.column("ratio_value"))
        if "conditions" in diagnostics:
            slopes["epsilon_loglog"] = loglog_slope(x, report.column("epsilon_value"))
        if "lower_bound" in diagnostics:
            for name in _kernel_names(points):
                slopes[f"alpha_{name}_linear"] = linear_slope(x, report.column(f"alpha_{name}_value"))
        if "chaos" in diagnostics:
            slopes["chaos_probe_loglog"] = loglog_slope(x, report.column("chaos_probe_value"))
        if "overlap" in diagnostics:
            slopes["overlap_probe_loglog"] = loglog_slope(x, report.column("overlap_probe_value"))
        report.summary["slopes"] = slopes
    return report


def _kernel_names(points: list[ScanPoint]) -> list[str]:
    names: list[str] = []
    for p in points:
        for k in p.kernels:
            if k.name not in names:
                names.append(k.name)
    return names


def _run_one(diag, point: ScanPoint, n, rng, t_grid, threads, insertions, chaos_probe_t, row):
    f, lam = point.functional, point.intensity
    if diag == "mean":
        _put(row, "mean", estimate_mean(f, lam, n, rng, threads))
    elif diag == "variance":
        _put(row, "variance", estimate_variance(f, lam, n, rng, threads))
    elif diag == "poincare":
        _put(row, "poincare", poincare_rhs(f, lam, n, rng, threads))
    elif diag == "ratio":
        r = superconcentration_ratio(f, lam, n, rng, threads)
        _put(row, "ratio", r)
        row["ratio_defined"] = bool(r.defined)
    elif diag == "identity":
        rep = est.variance_identity_check(f, lam, t_grid, n, rng, threads)
        _put(row, "identity_lhs", rep.lhs)
        _put(row, "identity_rhs", rep.rhs)
        row["identity_residual"] = float(rep.residual)
        row["identity_tolerance"] = float(rep.tolerance)
        row["identity_passed"] = bool(rep.passed)
    elif diag == "overlap":
        curve = est.overlap_curve(f, lam, t_grid, n, rng, threads)
        vals, ses = curve.normalized()
        i = int(np.argmin(np.abs(curve.t_grid - chaos_probe_t)))
        row["overlap_size_value"] = float(curve.values[0].value)
        row["overlap_size_se"] = float(curve.values[0].std_error)
        row["overlap_probe_value"] = float(vals[i])
        row["overlap_probe_se"] = float(ses[i])
        integral, tail = curve.integral()
        _put(row, "overlap_integral", integral)
        row["overlap_integral_tail"] = float(tail)
    elif diag == "chaos":
        curve = est.chaos_curve(f, lam, t_grid, n, rng, threads)
        i = int(np.argmin(np.abs(curve.t_grid - chaos_probe_t)))
        row["chaos_probe_value"] = float(curve.values[i])
        row["chaos_probe_se"] = float(curve.std_errors[i])
    elif diag == "decomposition":
        rep = est.decomposition_terms(f, lam, t_grid, n, rng, threads)
        _put(row, "t1", rep.t1)
        _put(row, "t2", rep.t2)
        _put(row, "t3", rep.t3)
        _put(row, "decomposition_variance", rep.variance)
        row["decomposition_residual"] = float(rep.closure_residual)
        row["decomposition_tolerance"] = float(rep.tolerance)
        row["decomposition_passed"] = bool(rep.passed)
    elif diag == "conditions":
        rep = est.sums_of_scores_conditions(f, lam, n, rng, threads)
        _put(row, "t_s", rep.t_s)
        _put(row, "score_l2", rep.score_l2)
        row["ts_ratio"] = float(rep.ts_ratio)
        _put(row, "epsilon", rep.epsilon)
        row["epsilon_defined"] = bool(rep.epsilon.defined)
    elif diag == "l1l2":
        for kernel in point.kernels:
            rep = est.l1l2_bound_check(kernel, lam, t_grid, n, rng.child(kernel.name), threads)
            _put(row, f"l1l2_{kernel.name}_lhs", rep.lhs)
            _put(row, f"l1l2_{kernel.name}_rhs", rep.rhs_plain)
            row[f"l1l2_{kernel.name}_holds"] = bool(rep.holds_plain)
            if rep.rhs_improved is not None:
                _put(row, f"l1l2_{kernel.name}_rhs_improved", rep.rhs_improved)
                row[f"l1l2_{kernel.name}_holds_improved"] = bool(rep.holds_improved)
    elif diag == "lower_bound":
        for kernel in point.kernels:
            rep = est.variance_lower_bound_check(kernel, lam, t_grid, n, rng.child(kernel.name), threads)
            _put(row, f"lower_bound_{kernel.name}_lhs", rep.lhs)
            _put(row, f"alpha_{kernel.name}", rep.alpha)
            row[f"lower_bound_{kernel.name}_rhs"] = float(rep.rhs_value) if rep.alpha.defined else float("nan")
            row[f"lower_bound_{kernel.name}_holds"] = bool(rep.holds)


# --------------------------------------------------------------------------
# Grid construction


def kiso_grid_point(sr_d: float, target_count: float, degree_fraction: float = 0.8, d: int = 2) -> dict:
    """Parameters (s, r, k) hitting a target mean small-degree count.

    The grid abscissa is the product s * r^d.  The mean ball occupancy is
    then alpha = kappa_d * sr_d regardless of how the product splits, so
    the degree threshold must track alpha for the count to stay
    observable: k - 1 = round(degree_fraction * alpha).  The intensity s
    then makes s * P(Poisson(alpha) <= k-1) equal the target count.
    """
    if sr_d <= 0 or target_count <= 0 or not 0 < degree_fraction < 1:
        raise ValueError("invalid grid parameters")
    alpha = unit_ball_volume(d) * sr_d
    k = 1 + int(round(degree_fraction * alpha))
    p = float(stats.poisson.cdf(k - 1, alpha))
    s = math.ceil(target_count / p)
    r = (sr_d / s) ** (1.0 / d)
    if not r < 0.5:
        raise ValueError(f"grid point sr_d={sr_d} needs radius {r:.3f} >= 1/2 on the torus")
    return {"x_key": "sr_d", "sr_d": float(sr_d), "s": float(s), "r": float(r), "k": int(k), "d": int(d)}


def kiso_grid(srd_values, target_count: float = 30.0, degree_fraction: float = 0.8, d: int = 2) -> list[dict]:
    return [kiso_grid_point(a, target_count, degree_fraction, d) for a in srd_values]


def gamma_grid(srd_values, s_values, d: int = 2) -> list[dict]:
    """Γ-component scan grid: the abscissa sr_d with explicit intensities."""
    if len(s_values) != len(srd_values):
        raise ValueError("need one intensity per grid value")
    out = []
    for a, s in zip(srd_values, s_values):
        r = (a / s) ** (1.0 / d)
        if not r < 0.5:
            raise ValueError(f"grid point sr_d={a} needs radius {r:.3f} >= 1/2 on the torus")
        out.append({"x_key": "sr_d", "sr_d": float(a), "s": float(s), "r": float(r), "d": int(d)})
    return out


def crossing_grid(s_values, lam: float) -> list[dict]:
    return [{"x_key": "s", "s": float(s), "lam": float(lam)} for s in s_values]
