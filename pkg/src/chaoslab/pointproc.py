"""Homogeneous Poisson sampling and the stationary birth-death coupling.

Windows are either the unit torus [0,1)^d (periodic metric) or an axis
aligned box.  Patterns carry stable integer point identifiers so that
intersections between coupled configurations (the initial pattern and a
later slice of a birth-death trajectory) are computed by identity, never
by floating-point coordinate comparison.

The trajectory gives every initial point an Exp(1) lifetime and adds
fresh points as a space-time Poisson process of rate ``s`` per unit
volume and time.  Each time slice is then a Poisson pattern with the
stationary intensity, and the pair (slice(0), slice(t)) is exactly an
e^{-t}-thinning of the initial pattern superposed with an independent
Poisson pattern of mass (1 - e^{-t}) * s * Vol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import RngStream


class WindowMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Window:
    """Unit torus or box sampling window."""

    kind: str  # "torus" | "box"
    dim: int
    lower: tuple = ()
    upper: tuple = ()

    @staticmethod
    def torus(dim: int) -> "Window":
        if dim < 1:
            raise ValueError("dimension must be a positive integer")
        return Window("torus", int(dim))

    @staticmethod
    def box(lower, upper) -> "Window":
        lo = tuple(float(x) for x in lower)
        hi = tuple(float(x) for x in upper)
        if len(lo) != len(hi) or len(lo) < 1:
            raise ValueError("lower/upper corners must share a positive dimension")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError("box side lengths must be strictly positive")
        return Window("box", len(lo), lo, hi)

    @property
    def volume(self) -> float:
        if self.kind == "torus":
            return 1.0
        return float(np.prod([h - l for l, h in zip(self.lower, self.upper)]))

    @property
    def spans(self) -> np.ndarray:
        if self.kind == "torus":
            return np.ones(self.dim)
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def origin(self) -> np.ndarray:
        if self.kind == "torus":
            return np.zeros(self.dim)
        return np.asarray(self.lower, dtype=float)

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        if self.kind == "torus":
            return np.all((pts >= 0.0) & (pts < 1.0), axis=1)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def sample_uniform(self, n: int, gen: np.random.Generator) -> np.ndarray:
        u = gen.random((n, self.dim))
        if self.kind == "torus":
            return u
        lo = np.asarray(self.lower)
        return lo + u * self.spans

    def to_json(self) -> dict:
        if self.kind == "torus":
            return {"kind": "torus", "dim": self.dim}
        return {"kind": "box", "dim": self.dim, "lower": list(self.lower), "upper": list(self.upper)}

    @staticmethod
    def from_json(d: dict) -> "Window":
        if d["kind"] == "torus":
            return Window.torus(int(d["dim"]))
        return Window.box(d["lower"], d["upper"])


@dataclass(frozen=True)
class Intensity:
    """Constant rate ``s`` (points per unit volume) on a window."""

    rate: float
    window: Window

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate <= 0:
            raise ValueError("intensity rate must be finite and > 0")
        if not np.isfinite(self.mass) or self.mass <= 0:
            raise ValueError("total intensity mass must be finite and > 0")

    @property
    def mass(self) -> float:
        return float(self.rate) * self.window.volume


@dataclass(frozen=True)
class PointPattern:
    """Finite point configuration with stable integer point identifiers."""

    points: np.ndarray  # (n, d) float
    window: Window
    ids: np.ndarray = field(default=None)  # (n,) int64

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.window.dim)
        object.__setattr__(self, "points", pts)
        ids = self.ids
        if ids is None:
            ids = np.arange(len(pts), dtype=np.int64)
        else:
            ids = np.asarray(ids, dtype=np.int64)
            if ids.shape != (len(pts),):
                raise ValueError("ids must align with points")
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return len(self.points)

    def require_inside(self):
        if len(self) and not bool(np.all(self.window.contains(self.points))):
            raise ValueError("pattern has points outside its window")

    def with_point(self, x) -> "PointPattern":
        """Pattern with one extra point appended (fresh identifier)."""
        x = np.asarray(x, dtype=float).reshape(1, self.window.dim)
        nid = (self.ids.max() + 1) if len(self) else 0
        return PointPattern(
            np.concatenate([self.points, x], axis=0),
            self.window,
            np.concatenate([self.ids, np.asarray([nid], dtype=np.int64)]),
        )

    def without_index(self, i: int) -> "PointPattern":
        """Pattern with the point at positional index ``i`` removed."""
        keep = np.ones(len(self), dtype=bool)
        keep[i] = False
        return PointPattern(self.points[keep], self.window, self.ids[keep])

    def subset(self, mask_or_indices) -> "PointPattern":
        return PointPattern(self.points[mask_or_indices], self.window, self.ids[mask_or_indices])

    def to_json(self) -> dict:
        return {
            "window": self.window.to_json(),
            "count": int(len(self)),
            "points": [[float(c) for c in p] for p in self.points],
        }

    @staticmethod
    def from_json(d: dict) -> "PointPattern":
        w = Window.from_json(d["window"])
        pts = np.asarray(d["points"], dtype=float).reshape(-1, w.dim)
        return PointPattern(pts, w)


def sample_poisson(intensity: Intensity, rng: RngStream) -> PointPattern:
    """Poisson pattern: count ~ Poisson(s*Vol), locations i.i.d. uniform."""
    gen = rng.generator()
    n = int(gen.poisson(intensity.mass))
    pts = intensity.window.sample_uniform(n, gen)
    return PointPattern(pts, intensity.window)


def thin(pattern: PointPattern, p: float, rng: RngStream) -> PointPattern:
    """Independent thinning: keep each point with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("retention probability must lie in [0, 1]")
    if len(pattern) == 0:
        return pattern
    keep = rng.generator().random(len(pattern)) < p
    return pattern.subset(keep)


def superpose(a: PointPattern, b: PointPattern) -> PointPattern:
    """Multiset union of two patterns on the same window."""
    if a.window != b.window:
        raise WindowMismatchError("cannot superpose patterns on different windows")
    if len(b) == 0:
        return a
    if len(a) == 0:
        return b
    b_ids = b.ids
    if np.intersect1d(a.ids, b_ids).size:
        b_ids = b_ids + (int(a.ids.max()) + 1 - int(b_ids.min()))
    return PointPattern(
        np.concatenate([a.points, b.points], axis=0),
        a.window,
        np.concatenate([a.ids, b_ids]),
    )


@dataclass(frozen=True)
class BirthDeathTrajectory:
    """One realization of the stationary birth-death evolution on [0, T_max].

    Point identifiers are global across the trajectory: initial points get
    ids 0..n0-1, births (sorted by birth time) get n0, n0+1, ...  The full
    support (initial points followed by births) is precomputed so that a
    slice is a boolean mask over it.
    """

    initial: PointPattern
    lifetimes: np.ndarray  # (n0,) Exp(1)
    birth_points: np.ndarray  # (m, d)
    birth_times: np.ndarray  # (m,) in [0, T_max], nondecreasing
    birth_lifetimes: np.ndarray  # (m,) Exp(1)
    t_max: float

    def __post_init__(self):
        if self.t_max <= 0:
            raise ValueError("trajectory horizon must be > 0")
        n0, m = len(self.initial), len(self.birth_times)
        all_pts = np.concatenate([self.initial.points, self.birth_points.reshape(m, -1)], axis=0)
        all_ids = np.concatenate([self.initial.ids, np.arange(n0, n0 + m, dtype=np.int64)])
        object.__setattr__(self, "_all_points", all_pts)
        object.__setattr__(self, "_all_ids", all_ids)

    @property
    def window(self) -> Window:
        return self.initial.window

    def _check_t(self, t: float):
        if not 0.0 <= t <= self.t_max:
            raise ValueError(f"slice time {t} outside [0, {self.t_max}]")

    def alive_mask(self, t: float) -> np.ndarray:
        """Boolean mask over the trajectory support (initial block, then births)."""
        self._check_t(t)
        surv = self.lifetimes > t
        born = (self.birth_times <= t) & (t < self.birth_times + self.birth_lifetimes)
        return np.concatenate([surv, born])

    def slice(self, t: float) -> PointPattern:
        """Configuration alive at time ``t``; ids identify common points across slices."""
        if t == 0.0:
            return self.initial
        mask = self.alive_mask(t)
        return PointPattern(self._all_points[mask], self.window, self._all_ids[mask])

    def survivor_ids(self, t: float) -> np.ndarray:
        """Identifiers of initial points still alive at ``t`` (slice(0) ∩ slice(t))."""
        self._check_t(t)
        return self.initial.ids[self.lifetimes > t]

    def survivor_counts(self, t_grid: np.ndarray) -> np.ndarray:
        """|slice(0) ∩ slice(t)| for every t in one vectorized pass."""
        t_grid = np.asarray(t_grid, dtype=float)
        if t_grid.size and (t_grid.min() < 0 or t_grid.max() > self.t_max):
            raise ValueError("t grid outside trajectory horizon")
        return (self.lifetimes[:, None] > t_grid[None, :]).sum(axis=0)

    def to_json(self) -> dict:
        return {
            "window": self.window.to_json(),
            "t_max": float(self.t_max),
            "initial": {
                "points": [[float(c) for c in p] for p in self.initial.points],
                "lifetimes": [float(x) for x in self.lifetimes],
            },
            "births": {
                "points": [[float(c) for c in p] for p in self.birth_points],
                "times": [float(x) for x in self.birth_times],
                "lifetimes": [float(x) for x in self.birth_lifetimes],
            },
        }

    @staticmethod
    def from_json(d: dict) -> "BirthDeathTrajectory":
        w = Window.from_json(d["window"])
        init = PointPattern(np.asarray(d["initial"]["points"], dtype=float).reshape(-1, w.dim), w)
        return BirthDeathTrajectory(
            initial=init,
            lifetimes=np.asarray(d["initial"]["lifetimes"], dtype=float),
            birth_points=np.asarray(d["births"]["points"], dtype=float).reshape(-1, w.dim),
            birth_times=np.asarray(d["births"]["times"], dtype=float),
            birth_lifetimes=np.asarray(d["births"]["lifetimes"], dtype=float),
            t_max=float(d["t_max"]),
        )


def simulate_trajectory(intensity: Intensity, t_max: float, rng: RngStream) -> BirthDeathTrajectory:
    """Stationary birth-death trajectory started from a fresh Poisson pattern.

    Deaths occur at rate 1 per point; births form a space-time Poisson
    process of intensity ``s`` per unit volume per unit time, so every
    slice has the stationary Poisson law.
    """
    if t_max <= 0:
        raise ValueError("trajectory horizon must be > 0")
    gen = rng.generator()
    w = intensity.window

    n0 = int(gen.poisson(intensity.mass))
    init = PointPattern(w.sample_uniform(n0, gen), w)
    lifetimes = gen.exponential(1.0, size=n0)

    m = int(gen.poisson(intensity.mass * t_max))
    times = np.sort(gen.random(m) * t_max, kind="stable")
    births = w.sample_uniform(m, gen)
    birth_lifetimes = gen.exponential(1.0, size=m)

    return BirthDeathTrajectory(init, lifetimes, births, times, birth_lifetimes, float(t_max))
