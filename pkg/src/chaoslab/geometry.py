"""Metric and spatial indexing substrate.

Distances on the torus use the minimum-image convention per coordinate.
Neighborhood queries go through a hash grid whose cell width is at least
the query radius, so a radius query inspects at most 3^d cells.  The
boundary convention is inclusive everywhere: two points at distance
exactly r are neighbors.  All callers funnel through
:func:`within_radius_sq` so the convention cannot drift.

Two query paths share the same grid decomposition: :class:`SpatialIndex`
answers single queries through an explicit cell dictionary, while the
module-level bulk functions (:func:`ball_counts`, :func:`pairs_within`,
:func:`count_near`) run the identical cell walk vectorized across all
queries.  The two paths are exact-equality tested against each other and
against brute force.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from .pointproc import PointPattern, Window

_CHUNK_TARGET = 2_000_000  # max expanded candidate pairs per vectorized block


def unit_ball_volume(d: int) -> float:
    """Volume kappa_d = pi^{d/2} / Gamma(d/2 + 1) of the unit ball in R^d."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def torus_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-image displacement a - b on the unit torus."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return d - np.round(d)


def torus_distance(a, b) -> float:
    """Euclidean distance on the unit torus (per-coordinate wrap)."""
    d = torus_diff(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return float(np.sqrt(np.sum(d * d)))


def displacements(a: np.ndarray, b: np.ndarray, window: Window) -> np.ndarray:
    """a - b under the window's metric (wrapped on the torus)."""
    if window.kind == "torus":
        return torus_diff(a, b)
    return np.asarray(a, dtype=float) - np.asarray(b, dtype=float)


def within_radius_sq(dist_sq: np.ndarray, radius: float) -> np.ndarray:
    """Shared inclusive boundary predicate: distance <= radius."""
    return dist_sq <= radius * radius


class UnionFind:
    """Array union-find with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)
        self.n_components = n

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return int(i)

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.n_components -= 1
        return True

    def labels(self) -> np.ndarray:
        return np.asarray([self.find(i) for i in range(len(self.parent))], dtype=np.int64)


class _CellGrid:
    """Grid-cell decomposition shared by the dict index and the bulk queries."""

    def __init__(self, points: np.ndarray, cell_size: float, window: Window):
        if cell_size <= 0:
            raise ValueError("cell size must be > 0")
        self.window = window
        self.points = np.asarray(points, dtype=float).reshape(-1, window.dim)
        d = window.dim
        spans = window.spans
        self.m = np.maximum(1, np.floor(spans / cell_size).astype(np.int64))
        self.width = spans / self.m  # effective widths, each >= cell_size
        self.cell_size = float(self.width.min())
        self.origin = window.origin

        n = len(self.points)
        if n:
            cells = np.floor((self.points - self.origin) / self.width).astype(np.int64)
            np.clip(cells, 0, self.m - 1, out=cells)
        else:
            cells = np.zeros((0, d), dtype=np.int64)
        self.cells = cells
        self.flat = self._ravel(cells)
        self.order = np.argsort(self.flat, kind="stable")
        self.sorted_flat = self.flat[self.order]

        offs = []
        for k in range(d):
            mk = int(self.m[k])
            if window.kind == "torus":
                per = (-1, 0, 1) if mk >= 3 else ((0, 1) if mk == 2 else (0,))
            else:
                per = (-1, 0, 1)
            offs.append(per)
        self.offsets = [np.asarray(o, dtype=np.int64) for o in product(*offs)]

    def _ravel(self, cells: np.ndarray) -> np.ndarray:
        flat = cells[:, 0].copy()
        for k in range(1, self.window.dim):
            flat = flat * self.m[k] + cells[:, k]
        return flat

    def cell_of(self, q: np.ndarray) -> np.ndarray:
        c = np.floor((np.atleast_2d(q) - self.origin) / self.width).astype(np.int64)
        return np.clip(c, 0, self.m - 1)

    def _targets(self, qcells: np.ndarray, off: np.ndarray):
        t = qcells + off
        if self.window.kind == "torus":
            t %= self.m
            return t, np.ones(len(t), dtype=bool)
        valid = np.all((t >= 0) & (t < self.m), axis=1)
        return t, valid

    def candidate_indices(self, q: np.ndarray) -> np.ndarray:
        """Point indices in the 3^d cells around a single query location."""
        qc = self.cell_of(q)[0]
        found = []
        seen = set()
        for off in self.offsets:
            t, valid = self._targets(qc[None, :], off)
            if not valid[0]:
                continue
            key = tuple(t[0])
            if key in seen:
                continue
            seen.add(key)
            tf = self._ravel(t)[0]
            lo = np.searchsorted(self.sorted_flat, tf, "left")
            hi = np.searchsorted(self.sorted_flat, tf, "right")
            if hi > lo:
                found.append(self.order[lo:hi])
        if not found:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(found)

    def _expand(self, qcells: np.ndarray, off: np.ndarray):
        """(query index, point index) candidate pairs for one cell offset."""
        t, valid = self._targets(qcells, off)
        tf = self._ravel(t)
        lo = np.searchsorted(self.sorted_flat, tf, "left")
        hi = np.searchsorted(self.sorted_flat, tf, "right")
        lens = np.where(valid, hi - lo, 0)
        total = int(lens.sum())
        if total == 0:
            return (np.zeros(0, dtype=np.int64),) * 2
        qi = np.repeat(np.arange(len(qcells), dtype=np.int64), lens)
        csum = np.cumsum(lens)
        pos = np.repeat(lo, lens) + (np.arange(total, dtype=np.int64) - np.repeat(csum - lens, lens))
        return qi, self.order[pos]

    def counts_near(self, queries: np.ndarray, radius: float) -> np.ndarray:
        """Number of indexed points within ``radius`` of each query point."""
        if radius > self.cell_size + 1e-12:
            raise ValueError("query radius exceeds grid cell size; rebuild the index")
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        nq = len(queries)
        out = np.zeros(nq, dtype=np.int64)
        if nq == 0 or len(self.points) == 0:
            return out
        mean_bucket = max(1.0, len(self.points) / max(1, int(np.prod(self.m))))
        block = max(1, int(_CHUNK_TARGET / (mean_bucket * len(self.offsets))))
        for start in range(0, nq, block):
            q = queries[start : start + block]
            qcells = self.cell_of(q)
            for off in self.offsets:
                qi, pj = self._expand(qcells, off)
                if len(qi) == 0:
                    continue
                diff = displacements(q[qi], self.points[pj], self.window)
                hit = within_radius_sq(np.einsum("ij,ij->i", diff, diff), radius)
                out[start : start + len(q)] += np.bincount(qi[hit], minlength=len(q))
        return out

    def pairs_within(self, radius: float) -> tuple[np.ndarray, np.ndarray]:
        """All index pairs (i < j) of indexed points at distance <= radius."""
        if radius > self.cell_size + 1e-12:
            raise ValueError("query radius exceeds grid cell size; rebuild the index")
        n = len(self.points)
        if n < 2:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        out_i, out_j = [], []
        mean_bucket = max(1.0, n / max(1, int(np.prod(self.m))))
        block = max(1, int(_CHUNK_TARGET / (mean_bucket * len(self.offsets))))
        for start in range(0, n, block):
            q = self.points[start : start + block]
            qcells = self.cells[start : start + block]
            for off in self.offsets:
                qi, pj = self._expand(qcells, off)
                if len(qi) == 0:
                    continue
                gi = qi + start
                keep = gi < pj
                gi, pj2 = gi[keep], pj[keep]
                if len(gi) == 0:
                    continue
                diff = displacements(self.points[gi], self.points[pj2], self.window)
                hit = within_radius_sq(np.einsum("ij,ij->i", diff, diff), radius)
                out_i.append(gi[hit])
                out_j.append(pj2[hit])
        if not out_i:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        i = np.concatenate(out_i)
        j = np.concatenate(out_j)
        order = np.lexsort((j, i))
        return i[order], j[order]


class SpatialIndex:
    """Hash grid over a pattern: cell coordinate -> bucket of point indices."""

    def __init__(self, pattern: PointPattern, cell_size: float):
        self._grid = _CellGrid(pattern.points, cell_size, pattern.window)
        self.cell_size = self._grid.cell_size
        self.grid: dict[tuple, np.ndarray] = {}
        for idx, key in enumerate(map(tuple, self._grid.cells)):
            self.grid.setdefault(key, []).append(idx)
        self.grid = {k: np.asarray(v, dtype=np.int64) for k, v in self.grid.items()}

    def query(self, point, radius: float) -> np.ndarray:
        """Indices of points within ``radius`` of ``point`` (inclusive)."""
        if radius > self.cell_size + 1e-12:
            raise ValueError("query radius exceeds grid cell size; rebuild the index")
        cand = self._grid.candidate_indices(np.asarray(point, dtype=float))
        if len(cand) == 0:
            return cand
        diff = displacements(self._grid.points[cand], np.asarray(point, dtype=float), self._grid.window)
        hit = within_radius_sq(np.einsum("ij,ij->i", diff, diff), radius)
        return np.sort(cand[hit])


def neighbors_within(
    index: SpatialIndex,
    pattern: PointPattern,
    query,
    radius: float,
    *,
    exclude_index: int | None = None,
) -> np.ndarray:
    """Exactly the pattern indices at distance <= radius from ``query``.

    ``exclude_index`` drops the query point itself when it is a member of
    the pattern (identified by positional index, not by coordinates).
    """
    hits = index.query(query, radius)
    if exclude_index is not None:
        hits = hits[hits != exclude_index]
    return hits


def ball_counts(pattern: PointPattern, radius: float) -> np.ndarray:
    """|B(x, r) ∩ pattern| for every point x of the pattern (self included)."""
    grid = _CellGrid(pattern.points, radius, pattern.window)
    return grid.counts_near(pattern.points, radius)


def count_near(members: np.ndarray, queries: np.ndarray, radius: float, window: Window) -> np.ndarray:
    """For each query location, how many of ``members`` lie within radius."""
    grid = _CellGrid(np.asarray(members, dtype=float).reshape(-1, window.dim), radius, window)
    return grid.counts_near(queries, radius)


def pairs_within(pattern: PointPattern, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """All point-index pairs (i < j) at distance <= radius."""
    grid = _CellGrid(pattern.points, radius, pattern.window)
    return grid.pairs_within(radius)


def adjacency_lists(pattern: PointPattern, radius: float) -> list[np.ndarray]:
    """Neighbor lists of the inclusive disk graph at the given radius."""
    i, j = pairs_within(pattern, radius)
    n = len(pattern)
    deg = np.bincount(i, minlength=n) + np.bincount(j, minlength=n)
    nbrs = [np.empty(d, dtype=np.int64) for d in deg]
    fill = np.zeros(n, dtype=np.int64)
    for a, b in zip(i, j):
        nbrs[a][fill[a]] = b
        fill[a] += 1
        nbrs[b][fill[b]] = a
        fill[b] += 1
    return nbrs


def connected_components(pattern: PointPattern, radius: float) -> np.ndarray:
    """Component label per point under "chain of hops each <= radius".

    Labels are root indices from union-find; equal label means same
    component.  Invariant under point-list permutation up to relabeling.
    """
    n = len(pattern)
    uf = UnionFind(n)
    i, j = pairs_within(pattern, radius)
    for a, b in zip(i, j):
        uf.union(int(a), int(b))
    return uf.labels()
