"""Left-right crossing indicator of the Boolean disk model.

Points carry closed unit disks.  The functional is +1 when a chain of
pairwise-overlapping disks (centers at distance <= 2), each intersecting
the target box W = [-s, s]^2, connects a disk touching the left edge
{x = -s} x [-s, s] to a disk touching the right edge, and -1 otherwise.
Points are sampled on the margin box [-(s+1), s+1]^2 so every disk that
can intersect W is present.

The indicator is increasing in the pattern, so add-one costs lie in
{0, 2} and remove-one costs are supported on the pivotal points: the
points whose removal destroys the crossing.  Pivotal candidates are cut
vertices of the terminal-to-terminal connectivity graph, each verified
by recomputation; with no crossing present, monotonicity forces the
pivotal set to be empty.

``strict_clipped`` is a sensitivity variant that additionally requires
each overlap lens of consecutive disks to intersect W, approximating
connectivity of the occupied region clipped to W.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..functional import ChaoticSetKind, Functional
from ..geometry import _CellGrid
from ..pointproc import Intensity, PointPattern, Window

_CONNECT = 2.0  # two unit disks overlap iff centers are within 2


@dataclass(frozen=True)
class CrossingModel(Functional):
    s: float = 4.0
    lam: float = 0.36
    strict_clipped: bool = False

    def __post_init__(self):
        if self.s <= 1:
            raise ValueError("half box side must be > 1")
        if self.lam <= 0:
            raise ValueError("intensity must be > 0")

    def window(self) -> Window:
        m = self.s + 1.0
        return Window.box((-m, -m), (m, m))

    def intensity(self) -> Intensity:
        return Intensity(self.lam, self.window())

    # ---- disk/edge geometry -------------------------------------------------
    def _eligible(self, pts: np.ndarray) -> np.ndarray:
        """Disk B(p, 1) intersects the target box."""
        if len(pts) == 0:
            return np.zeros(0, dtype=bool)
        over = np.clip(np.abs(pts) - self.s, 0.0, None)
        return np.einsum("ij,ij->i", over, over) <= 1.0

    def _touches_edge(self, pts: np.ndarray, side: int) -> np.ndarray:
        """Disk touches the left (side=-1) or right (side=+1) edge segment."""
        if len(pts) == 0:
            return np.zeros(0, dtype=bool)
        dx = pts[:, 0] - side * self.s
        dy = np.clip(np.abs(pts[:, 1]) - self.s, 0.0, None)
        return dx * dx + dy * dy <= 1.0

    def _lens_hits_box(self, c1: np.ndarray, c2: np.ndarray) -> bool:
        """Whether B(c1,1) ∩ B(c2,1) ∩ W is nonempty (alternating projections)."""
        lo, hi = -self.s, self.s
        q = (c1 + c2) / 2.0
        for _ in range(80):
            q = np.clip(q, lo, hi)
            for c in (c1, c2):
                v = q - c
                dist = float(np.hypot(v[0], v[1]))
                if dist > 1.0:
                    q = c + v / dist
        ok_box = bool(np.all(q >= lo - 1e-9) and np.all(q <= hi + 1e-9))
        d1 = float(np.hypot(*(q - c1)))
        d2 = float(np.hypot(*(q - c2)))
        return ok_box and d1 <= 1.0 + 1e-9 and d2 <= 1.0 + 1e-9

    def _graph(self, pattern: PointPattern):
        """Edges among eligible points plus terminal attachments.

        Returns (eligible indices, edge pairs (a, b) as positions into the
        eligible list, left-touch mask, right-touch mask).
        """
        pts = pattern.points
        elig = np.flatnonzero(self._eligible(pts))
        sub = pts[elig]
        if len(sub) >= 2:
            grid = _CellGrid(sub, _CONNECT, pattern.window)
            i, j = grid.pairs_within(_CONNECT)
            if self.strict_clipped and len(i):
                keep = np.fromiter(
                    (self._lens_hits_box(sub[a], sub[b]) for a, b in zip(i, j)),
                    dtype=bool,
                    count=len(i),
                )
                i, j = i[keep], j[keep]
        else:
            i = j = np.zeros(0, dtype=np.int64)
        return elig, i, j, self._touches_edge(sub, -1), self._touches_edge(sub, +1)

    @staticmethod
    def _connected(n_sub, i, j, left, right, skip: int | None = None) -> bool:
        """Terminal-to-terminal connectivity, optionally without one point."""
        from ..geometry import UnionFind

        uf = UnionFind(n_sub + 2)
        lt, rt = n_sub, n_sub + 1
        for a in np.flatnonzero(left):
            if a != skip:
                uf.union(int(a), lt)
        for a in np.flatnonzero(right):
            if a != skip:
                uf.union(int(a), rt)
        for a, b in zip(i, j):
            if a != skip and b != skip:
                uf.union(int(a), int(b))
        return uf.find(lt) == uf.find(rt)

    def evaluate(self, pattern: PointPattern) -> float:
        elig, i, j, left, right = self._graph(pattern)
        return 1.0 if self._connected(len(elig), i, j, left, right) else -1.0

    # ---- costs ---------------------------------------------------------------
    def add_one_costs(self, xs, pattern: PointPattern) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if self.evaluate(pattern) > 0:
            return np.zeros(len(xs))  # increasing indicator saturated at +1
        elig, i, j, left, right = self._graph(pattern)
        sub = pattern.points[elig]
        out = np.zeros(len(xs))
        for idx, x in enumerate(xs):
            if not self._eligible(x[None, :])[0]:
                continue
            d = sub - x[None, :]
            near = np.flatnonzero(np.einsum("ij,ij->i", d, d) <= _CONNECT * _CONNECT)
            if self.strict_clipped:
                near = np.asarray(
                    [a for a in near if self._lens_hits_box(x, sub[a])], dtype=np.int64
                )
            n_sub = len(sub)
            xi = np.full(len(near), n_sub, dtype=np.int64)
            i2 = np.concatenate([i, xi])
            j2 = np.concatenate([j, near])
            left2 = np.concatenate([left, self._touches_edge(x[None, :], -1)])
            right2 = np.concatenate([right, self._touches_edge(x[None, :], +1)])
            if self._connected(n_sub + 1, i2, j2, left2, right2):
                out[idx] = 2.0
        return out

    def add_one_cost(self, x, pattern: PointPattern) -> float:
        return float(self.add_one_costs(np.asarray(x, dtype=float)[None, :], pattern)[0])

    def pivotal_set(self, pattern: PointPattern) -> np.ndarray:
        """Indices of points whose removal flips the crossing indicator."""
        elig, i, j, left, right = self._graph(pattern)
        n_sub = len(elig)
        if not self._connected(n_sub, i, j, left, right):
            return np.zeros(0, dtype=np.int64)  # monotone: removal cannot create
        candidates = self._articulation_candidates(n_sub, i, j, left, right)
        hits = [
            v for v in candidates if not self._connected(n_sub, i, j, left, right, skip=int(v))
        ]
        return np.sort(elig[np.asarray(hits, dtype=np.int64)]) if hits else np.zeros(0, dtype=np.int64)

    @staticmethod
    def _articulation_candidates(n_sub, i, j, left, right) -> np.ndarray:
        """Cut vertices of the component holding both terminals (iterative DFS)."""
        n = n_sub + 2
        lt, rt = n_sub, n_sub + 1
        adj = [[] for _ in range(n)]
        for a, b in zip(i, j):
            adj[int(a)].append(int(b))
            adj[int(b)].append(int(a))
        for a in np.flatnonzero(left):
            adj[int(a)].append(lt)
            adj[lt].append(int(a))
        for a in np.flatnonzero(right):
            adj[int(a)].append(rt)
            adj[rt].append(int(a))

        disc = np.full(n, -1, dtype=np.int64)
        low = np.full(n, -1, dtype=np.int64)
        parent = np.full(n, -1, dtype=np.int64)
        is_art = np.zeros(n, dtype=bool)
        timer = 0
        stack = [(lt, iter(adj[lt]))]
        disc[lt] = low[lt] = timer
        timer += 1
        root_children = 0
        while stack:
            v, it = stack[-1]
            advanced = False
            for u in it:
                if disc[u] == -1:
                    parent[u] = v
                    disc[u] = low[u] = timer
                    timer += 1
                    if v == lt:
                        root_children += 1
                    stack.append((u, iter(adj[u])))
                    advanced = True
                    break
                elif u != parent[v]:
                    low[v] = min(low[v], disc[u])
            if not advanced:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    low[p] = min(low[p], low[v])
                    if parent[v] == p and p != lt and low[v] >= disc[p]:
                        is_art[p] = True
        if root_children > 1:
            is_art[lt] = True
        return np.flatnonzero(is_art[:n_sub])

    def remove_one_costs(self, pattern: PointPattern) -> np.ndarray:
        out = np.zeros(len(pattern))
        out[self.pivotal_set(pattern)] = 2.0
        return out

    def remove_one_cost(self, i: int, pattern: PointPattern) -> float:
        return float(self.remove_one_costs(pattern)[i])

    set_kinds = (ChaoticSetKind.PIVOTAL,)
    default_set_kind = ChaoticSetKind.PIVOTAL

    def set_members(self, pattern: PointPattern, kind=None) -> np.ndarray:
        kind = ChaoticSetKind(kind or self.default_set_kind)
        if kind != ChaoticSetKind.PIVOTAL:
            raise ValueError(f"no set kind {kind.value!r} for this model")
        mask = np.zeros(len(pattern), dtype=bool)
        mask[self.pivotal_set(pattern)] = True
        return mask


def pivotal_set_naive(model: CrossingModel, pattern: PointPattern) -> np.ndarray:
    """Per-point removal re-evaluation oracle for the pivotal set."""
    base = model.evaluate(pattern)
    hits = [
        i for i in range(len(pattern)) if model.evaluate(pattern.without_index(i)) != base
    ]
    return np.asarray(hits, dtype=np.int64)
