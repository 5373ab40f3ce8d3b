"""Count of isolated components isomorphic to a fixed connected graph.

A Γ-component of the disk graph at radius r is a connected component
with exactly k vertices whose induced graph is isomorphic to Γ.  Since a
connected component has no edges to the rest of the pattern, isolation
is built into componenthood, and the component-scan count equals the
ordered k-tuple sum

    (1/k!) * sum over distinct ordered tuples 1(induced graph ≅ Γ and
             the tuple is at distance > r from the rest)

which is the brute-force oracle used in the tests.

Cost operators are local: a removed point can only create new components
of size k out of its old neighbors, and an inserted point merges exactly
the components owning one of its neighbors.  Candidate probes are
bounded by a degree prefilter (members of a k-vertex component have
degree at most k within the pattern), so batch costs stay near-linear
even on dense patterns where no small components exist at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..functional import ChaoticSetKind, Functional
from ..geometry import SpatialIndex, UnionFind, adjacency_lists, displacements, pairs_within, within_radius_sq
from ..pointproc import Intensity, PointPattern, Window
from .isomorph import MAX_VERTICES, graph_from_edges, is_connected_graph, is_isomorphic


@dataclass(frozen=True)
class GammaModel(Functional):
    gamma_edges: tuple = ((0, 1),)
    gamma_order: int = 2
    r: float = 0.1
    d: int = 2
    s: float = 100.0
    adjacency: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        if not 2 <= self.gamma_order <= MAX_VERTICES:
            raise ValueError(f"component graph must have 2..{MAX_VERTICES} vertices")
        if not 0.0 < self.r < 0.5:
            raise ValueError("radius must lie in (0, 1/2) on the unit torus")
        if self.d < 1:
            raise ValueError("dimension must be a positive integer")
        if self.s <= 0:
            raise ValueError("intensity must be > 0")
        edges = tuple(tuple(int(v) for v in e) for e in self.gamma_edges)
        object.__setattr__(self, "gamma_edges", edges)
        adj = graph_from_edges(self.gamma_order, edges)
        if not is_connected_graph(adj):
            raise ValueError("component graph must be connected")
        object.__setattr__(self, "adjacency", adj)

    @property
    def k(self) -> int:
        return self.gamma_order

    def intensity(self) -> Intensity:
        return Intensity(self.s, Window.torus(self.d))

    def _check_window(self, pattern: PointPattern):
        if pattern.window.kind != "torus" or pattern.window.dim != self.d:
            raise ValueError("pattern window must be the unit torus of the model dimension")

    # ---- component structure ----------------------------------------------
    def _induced_adjacency(self, pattern: PointPattern, members: np.ndarray) -> np.ndarray:
        pts = pattern.points[members]
        diff = displacements(pts[:, None, :], pts[None, :, :], pattern.window)
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        adj = within_radius_sq(d2, self.r)
        np.fill_diagonal(adj, False)
        return adj

    def _matches_gamma(self, pattern: PointPattern, members: np.ndarray) -> bool:
        if len(members) != self.k:
            return False
        return is_isomorphic(self._induced_adjacency(pattern, members), self.adjacency)

    def _structure(self, pattern: PointPattern):
        """(labels, component member lists, Γ-component flag per label)."""
        self._check_window(pattern)
        n = len(pattern)
        uf = UnionFind(n)
        for a, b in zip(*pairs_within(pattern, self.r)):
            uf.union(int(a), int(b))
        labels = uf.labels()
        flags = {}
        if n:
            order = np.argsort(labels, kind="stable")
            sorted_labels = labels[order]
            cuts = np.flatnonzero(np.diff(sorted_labels)) + 1
            groups = np.split(order, cuts)
            for g in groups:
                root = int(labels[g[0]])
                flags[root] = len(g) == self.k and self._matches_gamma(pattern, g)
        return labels, flags

    def evaluate(self, pattern: PointPattern) -> float:
        _, flags = self._structure(pattern)
        return float(sum(flags.values()))

    @property
    def has_scores(self) -> bool:
        return True

    def scores(self, pattern: PointPattern) -> np.ndarray:
        """Per-point score 1(point lies in a Γ-component) / k; sums to F."""
        return self.set_members(pattern, ChaoticSetKind.GAMMA_MEMBERSHIP).astype(float) / self.k

    # ---- chaotic set --------------------------------------------------------
    set_kinds = (ChaoticSetKind.PIVOTAL, ChaoticSetKind.GAMMA_MEMBERSHIP)
    default_set_kind = ChaoticSetKind.GAMMA_MEMBERSHIP

    def set_members(self, pattern: PointPattern, kind=None) -> np.ndarray:
        kind = ChaoticSetKind(kind or self.default_set_kind)
        if kind == ChaoticSetKind.GAMMA_MEMBERSHIP:
            labels, flags = self._structure(pattern)
            mask = np.zeros(len(pattern), dtype=bool)
            for i, lab in enumerate(labels):
                mask[i] = flags.get(int(lab), False)
            return mask
        if kind == ChaoticSetKind.PIVOTAL:
            return self.remove_one_costs(pattern) != 0.0
        raise ValueError(f"no set kind {kind.value!r} for this model")

    # ---- incremental costs ---------------------------------------------------
    def _capped_part(self, start: int, nbrs: list[np.ndarray], skip: int | None) -> np.ndarray | None:
        """Vertices of the component of ``start`` in the graph minus ``skip``,
        or None as soon as it exceeds k vertices."""
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for u in nbrs[v]:
                u = int(u)
                if u == skip or u in seen:
                    continue
                seen.add(u)
                if len(seen) > self.k:
                    return None
                stack.append(u)
        return np.fromiter(sorted(seen), dtype=np.int64, count=len(seen))

    def remove_one_costs(self, pattern: PointPattern) -> np.ndarray:
        n = len(pattern)
        if n == 0:
            return np.zeros(0)
        self._check_window(pattern)
        nbrs = adjacency_lists(pattern, self.r)
        deg = np.asarray([len(a) for a in nbrs])
        out = np.zeros(n)
        for x in range(n):
            was = 0.0
            if deg[x] <= self.k - 1:
                part = self._capped_part(x, nbrs, skip=None)
                if part is not None and self._matches_gamma(pattern, part):
                    was = 1.0
            created = 0
            seen_parts = set()
            for y in nbrs[x]:
                y = int(y)
                if deg[y] > self.k:  # members of a k-part have degree <= k here
                    continue
                part = self._capped_part(y, nbrs, skip=x)
                if part is None or len(part) != self.k:
                    continue
                key = int(part[0])
                if key in seen_parts:
                    continue
                seen_parts.add(key)
                if self._matches_gamma(pattern, part):
                    created += 1
            out[x] = was - created
        return out

    def remove_one_cost(self, i: int, pattern: PointPattern) -> float:
        return float(self.remove_one_costs(pattern)[i])

    def add_one_costs(self, xs, pattern: PointPattern) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        self._check_window(pattern)
        n = len(pattern)
        labels, flags = self._structure(pattern)
        sizes = np.bincount(labels, minlength=n) if n else np.zeros(0, dtype=np.int64)
        index = SpatialIndex(pattern, self.r) if n else None
        out = np.zeros(len(xs))
        for j, x in enumerate(xs):
            nbr = index.query(x, self.r) if index is not None else np.zeros(0, dtype=np.int64)
            comp_ids = {int(labels[v]) for v in nbr}
            destroyed = sum(1 for c in comp_ids if flags.get(c, False))
            created = 0.0
            merged_size = 1 + sum(int(sizes[c]) for c in comp_ids)
            if merged_size == self.k:
                members = np.flatnonzero(np.isin(labels, list(comp_ids))) if comp_ids else np.zeros(0, dtype=np.int64)
                aug = pattern.with_point(x)
                merged = np.concatenate([members, [n]])
                if self._matches_gamma(aug, merged):
                    created = 1.0
            out[j] = created - destroyed
        return out

    def add_one_cost(self, x, pattern: PointPattern) -> float:
        return float(self.add_one_costs(np.asarray(x, dtype=float)[None, :], pattern)[0])


def gamma_count_bruteforce(model: GammaModel, pattern: PointPattern) -> float:
    """Ordered-k-tuple count divided by k! (enumeration oracle, small patterns).

    Enumerates all k-subsets; a subset contributes k! ordered tuples
    exactly when its induced graph is isomorphic to Γ and no other
    pattern point lies within r of it.
    """
    from itertools import combinations

    n = len(pattern)
    k = model.k
    if n < k:
        return 0.0
    diff = displacements(pattern.points[:, None, :], pattern.points[None, :, :], pattern.window)
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    adj = within_radius_sq(d2, model.r)
    np.fill_diagonal(adj, False)
    count = 0
    for subset in combinations(range(n), k):
        idx = np.asarray(subset)
        others = np.setdiff1d(np.arange(n), idx, assume_unique=True)
        if len(others) and adj[np.ix_(idx, others)].any():
            continue  # not isolated from the rest
        if is_isomorphic(adj[np.ix_(idx, idx)], model.adjacency):
            count += 1
    return float(count)
