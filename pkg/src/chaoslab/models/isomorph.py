"""Isomorphism testing for small labeled graphs (k <= 8).

Degree-sequence prefilter followed by backtracking over vertex
bijections; vertices are tried in decreasing-degree order so mismatches
prune early.  Adjacency matrices are dense boolean arrays, which is the
right representation at this size.
"""

from __future__ import annotations

import numpy as np

MAX_VERTICES = 8


def graph_from_edges(k: int, edges) -> np.ndarray:
    """Boolean adjacency matrix of a simple undirected graph on k vertices."""
    if k < 1 or k > MAX_VERTICES:
        raise ValueError(f"graph order must be in 1..{MAX_VERTICES}")
    adj = np.zeros((k, k), dtype=bool)
    for e in edges:
        a, b = int(e[0]), int(e[1])
        if a == b:
            raise ValueError("self loops are not allowed")
        if not (0 <= a < k and 0 <= b < k):
            raise ValueError("edge endpoint out of range")
        adj[a, b] = adj[b, a] = True
    return adj


def is_connected_graph(adj: np.ndarray) -> bool:
    k = len(adj)
    if k == 0:
        return False
    seen = np.zeros(k, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for u in np.flatnonzero(adj[v]):
            if not seen[u]:
                seen[u] = True
                stack.append(int(u))
    return bool(seen.all())


def is_isomorphic(a: np.ndarray, b: np.ndarray) -> bool:
    """Whether two small simple graphs are isomorphic."""
    k = len(a)
    if len(b) != k:
        return False
    deg_a = a.sum(axis=1)
    deg_b = b.sum(axis=1)
    if sorted(deg_a) != sorted(deg_b):
        return False

    order = np.argsort(-deg_a, kind="stable")
    mapping = np.full(k, -1, dtype=np.int64)
    used = np.zeros(k, dtype=bool)

    def backtrack(pos: int) -> bool:
        if pos == k:
            return True
        v = order[pos]
        for w in range(k):
            if used[w] or deg_b[w] != deg_a[v]:
                continue
            ok = True
            for q in range(pos):
                u = order[q]
                if a[v, u] != b[w, mapping[u]]:
                    ok = False
                    break
            if ok:
                mapping[v] = w
                used[w] = True
                if backtrack(pos + 1):
                    return True
                used[w] = False
                mapping[v] = -1
        return False

    return backtrack(0)
