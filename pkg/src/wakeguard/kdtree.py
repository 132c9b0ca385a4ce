"""Exact k-d tree nearest-neighbor search.

Small, deterministic, and exact on purpose: median split on the widest
dimension, leaf size 16, Euclidean metric. Candidate ranking uses the full
key (squared distance, point coordinates, tie value), so equal-distance
neighbors resolve the same way no matter how the training rows were
ordered. A subtree is pruned only when its bounding box is strictly
farther than the current worst candidate; equality is always visited.
"""
from __future__ import annotations

from bisect import insort
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

LEAF_SIZE = 16


@dataclass
class _Node:
    lo: np.ndarray
    hi: np.ndarray
    indices: np.ndarray | None = None  # leaf payload
    dim: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None


class KdTree:
    """Static tree over an (N, d) float matrix with integer tie values.

    query() returns the k nearest rows under the total order
    (squared distance, coordinates, tie, row index); the trailing row
    index only separates rows that are exact duplicates including tie.
    """

    def __init__(self, points: np.ndarray, tie: np.ndarray | None = None,
                 leaf_size: int = LEAF_SIZE):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError(f"points must be a nonempty 2-D array, got {pts.shape}")
        self.points = pts
        self.n, self.d = pts.shape
        if tie is None:
            tie = np.zeros(self.n, dtype=np.int64)
        self.tie = np.asarray(tie, dtype=np.int64)
        if self.tie.shape != (self.n,):
            raise ValueError("tie must be one value per point")
        self.leaf_size = int(leaf_size)
        self.root = self._build(np.arange(self.n))

    def _build(self, indices: np.ndarray) -> _Node:
        sub = self.points[indices]
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        spread = hi - lo
        if len(indices) <= self.leaf_size or float(spread.max()) == 0.0:
            return _Node(lo=lo, hi=hi, indices=indices)
        dim = int(np.argmax(spread))
        vals = sub[:, dim]
        threshold = float(np.median(vals))
        mask = vals <= threshold
        if mask.all():
            # median landed on the max; strict split keeps both sides nonempty
            mask = vals < threshold
        return _Node(
            lo=lo,
            hi=hi,
            dim=dim,
            threshold=threshold,
            left=self._build(indices[mask]),
            right=self._build(indices[~mask]),
        )

    def _min_dist2(self, node: _Node, x: np.ndarray) -> float:
        delta = np.maximum(node.lo - x, 0.0) + np.maximum(x - node.hi, 0.0)
        return float(delta @ delta)

    def query(self, x: np.ndarray, k: int) -> tuple[list[int], list[float]]:
        """k nearest row indices and distances, nearest first.

        k larger than the tree returns every row.
        """
        q = np.asarray(x, dtype=np.float64).reshape(-1)
        if q.shape != (self.d,):
            raise DimensionMismatch(
                f"query has {q.shape[0]} dims, tree has {self.d}"
            )
        if k < 1:
            raise ValueError("k must be >= 1")
        k = min(k, self.n)
        best: list[tuple] = []

        def scan_leaf(indices: np.ndarray) -> None:
            pts = self.points[indices]
            diffs = pts - q
            d2s = np.einsum("ij,ij->i", diffs, diffs)
            for row, d2 in zip(indices, d2s):
                key = (float(d2), *map(float, self.points[row]),
                       int(self.tie[row]), int(row))
                if len(best) < k:
                    insort(best, key)
                elif key < best[-1]:
                    insort(best, key)
                    best.pop()

        def visit(node: _Node) -> None:
            if len(best) == k and self._min_dist2(node, q) > best[-1][0]:
                return
            if node.indices is not None:
                scan_leaf(node.indices)
                return
            first, second = node.left, node.right
            if q[node.dim] > node.threshold:
                first, second = second, first
            visit(first)  # type: ignore[arg-type]
            visit(second)  # type: ignore[arg-type]

        visit(self.root)
        return [key[-1] for key in best], [float(np.sqrt(key[0])) for key in best]
