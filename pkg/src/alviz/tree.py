"""Purely random (Mondrian) tree regressor.

The partition is label-independent: it is grown from the pool's bounding
box and a seed alone, so every query strategy in a run can share one
partition while owning its own leaf statistics.  Leaf statistics use
Welford updates and are the only trainable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_LIFETIME = 2.0
DEFAULT_MAX_DEPTH = 20
_DEGENERATE_WIDTH = 1e-9


@dataclass
class Node:
    """One partition node; leaves have split_dim == -1."""

    parent: int
    depth: int
    lo: np.ndarray
    hi: np.ndarray
    split_dim: int = -1
    split_loc: float = 0.0
    left: int = -1
    right: int = -1
    leaf_slot: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.split_dim < 0


@dataclass
class TreePartition:
    """Label-independent recursive partition of the pool bounding box.

    Children are created after their parent, so node ids ascend root-to-leaf
    along every path; bottom-up passes can iterate ids in reverse.
    """

    nodes: list[Node]
    leaf_ids: np.ndarray  # node id per leaf slot
    build_seed: int
    lifetime: float
    max_depth: int

    @property
    def d(self) -> int:
        return self.nodes[0].lo.shape[0]

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_ids)

    @property
    def root_lo(self) -> np.ndarray:
        return self.nodes[0].lo

    @property
    def root_hi(self) -> np.ndarray:
        return self.nodes[0].hi

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.root_lo, self.root_hi)

    def leaf_of(self, x) -> int:
        """Node id of the leaf containing x (clamped to the root box)."""
        x = self.clamp(np.asarray(x, dtype=np.float64))
        nid = 0
        node = self.nodes[0]
        while not node.is_leaf:
            nid = node.left if x[node.split_dim] <= node.split_loc else node.right
            node = self.nodes[nid]
        return nid

    def leaf_slots(self, X: np.ndarray) -> np.ndarray:
        """Leaf slot index for every row of X, vectorized."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        X = np.clip(X, self.root_lo, self.root_hi)
        out = np.empty(X.shape[0], dtype=np.int64)
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            nid, idx = stack.pop()
            node = self.nodes[nid]
            if node.is_leaf:
                out[idx] = node.leaf_slot
            else:
                mask = X[idx, node.split_dim] <= node.split_loc
                stack.append((node.left, idx[mask]))
                stack.append((node.right, idx[~mask]))
        return out

    def as_tuples(self):
        """Structural fingerprint used by determinism tests."""
        return [
            (
                n.parent,
                n.depth,
                tuple(n.lo),
                tuple(n.hi),
                n.split_dim,
                n.split_loc,
                n.left,
                n.right,
                n.leaf_slot,
            )
            for n in self.nodes
        ]


def build_partition(
    pool_features: np.ndarray,
    lifetime: float = DEFAULT_LIFETIME,
    max_depth: int = DEFAULT_MAX_DEPTH,
    seed: int = 0,
) -> TreePartition:
    """Grow a Mondrian partition over the pool's bounding box.

    At each node a split time is drawn Exponential(rate = sum of side
    lengths); the node becomes a leaf when the cumulative time exceeds the
    lifetime, the depth hits max_depth, or fewer than 2 distinct pool
    points remain.  Split dimension is drawn proportional to side length,
    the location uniformly on that side.  One seeded stream is consumed in
    depth-first order (left before right), so a fixed seed fixes the tree.
    """
    X = np.atleast_2d(np.asarray(pool_features, dtype=np.float64))
    n, d = X.shape
    if n < 1:
        raise ValueError("cannot build a partition from an empty pool")
    if lifetime <= 0 and max_depth < 1:
        raise ValueError("need lifetime > 0 or max_depth >= 1")

    lo = X.min(axis=0)
    hi = X.max(axis=0)
    hi = np.where(hi - lo <= 0.0, lo + _DEGENERATE_WIDTH, hi)

    rng = np.random.default_rng(seed)
    nodes: list[Node] = []
    leaf_ids: list[int] = []

    def grow(parent: int, depth: int, box_lo, box_hi, idx: np.ndarray, t_parent: float) -> int:
        nid = len(nodes)
        node = Node(parent=parent, depth=depth, lo=box_lo, hi=box_hi)
        nodes.append(node)

        def make_leaf() -> int:
            node.leaf_slot = len(leaf_ids)
            leaf_ids.append(nid)
            return nid

        if depth >= max_depth:
            return make_leaf()
        if idx.size < 2 or not np.any(X[idx].max(axis=0) > X[idx].min(axis=0)):
            return make_leaf()

        sides = box_hi - box_lo
        total = float(sides.sum())
        t_split = t_parent + rng.exponential(1.0 / total)
        if t_split > lifetime:
            return make_leaf()

        u = rng.uniform(0.0, total)
        dim = int(np.searchsorted(np.cumsum(sides), u, side="right"))
        dim = min(dim, d - 1)
        loc = float(rng.uniform(box_lo[dim], box_hi[dim]))
        if not box_lo[dim] < loc < box_hi[dim]:  # fp endpoint guard
            loc = float(box_lo[dim] + 0.5 * sides[dim])

        node.split_dim = dim
        node.split_loc = loc
        left_hi = box_hi.copy()
        left_hi[dim] = loc
        right_lo = box_lo.copy()
        right_lo[dim] = loc
        mask = X[idx, dim] <= loc
        node.left = grow(nid, depth + 1, box_lo.copy(), left_hi, idx[mask], t_split)
        node.right = grow(nid, depth + 1, right_lo, box_hi.copy(), idx[~mask], t_split)
        return nid

    grow(-1, 0, lo.copy(), hi.copy(), np.arange(n), 0.0)
    return TreePartition(
        nodes=nodes,
        leaf_ids=np.array(leaf_ids, dtype=np.int64),
        build_seed=seed,
        lifetime=lifetime,
        max_depth=max_depth,
    )


@dataclass
class LeafStats:
    """Per-leaf label statistics plus pool mass, updated by Welford's method.

    counts/means/m2 are indexed by leaf slot; m2 is the running sum of
    squared deviations.  Global (all-leaf) aggregates back the count < 2
    standard-deviation fallback.
    """

    counts: np.ndarray
    means: np.ndarray
    m2: np.ndarray
    pool_mass: np.ndarray
    total_count: int = 0
    total_mean: float = 0.0
    total_m2: float = 0.0

    @classmethod
    def empty(cls, partition: TreePartition, pool_features: np.ndarray) -> "LeafStats":
        slots = partition.leaf_slots(pool_features)
        mass = np.bincount(slots, minlength=partition.n_leaves).astype(np.float64)
        mass /= mass.sum()
        k = partition.n_leaves
        return cls(
            counts=np.zeros(k, dtype=np.int64),
            means=np.zeros(k, dtype=np.float64),
            m2=np.zeros(k, dtype=np.float64),
            pool_mass=mass,
        )

    def copy(self) -> "LeafStats":
        return LeafStats(
            counts=self.counts.copy(),
            means=self.means.copy(),
            m2=self.m2.copy(),
            pool_mass=self.pool_mass.copy(),
            total_count=self.total_count,
            total_mean=self.total_mean,
            total_m2=self.total_m2,
        )

    def add(self, slots: np.ndarray, labels: np.ndarray) -> None:
        """Push labeled points (already routed to leaf slots) into the stats."""
        for slot, y in zip(np.asarray(slots, dtype=np.int64), np.asarray(labels, dtype=np.float64)):
            y = float(y)
            self.counts[slot] += 1
            delta = y - self.means[slot]
            self.means[slot] += delta / self.counts[slot]
            self.m2[slot] += delta * (y - self.means[slot])

            self.total_count += 1
            delta = y - self.total_mean
            self.total_mean += delta / self.total_count
            self.total_m2 += delta * (y - self.total_mean)

    def variance(self) -> np.ndarray:
        return self.m2 / np.maximum(self.counts - 1, 1)

    def global_std(self) -> float:
        """Std of all labeled points; 1.0 prior when fewer than 2 labels exist."""
        if self.total_count < 2:
            return 1.0
        return math.sqrt(self.total_m2 / (self.total_count - 1))

    def std_with_fallback(self) -> np.ndarray:
        """Per-leaf std; leaves with count < 2 report the global labeled std."""
        std = np.sqrt(self.variance())
        std[self.counts < 2] = self.global_std()
        return std


def update_stats(
    partition: TreePartition, stats: LeafStats, batch_features, batch_labels
) -> LeafStats:
    """Route a labeled batch to its leaves and fold it into stats (in place)."""
    X = np.atleast_2d(np.asarray(batch_features, dtype=np.float64))
    y = np.atleast_1d(np.asarray(batch_labels, dtype=np.float64))
    stats.add(partition.leaf_slots(X), y)
    return stats


def effective_leaf_means(partition: TreePartition, stats: LeafStats) -> np.ndarray:
    """Prediction value per leaf slot under the empty-leaf fallback rule.

    A leaf with labels predicts its own mean; an empty leaf inherits from
    the nearest ancestor whose subtree holds any labels; with no labels at
    all everything predicts the 0.0 empty-model prior.  Computed with one
    bottom-up subtree-aggregation pass and one top-down inheritance pass.
    """
    nodes = partition.nodes
    n_nodes = len(nodes)
    sub_count = np.zeros(n_nodes, dtype=np.int64)
    sub_sum = np.zeros(n_nodes, dtype=np.float64)
    for nid in range(n_nodes - 1, -1, -1):
        node = nodes[nid]
        if node.is_leaf:
            sub_count[nid] = stats.counts[node.leaf_slot]
            sub_sum[nid] = stats.counts[node.leaf_slot] * stats.means[node.leaf_slot]
        else:
            sub_count[nid] = sub_count[node.left] + sub_count[node.right]
            sub_sum[nid] = sub_sum[node.left] + sub_sum[node.right]

    eff = np.zeros(n_nodes, dtype=np.float64)
    eff[0] = sub_sum[0] / sub_count[0] if sub_count[0] > 0 else 0.0
    for nid in range(1, n_nodes):
        if sub_count[nid] > 0:
            eff[nid] = sub_sum[nid] / sub_count[nid]
        else:
            eff[nid] = eff[nodes[nid].parent]
    return eff[partition.leaf_ids]


def predict(partition: TreePartition, stats: LeafStats, x) -> float:
    """Predict one point: leaf mean, ancestor-subtree mean, or the 0.0 prior."""
    slot = int(partition.leaf_slots(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])
    return float(effective_leaf_means(partition, stats)[slot])


def predict_many(partition: TreePartition, stats: LeafStats, X) -> np.ndarray:
    return effective_leaf_means(partition, stats)[partition.leaf_slots(X)]


def predict_slots(partition: TreePartition, stats: LeafStats, slots: np.ndarray) -> np.ndarray:
    """Fast path for callers that pre-routed their points to leaf slots."""
    return effective_leaf_means(partition, stats)[slots]


def leaf_summary(partition: TreePartition, stats: LeafStats):
    """One row per leaf: (leaf node id, count, mean, std, pool_mass).

    Empty leaves report mean 0.0 (the empty-model prior) and the fallback
    std, mirroring std_with_fallback.
    """
    std = stats.std_with_fallback()
    rows = []
    for slot, nid in enumerate(partition.leaf_ids):
        count = int(stats.counts[slot])
        mean = float(stats.means[slot]) if count > 0 else 0.0
        rows.append((int(nid), count, mean, float(std[slot]), float(stats.pool_mass[slot])))
    return rows
