"""Pool-based active-learning experiment engine.

Runs each query strategy against one shared label-independent partition,
snapshots test-set predictions after every batch (snapshot 0 is the empty
model), and assembles the versioned run artifact.  Artifact JSON is
written by a purpose-built serializer so identical configs produce
byte-identical files (17-significant-digit floats, fixed key order).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import embedding, tree
from .dataset import Dataset, Scaler, SplitSpec, split

SCHEMA_VERSION = 1

# Canonical per-strategy indices: strategy seeds are seed XOR index, so
# removing a strategy from a config never shifts the others' streams.
STRATEGY_INDEX = {"al": 0, "uc": 1, "rn": 2}
STRATEGIES = tuple(STRATEGY_INDEX)


class ArtifactError(Exception):
    """Raised when an artifact file is malformed or violates its invariants."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a run besides the dataset bytes."""

    strategies: tuple[str, ...]
    batch_size: int
    num_batches: int
    seed: int
    lifetime: float = tree.DEFAULT_LIFETIME
    max_depth: int = tree.DEFAULT_MAX_DEPTH
    standardize_features: bool = True
    standardize_embedding: bool = True
    split: SplitSpec = field(default_factory=lambda: SplitSpec(0.25, 0))

    def validate(self, n_total: int) -> None:
        if not self.strategies:
            raise ValueError("strategies must be nonempty")
        if len(set(self.strategies)) != len(self.strategies):
            raise ValueError(f"duplicate strategies in {self.strategies}")
        unknown = [s for s in self.strategies if s not in STRATEGY_INDEX]
        if unknown:
            raise ValueError(f"unknown strategies {unknown}; choose from {STRATEGIES}")
        if self.num_batches < 0:
            raise ValueError("num_batches must be >= 0")
        if self.num_batches > 0 and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1 when batches are requested")
        n_test = int(round(n_total * self.split.test_fraction))
        n_pool = n_total - n_test
        if self.batch_size * self.num_batches > n_pool:
            raise ValueError(
                f"query budget {self.batch_size}x{self.num_batches} exceeds pool size {n_pool}"
            )

    def to_dict(self) -> dict:
        return {
            "strategies": list(self.strategies),
            "batch_size": self.batch_size,
            "num_batches": self.num_batches,
            "seed": self.seed,
            "lifetime": self.lifetime,
            "max_depth": self.max_depth,
            "standardize_features": self.standardize_features,
            "standardize_embedding": self.standardize_embedding,
            "test_fraction": self.split.test_fraction,
            "split_seed": self.split.seed,
            "source_id": "",
        }


@dataclass
class RunArtifact:
    """Immutable record of one experiment: snapshots, queries, MSE, embedding."""

    schema_version: int
    config: dict
    dataset_hash: int
    strategies: tuple[str, ...]
    predictions: np.ndarray  # (S, Q+1, n_test)
    queried_indices: np.ndarray  # (S, Q, batch) pool indices
    queried_labels: np.ndarray  # (S, Q, batch)
    mse: np.ndarray  # (S, Q+1)
    test_labels: np.ndarray  # (n_test,)
    pc_coords: np.ndarray  # (n_test, 2)
    pc_explained_variance: np.ndarray  # (2,)

    @property
    def n_test(self) -> int:
        return self.test_labels.shape[0]

    @property
    def num_batches(self) -> int:
        return self.predictions.shape[1] - 1

    def strategy_index(self, name: str) -> int:
        if name not in self.strategies:
            raise KeyError(f"strategy {name!r} not in artifact (has {list(self.strategies)})")
        return self.strategies.index(name)

    def validate(self) -> None:
        S = len(self.strategies)
        Q = self.num_batches
        n_test = self.n_test
        if self.schema_version != SCHEMA_VERSION:
            raise ArtifactError(f"unsupported schema_version {self.schema_version}")
        if self.predictions.shape != (S, Q + 1, n_test):
            raise ArtifactError(f"predictions shape {self.predictions.shape} inconsistent")
        if not np.all(np.isfinite(self.predictions)):
            raise ArtifactError("non-finite prediction values")
        batch = self.queried_indices.shape[2] if self.queried_indices.ndim == 3 else 0
        if self.queried_indices.shape != (S, Q, batch):
            raise ArtifactError("queried_indices shape inconsistent")
        if self.queried_labels.shape != self.queried_indices.shape:
            raise ArtifactError("queried_labels shape differs from queried_indices")
        for s in range(S):
            flat = self.queried_indices[s].ravel()
            if flat.size and (np.unique(flat).size != flat.size or flat.min() < 0):
                raise ArtifactError(f"strategy {self.strategies[s]}: queried indices not distinct")
        if self.mse.shape != (S, Q + 1):
            raise ArtifactError("mse shape inconsistent")
        recomputed = np.mean(
            (self.predictions - self.test_labels[None, None, :]) ** 2, axis=2
        )
        if not np.allclose(self.mse, recomputed, rtol=1e-9, atol=1e-9):
            raise ArtifactError("stored mse disagrees with predictions")
        if self.pc_coords.shape != (n_test, 2) or not np.all(np.isfinite(self.pc_coords)):
            raise ArtifactError("pc_coords invalid")
        ev = self.pc_explained_variance
        if ev.shape != (2,) or np.any(ev < 0) or np.any(ev > 1):
            raise ArtifactError("pc_explained_variance out of range")

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_json_bytes())

    def to_json_bytes(self) -> bytes:
        body = {
            "schema_version": self.schema_version,
            "config": self.config,
            "dataset_hash": f"{self.dataset_hash:016x}",
            "strategies": list(self.strategies),
            "predictions": self.predictions,
            "queried_indices": self.queried_indices,
            "queried_labels": self.queried_labels,
            "mse": self.mse,
            "test_labels": self.test_labels,
            "pc_coords": self.pc_coords,
            "pc_explained_variance": self.pc_explained_variance,
        }
        out: list[str] = []
        _write_json(body, out)
        out.append("\n")
        return "".join(out).encode("utf-8")

    @classmethod
    def load(cls, path) -> "RunArtifact":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ArtifactError(f"{path}: not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ArtifactError(f"{path}: expected a JSON object")
        version = raw.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ArtifactError(
                f"{path}: unknown schema_version {version!r} (expected {SCHEMA_VERSION})"
            )
        try:
            artifact = cls(
                schema_version=version,
                config=raw["config"],
                dataset_hash=int(raw["dataset_hash"], 16),
                strategies=tuple(raw["strategies"]),
                predictions=np.asarray(raw["predictions"], dtype=np.float64),
                queried_indices=np.asarray(raw["queried_indices"], dtype=np.int64),
                queried_labels=np.asarray(raw["queried_labels"], dtype=np.float64),
                mse=np.asarray(raw["mse"], dtype=np.float64),
                test_labels=np.asarray(raw["test_labels"], dtype=np.float64),
                pc_coords=np.asarray(raw["pc_coords"], dtype=np.float64),
                pc_explained_variance=np.asarray(raw["pc_explained_variance"], dtype=np.float64),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ArtifactError(f"{path}: malformed artifact: {exc}") from None
        if artifact.queried_indices.size == 0:
            artifact.queried_indices = artifact.queried_indices.reshape(
                len(artifact.strategies), artifact.num_batches, 0
            )
            artifact.queried_labels = artifact.queried_labels.reshape(
                artifact.queried_indices.shape
            )
        artifact.validate()
        return artifact


def _write_json(obj, out: list[str]) -> None:
    """Minimal serializer with deterministic bytes and .17g floats."""
    if isinstance(obj, dict):
        out.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _write_json(value, out)
        out.append("}")
    elif isinstance(obj, np.ndarray):
        _write_json(obj.tolist(), out)
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, value in enumerate(obj):
            if i:
                out.append(",")
            _write_json(value, out)
        out.append("]")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            raise ValueError("refusing to serialize non-finite float")
        out.append(format(value, ".17g"))
    elif obj is None:
        out.append("null")
    else:
        raise TypeError(f"cannot serialize {type(obj)}")


def mse(predictions, truths) -> float:
    """Mean squared error between two equal-length vectors."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(truths, dtype=np.float64)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("mse of empty vectors is undefined")
    return float(np.mean(np.square(p - t)))


def select_batch_rn(unlabeled: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample of k unlabeled pool indices without replacement."""
    unlabeled = np.asarray(unlabeled, dtype=np.int64)
    if unlabeled.size < k:
        raise ValueError(f"cannot draw {k} from {unlabeled.size} unlabeled points")
    return rng.choice(unlabeled, size=k, replace=False)


def select_batch_uc(
    stats: tree.LeafStats, pool_slots: np.ndarray, unlabeled: np.ndarray, k: int
) -> np.ndarray:
    """Top-k unlabeled points by leaf std (count < 2 fallback applies).

    Ties break by ascending pool index, which makes the cold start (all
    scores equal) deterministic.
    """
    unlabeled = np.asarray(unlabeled, dtype=np.int64)
    if unlabeled.size < k:
        raise ValueError(f"cannot draw {k} from {unlabeled.size} unlabeled points")
    scores = stats.std_with_fallback()[pool_slots[unlabeled]]
    order = np.lexsort((unlabeled, -scores))
    return unlabeled[order[:k]]


def largest_remainder(weights: np.ndarray, total: int, tie_ids: np.ndarray) -> np.ndarray:
    """Apportion `total` seats proportional to weights; ties by ascending id."""
    weights = np.asarray(weights, dtype=np.float64)
    shares = total * weights / weights.sum()
    base = np.floor(shares).astype(np.int64)
    leftover = total - int(base.sum())
    if leftover > 0:
        remainders = shares - base
        order = np.lexsort((tie_ids, -remainders))
        base[order[:leftover]] += 1
    return base


def neyman_quotas(
    weights: np.ndarray, avail: np.ndarray, k: int, mass: np.ndarray | None = None
) -> np.ndarray:
    """Per-leaf quotas: largest-remainder on mass*std weights, capped by
    availability, with excess reapportioned by the same rule.

    Falls back to pool-mass weights (then uniform) whenever the candidate
    weights sum to zero.
    """
    weights = np.asarray(weights, dtype=np.float64)
    avail = np.asarray(avail, dtype=np.int64)
    if avail.sum() < k:
        raise ValueError(f"only {avail.sum()} points available for quota {k}")
    quotas = np.zeros(len(weights), dtype=np.int64)
    remaining = k
    while remaining > 0:
        cap = avail - quotas
        open_ids = np.nonzero(cap > 0)[0]
        w = weights[open_ids]
        if w.sum() <= 0 and mass is not None:
            w = mass[open_ids]
        if w.sum() <= 0:
            w = np.ones(open_ids.size)
        alloc = largest_remainder(w, remaining, open_ids)
        alloc = np.minimum(alloc, cap[open_ids])
        quotas[open_ids] += alloc
        remaining -= int(alloc.sum())
    return quotas


def select_batch_al(
    stats: tree.LeafStats,
    pool_slots: np.ndarray,
    unlabeled: np.ndarray,
    k: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Variance-based allocation: leaf weight = pool_mass * std, quotas by
    largest remainder, uniform sampling without replacement inside leaves."""
    unlabeled = np.asarray(unlabeled, dtype=np.int64)
    if unlabeled.size < k:
        raise ValueError(f"cannot draw {k} from {unlabeled.size} unlabeled points")
    slots = pool_slots[unlabeled]
    n_leaves = stats.pool_mass.shape[0]
    avail = np.bincount(slots, minlength=n_leaves)
    weights = stats.pool_mass * stats.std_with_fallback()
    quotas = neyman_quotas(weights, avail, k, mass=stats.pool_mass)
    picks = []
    for slot in np.nonzero(quotas)[0]:
        members = unlabeled[slots == slot]
        picks.append(rng.choice(members, size=int(quotas[slot]), replace=False))
    return np.concatenate(picks) if picks else np.empty(0, dtype=np.int64)


def _select(name, stats, pool_slots, unlabeled, k, rng):
    if name == "rn":
        return select_batch_rn(unlabeled, k, rng)
    if name == "uc":
        return select_batch_uc(stats, pool_slots, unlabeled, k)
    if name == "al":
        return select_batch_al(stats, pool_slots, unlabeled, k, rng)
    raise ValueError(f"unknown strategy {name!r}")


def run_experiment(config: ExperimentConfig, dataset: Dataset) -> RunArtifact:
    """Run the full experiment for every configured strategy.

    All strategies share one partition (it is label-independent, so sharing
    isolates the strategy comparison from partition lottery); each owns its
    leaf stats and an rng seeded seed XOR canonical-strategy-index.  The
    oracle is the stored pool label.
    """
    config.validate(dataset.n)
    pool, test = split(dataset, config.split)

    if config.standardize_features:
        scaler = Scaler.fit(pool.features)
        pool_X = scaler.transform(pool.features)
        test_X = scaler.transform(test.features)
    else:
        pool_X = pool.features
        test_X = test.features

    partition = tree.build_partition(
        pool_X, lifetime=config.lifetime, max_depth=config.max_depth, seed=config.seed
    )
    pool_slots = partition.leaf_slots(pool_X)
    test_slots = partition.leaf_slots(test_X)

    S = len(config.strategies)
    Q = config.num_batches
    B = config.batch_size
    n_test = test.n
    predictions = np.zeros((S, Q + 1, n_test), dtype=np.float64)
    queried_indices = np.zeros((S, Q, B), dtype=np.int64)
    queried_labels = np.zeros((S, Q, B), dtype=np.float64)
    mse_curve = np.zeros((S, Q + 1), dtype=np.float64)

    for si, name in enumerate(config.strategies):
        rng = np.random.default_rng(config.seed ^ STRATEGY_INDEX[name])
        stats = tree.LeafStats.empty(partition, pool_X)
        unlabeled_mask = np.ones(pool.n, dtype=bool)

        predictions[si, 0] = tree.predict_slots(partition, stats, test_slots)
        mse_curve[si, 0] = mse(predictions[si, 0], test.labels)
        for q in range(1, Q + 1):
            unlabeled = np.nonzero(unlabeled_mask)[0]
            batch = _select(name, stats, pool_slots, unlabeled, B, rng)
            unlabeled_mask[batch] = False
            stats.add(pool_slots[batch], pool.labels[batch])
            queried_indices[si, q - 1] = batch
            queried_labels[si, q - 1] = pool.labels[batch]
            predictions[si, q] = tree.predict_slots(partition, stats, test_slots)
            mse_curve[si, q] = mse(predictions[si, q], test.labels)

    pc_model = embedding.pca_fit(test.features, standardize=config.standardize_embedding)
    pc_coords = embedding.project(pc_model, test.features)

    config_echo = config.to_dict()
    config_echo["source_id"] = dataset.source_id
    artifact = RunArtifact(
        schema_version=SCHEMA_VERSION,
        config=config_echo,
        dataset_hash=dataset.content_hash,
        strategies=tuple(config.strategies),
        predictions=predictions,
        queried_indices=queried_indices,
        queried_labels=queried_labels,
        mse=mse_curve,
        test_labels=test.labels.copy(),
        pc_coords=pc_coords,
        pc_explained_variance=pc_model.explained_variance_ratio.copy(),
    )
    artifact.validate()
    return artifact
