"""Prediction-change matrices over a run artifact.

Three views of how test-set predictions move across the query process:
against the original (empty) model, against the previous snapshot, and
against the ground truth.  Matrices hold signed differences; the change
and improvement predicates are derived on top by check_flags.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import RunArtifact

KINDS = ("vs_original", "vs_previous", "vs_truth")
DEFAULT_EPS = 1e-12


@dataclass(frozen=True)
class ChangeMatrix:
    """k selected test points by Q batches of signed differences.

    baseline_residual carries the original model's signed residual for the
    same rows; it is only populated for vs_truth, where the improvement
    predicate needs it.
    """

    kind: str
    strategy: str
    row_indices: np.ndarray  # (k,) test indices, selection order
    q_axis: np.ndarray  # (Q,) batch numbers 1..Q
    values: np.ndarray  # (k, Q)
    baseline_residual: np.ndarray | None = None  # (k,), vs_truth only

    @property
    def k(self) -> int:
        return self.row_indices.shape[0]


def _rows(artifact: RunArtifact, strategy: str, selection) -> tuple[int, np.ndarray]:
    si = artifact.strategy_index(strategy)
    sel = np.asarray(list(selection), dtype=np.int64)
    if sel.ndim != 1:
        raise ValueError("selection must be a flat index list")
    if sel.size and (sel.min() < 0 or sel.max() >= artifact.n_test):
        raise IndexError(f"selection index out of range [0, {artifact.n_test})")
    return si, sel


def change_vs_original(artifact: RunArtifact, strategy: str, selection) -> ChangeMatrix:
    """values[i][q-1] = prediction at batch q minus the empty-model prediction."""
    si, sel = _rows(artifact, strategy, selection)
    Q = artifact.num_batches
    snaps = artifact.predictions[si][:, sel]
    return ChangeMatrix(
        kind="vs_original",
        strategy=strategy,
        row_indices=sel,
        q_axis=np.arange(1, Q + 1, dtype=np.int64),
        values=(snaps[1:] - snaps[0]).T.copy(),
    )


def change_vs_previous(artifact: RunArtifact, strategy: str, selection) -> ChangeMatrix:
    """values[i][q-1] = prediction at batch q minus prediction at batch q-1."""
    si, sel = _rows(artifact, strategy, selection)
    Q = artifact.num_batches
    snaps = artifact.predictions[si][:, sel]
    return ChangeMatrix(
        kind="vs_previous",
        strategy=strategy,
        row_indices=sel,
        q_axis=np.arange(1, Q + 1, dtype=np.int64),
        values=(snaps[1:] - snaps[:-1]).T.copy(),
    )


def change_vs_truth(artifact: RunArtifact, strategy: str, selection) -> ChangeMatrix:
    """values[i][q-1] = signed residual of the batch-q model on point i."""
    si, sel = _rows(artifact, strategy, selection)
    Q = artifact.num_batches
    snaps = artifact.predictions[si][:, sel]
    truth = artifact.test_labels[sel]
    return ChangeMatrix(
        kind="vs_truth",
        strategy=strategy,
        row_indices=sel,
        q_axis=np.arange(1, Q + 1, dtype=np.int64),
        values=(snaps[1:] - truth).T.copy(),
        baseline_residual=(snaps[0] - truth).copy(),
    )


def compute_matrix(artifact: RunArtifact, strategy: str, kind: str, selection) -> ChangeMatrix:
    if kind == "vs_original":
        return change_vs_original(artifact, strategy, selection)
    if kind == "vs_previous":
        return change_vs_previous(artifact, strategy, selection)
    if kind == "vs_truth":
        return change_vs_truth(artifact, strategy, selection)
    raise ValueError(f"unknown kind {kind!r}; choose from {KINDS}")


def check_flags(matrix: ChangeMatrix, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Boolean k x Q grid of the per-kind predicate.

    vs_original / vs_previous: the prediction moved by more than eps.
    vs_truth: the current residual beats the ORIGINAL model's residual on
    the same point by more than eps (a per-step variant would compare to
    q-1; deliberately not offered).
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if matrix.kind in ("vs_original", "vs_previous"):
        return np.abs(matrix.values) > eps
    if matrix.kind == "vs_truth":
        if matrix.baseline_residual is None:
            raise ValueError("vs_truth matrix lacks its baseline residuals")
        base = np.abs(matrix.baseline_residual)[:, None]
        return np.abs(matrix.values) < base - eps
    raise ValueError(f"unknown kind {matrix.kind!r}")


def aggregate_improvement(artifact: RunArtifact, strategy: str, selection) -> np.ndarray:
    """Sum of absolute residuals over the selection at each snapshot 0..Q."""
    si, sel = _rows(artifact, strategy, selection)
    snaps = artifact.predictions[si][:, sel]
    return np.abs(snaps - artifact.test_labels[sel]).sum(axis=1)
