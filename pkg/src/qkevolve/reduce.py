"""Feature preprocessing: [-1, 1] standardization, SVD-based PCA, stratified
train/test splitting and ingestion of externally computed feature files.

Everything here is fitted on training rows only; test rows pass through the
fitted transforms unchanged (standardized test values may leave [-1, 1], and
no clipping is applied).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class FeatureMatrix:
    """n x d feature rows plus optional {0, 1} class labels."""

    rows: np.ndarray
    labels: np.ndarray | None = None


@dataclass(frozen=True)
class StandardizationParams:
    feature_min: np.ndarray
    feature_max: np.ndarray


def standardize_fit(train: np.ndarray) -> StandardizationParams:
    train = np.atleast_2d(np.asarray(train, dtype=float))
    if train.size == 0:
        raise ValueError("cannot fit standardization on an empty matrix")
    return StandardizationParams(train.min(axis=0), train.max(axis=0))


def standardize_apply(params: StandardizationParams, x: np.ndarray) -> np.ndarray:
    """Affine map sending the fitted per-feature [min, max] onto [-1, 1];
    constant features map to 0."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    span = params.feature_max - params.feature_min
    safe = np.where(span > 0, span, 1.0)
    out = 2.0 * (x - params.feature_min) / safe - 1.0
    return np.where(span > 0, out, 0.0)


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # r x d, orthonormal rows
    explained_variance: np.ndarray  # length r, non-increasing


def pca_fit(train: np.ndarray, r: int) -> PcaModel:
    """Top-r principal directions of the centered training rows via SVD.

    A requested r outside [1, min(n-1, d)] is clamped (with a log line) rather
    than rejected, because evolved individuals may ask for more components
    than the sample count supports. Component signs are fixed so the largest-
    magnitude loading of each component is positive, making the decomposition
    deterministic.
    """
    train = np.atleast_2d(np.asarray(train, dtype=float))
    n, d = train.shape
    if n < 2:
        raise ValueError("PCA requires at least two training rows")
    r_max = min(n - 1, d)
    r_eff = int(min(max(1, r), r_max))
    if r_eff != r:
        log.warning("clamped PCA components from %d to %d (n=%d, d=%d)", r, r_eff, n, d)
    mean = train.mean(axis=0)
    centered = train - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:r_eff]
    flip = np.where(components[np.arange(r_eff), np.abs(components).argmax(axis=1)] < 0, -1.0, 1.0)
    components = components * flip[:, None]
    explained = (singular[:r_eff] ** 2) / (n - 1)
    return PcaModel(mean=mean, components=components, explained_variance=explained)


def pca_transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.mean.size:
        raise ValueError(
            f"dimension mismatch: PCA was fitted on {model.mean.size} features, got {x.shape[1]}"
        )
    return (x - model.mean) @ model.components.T


def pca_slice(model: PcaModel, r: int) -> PcaModel:
    """Truncation of a fitted model to its leading min(r, rank) components;
    identical to refitting with the smaller count."""
    r_eff = int(min(max(1, r), model.components.shape[0]))
    return PcaModel(
        mean=model.mean,
        components=model.components[:r_eff],
        explained_variance=model.explained_variance[:r_eff],
    )


def stratified_split(
    x: np.ndarray, y: np.ndarray, test_fraction: float = 0.25, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic per-class split into (train_indices, test_indices).

    The test set receives floor(n * test_fraction) samples: floor(n_c * f) per
    class, with any remainder handed out one by one starting from the largest
    class. Per-class proportions therefore stay within one sample of exact.
    """
    y = np.asarray(y).ravel()
    x = np.asarray(x)
    if x.shape[0] != y.size:
        raise ValueError("feature rows and labels disagree in length")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    classes, counts = np.unique(y, return_counts=True)
    if classes.size < 2:
        raise ValueError("stratified split requires at least two classes")
    if counts.min() < 2:
        raise ValueError("every class needs at least two samples")

    target = int(np.floor(y.size * test_fraction))
    per_class = {c: int(np.floor(cnt * test_fraction)) for c, cnt in zip(classes, counts)}
    remainder = target - sum(per_class.values())
    order = sorted(zip(classes, counts), key=lambda t: (-t[1], t[0]))
    k = 0
    while remainder > 0:
        c, cnt = order[k % len(order)]
        if per_class[c] < cnt:
            per_class[c] += 1
            remainder -= 1
        k += 1

    rng = np.random.default_rng(seed)
    test_parts, train_parts = [], []
    for c in classes:
        idx = np.flatnonzero(y == c)
        perm = rng.permutation(idx)
        test_parts.append(perm[: per_class[c]])
        train_parts.append(perm[per_class[c]:])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts))
    return train_idx, test_idx


def load_external_features(path) -> FeatureMatrix:
    """Read a feature CSV: header row, one sample per row, {0, 1} label in the
    final column (which must be named 'label'). Values are returned exactly as
    stored. Malformed rows are rejected with their row number."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty feature file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[-1].lower() != "label":
            raise ValueError(
                f"{path}: header must list at least one feature column and end with 'label'"
            )
        width = len(header)
        rows, labels = [], []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != width:
                raise ValueError(
                    f"{path}: row {row_no}: expected {width} columns, found {len(row)}"
                )
            try:
                rows.append([float(v) for v in row[:-1]])
            except ValueError:
                raise ValueError(f"{path}: row {row_no}: non-numeric feature value") from None
            label_text = row[-1].strip()
            if label_text not in ("0", "1"):
                raise ValueError(
                    f"{path}: row {row_no}: unknown label {label_text!r} (expected 0 or 1)"
                )
            labels.append(int(label_text))
    if not rows:
        raise ValueError(f"{path}: feature file has no data rows")
    return FeatureMatrix(rows=np.asarray(rows, dtype=float), labels=np.asarray(labels, dtype=int))
