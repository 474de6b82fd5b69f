"""Quantisation of kernel activation norms into {1, -1} truth values.

A kernel counts as active on a sample when its activation norm strictly
exceeds a kernel-specific threshold, defined as the mean norm over the
training split.  The network's output neurons are treated as 1x1 kernels:
their truth value is the one-hot of the class the original model predicted.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Iterable, Mapping

import numpy as np

from .errors import DataError

if TYPE_CHECKING:
    from .dataset import Dataset

# Reserved name of the virtual output layer (class predictions, not norms).
OUTPUT_LAYER = "output"


def l1_norm(activation) -> float:
    """Sum of absolute values of an activation map."""
    a = np.asarray(activation, dtype=np.float64)
    if not np.isfinite(a).all():
        raise DataError("non-finite activation")
    return float(np.abs(a).sum())


def compute_thresholds(norms, train_idx) -> np.ndarray:
    """Per-kernel mean norm over the training rows, as float64.

    Rows are accumulated in ascending index order so results do not depend
    on how the caller ordered the split.
    """
    norms = np.asarray(norms)
    if norms.ndim != 2:
        raise DataError("norm matrix must be 2-D")
    idx = np.asarray(list(train_idx), dtype=np.int64)
    if idx.size == 0:
        raise DataError("empty training split")
    if idx.min() < 0 or idx.max() >= norms.shape[0]:
        raise DataError("training index out of range")
    idx = np.sort(idx)
    return norms[idx].astype(np.float64, copy=False).mean(axis=0)


def quantise(norms, thresholds) -> np.ndarray:
    """Map a norm matrix to {1, -1}: 1 where norm > threshold (strict)."""
    norms = np.asarray(norms)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if norms.ndim != 2 or thresholds.ndim != 1 or norms.shape[1] != thresholds.shape[0]:
        raise DataError(
            f"shape mismatch: norms {norms.shape} vs thresholds {thresholds.shape}"
        )
    return np.where(norms > thresholds, 1, -1).astype(np.int8)


def binarise_dataset(d: "Dataset", layers: Iterable[str]) -> Mapping[str, np.ndarray]:
    """Bit matrices for the named layers, over all samples.

    Convolutional layers are thresholded at their training-split mean; the
    "output" layer gets the one-hot (in {1, -1}) of the teacher predictions.
    """
    train = d.split("train")
    out: dict[str, np.ndarray] = {}
    for name in layers:
        if name in out:
            continue
        if name == OUTPUT_LAYER:
            n = d.n_samples
            k = len(d.manifest.class_names)
            bits = np.full((n, k), -1, dtype=np.int8)
            bits[np.arange(n), d.teacher] = 1
        elif name in d.norms:
            theta = compute_thresholds(d.norms[name], train)
            bits = quantise(d.norms[name], theta)
        else:
            raise DataError(f"unknown layer {name!r}")
        out[name] = bits
    return out
