"""Input validation helpers shared by estimators and metric functions."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np


def as_float_array(x, name: str = "array", dtype=np.float64) -> np.ndarray:
    arr = np.asarray(x, dtype=dtype)
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_consistent_length(*arrays) -> int:
    lengths = {len(a) for a in arrays}
    if len(lengths) != 1:
        raise ValueError(f"inconsistent lengths: {sorted(lengths)}")
    return lengths.pop()


def check_binary_labels(y, name: str = "y") -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional")
    values = set(np.unique(arr).tolist())
    if not values <= {0, 1}:
        raise ValueError(f"{name} must contain only 0/1 values, got {sorted(values)}")
    return arr.astype(np.int64)


def check_similarity_values(values, ids: Sequence[str] | None = None) -> np.ndarray:
    """Validate a square normalized-similarity matrix (symmetric, [0, 1], unit diagonal)."""
    arr = as_float_array(values, "similarity matrix")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"similarity matrix must be square, got shape {arr.shape}")
    if ids is not None and len(ids) != arr.shape[0]:
        raise ValueError(f"ids ({len(ids)}) do not match matrix size ({arr.shape[0]})")
    if arr.size:
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("similarity values must lie in [0, 1]")
        if not np.array_equal(arr, arr.T):
            raise ValueError("similarity matrix must be exactly symmetric")
        if not np.allclose(np.diag(arr), 1.0, atol=1e-12):
            raise ValueError("similarity matrix diagonal must be 1")
    return arr


def check_unique_ids(ids: Sequence[str], name: str = "ids") -> tuple[str, ...]:
    ids = tuple(str(i) for i in ids)
    if len(set(ids)) != len(ids):
        seen, dupes = set(), []
        for i in ids:
            if i in seen:
                dupes.append(i)
            seen.add(i)
        raise ValueError(f"duplicate {name}: {dupes[:5]}")
    return ids
