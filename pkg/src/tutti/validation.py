"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numbers

import numpy as np


def ensure_rng(seed_or_rng=None) -> np.random.Generator:
    """Return a numpy Generator from a seed, seed sequence, Generator or None."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def as_binary_array(arr, name: str = "array", ndim: int | None = None) -> np.ndarray:
    """Coerce to float64 and check that every entry is exactly 0 or 1."""
    out = np.asarray(arr, dtype=np.float64)
    if ndim is not None and out.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got {out.ndim}")
    if out.size and not np.all((out == 0.0) | (out == 1.0)):
        raise ValueError(f"{name} must contain only 0/1 entries")
    return out


def as_batch(arr, dim: int | None, name: str) -> tuple[np.ndarray, bool]:
    """Coerce a vector or a stack of vectors to a 2-d float batch.

    ``dim=None`` accepts any width (used before a model learns its size).
    Returns the batch and a flag telling whether the input was a single vector,
    so callers can squeeze their output back to the input's shape.
    """
    out = np.asarray(arr, dtype=np.float64)
    single = out.ndim == 1
    if single:
        out = out[np.newaxis, :]
    if out.ndim != 2:
        raise ValueError(f"{name} must be a vector or a matrix, got ndim={out.ndim}")
    if dim is not None and out.shape[1] != dim:
        raise ValueError(f"{name} has dimension {out.shape[1]}, expected {dim}")
    return out, single


def check_finite(arr: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr
