"""Wiring between piano-roll sequences and the three model kinds.

One frame of the task is: given the piano frame P(t) (88 keys) and the last
``n_past`` orchestral frames O(t-n_past) .. O(t-1) (each ``orchestra_dim``
wide, oldest first), produce the orchestral frame O(t).  The three kinds
consume those pieces differently:

* plain RBM      — one joint visible vector [P(t), history, O(t)]; projection
                   clamps everything except the trailing O(t) block and
                   inpaints it;
* conditional    — visible = O(t), context x = [P(t), history];
* factored gated — visible = O(t), context x = history, features z = P(t).

History before the start of a piece is silence (all-zero frames), so frame 0
is already a usable training pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models.base import SamplingConfig, binarize
from .models.serialize import ModelBundle
from .pianoroll import PIANO_DIM, PianoRoll, StateSequence, piano_states
from .validation import ensure_rng

KINDS = ("rbm", "crbm", "fgcrbm")


def expected_dims(kind: str, orchestra_dim: int, n_past: int) -> dict[str, int]:
    """The unit counts a model must have to serve this task shape."""
    if orchestra_dim < 1:
        raise ValueError("orchestra_dim must be >= 1")
    if n_past < 0:
        raise ValueError("n_past must be >= 0")
    if kind == "rbm":
        return {"n_visible": PIANO_DIM + (n_past + 1) * orchestra_dim}
    if kind == "crbm":
        return {
            "n_visible": orchestra_dim,
            "n_context": PIANO_DIM + n_past * orchestra_dim,
        }
    if kind == "fgcrbm":
        if n_past < 1:
            raise ValueError("factored gated models need n_past >= 1 (context is history)")
        return {
            "n_visible": orchestra_dim,
            "n_context": n_past * orchestra_dim,
            "n_features": PIANO_DIM,
        }
    raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")


def check_bundle_wiring(bundle: ModelBundle) -> None:
    """Raise if a bundle's model dims don't fit its layout/n_past wiring."""
    expected = expected_dims(bundle.kind, bundle.orchestra_dim, bundle.n_past)
    actual = {name: getattr(bundle.model, f"{name}_") for name in expected}
    if expected != actual:
        raise ValueError(
            f"{bundle.kind} model dims {actual} do not match task wiring "
            f"{expected} (orchestra_dim={bundle.orchestra_dim}, n_past={bundle.n_past})"
        )


def rbm_free_mask(orchestra_dim: int, n_past: int) -> np.ndarray:
    """For the joint-visible kind: True on the trailing current-frame block."""
    n_visible = expected_dims("rbm", orchestra_dim, n_past)["n_visible"]
    mask = np.zeros(n_visible, dtype=bool)
    mask[n_visible - orchestra_dim :] = True
    return mask


def _history_matrix(orch: np.ndarray, n_past: int) -> np.ndarray:
    """Row t = [O(t-n_past), ..., O(t-1)] flattened, silence before the start."""
    n, dim = orch.shape
    if n_past == 0:
        return np.zeros((n, 0))
    padded = np.vstack([np.zeros((n_past, dim)), orch])
    blocks = [padded[n_past - j : n_past - j + n] for j in range(n_past, 0, -1)]
    return np.concatenate(blocks, axis=1)


@dataclass
class TrainingPairs:
    """Model-ready arrays for one corpus slice, one row per kept frame."""

    kind: str
    times: np.ndarray  # frame indices the rows came from
    v: np.ndarray
    x: np.ndarray | None
    z: np.ndarray | None

    @property
    def n_rows(self) -> int:
        return self.v.shape[0]

    def subset(self, idx) -> "TrainingPairs":
        return TrainingPairs(
            kind=self.kind,
            times=self.times[idx],
            v=self.v[idx],
            x=None if self.x is None else self.x[idx],
            z=None if self.z is None else self.z[idx],
        )


def make_training_pairs(
    kind: str,
    piano: np.ndarray,
    orchestra: np.ndarray,
    n_past: int,
    granularity: str = "frame",
    include_first: bool = True,
) -> TrainingPairs:
    """Turn one aligned (piano, orchestra) state pair into model inputs.

    ``granularity="frame"`` keeps every time step; ``"event"`` keeps only the
    steps where the orchestral state changes (frame 0 counting as an event
    when ``include_first``).
    """
    piano = np.asarray(piano, dtype=np.float64)
    orchestra = np.asarray(orchestra, dtype=np.float64)
    if piano.ndim != 2 or piano.shape[1] != PIANO_DIM:
        raise ValueError(f"piano states must be (T, {PIANO_DIM}), got {piano.shape}")
    if orchestra.ndim != 2 or orchestra.shape[0] != piano.shape[0]:
        raise ValueError("piano and orchestra must have the same frame count")
    dims = expected_dims(kind, orchestra.shape[1], n_past)  # validates kind/n_past
    n = piano.shape[0]
    if granularity == "frame":
        keep = np.arange(n)
    elif granularity == "event":
        changed = np.ones(n, dtype=bool)
        changed[1:] = (orchestra[1:] != orchestra[:-1]).any(axis=1)
        changed[0] = include_first
        keep = np.flatnonzero(changed)
    else:
        raise ValueError(f"unknown granularity {granularity!r}")
    hist = _history_matrix(orchestra, n_past)
    if kind == "rbm":
        v = np.concatenate([piano, hist, orchestra], axis=1)
        x = z = None
    elif kind == "crbm":
        v = orchestra
        x = np.concatenate([piano, hist], axis=1)
        z = None
    else:
        v = orchestra
        x = hist
        z = piano
    assert v.shape[1] == dims["n_visible"]
    return TrainingPairs(
        kind=kind,
        times=keep.astype(np.int64),
        v=v[keep],
        x=None if x is None else x[keep],
        z=None if z is None else z[keep],
    )


def predict_frames(
    model,
    piano: np.ndarray,
    history: np.ndarray,
    config: SamplingConfig,
    rng=None,
) -> np.ndarray:
    """Generate orchestral frames for a batch of (piano, history) rows.

    ``history`` rows are the flattened oldest-first past, ``n_past *
    orchestra_dim`` wide.  Returns float rows: binary samples or mean-field
    means depending on ``config.output_mode``.
    """
    piano = np.atleast_2d(np.asarray(piano, dtype=np.float64))
    history = np.atleast_2d(np.asarray(history, dtype=np.float64))
    if piano.shape[0] != history.shape[0]:
        raise ValueError("piano and history batch sizes disagree")
    if piano.shape[1] != PIANO_DIM:
        raise ValueError(f"piano rows must be {PIANO_DIM} wide")
    if model.kind == "rbm":
        dim = model.n_visible_ - piano.shape[1] - history.shape[1]
        if dim < 1:
            raise ValueError("history width does not fit the model's visible layer")
        values = np.concatenate(
            [piano, history, np.zeros((piano.shape[0], dim))], axis=1
        )
        mask = np.zeros(model.n_visible_, dtype=bool)
        mask[-dim:] = True
        out = model.generate_inpaint(values, mask, config, rng=rng)
        out = np.atleast_2d(out)
        return out[:, -dim:]
    if model.kind == "crbm":
        x = np.concatenate([piano, history], axis=1)
        return np.atleast_2d(model.generate(x, config, rng=rng))
    if model.kind == "fgcrbm":
        return np.atleast_2d(model.generate(history, piano, config, rng=rng))
    raise ValueError(f"unknown model kind {model.kind!r}")


def teacher_forced_predict(
    bundle: ModelBundle,
    piano: np.ndarray,
    orchestra: np.ndarray,
    config: SamplingConfig | None = None,
    rng=None,
) -> np.ndarray:
    """Predict every frame given the *true* past orchestra; returns (T, D) uint8.

    This is the evaluation-side projection: each frame is conditioned on what
    the orchestra actually played before it, so errors don't compound.
    """
    check_bundle_wiring(bundle)
    config = bundle.sampling if config is None else config
    piano = np.asarray(piano, dtype=np.float64)
    orchestra = np.asarray(orchestra, dtype=np.float64)
    if piano.shape[0] != orchestra.shape[0]:
        raise ValueError("piano and orchestra must have the same frame count")
    hist = _history_matrix(orchestra, bundle.n_past)
    rng = config.rng() if rng is None else ensure_rng(rng)
    out = predict_frames(bundle.model, piano, hist, config, rng=rng)
    if config.output_mode == "mean-field":
        return binarize(out, config.threshold)
    return out.astype(np.uint8)


def project_score(
    bundle: ModelBundle,
    piano,
    config: SamplingConfig | None = None,
    rng=None,
) -> StateSequence:
    """Project a piano score onto the orchestra, closed loop.

    The model hears only its *own* past output: history starts as silence and
    each generated frame (binarized) is pushed into the ring.  ``piano`` may
    be a PianoRoll (requantized to the bundle's grid if needed) or a ready
    (T, 88) binary state array.
    """
    check_bundle_wiring(bundle)
    config = bundle.sampling if config is None else config
    if isinstance(piano, PianoRoll):
        if piano.quantization != bundle.quantization:
            piano = piano.requantize(bundle.quantization)
        states = piano_states(piano)
    else:
        states = np.asarray(piano)
        if states.ndim != 2 or states.shape[1] != PIANO_DIM:
            raise ValueError(f"piano states must be (T, {PIANO_DIM})")
    states = states.astype(np.float64)
    rng = config.rng() if rng is None else ensure_rng(rng)
    dim = bundle.orchestra_dim
    n_past = bundle.n_past
    history = np.zeros((max(n_past, 1), dim))
    frames = np.zeros((states.shape[0], dim), dtype=np.uint8)
    for t in range(states.shape[0]):
        hist_row = history[-n_past:].reshape(1, -1) if n_past else np.zeros((1, 0))
        out = predict_frames(bundle.model, states[t : t + 1], hist_row, config, rng=rng)
        frame = binarize(out[0], config.threshold) if config.output_mode == "mean-field" else out[0].astype(np.uint8)
        frames[t] = frame
        if n_past:
            history = np.vstack([history[1:], frame.astype(np.float64)])
    return StateSequence(
        states=frames, quantization=bundle.quantization, layout=bundle.layout
    )
