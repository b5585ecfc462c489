"""Piano-roll score containers and the operations that turn scores into model-ready state sequences.

A piano-roll is a pitch-by-time matrix of note intensities (0 = note off), one
per instrument part.  An orchestra is represented by concatenating the per-part
rolls along the pitch axis after trimming pitches that the corpus never plays;
the resulting coordinate order is fixed by an :class:`OrchestraLayout` and is
part of any trained model's contract.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .validation import check_positive_int

# The 88-key piano keyboard, A0..C8.
PIANO_LOW = 21
PIANO_HIGH = 108
PIANO_DIM = PIANO_HIGH - PIANO_LOW + 1

PIANO_PART_NAME = "piano"


@dataclass
class PianoRoll:
    """One instrument part as a pitch x time intensity matrix.

    ``frames[i, t]`` is the intensity (0..127, 0 = off) of ``pitches[i]`` at
    frame ``t``; ``quantization`` is the number of frames per quarter note.
    """

    pitches: tuple[int, ...]
    frames: np.ndarray
    quantization: int
    label: str = ""

    def __post_init__(self):
        self.pitches = tuple(int(p) for p in self.pitches)
        self.frames = np.asarray(self.frames, dtype=np.int16)
        if self.frames.ndim != 2:
            raise ValueError("frames must be a 2-d matrix (pitches x time)")
        if self.frames.shape[0] != len(self.pitches):
            raise ValueError(
                f"frames has {self.frames.shape[0]} rows for {len(self.pitches)} pitches"
            )
        if any(p < 0 or p > 127 for p in self.pitches):
            raise ValueError("pitches must be MIDI numbers in 0..127")
        if any(b >= a for a, b in zip(self.pitches[1:], self.pitches)):
            raise ValueError("pitches must be strictly increasing")
        if self.frames.size and (self.frames.min() < 0 or self.frames.max() > 127):
            raise ValueError("intensities must lie in 0..127")
        self.quantization = check_positive_int(self.quantization, "quantization")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[1]

    def active_pitches(self) -> tuple[int, ...]:
        """Pitches that sound at least once."""
        if self.frames.size == 0:
            return ()
        mask = (self.frames > 0).any(axis=1)
        return tuple(p for p, m in zip(self.pitches, mask) if m)

    def pad_to(self, n_frames: int) -> "PianoRoll":
        """Right-pad with silence up to ``n_frames`` (no-op if already long enough)."""
        if self.n_frames >= n_frames:
            return self
        padded = np.zeros((len(self.pitches), n_frames), dtype=np.int16)
        padded[:, : self.n_frames] = self.frames
        return PianoRoll(self.pitches, padded, self.quantization, self.label)

    def requantize(self, quantization: int) -> "PianoRoll":
        """Re-sample to a new frames-per-quarter value.

        Only integer refinements (frame duplication) and integer coarsenings
        (frame striding) are supported; anything else would need fractional
        resampling and is rejected.
        """
        quantization = check_positive_int(quantization, "quantization")
        if quantization == self.quantization:
            return self
        if quantization % self.quantization == 0:
            k = quantization // self.quantization
            frames = np.repeat(self.frames, k, axis=1)
        elif self.quantization % quantization == 0:
            k = self.quantization // quantization
            frames = self.frames[:, ::k]
        else:
            raise ValueError(
                f"cannot requantize from Q={self.quantization} to Q={quantization}: "
                "not an integer factor"
            )
        return PianoRoll(self.pitches, frames, quantization, self.label)


@dataclass(frozen=True)
class OrchestraLayout:
    """Ordered instrument parts with the pitch subset kept for each.

    The concatenation order of the parts (and of the kept pitches inside each
    part) defines the meaning of every orchestra state vector, so a layout is
    serialized together with any trained model.
    """

    parts: tuple[tuple[str, tuple[int, ...]], ...]

    def __post_init__(self):
        names = [name for name, _ in self.parts]
        if len(set(names)) != len(names):
            raise ValueError("duplicate part names in layout")

    @property
    def total_dim(self) -> int:
        return sum(len(pitches) for _, pitches in self.parts)

    @property
    def part_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.parts)

    def kept_pitches(self, part: str) -> tuple[int, ...]:
        for name, pitches in self.parts:
            if name == part:
                return pitches
        raise KeyError(f"unknown part {part!r}")

    def part_slices(self) -> dict[str, slice]:
        """Vector segment occupied by each part, in layout order."""
        slices = {}
        start = 0
        for name, pitches in self.parts:
            slices[name] = slice(start, start + len(pitches))
            start += len(pitches)
        return slices

    def vector_to_parts(self, state: np.ndarray) -> dict[str, list[int]]:
        """Map an orchestra state vector to {part: [active pitches]}."""
        state = np.asarray(state)
        if state.shape != (self.total_dim,):
            raise ValueError(
                f"state has shape {state.shape}, layout expects ({self.total_dim},)"
            )
        out: dict[str, list[int]] = {}
        for (name, pitches), sl in zip(self.parts, self.part_slices().values()):
            seg = state[sl]
            out[name] = [p for p, on in zip(pitches, seg) if on > 0]
        return out

    def parts_to_vector(self, active: dict[str, list[int]]) -> np.ndarray:
        """Inverse of :meth:`vector_to_parts`; unknown pitches are dropped."""
        state = np.zeros(self.total_dim, dtype=np.uint8)
        slices = self.part_slices()
        for name, pitches in self.parts:
            wanted = set(active.get(name, ()))
            if not wanted:
                continue
            seg = state[slices[name]]
            for i, p in enumerate(pitches):
                if p in wanted:
                    seg[i] = 1
        return state

    def to_dict(self) -> dict:
        return {"parts": [{"name": n, "pitches": list(p)} for n, p in self.parts]}

    @classmethod
    def from_dict(cls, data: dict) -> "OrchestraLayout":
        return cls(
            tuple((p["name"], tuple(int(x) for x in p["pitches"])) for p in data["parts"])
        )


@dataclass
class StateSequence:
    """Time-ordered binary state vectors for a piano (dim 88) or an orchestra (dim D)."""

    states: np.ndarray
    quantization: int
    layout: OrchestraLayout | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.uint8)
        if self.states.ndim != 2:
            raise ValueError("states must be a (time, dim) matrix")
        if self.states.size and self.states.max() > 1:
            raise ValueError("states must be binary")
        self.quantization = check_positive_int(self.quantization, "quantization")
        if self.layout is not None and self.states.shape[1] != self.layout.total_dim:
            raise ValueError(
                f"state dimension {self.states.shape[1]} does not match layout "
                f"dimension {self.layout.total_dim}"
            )

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def upsample(self, k: int) -> "StateSequence":
        """Duplicate every frame ``k`` times (quantization refinement)."""
        k = check_positive_int(k, "k")
        return StateSequence(
            np.repeat(self.states, k, axis=0), self.quantization * k, self.layout
        )

    def downsample(self, k: int) -> "StateSequence":
        """Keep every ``k``-th frame (quantization coarsening)."""
        k = check_positive_int(k, "k")
        if self.quantization % k != 0:
            raise ValueError(f"Q={self.quantization} is not divisible by {k}")
        return StateSequence(self.states[::k], self.quantization // k, self.layout)


@dataclass
class EventSequence:
    """States at the frame indices where the sequence changes."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)
        self.states = np.asarray(self.states, dtype=np.uint8)
        if self.times.ndim != 1 or self.states.ndim != 2:
            raise ValueError("times must be 1-d and states 2-d")
        if len(self.times) != self.states.shape[0]:
            raise ValueError("times and states disagree on event count")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("event times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)


def extract_events(seq: StateSequence, include_first: bool = True) -> EventSequence:
    """Keep every frame whose state differs from its predecessor.

    Frame 0 has no predecessor; it is kept iff ``include_first`` (default on:
    the opening state must be predicted like any other).
    """
    states = seq.states
    if len(states) == 0:
        raise ValueError("cannot extract events from an empty sequence")
    changed = np.any(states[1:] != states[:-1], axis=1)
    idx = np.flatnonzero(changed) + 1
    if include_first:
        idx = np.concatenate(([0], idx))
    return EventSequence(idx, states[idx])


def build_layout(
    corpus: list[list[PianoRoll]], part_order: list[str] | None = None
) -> OrchestraLayout:
    """Derive an :class:`OrchestraLayout` from orchestra parts seen in a corpus.

    For each part, only pitches played at least once anywhere in the corpus are
    kept.  Part order is the order of first appearance (or ``part_order`` when
    given); the result is a pure function of corpus content and part order.
    """
    if not corpus:
        raise ValueError("cannot build a layout from an empty corpus")
    seen: dict[str, set[int]] = {}
    order: list[str] = []
    for rolls in corpus:
        for roll in rolls:
            if roll.label not in seen:
                seen[roll.label] = set()
                order.append(roll.label)
            seen[roll.label].update(roll.active_pitches())
    if part_order is not None:
        unknown = [p for p in order if p not in part_order]
        if unknown:
            raise ValueError(f"corpus contains parts missing from part_order: {unknown}")
        order = list(part_order)
        for name in order:
            seen.setdefault(name, set())
    for name in order:
        if not seen[name]:
            warnings.warn(
                f"part {name!r} is never played in the corpus; keeping it with an "
                "empty pitch range"
            )
    return OrchestraLayout(tuple((name, tuple(sorted(seen[name]))) for name in order))


def piano_states(roll: PianoRoll) -> np.ndarray:
    """Binarize a piano part onto the 88-key vector (A0..C8), clipping outliers."""
    states = np.zeros((roll.n_frames, PIANO_DIM), dtype=np.uint8)
    dropped = []
    for i, pitch in enumerate(roll.pitches):
        if pitch < PIANO_LOW or pitch > PIANO_HIGH:
            if np.any(roll.frames[i] > 0):
                dropped.append(pitch)
            continue
        states[:, pitch - PIANO_LOW] = roll.frames[i] > 0
    if dropped:
        warnings.warn(f"piano pitches outside the 88-key range were clipped: {dropped}")
    return states


def orchestra_states(parts: list[PianoRoll], layout: OrchestraLayout) -> np.ndarray:
    """Binarize orchestra parts onto the layout's concatenated vector.

    Pitches absent from the layout are dropped; parts absent from a score
    contribute silence.
    """
    n_frames = max((p.n_frames for p in parts), default=0)
    states = np.zeros((n_frames, layout.total_dim), dtype=np.uint8)
    slices = layout.part_slices()
    by_name = {p.label: p for p in parts}
    for name, pitches in layout.parts:
        roll = by_name.get(name)
        if roll is None or not pitches:
            continue
        seg = states[:, slices[name]]
        pitch_pos = {p: i for i, p in enumerate(pitches)}
        for i, pitch in enumerate(roll.pitches):
            j = pitch_pos.get(pitch)
            if j is not None:
                seg[: roll.n_frames, j] = roll.frames[i] > 0
    return states


def align_pair(
    piano: PianoRoll, orchestra: list[PianoRoll], layout: OrchestraLayout
) -> tuple[StateSequence, StateSequence]:
    """Binarize and align a piano score with its orchestration.

    Both sequences are padded with silence to the longer length so no
    ground-truth material is truncated.
    """
    if piano.n_frames == 0 and all(p.n_frames == 0 for p in orchestra):
        raise ValueError("cannot align empty scores")
    qs = {piano.quantization} | {p.quantization for p in orchestra}
    if len(qs) != 1:
        raise ValueError(f"quantization mismatch between piano and orchestra: {sorted(qs)}")
    p_states = piano_states(piano)
    o_states = orchestra_states(orchestra, layout)
    n = max(len(p_states), len(o_states))
    if len(p_states) < n:
        p_states = np.vstack([p_states, np.zeros((n - len(p_states), PIANO_DIM), np.uint8)])
    if len(o_states) < n:
        o_states = np.vstack(
            [o_states, np.zeros((n - len(o_states), layout.total_dim), np.uint8)]
        )
    q = piano.quantization
    return StateSequence(p_states, q), StateSequence(o_states, q, layout)


# --- JSON piano-roll interchange format ---------------------------------------
#
# { "quantization": int,
#   "parts": [ { "name": str, "pitches": [int...], "frames": [[int...]...] } ] }
#
# frames are row-major with one row per pitch.


def parts_to_json(parts: list[PianoRoll]) -> dict:
    if not parts:
        raise ValueError("no parts to serialize")
    qs = {p.quantization for p in parts}
    if len(qs) != 1:
        raise ValueError(f"parts disagree on quantization: {sorted(qs)}")
    return {
        "quantization": parts[0].quantization,
        "parts": [
            {
                "name": p.label,
                "pitches": list(p.pitches),
                "frames": p.frames.tolist(),
            }
            for p in parts
        ],
    }


def parts_from_json(data: dict) -> list[PianoRoll]:
    try:
        q = data["quantization"]
        raw_parts = data["parts"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"not a piano-roll document: missing {exc}") from exc
    parts = []
    for raw in raw_parts:
        pitches = raw["pitches"]
        frames = np.asarray(raw["frames"], dtype=np.int16)
        if frames.size == 0:
            frames = frames.reshape(len(pitches), 0)
        parts.append(PianoRoll(tuple(pitches), frames, q, raw["name"]))
    return parts


def save_parts(parts: list[PianoRoll], path: str | Path) -> None:
    Path(path).write_text(json.dumps(parts_to_json(parts)))


def load_parts(path: str | Path) -> list[PianoRoll]:
    return parts_from_json(json.loads(Path(path).read_text()))


def split_pair(parts: list[PianoRoll]) -> tuple[PianoRoll, list[PianoRoll]]:
    """Split a score's parts into (piano, orchestra) by the ``piano`` part name."""
    piano = [p for p in parts if p.label == PIANO_PART_NAME]
    orchestra = [p for p in parts if p.label != PIANO_PART_NAME]
    if len(piano) != 1:
        raise ValueError(
            f"expected exactly one part named {PIANO_PART_NAME!r}, found {len(piano)}"
        )
    return piano[0], orchestra


def sequence_to_parts(seq: StateSequence, intensity: int = 100) -> list[PianoRoll]:
    """Turn an orchestra state sequence back into per-part piano rolls.

    Binary states carry no dynamics, so active cells all get ``intensity``.
    """
    if seq.layout is None:
        raise ValueError("sequence has no layout; cannot split into parts")
    if not 1 <= intensity <= 127:
        raise ValueError("intensity must lie in 1..127")
    parts = []
    slices = seq.layout.part_slices()
    for name, pitches in seq.layout.parts:
        seg = seq.states[:, slices[name]]
        parts.append(
            PianoRoll(
                pitches=pitches,
                frames=(seg.T > 0).astype(np.int16) * intensity,
                quantization=seq.quantization,
                label=name,
            )
        )
    return parts
