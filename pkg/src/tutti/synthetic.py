"""Synthetic orchestration corpora with known structure.

Two families:

* register-split — the orchestration is a pure function of the current piano
  frame (low notes go to cello+bassoon, high notes to violin+flute), so a
  conditional model that reads the piano can in principle score 100% while a
  model that ignores it cannot beat chance by much;
* sustained-chord — a slow 4-note background under a faster 2-note melody,
  built to expose how frame-level scoring flatters hold-everything
  predictors at fine time grids.

Both are written as JSON pair files (piano part plus orchestra parts) so they
flow through the exact same ingestion path as real scores.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import numpy as np

from .pianoroll import PIANO_LOW, PianoRoll, save_parts
from .validation import ensure_rng

REGISTER_PARTS = ("cello", "bassoon", "violin", "flute")
PIANO_POOL_LOW = 48  # C3
PIANO_POOL_HIGH = 71  # B4
REGISTER_SPLIT = 60  # C4: below -> low strings/winds, at or above -> high


def register_split_frame(active: Iterable[int]) -> dict[str, list[int]]:
    """The ground-truth orchestration rule for one piano frame.

    Every low piano note (< C4) is doubled by cello at pitch and bassoon an
    octave down; every high note by violin at pitch and flute an octave up.
    Silence maps to silence.
    """
    out: dict[str, set[int]] = {name: set() for name in REGISTER_PARTS}
    for pitch in active:
        if not PIANO_POOL_LOW <= pitch <= PIANO_POOL_HIGH:
            raise ValueError(
                f"pitch {pitch} outside the corpus pool "
                f"[{PIANO_POOL_LOW}, {PIANO_POOL_HIGH}]"
            )
        if pitch < REGISTER_SPLIT:
            out["cello"].add(pitch)
            out["bassoon"].add(pitch - 12)
        else:
            out["violin"].add(pitch)
            out["flute"].add(pitch + 12)
    return {name: sorted(pitches) for name, pitches in out.items()}


def _roll_from_active(
    name: str, active_per_frame: list[list[int]], quantization: int, rng
) -> PianoRoll:
    """Build a part from per-frame active pitch lists, with varied intensities."""
    pitch_set = sorted({p for frame in active_per_frame for p in frame})
    frames = np.zeros((len(pitch_set), len(active_per_frame)), dtype=np.int16)
    row = {p: i for i, p in enumerate(pitch_set)}
    velocity: dict[int, int] = {}
    for t, active in enumerate(active_per_frame):
        for p in active:
            if p not in velocity or (t > 0 and p not in active_per_frame[t - 1]):
                velocity[p] = int(rng.integers(30, 112))
            frames[row[p], t] = velocity[p]
    return PianoRoll(
        pitches=tuple(pitch_set),
        frames=frames,
        quantization=quantization,
        label=name,
    )


def _register_piano_track(frames: int, rng) -> list[list[int]]:
    """Random chord segments from the pool; both registers guaranteed to appear."""
    track: list[list[int]] = []
    segment = 0
    while len(track) < frames:
        duration = int(rng.integers(2, 7))
        if segment == 0:
            lo, hi = PIANO_POOL_LOW, REGISTER_SPLIT - 1
        elif segment == 1:
            lo, hi = REGISTER_SPLIT, PIANO_POOL_HIGH
        elif rng.random() < 0.15:
            lo = hi = None  # rest
        else:
            lo, hi = PIANO_POOL_LOW, PIANO_POOL_HIGH
        if lo is None:
            chord: list[int] = []
        else:
            size = int(rng.integers(1, 4))
            pool = np.arange(lo, hi + 1)
            chord = sorted(int(p) for p in rng.choice(pool, size=min(size, len(pool)), replace=False))
        track.extend([chord] * duration)
        segment += 1
    return track[:frames]


def make_register_corpus(
    out_dir,
    n_files: int = 40,
    frames: int = 64,
    quantization: int = 8,
    seed: int = 0,
) -> list[Path]:
    """Write a register-split corpus as pair_000.json ... and return the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n_files):
        rng = ensure_rng([seed, i])
        piano_track = _register_piano_track(frames, rng)
        orchestra_tracks: dict[str, list[list[int]]] = {
            name: [] for name in REGISTER_PARTS
        }
        for chord in piano_track:
            mapped = register_split_frame(chord)
            for name in REGISTER_PARTS:
                orchestra_tracks[name].append(mapped[name])
        parts = [_roll_from_active("piano", piano_track, quantization, rng)]
        for name in REGISTER_PARTS:
            parts.append(_roll_from_active(name, orchestra_tracks[name], quantization, rng))
        path = out_dir / f"pair_{i:03d}.json"
        save_parts(parts, path)
        paths.append(path)
    return paths


class RulePredictor:
    """Ceiling oracle for the register-split corpus: applies the rule exactly."""

    name = "rule"

    def __init__(self, layout):
        self.layout = layout

    def predict(self, piano: np.ndarray, orchestra: np.ndarray) -> np.ndarray:
        pred = np.zeros_like(orchestra)
        for t in range(piano.shape[0]):
            active = [int(i) + PIANO_LOW for i in np.flatnonzero(piano[t])]
            pred[t] = self.layout.parts_to_vector(register_split_frame(active))
        return pred


# --- sustained-chord corpus ---------------------------------------------------

SUSTAIN_CHORDS = (
    (48, 55, 60, 64),  # C
    (45, 52, 57, 60),  # Am
    (50, 57, 62, 65),  # Dm
    (43, 50, 59, 62),  # G
)
SUSTAIN_MELODY_POOL = tuple(range(72, 85))


def make_sustain_corpus(
    out_dir,
    n_files: int = 6,
    frames: int = 64,
    quantization: int = 8,
    chord_frames: int = 16,
    melody_frames: int = 4,
    seed: int = 0,
) -> list[Path]:
    """Write a sustained-chord corpus: slow 4-note pads, 4-frame melody steps.

    At the native grid most frames are pure holds; halving the grid makes
    every other frame a change; event level, every scored frame is a change.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n_files):
        rng = ensure_rng([seed, 1000 + i])
        pad: list[list[int]] = []
        melody: list[list[int]] = []
        last_pair = None
        for t in range(frames):
            if t % chord_frames == 0:
                chord = SUSTAIN_CHORDS[int(rng.integers(len(SUSTAIN_CHORDS)))]
            if t % melody_frames == 0:
                pair = sorted(
                    int(p)
                    for p in rng.choice(SUSTAIN_MELODY_POOL, size=2, replace=False)
                )
                while pair == last_pair:
                    pair = sorted(
                        int(p)
                        for p in rng.choice(SUSTAIN_MELODY_POOL, size=2, replace=False)
                    )
                last_pair = pair
            pad.append(list(chord))
            melody.append(list(pair))
        piano = [sorted(a + b) for a, b in zip(pad, melody)]
        parts = [
            _roll_from_active("piano", piano, quantization, rng),
            _roll_from_active("strings", pad, quantization, rng),
            _roll_from_active("winds", melody, quantization, rng),
        ]
        path = out_dir / f"pair_{i:03d}.json"
        save_parts(parts, path)
        paths.append(path)
    return paths
