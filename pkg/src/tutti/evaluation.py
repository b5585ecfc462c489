"""Projection accuracy: pooled precision-style scoring plus reference baselines.

The score is  100 * TP / (TP + FP + FN)  over note-on cells, micro-averaged:
tallies are pooled over all frames of all files first and divided once, so
long files weigh more than short ones and 0-denominator files don't produce
NaNs.

Two granularities:

* ``frame`` — every time step counts.  Sustained notes are rescored every
  frame, so a model that merely holds whatever is sounding looks much better
  than it is, and more so at finer quantizations.
* ``event`` — only time steps where the true orchestral state changes count
  (frame 0 included by default).  This is the honest number; the repeat
  baseline sits near zero here because at an event time the previous frame
  is, by construction, wrong somewhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .models.base import SamplingConfig
from .models.serialize import ModelBundle
from .pianoroll import OrchestraLayout, build_layout, align_pair, load_parts, split_pair
from .projection import teacher_forced_predict
from .validation import ensure_rng

GRANULARITIES = ("frame", "event")


@dataclass
class AccuracyReport:
    """Pooled confusion tallies for one predictor over one corpus."""

    model: str
    granularity: str
    quantization: int
    tp: int = 0
    fp: int = 0
    fn: int = 0
    n_frames: int = 0
    n_files: int = 0

    @property
    def accuracy_percent(self) -> float:
        denom = self.tp + self.fp + self.fn
        if denom == 0:
            # nothing played and nothing predicted: a perfect (if boring) match
            return 100.0
        return 100.0 * self.tp / denom

    def add(self, tp: int, fp: int, fn: int, n_frames: int) -> None:
        self.tp += int(tp)
        self.fp += int(fp)
        self.fn += int(fn)
        self.n_frames += int(n_frames)
        self.n_files += 1

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "granularity": self.granularity,
            "quantization": self.quantization,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "n_frames": self.n_frames,
            "n_files": self.n_files,
            "accuracy_percent": self.accuracy_percent,
        }


def confusion_counts(true: np.ndarray, pred: np.ndarray) -> tuple[int, int, int]:
    """(TP, FP, FN) over all cells of two equal-shape binary arrays."""
    true = np.asarray(true, dtype=bool)
    pred = np.asarray(pred, dtype=bool)
    if true.shape != pred.shape:
        raise ValueError(f"shape mismatch: true {true.shape} vs pred {pred.shape}")
    tp = int(np.count_nonzero(true & pred))
    fp = int(np.count_nonzero(~true & pred))
    fn = int(np.count_nonzero(true & ~pred))
    return tp, fp, fn


def event_rows(states: np.ndarray, include_first: bool = True) -> np.ndarray:
    """Indices of frames where the state changes (frame 0 iff include_first)."""
    states = np.asarray(states)
    if len(states) == 0:
        return np.zeros(0, dtype=np.int64)
    changed = np.ones(len(states), dtype=bool)
    changed[1:] = (states[1:] != states[:-1]).any(axis=1)
    changed[0] = include_first
    return np.flatnonzero(changed)


def score_pair(
    true: np.ndarray,
    pred: np.ndarray,
    granularity: str = "event",
    include_first: bool = True,
) -> tuple[int, int, int, int]:
    """(TP, FP, FN, frames scored) for one file at the given granularity.

    Event rows are taken from the *true* sequence — the moments the orchestra
    actually moved — regardless of when the prediction moved.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"granularity must be one of {GRANULARITIES}")
    true = np.asarray(true)
    pred = np.asarray(pred)
    if granularity == "event":
        rows = event_rows(true, include_first)
        true, pred = true[rows], pred[rows]
    tp, fp, fn = confusion_counts(true, pred)
    return tp, fp, fn, len(true)


# --- predictors ------------------------------------------------------------


class ModelPredictor:
    """Teacher-forced model predictions, optionally with the piano input zeroed.

    Zeroing the piano measures how much the model actually listens to it: a
    model that only extrapolates orchestral history keeps its score, one that
    genuinely reads the piano loses most of it.
    """

    def __init__(self, bundle: ModelBundle, config: SamplingConfig | None = None, corrupt_piano: bool = False):
        self.bundle = bundle
        self.config = bundle.sampling if config is None else config
        self.corrupt_piano = corrupt_piano
        self.name = bundle.kind + ("+silent-piano" if corrupt_piano else "")

    def predict(self, piano: np.ndarray, orchestra: np.ndarray) -> np.ndarray:
        if self.corrupt_piano:
            piano = np.zeros_like(piano)
        return teacher_forced_predict(self.bundle, piano, orchestra, self.config)


class RepeatBaseline:
    """Predict that the orchestra holds whatever it played one frame ago."""

    name = "repeat"

    def predict(self, piano: np.ndarray, orchestra: np.ndarray) -> np.ndarray:
        pred = np.zeros_like(orchestra)
        pred[1:] = orchestra[:-1]
        return pred


class RandomBaseline:
    """Independent fair-coin prediction for every unit of every frame."""

    def __init__(self, p: float = 0.5, seed: int = 0):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must be a probability")
        self.p = p
        self.name = "random"
        self._rng = ensure_rng(seed)

    def predict(self, piano: np.ndarray, orchestra: np.ndarray) -> np.ndarray:
        return (self._rng.random(orchestra.shape) < self.p).astype(np.uint8)


# --- corpus-level evaluation ----------------------------------------------------


def _load_corpus(paths, quantization=None):
    """[(path, piano PianoRoll, orchestra rolls)] requantized if asked."""
    loaded = []
    for path in paths:
        piano, orchestra = split_pair(load_parts(path))
        if quantization is not None and piano.quantization != quantization:
            piano = piano.requantize(quantization)
            orchestra = [p.requantize(quantization) for p in orchestra]
        loaded.append((Path(path), piano, orchestra))
    if not loaded:
        raise ValueError("no files to evaluate")
    qs = {piano.quantization for _, piano, _ in loaded}
    if len(qs) != 1:
        raise ValueError(f"files disagree on quantization: {sorted(qs)}")
    return loaded


def evaluate_corpus(
    predictor,
    paths,
    granularity: str = "event",
    quantization: int | None = None,
    layout: OrchestraLayout | None = None,
    include_first: bool = True,
) -> AccuracyReport:
    """Pool confusion tallies for ``predictor`` over JSON pair files.

    ``layout`` defaults to one built from the evaluated files themselves
    (right for baselines); model predictors must pass their bundle's layout so
    state vectors line up with what the model was trained on.
    """
    loaded = _load_corpus(paths, quantization)
    if layout is None:
        layout = build_layout([orch for _, _, orch in loaded])
    report = AccuracyReport(
        model=getattr(predictor, "name", type(predictor).__name__),
        granularity=granularity,
        quantization=loaded[0][1].quantization,
    )
    for _, piano, orchestra in loaded:
        p_seq, o_seq = align_pair(piano, orchestra, layout)
        pred = predictor.predict(p_seq.states, o_seq.states)
        tp, fp, fn, n = score_pair(o_seq.states, pred, granularity, include_first)
        report.add(tp, fp, fn, n)
    return report


def evaluate_model(
    bundle: ModelBundle,
    paths,
    granularity: str = "event",
    config: SamplingConfig | None = None,
    corrupt_piano: bool = False,
    include_first: bool = True,
) -> AccuracyReport:
    predictor = ModelPredictor(bundle, config=config, corrupt_piano=corrupt_piano)
    return evaluate_corpus(
        predictor,
        paths,
        granularity=granularity,
        quantization=bundle.quantization,
        layout=bundle.layout,
        include_first=include_first,
    )


def corrupted_piano_eval(
    bundle: ModelBundle,
    paths,
    granularity: str = "event",
    config: SamplingConfig | None = None,
) -> dict:
    """Accuracy with the real piano vs. with the piano silenced, plus the drop."""
    clean = evaluate_model(bundle, paths, granularity, config=config)
    corrupted = evaluate_model(bundle, paths, granularity, config=config, corrupt_piano=True)
    drop = 0.0
    if clean.accuracy_percent > 0:
        drop = 100.0 * (clean.accuracy_percent - corrupted.accuracy_percent) / clean.accuracy_percent
    return {
        "clean": clean.to_dict(),
        "corrupted": corrupted.to_dict(),
        "relative_drop_percent": drop,
    }


def repeat_bias_report(paths, quantizations, include_first: bool = True) -> dict:
    """Show how the repeat baseline's frame score inflates with the time grid.

    Evaluates the repeat baseline at each requested quantization, frame- and
    event-level.  Frame scores climb with finer grids (sustained notes are
    recounted more often); event scores stay near zero, which is the point.
    """
    out: dict = {"quantizations": list(quantizations), "frame": {}, "event": {}}
    for q in quantizations:
        for granularity in GRANULARITIES:
            report = evaluate_corpus(
                RepeatBaseline(),
                paths,
                granularity=granularity,
                quantization=q,
                include_first=include_first,
            )
            out[granularity][q] = report.accuracy_percent
    return out
