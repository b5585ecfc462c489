"""Corpus-level training: split, fit with CD, validate, snapshot the best.

Determinism contract: everything stochastic is driven by two named seeds.
``seed`` covers weight initialization and the CD chain noise; ``shuffle_seed``
covers the corpus split and minibatch order.  Two runs with the same seeds,
config, and files produce bit-identical models and logs (logs carry no
timestamps for exactly that reason — wall-clock chatter goes to the console,
not the artifact).
"""

from __future__ import annotations

import json
import logging
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import evaluate_model
from .models import ConditionalRBM, FactoredGatedRBM, ModelBundle, RBM, SamplingConfig
from .models.base import TrainingDiverged
from .pianoroll import align_pair, build_layout, load_parts, split_pair
from .projection import expected_dims, make_training_pairs
from .validation import ensure_rng

logger = logging.getLogger(__name__)

# Sub-stream tags for the two named seeds (list seeds keep streams disjoint).
_INIT = 0  # [seed, _INIT]        weight initialization
_CHAIN = 1  # [seed, _CHAIN]      CD gibbs/chain noise
_SPLIT = 0  # [shuffle_seed, _SPLIT]    corpus split
_ORDER = 1  # [shuffle_seed, _ORDER]    minibatch order


@dataclass
class TrainingConfig:
    """Everything a training run depends on, JSON-round-trippable."""

    kind: str = "crbm"
    quantization: int = 8
    n_past: int = 4
    n_hidden: int = 150
    n_factors: int = 50
    cd_steps: int = 10
    learning_rate: float = 1e-3
    momentum: float = 0.5
    weight_decay: float = 1e-4
    batch_size: int = 100
    n_epochs: int = 50
    patience: int = 10
    granularity: str = "frame"
    train_fraction: float = 0.8
    valid_fraction: float = 0.1
    test_fraction: float = 0.1
    init_scale: float = 0.01
    eval_gibbs_steps: int = 20
    threshold: float = 0.5
    seed: int = 0
    shuffle_seed: int = 0
    part_order: list[str] | None = None

    def __post_init__(self):
        if self.kind not in ("rbm", "crbm", "fgcrbm"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        total = self.train_fraction + self.valid_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {total}")
        if self.train_fraction <= 0:
            raise ValueError("train_fraction must be positive")
        if self.n_epochs < 0:
            raise ValueError("n_epochs must be >= 0")

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True))

    @classmethod
    def from_json(cls, path) -> "TrainingConfig":
        data = json.loads(Path(path).read_text())
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def sampling(self) -> SamplingConfig:
        return SamplingConfig(
            gibbs_steps=self.eval_gibbs_steps,
            seed=self.seed,
            output_mode="mean-field",
            threshold=self.threshold,
        )


@dataclass
class CorpusSplit:
    train: list[Path]
    valid: list[Path]
    test: list[Path]


def split_corpus(paths, config: TrainingConfig) -> CorpusSplit:
    """File-level split, deterministic in ``shuffle_seed`` and the file names."""
    paths = sorted(Path(p) for p in paths)
    if not paths:
        raise ValueError("no corpus files given")
    if len(set(p.name for p in paths)) != len(paths):
        raise ValueError("duplicate file names in corpus")
    rng = ensure_rng([config.shuffle_seed, _SPLIT])
    order = rng.permutation(len(paths))
    shuffled = [paths[i] for i in order]
    n = len(paths)
    n_train = int(round(config.train_fraction * n))
    n_valid = int(round(config.valid_fraction * n))
    n_train = max(1, min(n_train, n))
    n_valid = min(n_valid, n - n_train)
    split = CorpusSplit(
        train=shuffled[:n_train],
        valid=shuffled[n_train : n_train + n_valid],
        test=shuffled[n_train + n_valid :],
    )
    if not split.valid:
        warnings.warn("corpus split has no validation files; early stopping is off")
    if not split.test:
        warnings.warn("corpus split has no held-out test files")
    return split


def _load_pairs(paths, layout, config: TrainingConfig):
    """Concatenate model-ready training pairs over files."""
    chunks = []
    for path in paths:
        piano, orchestra = split_pair(load_parts(path))
        if piano.quantization != config.quantization:
            piano = piano.requantize(config.quantization)
            orchestra = [p.requantize(config.quantization) for p in orchestra]
        p_seq, o_seq = align_pair(piano, orchestra, layout)
        chunks.append(
            make_training_pairs(
                config.kind,
                p_seq.states,
                o_seq.states,
                config.n_past,
                granularity=config.granularity,
            )
        )
    v = np.concatenate([c.v for c in chunks])
    x = None if chunks[0].x is None else np.concatenate([c.x for c in chunks])
    z = None if chunks[0].z is None else np.concatenate([c.z for c in chunks])
    return v, x, z


def _build_model(config: TrainingConfig, layout):
    dims = expected_dims(config.kind, layout.total_dim, config.n_past)
    common = dict(
        n_hidden=config.n_hidden,
        cd_steps=config.cd_steps,
        learning_rate=config.learning_rate,
        momentum=config.momentum,
        weight_decay=config.weight_decay,
        batch_size=config.batch_size,
        init_scale=config.init_scale,
    )
    rng = ensure_rng([config.seed, _INIT])
    if config.kind == "rbm":
        return RBM(**common).initialize(dims["n_visible"], rng=rng)
    if config.kind == "crbm":
        return ConditionalRBM(**common).initialize(
            dims["n_visible"], dims["n_context"], rng=rng
        )
    return FactoredGatedRBM(n_factors=config.n_factors, **common).initialize(
        dims["n_visible"], dims["n_context"], dims["n_features"], rng=rng
    )


def train(config: TrainingConfig, paths, out_path=None, log_path=None):
    """Fit one model on a corpus of JSON pair files.

    Returns ``(bundle, log)`` where ``log`` is a JSON-ready dict: per-epoch
    reconstruction error and validation event accuracy, the file audit for
    each split, and which epoch's parameters the bundle carries.
    """
    split = split_corpus(paths, config)
    train_rolls = []
    for path in split.train:
        _, orchestra = split_pair(load_parts(path))
        if orchestra and orchestra[0].quantization != config.quantization:
            orchestra = [p.requantize(config.quantization) for p in orchestra]
        train_rolls.append(orchestra)
    layout = build_layout(train_rolls, part_order=config.part_order)

    v, x, z = _load_pairs(split.train, layout, config)
    model = _build_model(config, layout)
    bundle = ModelBundle(
        model=model,
        layout=layout,
        quantization=config.quantization,
        n_past=config.n_past,
        sampling=config.sampling(),
    )

    rng_order = ensure_rng([config.shuffle_seed, _ORDER])
    rng_chain = ensure_rng([config.seed, _CHAIN])
    n = v.shape[0]
    best = {"epoch": None, "accuracy": -1.0, "params": None}
    epochs_log = []
    stale = 0
    for epoch in range(config.n_epochs):
        t0 = time.monotonic()
        order = rng_order.permutation(n)
        errs = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            try:
                errs.append(
                    model.cd_update(
                        v[idx],
                        None if x is None else x[idx],
                        None if z is None else z[idx],
                        rng=rng_chain,
                    )
                )
            except TrainingDiverged as exc:
                raise TrainingDiverged(f"epoch {epoch}: {exc}") from exc
        entry = {"epoch": epoch, "recon_mse": float(np.mean(errs))}
        if split.valid:
            report = evaluate_model(bundle, split.valid, granularity="event")
            entry["valid_event_accuracy"] = report.accuracy_percent
            if report.accuracy_percent > best["accuracy"]:
                best = {
                    "epoch": epoch,
                    "accuracy": report.accuracy_percent,
                    "params": model.clone_params(),
                }
                stale = 0
            else:
                stale += 1
        epochs_log.append(entry)
        logger.info(
            "epoch %d: recon_mse=%.5f%s (%.1fs)",
            epoch,
            entry["recon_mse"],
            f" valid_acc={entry.get('valid_event_accuracy', float('nan')):.2f}%"
            if split.valid
            else "",
            time.monotonic() - t0,
        )
        if split.valid and config.patience and stale >= config.patience:
            logger.info("no validation improvement in %d epochs; stopping", stale)
            break

    if best["params"] is not None:
        model.set_params_dict(best["params"])
    log = {
        "config": asdict(config),
        "files_read": {
            "train": [p.name for p in split.train],
            "valid": [p.name for p in split.valid],
            "test": [p.name for p in split.test],
        },
        "epochs": epochs_log,
        "best_epoch": best["epoch"],
        "n_training_rows": int(n),
        "orchestra_dim": layout.total_dim,
    }
    if out_path is not None:
        from .models.serialize import save_model

        save_model(out_path, bundle)
    if log_path is not None:
        Path(log_path).write_text(json.dumps(log, indent=2, sort_keys=True))
    return bundle, log
