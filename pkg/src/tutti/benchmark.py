"""Tick-latency benchmark: how fast can a session generate orchestral frames.

Two reference scales:

* paper  — orchestra_dim 1220, 3000 hidden units, 20 Gibbs steps, 4 past
  frames; the realtime budget is a 100 ms median tick;
* desk   — orchestra_dim 48, 200 hidden units; budget 5 ms median.

The harness drives a real :class:`~tutti.server.LiveSession` (same code path
as the WebSocket service) with random piano chords, so the measured time
includes input assembly, the Gibbs loop, ring-buffer maintenance, and
part splitting — everything but the socket.
"""

from __future__ import annotations

import numpy as np

from .models import ConditionalRBM, FactoredGatedRBM, ModelBundle, RBM, SamplingConfig
from .pianoroll import OrchestraLayout, PIANO_LOW
from .projection import expected_dims
from .server import LiveSession
from .validation import ensure_rng

PAPER_SCALE = {"orchestra_dim": 1220, "n_hidden": 3000, "gibbs_steps": 20, "n_past": 4}
DESK_SCALE = {"orchestra_dim": 48, "n_hidden": 200, "gibbs_steps": 20, "n_past": 4}
BUDGET_MS = {"paper": 100.0, "desk": 5.0}


def synthetic_layout(orchestra_dim: int, n_parts: int = 16) -> OrchestraLayout:
    """A plausible fake orchestra: ``orchestra_dim`` units over ``n_parts`` parts."""
    n_parts = min(n_parts, orchestra_dim)
    widths = [orchestra_dim // n_parts] * n_parts
    for i in range(orchestra_dim % n_parts):
        widths[i] += 1
    parts = []
    for i, width in enumerate(widths):
        if width > 128:
            raise ValueError("part width exceeds the MIDI pitch range")
        parts.append((f"part{i:02d}", tuple(range(width))))
    return OrchestraLayout(tuple(parts))


def make_benchmark_bundle(
    kind: str,
    orchestra_dim: int,
    n_hidden: int,
    n_past: int,
    gibbs_steps: int = 20,
    n_factors: int = 1000,
    seed: int = 0,
) -> ModelBundle:
    """Random-weight bundle with exactly the task wiring of a trained model."""
    layout = synthetic_layout(orchestra_dim)
    dims = expected_dims(kind, orchestra_dim, n_past)
    rng = ensure_rng([seed, 99])
    if kind == "rbm":
        model = RBM(n_hidden=n_hidden).initialize(dims["n_visible"], rng=rng)
    elif kind == "crbm":
        model = ConditionalRBM(n_hidden=n_hidden).initialize(
            dims["n_visible"], dims["n_context"], rng=rng
        )
    elif kind == "fgcrbm":
        model = FactoredGatedRBM(
            n_hidden=n_hidden, n_factors=min(n_factors, n_hidden)
        ).initialize(dims["n_visible"], dims["n_context"], dims["n_features"], rng=rng)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return ModelBundle(
        model=model,
        layout=layout,
        quantization=8,
        n_past=n_past,
        sampling=SamplingConfig(gibbs_steps=gibbs_steps, seed=seed, output_mode="sample"),
    )


class _MemoryStore:
    """Duck-typed ModelStore over in-memory bundles (no files involved)."""

    def __init__(self, bundles: dict[str, ModelBundle]):
        self._bundles = bundles

    def model_ids(self):
        return sorted(self._bundles)

    def get(self, model_id: str) -> ModelBundle:
        return self._bundles[model_id]


def run_benchmark(bundle: ModelBundle, n_ticks: int = 200, seed: int = 0) -> dict:
    """Drive ``n_ticks`` pulses through a live session; return latency stats."""
    session = LiveSession(_MemoryStore({"bench": bundle}), model_id="bench")
    rng = ensure_rng([seed, 7])
    for _ in range(n_ticks):
        n_notes = int(rng.integers(0, 11))
        pitches = sorted(
            int(p) for p in rng.choice(np.arange(PIANO_LOW, PIANO_LOW + 88), n_notes, replace=False)
        )
        replies, _ = session.apply_message({"type": "piano_frame", "pitches": pitches})
        assert not replies, replies
        frame = session.tick()
        assert frame["type"] == "orchestra_frame", frame
    stats = session.latency_stats()
    stats.update(
        kind=bundle.kind,
        orchestra_dim=bundle.orchestra_dim,
        n_hidden=bundle.model.n_hidden_,
        gibbs_steps=bundle.sampling.gibbs_steps,
        n_past=bundle.n_past,
        n_ticks=n_ticks,
    )
    return stats


def benchmark_scale(scale: str, kinds=("rbm", "crbm", "fgcrbm"), n_ticks: int = 200) -> dict:
    """Benchmark every model kind at a named scale; flags budget violations."""
    if scale == "paper":
        params = PAPER_SCALE
    elif scale == "desk":
        params = DESK_SCALE
    else:
        raise ValueError("scale must be 'paper' or 'desk'")
    budget = BUDGET_MS[scale]
    results = []
    for kind in kinds:
        bundle = make_benchmark_bundle(
            kind,
            params["orchestra_dim"],
            params["n_hidden"],
            params["n_past"],
            gibbs_steps=params["gibbs_steps"],
        )
        stats = run_benchmark(bundle, n_ticks=n_ticks)
        stats["budget_ms"] = budget
        stats["within_budget"] = stats["median_ms"] <= budget
        results.append(stats)
    return {"scale": scale, "budget_ms": budget, "results": results}
