"""Build two small orchestration models for the console's integration test.

Usage: python3 make_models.py <output-dir>

Both bundles share one 48-dimensional orchestra layout so the live server can
switch between them mid-session.  The conditional model's visible biases are
shifted positive so mean-field output reliably lights lanes — the integration
test needs visible activity, not musical quality.
"""

import sys
from pathlib import Path

import numpy as np

from tutti.models import ConditionalRBM, FactoredGatedRBM, SamplingConfig
from tutti.models.serialize import ModelBundle, save_model
from tutti.pianoroll import OrchestraLayout
from tutti.projection import expected_dims

LAYOUT = OrchestraLayout(
    (
        ("violin", tuple(range(60, 72))),
        ("viola", tuple(range(48, 60))),
        ("cello", tuple(range(36, 48))),
        ("flute", tuple(range(72, 80))),
        ("bassoon", tuple(range(40, 44))),
    )
)

SAMPLING = SamplingConfig(gibbs_steps=5, seed=0, output_mode="mean-field", threshold=0.5)

N_PAST = 2


def grand(rng):
    dims = expected_dims("crbm", LAYOUT.total_dim, N_PAST)
    n_hidden = 200
    model = ConditionalRBM.from_arrays(
        rng.normal(0, 0.05, (dims["n_visible"], n_hidden)),
        rng.normal(0.9, 0.1, dims["n_visible"]),  # biased loud: lanes must light
        rng.normal(0, 0.05, n_hidden),
        rng.normal(0, 0.05, (dims["n_context"], dims["n_visible"])),
        rng.normal(0, 0.05, (dims["n_context"], n_hidden)),
    )
    return ModelBundle(model=model, layout=LAYOUT, quantization=8, n_past=N_PAST, sampling=SAMPLING)


def chamber(rng):
    dims = expected_dims("fgcrbm", LAYOUT.total_dim, N_PAST)
    n_hidden, n_factors = 100, 50
    model = FactoredGatedRBM.from_arrays(
        rng.normal(0.4, 0.1, dims["n_visible"]),
        rng.normal(0, 0.05, n_hidden),
        rng.normal(0, 0.05, (dims["n_visible"], n_factors)),
        rng.normal(0, 0.05, (n_hidden, n_factors)),
        rng.normal(0, 0.05, (dims["n_features"], n_factors)),
        rng.normal(0, 0.05, (dims["n_visible"], n_factors)),
        rng.normal(0, 0.05, (dims["n_context"], n_factors)),
        rng.normal(0, 0.05, (dims["n_features"], n_factors)),
        rng.normal(0, 0.05, (n_hidden, n_factors)),
        rng.normal(0, 0.05, (dims["n_context"], n_factors)),
        rng.normal(0, 0.05, (dims["n_features"], n_factors)),
    )
    return ModelBundle(model=model, layout=LAYOUT, quantization=8, n_past=N_PAST, sampling=SAMPLING)


def main() -> int:
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(2026)
    save_model(out / "grand.tutti", grand(rng))
    save_model(out / "chamber.tutti", chamber(rng))
    print(f"wrote 2 bundles to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
