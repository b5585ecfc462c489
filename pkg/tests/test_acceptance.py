"""End-to-end acceptance gate.

Each test checks one release criterion and prints a single verdict line
(also echoed in the terminal summary).  The criteria, in order:

  A1  exactness of the model math (joint normalizes, conditionals factorize)
  A2  the reduction chain between the three model kinds
  A3  learning sanity: CD training lowers exact NLL; CD stats track the
      exact gradient
  A4  task learnability on the register-split corpus (conditional models
      beat random by 10x, the unconditional model trails both)
  A5  the repeat baseline's frame-level score inflates with the time grid
  A6  the gated model collapses when the piano input is silenced
  A7  live tick latency at full-orchestra and desk scales
  A8  bitwise reproducibility of training and projection
"""

import time

import numpy as np
import pytest

from tutti.benchmark import benchmark_scale
from tutti.evaluation import (
    RandomBaseline,
    corrupted_piano_eval,
    evaluate_corpus,
    evaluate_model,
    repeat_bias_report,
)
from tutti.models import RBM
from tutti.models.exact import (
    contract_features,
    enumerate_states,
    enumeration_hidden_means,
    enumeration_visible_means,
    exact_joint,
    exact_nll,
    exact_nll_gradient,
    exact_visible_marginal,
)
from tutti.models.serialize import load_model
from tutti.pianoroll import load_parts, split_pair
from tutti.projection import project_score
from tutti.synthetic import make_register_corpus, make_sustain_corpus
from tutti.training import TrainingConfig, split_corpus, train

from .conftest import random_binary, random_crbm, random_fgcrbm, random_rbm, record_acceptance


def _verdict(criterion: str, ok: bool, detail: str) -> None:
    line = f"{criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    record_acceptance(line)
    print(line)
    assert ok, line


def _tiny_instance(rng, kind):
    n_visible = int(rng.integers(1, 16))
    n_hidden = int(rng.integers(1, min(8, 20 - n_visible) + 1))
    x = z = None
    if kind == "rbm":
        model = random_rbm(rng, n_visible, n_hidden)
    elif kind == "crbm":
        n_context = int(rng.integers(1, 5))
        model = random_crbm(rng, n_visible, n_hidden, n_context=n_context)
        x = random_binary(rng, n_context)
    else:
        n_context = int(rng.integers(1, 5))
        n_features = int(rng.integers(1, 5))
        model = random_fgcrbm(
            rng, n_visible, n_hidden,
            n_context=n_context, n_features=n_features,
            n_factors=int(rng.integers(1, 5)),
        )
        x = random_binary(rng, n_context)
        z = random_binary(rng, n_features)
    return model, x, z


def test_a1_exact_model_math(rng):
    t0 = time.perf_counter()
    worst_sum = 0.0
    worst_cond = 0.0
    for kind in ("rbm", "crbm", "fgcrbm"):
        for _ in range(50):
            model, x, z = _tiny_instance(rng, kind)
            joint = exact_joint(model, x, z)
            worst_sum = max(worst_sum, abs(joint.sum() - 1.0))
            v = random_binary(rng, model.n_visible_)
            h = random_binary(rng, model.n_hidden_)
            worst_cond = max(
                worst_cond,
                np.max(np.abs(
                    model.hidden_means(v, x=x, z=z)
                    - enumeration_hidden_means(model, v, x, z)
                )),
                np.max(np.abs(
                    model.visible_means(h, x=x, z=z)
                    - enumeration_visible_means(model, h, x, z)
                )),
            )
    elapsed = time.perf_counter() - t0
    ok = worst_sum <= 1e-9 and worst_cond <= 1e-9 and elapsed < 30
    _verdict(
        "A1 exact model math",
        ok,
        f"150 instances: max |sum(p)-1| = {worst_sum:.2e}, "
        f"max conditional error = {worst_cond:.2e} (tol 1e-9), {elapsed:.1f}s < 30s",
    )


def test_a2_reduction_chain(rng):
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        n_visible = int(rng.integers(2, 7))
        n_hidden = int(rng.integers(2, 6))
        n_context = int(rng.integers(1, 6))
        crbm = random_crbm(rng, n_visible, n_hidden, n_context=n_context)
        crbm.context_visible_[:] = 0.0
        crbm.context_hidden_[:] = 0.0
        rbm = RBM.from_arrays(crbm.weights_, crbm.visible_bias_, crbm.hidden_bias_)
        x = random_binary(rng, n_context)
        v = random_binary(rng, n_visible)
        h = random_binary(rng, n_hidden)
        worst = max(
            worst,
            np.max(np.abs(exact_joint(crbm, x) - exact_joint(rbm))),
            np.max(np.abs(crbm.hidden_means(v, x=x) - rbm.hidden_means(v))),
            np.max(np.abs(crbm.visible_means(h, x=x) - rbm.visible_means(h))),
        )
    for _ in range(20):
        n_visible = int(rng.integers(2, 7))
        n_hidden = int(rng.integers(2, 6))
        n_context = int(rng.integers(1, 6))
        n_features = int(rng.integers(1, 5))
        fg = random_fgcrbm(
            rng, n_visible, n_hidden, n_context=n_context,
            n_features=n_features, n_factors=int(rng.integers(1, 5)),
        )
        z = random_binary(rng, n_features)
        contracted = contract_features(fg, z)
        x = random_binary(rng, n_context)
        v = random_binary(rng, n_visible)
        h = random_binary(rng, n_hidden)
        worst = max(
            worst,
            np.max(np.abs(exact_joint(fg, x, z) - exact_joint(contracted, x))),
            np.max(np.abs(fg.hidden_means(v, x=x, z=z) - contracted.hidden_means(v, x=x))),
            np.max(np.abs(fg.visible_means(h, x=x, z=z) - contracted.visible_means(h, x=x))),
        )
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10
    _verdict(
        "A2 reduction chain",
        ok,
        f"zeroed-context crbm==rbm and contracted fgcrbm==crbm on 20 instances each: "
        f"max deviation {worst:.2e} (tol 1e-9), {elapsed:.1f}s < 10s",
    )


def test_a3_learning_sanity():
    t0 = time.perf_counter()

    # CD training on data from a known model must recover most of the
    # structure: exact NLL down at least 20% from the random start.
    rng = np.random.default_rng(7)
    truth = random_rbm(rng, 8, 5, scale=2.0)
    states = enumerate_states(8)
    p = exact_visible_marginal(truth)
    V = states[rng.choice(len(p), size=500, p=p)].astype(np.float64)
    settings = dict(
        n_hidden=8, cd_steps=2, learning_rate=0.1, momentum=0.5,
        weight_decay=1e-4, batch_size=50, random_state=11,
    )
    nll_start = exact_nll(RBM(n_epochs=0, **settings).fit(V), V)
    nll_end = exact_nll(RBM(n_epochs=200, **settings).fit(V), V)
    drop = 100.0 * (nll_start - nll_end) / nll_start

    # The CD statistic at K=500 must point the same way as the exact
    # gradient nearly always.
    rng = np.random.default_rng(99)
    wins = 0
    for _ in range(100):
        model = random_rbm(rng, 6, 4, scale=0.8)
        marginal = exact_visible_marginal(model)
        batch = enumerate_states(6)[
            rng.choice(len(marginal), size=30, p=marginal)
        ].astype(np.float64)
        exact = exact_nll_gradient(model, batch)
        h0 = model.hidden_means(batch)
        v = batch.copy()
        for _ in range(500):
            v, _ = model.gibbs_step(v, rng)
        cd = model._cd_gradients(batch, h0, v, model.hidden_means(v), None, None)
        flat_exact = np.concatenate([exact[k].ravel() for k in sorted(exact)])
        flat_cd = np.concatenate([cd[k].ravel() for k in sorted(cd)])
        wins += np.corrcoef(flat_exact, flat_cd)[0, 1] > 0

    elapsed = time.perf_counter() - t0
    ok = drop >= 20.0 and wins >= 95 and elapsed < 300
    _verdict(
        "A3 learning sanity",
        ok,
        f"exact NLL {nll_start:.3f} -> {nll_end:.3f} ({drop:.1f}% drop, need >=20%); "
        f"CD(K=500) vs exact gradient positively correlated in {wins}/100 trials "
        f"(need >=95); {elapsed:.1f}s < 300s",
    )


REGISTER_RECIPE = dict(
    n_hidden=200, n_past=4, cd_steps=1, learning_rate=0.05, momentum=0.9,
    n_epochs=100, patience=100, batch_size=100, eval_gibbs_steps=20,
    seed=0, shuffle_seed=0,
)


@pytest.fixture(scope="module")
def register_study(tmp_path_factory):
    """The register-split corpus with all three kinds trained on it (A4 + A6)."""
    root = tmp_path_factory.mktemp("register")
    paths = make_register_corpus(root, n_files=40, frames=64, quantization=8, seed=5)
    t0 = time.perf_counter()
    bundles = {
        kind: train(TrainingConfig(kind=kind, **REGISTER_RECIPE), paths)[0]
        for kind in ("crbm", "fgcrbm", "rbm")
    }
    train_seconds = time.perf_counter() - t0
    test_files = split_corpus(paths, TrainingConfig(kind="crbm", **REGISTER_RECIPE)).test
    return {"bundles": bundles, "test_files": test_files, "train_seconds": train_seconds}


def test_a4_task_learnability(register_study):
    t0 = time.perf_counter()
    files = register_study["test_files"]
    acc = {
        kind: evaluate_model(bundle, files, "event").accuracy_percent
        for kind, bundle in register_study["bundles"].items()
    }
    random_acc = evaluate_corpus(
        RandomBaseline(seed=0), files, granularity="event"
    ).accuracy_percent
    elapsed = register_study["train_seconds"] + (time.perf_counter() - t0)
    bar = 10.0 * random_acc
    ok = (
        acc["crbm"] >= bar
        and acc["fgcrbm"] >= bar
        and acc["rbm"] < acc["crbm"]
        and acc["rbm"] < acc["fgcrbm"]
        and elapsed < 900
    )
    _verdict(
        "A4 task learnability",
        ok,
        f"event accuracy on held-out files: crbm {acc['crbm']:.1f}%, "
        f"fgcrbm {acc['fgcrbm']:.1f}%, rbm {acc['rbm']:.1f}%, random {random_acc:.1f}% "
        f"(10x bar {bar:.1f}%); {elapsed:.0f}s < 900s",
    )


def test_a5_repeat_bias(tmp_path):
    t0 = time.perf_counter()
    paths = make_sustain_corpus(tmp_path, n_files=20, frames=64, quantization=8, seed=2)
    report = repeat_bias_report(paths, (8, 4))
    frame8 = report["frame"][8]
    frame4 = report["frame"][4]
    event = report["event"][8]
    elapsed = time.perf_counter() - t0
    ok = frame8 > frame4 > event and elapsed < 120
    _verdict(
        "A5 repeat-baseline grid bias",
        ok,
        f"repeat accuracy frame@Q8 {frame8:.1f}% > frame@Q4 {frame4:.1f}% > "
        f"event {event:.1f}% (strict ordering); {elapsed:.1f}s < 120s",
    )


def test_a6_corrupted_piano(register_study):
    t0 = time.perf_counter()
    files = register_study["test_files"]
    fg = corrupted_piano_eval(register_study["bundles"]["fgcrbm"], files, "event")
    crbm = corrupted_piano_eval(register_study["bundles"]["crbm"], files, "event")
    elapsed = time.perf_counter() - t0
    ok = fg["relative_drop_percent"] >= 50.0 and elapsed < 300
    _verdict(
        "A6 corrupted-piano diagnostic",
        ok,
        f"silencing the piano drops fgcrbm event accuracy "
        f"{fg['clean']['accuracy_percent']:.1f}% -> "
        f"{fg['corrupted']['accuracy_percent']:.1f}% "
        f"({fg['relative_drop_percent']:.0f}% relative, need >=50%); "
        f"crbm for comparison: {crbm['clean']['accuracy_percent']:.1f}% -> "
        f"{crbm['corrupted']['accuracy_percent']:.1f}%; {elapsed:.1f}s < 300s",
    )


def test_a7_live_latency():
    paper = benchmark_scale("paper", n_ticks=200)
    desk = benchmark_scale("desk", n_ticks=200)
    ok = all(r["within_budget"] for r in paper["results"] + desk["results"])
    paper_str = ", ".join(
        f"{r['kind']} {r['median_ms']:.1f}ms" for r in paper["results"]
    )
    desk_str = ", ".join(
        f"{r['kind']} {r['median_ms']:.2f}ms" for r in desk["results"]
    )
    _verdict(
        "A7 live latency",
        ok,
        f"median tick over 200: paper scale (D=1220, H=3000, K=20) {paper_str} "
        f"(budget 100ms); desk scale (D=48, H=200) {desk_str} (budget 5ms)",
    )


def test_a8_determinism(tmp_path):
    paths = make_register_corpus(tmp_path / "corpus", n_files=8, frames=32,
                                 quantization=8, seed=9)
    config = TrainingConfig(
        kind="crbm", n_hidden=16, n_past=2, cd_steps=1, learning_rate=0.05,
        momentum=0.9, n_epochs=3, batch_size=64, eval_gibbs_steps=5,
        seed=4, shuffle_seed=4,
    )
    outputs = []
    for run in ("one", "two"):
        run_dir = tmp_path / run
        run_dir.mkdir()
        train(config, paths, out_path=run_dir / "model.tutti",
              log_path=run_dir / "log.json")
        outputs.append(run_dir)
    same_model = (outputs[0] / "model.tutti").read_bytes() == \
        (outputs[1] / "model.tutti").read_bytes()
    same_log = (outputs[0] / "log.json").read_bytes() == \
        (outputs[1] / "log.json").read_bytes()

    piano, _ = split_pair(load_parts(paths[0]))
    projections = [
        project_score(load_model(run_dir / "model.tutti"), piano).states
        for run_dir in outputs
    ]
    same_projection = bool(np.array_equal(projections[0], projections[1]))
    ok = same_model and same_log and same_projection
    _verdict(
        "A8 determinism",
        ok,
        f"two identically-seeded runs: model files identical={same_model}, "
        f"logs identical={same_log}, projections identical={same_projection}",
    )
