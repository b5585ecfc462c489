"""Shared machinery for the binary energy-based model family.

All three model variants define a joint distribution p(v, h) ∝ exp(-E(v, h))
over binary visible units v and binary hidden units h, differing only in how
context inputs reshape the energy.  They share:

* factorized conditionals  p(h_j=1 | v) = sigmoid(b_j + hidden_input_j(v)) and
  symmetrically for the visibles,
* blocked Gibbs sampling that alternates the two conditionals,
* contrastive-divergence updates: k Gibbs steps started at the data, gradient
  = positive statistics minus end-of-chain statistics, with momentum and
  weight decay,
* clamped generation: visible units start i.i.d. Bernoulli(0.5) and the chain
  runs with all context inputs held fixed.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ..validation import as_batch, ensure_rng


class TrainingDiverged(RuntimeError):
    """A parameter update produced non-finite values (learning rate too hot?)."""


def sigmoid(x):
    """Numerically stable logistic function, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SamplingConfig:
    """How to run clamped generation.

    ``output_mode`` is either ``"sample"`` (final binary visible state) or
    ``"mean-field"`` (final visible Bernoulli means, for deterministic point
    estimates); ``threshold`` is what callers use to binarize mean-field
    output.
    """

    gibbs_steps: int = 20
    seed: int = 0
    output_mode: str = "sample"
    threshold: float = 0.5

    def __post_init__(self):
        if self.gibbs_steps < 1:
            raise ValueError("gibbs_steps must be >= 1")
        if self.output_mode not in ("sample", "mean-field"):
            raise ValueError(f"unknown output_mode {self.output_mode!r}")
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must lie in (0, 1]")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def binarize(means: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    return (np.asarray(means) > threshold).astype(np.uint8)


class EnergyModel(BaseEstimator):
    """Base class: an RBM-family model with optional context/feature inputs.

    Subclasses implement the four hooks that define the energy —
    ``_effective_visible_bias``, ``_effective_hidden_bias``, ``_hidden_input``,
    ``_visible_input``, ``_coupling`` — plus CD gradient assembly.  Everything
    here works on float batches whose entries are 0/1.
    """

    kind: str = ""

    # --- hooks ------------------------------------------------------------

    def _effective_visible_bias(self, x, z):
        raise NotImplementedError

    def _effective_hidden_bias(self, x, z):
        raise NotImplementedError

    def _hidden_input(self, v, z):
        raise NotImplementedError

    def _visible_input(self, h, z):
        raise NotImplementedError

    def _coupling(self, v, h, z):
        raise NotImplementedError

    def _cd_gradients(self, v0, h0_mean, vk, hk_mean, x, z):
        raise NotImplementedError

    def _param_names(self) -> tuple[str, ...]:
        raise NotImplementedError

    def _decayed_params(self) -> frozenset[str]:
        raise NotImplementedError

    def _check_context(self, x, z, n_rows: int):
        """Validate/normalize context inputs; returns (x, z) as batches or None."""
        raise NotImplementedError

    # --- fitted-state helpers ----------------------------------------------

    def _require_fitted(self):
        if getattr(self, "n_visible_", None) is None:
            raise NotFittedError(
                f"this {type(self).__name__} has no parameters yet; call "
                "initialize() or fit() first"
            )

    def params_dict(self) -> dict[str, np.ndarray]:
        self._require_fitted()
        return {name: getattr(self, name) for name in self._param_names()}

    def clone_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params_dict().items()}

    def set_params_dict(self, params: dict[str, np.ndarray]) -> None:
        for name in self._param_names():
            setattr(self, name, np.array(params[name], dtype=np.float64))

    def _reset_velocity(self):
        self._velocity = {
            name: np.zeros_like(getattr(self, name)) for name in self._param_names()
        }

    # --- conditionals and energy -------------------------------------------

    def hidden_means(self, v, x=None, z=None):
        """p(h_j = 1 | v, context) for each hidden unit, factorized over j."""
        self._require_fitted()
        v, single = as_batch(v, self.n_visible_, "v")
        x, z = self._check_context(x, z, v.shape[0])
        out = sigmoid(self._effective_hidden_bias(x, z) + self._hidden_input(v, z))
        return out[0] if single else out

    def visible_means(self, h, x=None, z=None):
        """p(v_i = 1 | h, context) for each visible unit, factorized over i."""
        self._require_fitted()
        h, single = as_batch(h, self.n_hidden_, "h")
        x, z = self._check_context(x, z, h.shape[0])
        out = sigmoid(self._effective_visible_bias(x, z) + self._visible_input(h, z))
        return out[0] if single else out

    def energy(self, v, h, x=None, z=None):
        """E(v, h | context); lower energy = higher probability."""
        self._require_fitted()
        v, single_v = as_batch(v, self.n_visible_, "v")
        h, single_h = as_batch(h, self.n_hidden_, "h")
        if v.shape[0] != h.shape[0]:
            if v.shape[0] == 1:
                v = np.broadcast_to(v, (h.shape[0], v.shape[1]))
            elif h.shape[0] == 1:
                h = np.broadcast_to(h, (v.shape[0], h.shape[1]))
            else:
                raise ValueError("v and h batch sizes disagree")
        x, z = self._check_context(x, z, v.shape[0])
        a_eff = self._effective_visible_bias(x, z)
        b_eff = self._effective_hidden_bias(x, z)
        e = -(v * a_eff).sum(-1) - self._coupling(v, h, z) - (h * b_eff).sum(-1)
        return float(e[0]) if (single_v and single_h) else e

    # --- sampling -----------------------------------------------------------

    def gibbs_step(self, v, rng, x=None, z=None):
        """One blocked Gibbs step: sample h | v, then v' | h.  Returns (v', h)."""
        self._require_fitted()
        v, single = as_batch(v, self.n_visible_, "v")
        x, z = self._check_context(x, z, v.shape[0])
        rng = ensure_rng(rng)
        h_mean = sigmoid(self._effective_hidden_bias(x, z) + self._hidden_input(v, z))
        h = (rng.random(h_mean.shape) < h_mean).astype(np.float64)
        v_mean = sigmoid(self._effective_visible_bias(x, z) + self._visible_input(h, z))
        v_new = (rng.random(v_mean.shape) < v_mean).astype(np.float64)
        if single:
            return v_new[0], h[0]
        return v_new, h

    def _generate(self, x, z, config: SamplingConfig, rng, n_rows=1):
        """Clamped generation: Bernoulli(0.5) start, ``gibbs_steps`` sweeps.

        Context enters only through the precomputed effective biases (and the
        feature input z for factored coupling), so it stays clamped for free.
        """
        rng = config.rng() if rng is None else ensure_rng(rng)
        a_eff = self._effective_visible_bias(x, z)
        b_eff = self._effective_hidden_bias(x, z)
        v = (rng.random((n_rows, self.n_visible_)) < 0.5).astype(np.float64)
        v_mean = None
        for _ in range(config.gibbs_steps):
            h_mean = sigmoid(b_eff + self._hidden_input(v, z))
            h = (rng.random(h_mean.shape) < h_mean).astype(np.float64)
            v_mean = sigmoid(a_eff + self._visible_input(h, z))
            v = (rng.random(v_mean.shape) < v_mean).astype(np.float64)
        return v_mean if config.output_mode == "mean-field" else v

    # --- contrastive divergence ----------------------------------------------

    def cd_update(
        self,
        v,
        x=None,
        z=None,
        *,
        rng,
        cd_steps=None,
        learning_rate=None,
        momentum=None,
        weight_decay=None,
    ) -> float:
        """One CD-k parameter update from a minibatch; returns reconstruction MSE.

        Chain visibles are initialized at the data.  Hidden statistics use
        Bernoulli means (Rao-Blackwellized); chain transitions use samples.
        """
        self._require_fitted()
        k = self.cd_steps if cd_steps is None else cd_steps
        lr = self.learning_rate if learning_rate is None else learning_rate
        mom = self.momentum if momentum is None else momentum
        wd = self.weight_decay if weight_decay is None else weight_decay
        if k < 1:
            raise ValueError("cd_steps must be >= 1")
        rng = ensure_rng(rng)
        v0, _ = as_batch(v, self.n_visible_, "v")
        if v0.shape[0] == 0:
            raise ValueError("empty minibatch")
        x, z = self._check_context(x, z, v0.shape[0])
        a_eff = self._effective_visible_bias(x, z)
        b_eff = self._effective_hidden_bias(x, z)

        h0_mean = sigmoid(b_eff + self._hidden_input(v0, z))
        h = (rng.random(h0_mean.shape) < h0_mean).astype(np.float64)
        vk = v0
        v_mean = None
        for step in range(k):
            v_mean = sigmoid(a_eff + self._visible_input(h, z))
            vk = (rng.random(v_mean.shape) < v_mean).astype(np.float64)
            hk_mean = sigmoid(b_eff + self._hidden_input(vk, z))
            if step < k - 1:
                h = (rng.random(hk_mean.shape) < hk_mean).astype(np.float64)

        grads = self._cd_gradients(v0, h0_mean, vk, hk_mean, x, z)
        decayed = self._decayed_params()
        for name, grad in grads.items():
            if name in decayed:
                grad = grad - wd * getattr(self, name)
            vel = self._velocity[name]
            vel *= mom
            vel += lr * grad
            if not np.all(np.isfinite(vel)):
                raise TrainingDiverged(
                    f"non-finite update for {name!r}; lower the learning rate"
                )
            getattr(self, name).__iadd__(vel)
        return float(np.mean((v0 - v_mean) ** 2))

    def _fit_loop(self, v, x=None, z=None):
        rng = ensure_rng(self.random_state)
        n = v.shape[0]
        for _ in range(self.n_epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                idx = order[start : start + self.batch_size]
                self.cd_update(
                    v[idx],
                    None if x is None else x[idx],
                    None if z is None else z[idx],
                    rng=rng,
                )
        return self

    def copy(self):
        return copy.deepcopy(self)
