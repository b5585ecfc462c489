"""Conditional RBM: context shifts both bias vectors linearly.

Energy given context x:

    E(v, h | x) = -a~.v - v'Wh - b~.h
    a~ = a + A'x        A: (n_context, n_visible)
    b~ = b + B'x        B: (n_context, n_hidden)

The coupling W is untouched by context, so for any fixed x the model *is* a
plain RBM with shifted biases (see ``exact.effective_rbm``).
"""

from __future__ import annotations

import numpy as np

from ..validation import as_batch, check_positive_int, ensure_rng
from .base import EnergyModel, SamplingConfig


class ConditionalRBM(EnergyModel):
    """RBM whose visible/hidden biases are linear functions of a context vector.

    Learned arrays: ``weights_ (n_visible, n_hidden)``, ``visible_bias_``,
    ``hidden_bias_``, ``context_visible_ (n_context, n_visible)``,
    ``context_hidden_ (n_context, n_hidden)``.
    """

    kind = "crbm"

    def __init__(
        self,
        n_hidden=100,
        cd_steps=10,
        learning_rate=1e-3,
        momentum=0.5,
        weight_decay=1e-4,
        batch_size=100,
        n_epochs=20,
        init_scale=0.01,
        random_state=None,
    ):
        self.n_hidden = n_hidden
        self.cd_steps = cd_steps
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.n_epochs = n_epochs
        self.init_scale = init_scale
        self.random_state = random_state

    # --- construction ----------------------------------------------------------

    def initialize(self, n_visible, n_context, rng=None):
        check_positive_int(n_visible, "n_visible")
        check_positive_int(n_context, "n_context")
        check_positive_int(self.n_hidden, "n_hidden")
        rng = ensure_rng(self.random_state if rng is None else rng)
        self.n_visible_ = int(n_visible)
        self.n_context_ = int(n_context)
        self.n_hidden_ = int(self.n_hidden)
        s = self.init_scale
        self.weights_ = rng.normal(0.0, s, size=(self.n_visible_, self.n_hidden_))
        self.context_visible_ = rng.normal(0.0, s, size=(self.n_context_, self.n_visible_))
        self.context_hidden_ = rng.normal(0.0, s, size=(self.n_context_, self.n_hidden_))
        self.visible_bias_ = np.zeros(self.n_visible_)
        self.hidden_bias_ = np.zeros(self.n_hidden_)
        self._reset_velocity()
        return self

    @classmethod
    def from_arrays(cls, weights, visible_bias, hidden_bias, context_visible, context_hidden, **hypers):
        weights = np.array(weights, dtype=np.float64)
        context_visible = np.array(context_visible, dtype=np.float64)
        context_hidden = np.array(context_hidden, dtype=np.float64)
        model = cls(n_hidden=weights.shape[1], **hypers)
        model.n_visible_ = weights.shape[0]
        model.n_hidden_ = weights.shape[1]
        model.n_context_ = context_visible.shape[0]
        model.weights_ = weights
        model.visible_bias_ = np.array(visible_bias, dtype=np.float64).reshape(-1)
        model.hidden_bias_ = np.array(hidden_bias, dtype=np.float64).reshape(-1)
        model.context_visible_ = context_visible
        model.context_hidden_ = context_hidden
        if model.visible_bias_.shape != (model.n_visible_,):
            raise ValueError("visible_bias shape does not match weights")
        if model.hidden_bias_.shape != (model.n_hidden_,):
            raise ValueError("hidden_bias shape does not match weights")
        if context_visible.shape != (model.n_context_, model.n_visible_):
            raise ValueError("context_visible shape mismatch")
        if context_hidden.shape != (model.n_context_, model.n_hidden_):
            raise ValueError("context_hidden shape mismatch")
        model._reset_velocity()
        return model

    # --- energy hooks ------------------------------------------------------------

    def _check_context(self, x, z, n_rows):
        if z is not None:
            raise ValueError("conditional RBM takes context x only, no feature input z")
        if x is None:
            raise ValueError("conditional RBM needs a context vector x")
        x, _ = as_batch(x, self.n_context_, "x")
        if x.shape[0] == 1 and n_rows > 1:
            x = np.broadcast_to(x, (n_rows, x.shape[1]))
        elif x.shape[0] != n_rows:
            raise ValueError(f"context batch size {x.shape[0]} != data batch size {n_rows}")
        return x, None

    def dynamic_biases(self, x):
        """The context-shifted bias pair (a~, b~) for context ``x``."""
        self._require_fitted()
        x, single = as_batch(x, self.n_context_, "x")
        a = self.visible_bias_ + x @ self.context_visible_
        b = self.hidden_bias_ + x @ self.context_hidden_
        return (a[0], b[0]) if single else (a, b)

    def _effective_visible_bias(self, x, z):
        return self.visible_bias_ + x @ self.context_visible_

    def _effective_hidden_bias(self, x, z):
        return self.hidden_bias_ + x @ self.context_hidden_

    def _hidden_input(self, v, z):
        return v @ self.weights_

    def _visible_input(self, h, z):
        return h @ self.weights_.T

    def _coupling(self, v, h, z):
        return ((v @ self.weights_) * h).sum(-1)

    # --- CD --------------------------------------------------------------------

    def _param_names(self):
        return (
            "weights_",
            "visible_bias_",
            "hidden_bias_",
            "context_visible_",
            "context_hidden_",
        )

    def _decayed_params(self):
        return frozenset(("weights_", "context_visible_", "context_hidden_"))

    def _cd_gradients(self, v0, h0_mean, vk, hk_mean, x, z):
        n = v0.shape[0]
        return {
            "weights_": (v0.T @ h0_mean - vk.T @ hk_mean) / n,
            "visible_bias_": (v0 - vk).mean(0),
            "hidden_bias_": (h0_mean - hk_mean).mean(0),
            "context_visible_": x.T @ (v0 - vk) / n,
            "context_hidden_": x.T @ (h0_mean - hk_mean) / n,
        }

    # --- public API ---------------------------------------------------------------

    def fit(self, V, X):
        V, _ = as_batch(V, None, "V")
        X, _ = as_batch(X, None, "X")
        if V.shape[0] != X.shape[0]:
            raise ValueError("V and X row counts disagree")
        if getattr(self, "n_visible_", None) is None:
            self.initialize(V.shape[1], X.shape[1])
        return self._fit_loop(V, x=X)

    def generate(self, x, config: SamplingConfig = SamplingConfig(), rng=None):
        """Sample v | x: Bernoulli(0.5) start, Gibbs with x clamped throughout."""
        self._require_fitted()
        x_batch, single = as_batch(x, self.n_context_, "x")
        x_batch, _ = self._check_context(x_batch, None, x_batch.shape[0])
        out = self._generate(x_batch, None, config, rng, n_rows=x_batch.shape[0])
        return out[0] if single else out
