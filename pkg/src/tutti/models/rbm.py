"""Plain restricted Boltzmann machine over binary vectors.

Energy: E(v, h) = -a.v - v'Wh - b.h.  No context inputs; conditioning on
known coordinates is done by inpainting (clamping them during Gibbs).
"""

from __future__ import annotations

import numpy as np

from ..validation import as_batch, check_positive_int, ensure_rng
from .base import EnergyModel, SamplingConfig, sigmoid


class RBM(EnergyModel):
    """Binary RBM trained with CD-k.

    Parameters follow scikit-learn conventions: everything is a constructor
    hyperparameter, learned arrays get a trailing underscore
    (``weights_ (n_visible, n_hidden)``, ``visible_bias_``, ``hidden_bias_``).
    """

    kind = "rbm"

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

    # --- construction -------------------------------------------------------

    def initialize(self, n_visible, rng=None):
        check_positive_int(n_visible, "n_visible")
        check_positive_int(self.n_hidden, "n_hidden")
        rng = ensure_rng(self.random_state if rng is None else rng)
        self.n_visible_ = int(n_visible)
        self.n_hidden_ = int(self.n_hidden)
        s = self.init_scale
        self.weights_ = rng.normal(0.0, s, size=(self.n_visible_, self.n_hidden_))
        self.visible_bias_ = np.zeros(self.n_visible_)
        self.hidden_bias_ = np.zeros(self.n_hidden_)
        self._reset_velocity()
        return self

    @classmethod
    def from_arrays(cls, weights, visible_bias, hidden_bias, **hypers):
        weights = np.array(weights, dtype=np.float64)
        if weights.ndim != 2:
            raise ValueError("weights must be 2-d (n_visible, n_hidden)")
        model = cls(n_hidden=weights.shape[1], **hypers)
        model.n_visible_ = weights.shape[0]
        model.n_hidden_ = weights.shape[1]
        model.weights_ = weights
        model.visible_bias_ = np.array(visible_bias, dtype=np.float64).reshape(-1)
        model.hidden_bias_ = np.array(hidden_bias, dtype=np.float64).reshape(-1)
        if model.visible_bias_.shape != (model.n_visible_,):
            raise ValueError("visible_bias shape does not match weights")
        if model.hidden_bias_.shape != (model.n_hidden_,):
            raise ValueError("hidden_bias shape does not match weights")
        model._reset_velocity()
        return model

    # --- energy hooks ---------------------------------------------------------

    def _check_context(self, x, z, n_rows):
        if x is not None or z is not None:
            raise ValueError("plain RBM takes no context inputs")
        return None, None

    def _effective_visible_bias(self, x, z):
        return self.visible_bias_

    def _effective_hidden_bias(self, x, z):
        return self.hidden_bias_

    def _hidden_input(self, v, z):
        return v @ self.weights_

    def _visible_input(self, h, z):
        return h @ self.weights_.T

    def _coupling(self, v, h, z):
        return ((v @ self.weights_) * h).sum(-1)

    # --- CD -----------------------------------------------------------------

    def _param_names(self):
        return ("weights_", "visible_bias_", "hidden_bias_")

    def _decayed_params(self):
        return frozenset(("weights_",))

    def _cd_gradients(self, v0, h0_mean, vk, hk_mean, x, z):
        n = v0.shape[0]
        return {
            "weights_": (v0.T @ h0_mean - vk.T @ hk_mean) / n,
            "visible_bias_": (v0 - vk).mean(0),
            "hidden_bias_": (h0_mean - hk_mean).mean(0),
        }

    # --- public API -----------------------------------------------------------

    def fit(self, V, y=None):
        V, _ = as_batch(V, None, "V")
        if getattr(self, "n_visible_", None) is None:
            self.initialize(V.shape[1])
        return self._fit_loop(V)

    def generate(self, config: SamplingConfig = SamplingConfig(), rng=None, n_samples=1):
        """Unconditional samples: Gibbs from an i.i.d. Bernoulli(0.5) start."""
        self._require_fitted()
        out = self._generate(None, None, config, rng, n_rows=n_samples)
        return out[0] if n_samples == 1 else out

    def generate_inpaint(self, values, free_mask, config: SamplingConfig = SamplingConfig(), rng=None):
        """Sample the ``free_mask`` coordinates with the rest clamped to ``values``.

        ``values`` supplies the clamped coordinates (entries under the free
        mask are ignored).  Clamped units never move, so their contribution to
        every hidden pre-activation is a constant computed once; the Gibbs
        loop then touches only the free columns of the weight matrix, which is
        what keeps large clamped contexts (piano + history) cheap.
        """
        self._require_fitted()
        values, single = as_batch(values, self.n_visible_, "values")
        free_mask = np.asarray(free_mask, dtype=bool).reshape(-1)
        if free_mask.shape != (self.n_visible_,):
            raise ValueError(
                f"free_mask must have shape ({self.n_visible_},), got {free_mask.shape}"
            )
        if not free_mask.any():
            raise ValueError("free_mask clamps every coordinate; nothing to sample")
        rng = config.rng() if rng is None else ensure_rng(rng)
        w_free = self.weights_[free_mask]
        a_free = self.visible_bias_[free_mask]
        base_h = self.hidden_bias_ + values[:, ~free_mask] @ self.weights_[~free_mask]
        n = values.shape[0]
        v_free = (rng.random((n, w_free.shape[0])) < 0.5).astype(np.float64)
        v_mean = None
        for _ in range(config.gibbs_steps):
            h_mean = sigmoid(base_h + v_free @ w_free)
            h = (rng.random(h_mean.shape) < h_mean).astype(np.float64)
            v_mean = sigmoid(a_free + h @ w_free.T)
            v_free = (rng.random(v_mean.shape) < v_mean).astype(np.float64)
        out = values.copy()
        out[:, free_mask] = v_mean if config.output_mode == "mean-field" else v_free
        return out[0] if single else out
