"""Factored gated conditional RBM.

Two kinds of side input: a context vector x (shifts biases, like the plain
conditional model) and a feature vector z that *gates* every interaction
through multiplicative factors.  All three-way tensors are factored into
per-mode matrices, so each interaction is a sum over factors of a triple
product:

    coupling(v, h, z)   = sum_f (Wv'v)_f (Wh'h)_f (Wz'z)_f
    a^(x, z) = a + Av [ (Ax'x) * (Az'z) ]
    b^(x, z) = b + Bh [ (Bx'x) * (Bz'z) ]

with one independent factor bank per term (the coupling bank and the two bias
banks share nothing).  Setting z's matrices so the gate is identically 1
recovers a plain conditional RBM; that reduction is what the exact-inference
tests lean on.
"""

from __future__ import annotations

import numpy as np

from ..validation import as_batch, check_positive_int, ensure_rng
from .base import EnergyModel, SamplingConfig


class FactoredGatedRBM(EnergyModel):
    """Conditional RBM whose weights and dynamic biases are gated by features z.

    Learned arrays (all float64):

    ============== =========================== ================================
    name            shape                       role
    ============== =========================== ================================
    visible_bias_   (n_visible,)                static visible offset a
    hidden_bias_    (n_hidden,)                 static hidden offset b
    w_vis_          (n_visible, n_factors)      coupling, visible mode
    w_hid_          (n_hidden, n_factors)       coupling, hidden mode
    w_feat_         (n_features, n_factors)     coupling, feature mode
    a_vis_          (n_visible, n_vis_bias_factors)   visible-bias triple
    a_ctx_          (n_context, n_vis_bias_factors)
    a_feat_         (n_features, n_vis_bias_factors)
    b_hid_          (n_hidden, n_hid_bias_factors)    hidden-bias triple
    b_ctx_          (n_context, n_hid_bias_factors)
    b_feat_         (n_features, n_hid_bias_factors)
    ============== =========================== ================================
    """

    kind = "fgcrbm"

    def __init__(
        self,
        n_hidden=100,
        n_factors=50,
        n_vis_bias_factors=None,
        n_hid_bias_factors=None,
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
        self.n_factors = n_factors
        self.n_vis_bias_factors = n_vis_bias_factors
        self.n_hid_bias_factors = n_hid_bias_factors
        self.cd_steps = cd_steps
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.n_epochs = n_epochs
        self.init_scale = init_scale
        self.random_state = random_state

    # --- construction ---------------------------------------------------------

    def initialize(self, n_visible, n_context, n_features, rng=None):
        check_positive_int(n_visible, "n_visible")
        check_positive_int(n_context, "n_context")
        check_positive_int(n_features, "n_features")
        check_positive_int(self.n_hidden, "n_hidden")
        check_positive_int(self.n_factors, "n_factors")
        rng = ensure_rng(self.random_state if rng is None else rng)
        self.n_visible_ = int(n_visible)
        self.n_context_ = int(n_context)
        self.n_features_ = int(n_features)
        self.n_hidden_ = int(self.n_hidden)
        self.n_factors_ = int(self.n_factors)
        self.n_vis_bias_factors_ = int(self.n_vis_bias_factors or self.n_factors)
        self.n_hid_bias_factors_ = int(self.n_hid_bias_factors or self.n_factors)
        s = self.init_scale
        f, fa, fb = self.n_factors_, self.n_vis_bias_factors_, self.n_hid_bias_factors_
        self.visible_bias_ = np.zeros(self.n_visible_)
        self.hidden_bias_ = np.zeros(self.n_hidden_)
        self.w_vis_ = rng.normal(0.0, s, size=(self.n_visible_, f))
        self.w_hid_ = rng.normal(0.0, s, size=(self.n_hidden_, f))
        self.w_feat_ = rng.normal(0.0, s, size=(self.n_features_, f))
        self.a_vis_ = rng.normal(0.0, s, size=(self.n_visible_, fa))
        self.a_ctx_ = rng.normal(0.0, s, size=(self.n_context_, fa))
        self.a_feat_ = rng.normal(0.0, s, size=(self.n_features_, fa))
        self.b_hid_ = rng.normal(0.0, s, size=(self.n_hidden_, fb))
        self.b_ctx_ = rng.normal(0.0, s, size=(self.n_context_, fb))
        self.b_feat_ = rng.normal(0.0, s, size=(self.n_features_, fb))
        self._reset_velocity()
        return self

    @classmethod
    def from_arrays(
        cls,
        visible_bias,
        hidden_bias,
        w_vis,
        w_hid,
        w_feat,
        a_vis,
        a_ctx,
        a_feat,
        b_hid,
        b_ctx,
        b_feat,
        **hypers,
    ):
        arrays = {
            "visible_bias_": np.array(visible_bias, dtype=np.float64).reshape(-1),
            "hidden_bias_": np.array(hidden_bias, dtype=np.float64).reshape(-1),
            "w_vis_": np.array(w_vis, dtype=np.float64),
            "w_hid_": np.array(w_hid, dtype=np.float64),
            "w_feat_": np.array(w_feat, dtype=np.float64),
            "a_vis_": np.array(a_vis, dtype=np.float64),
            "a_ctx_": np.array(a_ctx, dtype=np.float64),
            "a_feat_": np.array(a_feat, dtype=np.float64),
            "b_hid_": np.array(b_hid, dtype=np.float64),
            "b_ctx_": np.array(b_ctx, dtype=np.float64),
            "b_feat_": np.array(b_feat, dtype=np.float64),
        }
        n_visible = arrays["visible_bias_"].shape[0]
        n_hidden = arrays["hidden_bias_"].shape[0]
        model = cls(
            n_hidden=n_hidden,
            n_factors=arrays["w_vis_"].shape[1],
            n_vis_bias_factors=arrays["a_vis_"].shape[1],
            n_hid_bias_factors=arrays["b_hid_"].shape[1],
            **hypers,
        )
        model.n_visible_ = n_visible
        model.n_hidden_ = n_hidden
        model.n_context_ = arrays["a_ctx_"].shape[0]
        model.n_features_ = arrays["w_feat_"].shape[0]
        model.n_factors_ = arrays["w_vis_"].shape[1]
        model.n_vis_bias_factors_ = arrays["a_vis_"].shape[1]
        model.n_hid_bias_factors_ = arrays["b_hid_"].shape[1]
        expected = {
            "w_vis_": (n_visible, model.n_factors_),
            "w_hid_": (n_hidden, model.n_factors_),
            "w_feat_": (model.n_features_, model.n_factors_),
            "a_vis_": (n_visible, model.n_vis_bias_factors_),
            "a_ctx_": (model.n_context_, model.n_vis_bias_factors_),
            "a_feat_": (model.n_features_, model.n_vis_bias_factors_),
            "b_hid_": (n_hidden, model.n_hid_bias_factors_),
            "b_ctx_": (model.n_context_, model.n_hid_bias_factors_),
            "b_feat_": (model.n_features_, model.n_hid_bias_factors_),
        }
        model.visible_bias_ = arrays["visible_bias_"]
        model.hidden_bias_ = arrays["hidden_bias_"]
        for name, shape in expected.items():
            if arrays[name].shape != shape:
                raise ValueError(f"{name[:-1]} must have shape {shape}, got {arrays[name].shape}")
            setattr(model, name, arrays[name])
        model._reset_velocity()
        return model

    # --- energy hooks --------------------------------------------------------

    def _check_context(self, x, z, n_rows):
        if x is None or z is None:
            raise ValueError("factored gated RBM needs both context x and features z")
        x, _ = as_batch(x, self.n_context_, "x")
        z, _ = as_batch(z, self.n_features_, "z")
        for name, arr in (("x", x), ("z", z)):
            if arr.shape[0] == 1 and n_rows > 1:
                arr = np.broadcast_to(arr, (n_rows, arr.shape[1]))
            elif arr.shape[0] != n_rows:
                raise ValueError(
                    f"{name} batch size {arr.shape[0]} != data batch size {n_rows}"
                )
            if name == "x":
                x = arr
            else:
                z = arr
        return x, z

    def dynamic_biases(self, x, z):
        """The gated bias pair (a^, b^) for context ``x`` and features ``z``."""
        self._require_fitted()
        x, single_x = as_batch(x, self.n_context_, "x")
        z, single_z = as_batch(z, self.n_features_, "z")
        if x.shape[0] != z.shape[0]:
            raise ValueError("x and z batch sizes disagree")
        a = self._effective_visible_bias(x, z)
        b = self._effective_hidden_bias(x, z)
        single = single_x and single_z
        return (a[0], b[0]) if single else (a, b)

    def _effective_visible_bias(self, x, z):
        return self.visible_bias_ + ((x @ self.a_ctx_) * (z @ self.a_feat_)) @ self.a_vis_.T

    def _effective_hidden_bias(self, x, z):
        return self.hidden_bias_ + ((x @ self.b_ctx_) * (z @ self.b_feat_)) @ self.b_hid_.T

    def _hidden_input(self, v, z):
        return ((v @ self.w_vis_) * (z @ self.w_feat_)) @ self.w_hid_.T

    def _visible_input(self, h, z):
        return ((h @ self.w_hid_) * (z @ self.w_feat_)) @ self.w_vis_.T

    def _coupling(self, v, h, z):
        return ((v @ self.w_vis_) * (h @ self.w_hid_) * (z @ self.w_feat_)).sum(-1)

    # --- CD -------------------------------------------------------------------

    def _param_names(self):
        return (
            "visible_bias_",
            "hidden_bias_",
            "w_vis_",
            "w_hid_",
            "w_feat_",
            "a_vis_",
            "a_ctx_",
            "a_feat_",
            "b_hid_",
            "b_ctx_",
            "b_feat_",
        )

    def _decayed_params(self):
        return frozenset(self._param_names()) - {"visible_bias_", "hidden_bias_"}

    def _cd_gradients(self, v0, h0_mean, vk, hk_mean, x, z):
        n = v0.shape[0]
        sz = z @ self.w_feat_
        sv0, svk = v0 @ self.w_vis_, vk @ self.w_vis_
        sh0, shk = h0_mean @ self.w_hid_, hk_mean @ self.w_hid_
        pa = (x @ self.a_ctx_) * (z @ self.a_feat_)
        pb = (x @ self.b_ctx_) * (z @ self.b_feat_)
        dv = v0 - vk
        dh = h0_mean - hk_mean
        return {
            "visible_bias_": dv.mean(0),
            "hidden_bias_": dh.mean(0),
            "w_vis_": (v0.T @ (sh0 * sz) - vk.T @ (shk * sz)) / n,
            "w_hid_": (h0_mean.T @ (sv0 * sz) - hk_mean.T @ (svk * sz)) / n,
            "w_feat_": z.T @ (sv0 * sh0 - svk * shk) / n,
            "a_vis_": dv.T @ pa / n,
            "a_ctx_": x.T @ ((dv @ self.a_vis_) * (z @ self.a_feat_)) / n,
            "a_feat_": z.T @ ((dv @ self.a_vis_) * (x @ self.a_ctx_)) / n,
            "b_hid_": dh.T @ pb / n,
            "b_ctx_": x.T @ ((dh @ self.b_hid_) * (z @ self.b_feat_)) / n,
            "b_feat_": z.T @ ((dh @ self.b_hid_) * (x @ self.b_ctx_)) / n,
        }

    # --- public API ------------------------------------------------------------

    def fit(self, V, X, Z):
        V, _ = as_batch(V, None, "V")
        X, _ = as_batch(X, None, "X")
        Z, _ = as_batch(Z, None, "Z")
        if not (V.shape[0] == X.shape[0] == Z.shape[0]):
            raise ValueError("V, X and Z row counts disagree")
        if getattr(self, "n_visible_", None) is None:
            self.initialize(V.shape[1], X.shape[1], Z.shape[1])
        return self._fit_loop(V, x=X, z=Z)

    def generate(self, x, z, config: SamplingConfig = SamplingConfig(), rng=None):
        """Sample v | x, z: Bernoulli(0.5) start, Gibbs with both inputs clamped."""
        self._require_fitted()
        x_b, single_x = as_batch(x, self.n_context_, "x")
        z_b, single_z = as_batch(z, self.n_features_, "z")
        n_rows = max(x_b.shape[0], z_b.shape[0])
        x_b, z_b = self._check_context(x_b, z_b, n_rows)
        out = self._generate(x_b, z_b, config, rng, n_rows=n_rows)
        return out[0] if (single_x and single_z) else out
