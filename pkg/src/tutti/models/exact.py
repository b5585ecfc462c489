"""Exact inference for tiny models, by brute-force state enumeration.

Everything here recomputes energies and expectations from the raw parameter
arrays with its own einsum/loop code, independently of the model classes'
vectorized formulas, so the two can be checked against each other.  All
routines refuse models with more than 24 total units — beyond that the state
space (2^24) stops being enumerable in reasonable time/memory.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .crbm import ConditionalRBM
from .fgcrbm import FactoredGatedRBM
from .rbm import RBM

MAX_ENUM_UNITS = 24


def enumerate_states(n: int) -> np.ndarray:
    """All 2^n binary vectors of length n; row i holds the bits of i, LSB first."""
    if not 0 < n <= MAX_ENUM_UNITS:
        raise ValueError(f"can only enumerate 1..{MAX_ENUM_UNITS} units, got {n}")
    idx = np.arange(2**n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.float64)


def _check_enumerable(model):
    total = model.n_visible_ + model.n_hidden_
    if total > MAX_ENUM_UNITS:
        raise ValueError(
            f"model has {total} total units; refusing to enumerate more than "
            f"{MAX_ENUM_UNITS}"
        )


def _single(vec, dim, name):
    vec = np.asarray(vec, dtype=np.float64).reshape(-1)
    if vec.shape != (dim,):
        raise ValueError(f"{name} must be a single vector of length {dim}")
    return vec


def effective_parameters(model, x=None, z=None):
    """(a_eff, b_eff, W_eff) for one clamped context: the plain-RBM view.

    For every kind, once the side inputs are fixed the energy is exactly
    -a_eff.v - v'W_eff h - b_eff.h; this computes those three arrays from the
    raw parameters.
    """
    if model.kind == "rbm":
        if x is not None or z is not None:
            raise ValueError("plain RBM takes no context")
        return (
            model.visible_bias_.copy(),
            model.hidden_bias_.copy(),
            model.weights_.copy(),
        )
    if model.kind == "crbm":
        if z is not None:
            raise ValueError("conditional RBM takes no feature input")
        x = _single(x, model.n_context_, "x")
        a = model.visible_bias_ + np.einsum("k,ki->i", x, model.context_visible_)
        b = model.hidden_bias_ + np.einsum("k,kj->j", x, model.context_hidden_)
        return a, b, model.weights_.copy()
    if model.kind == "fgcrbm":
        x = _single(x, model.n_context_, "x")
        z = _single(z, model.n_features_, "z")
        pa = np.einsum("k,kf->f", x, model.a_ctx_) * np.einsum("k,kf->f", z, model.a_feat_)
        pb = np.einsum("k,kf->f", x, model.b_ctx_) * np.einsum("k,kf->f", z, model.b_feat_)
        a = model.visible_bias_ + np.einsum("if,f->i", model.a_vis_, pa)
        b = model.hidden_bias_ + np.einsum("jf,f->j", model.b_hid_, pb)
        sz = np.einsum("k,kf->f", z, model.w_feat_)
        w = np.einsum("if,f,jf->ij", model.w_vis_, sz, model.w_hid_)
        return a, b, w
    raise ValueError(f"unknown model kind {model.kind!r}")


def energy_table(model, x=None, z=None):
    """E(v, h) for every state pair: shape (2^n_visible, 2^n_hidden)."""
    _check_enumerable(model)
    a, b, w = effective_parameters(model, x, z)
    V = enumerate_states(model.n_visible_)
    H = enumerate_states(model.n_hidden_)
    return -(V @ a)[:, None] - (H @ b)[None, :] - V @ w @ H.T


def exact_log_partition(model, x=None, z=None) -> float:
    return float(logsumexp(-energy_table(model, x, z)))


def exact_joint(model, x=None, z=None) -> np.ndarray:
    """p(v, h | context) over all state pairs, normalized by the enumerated Z."""
    neg_e = -energy_table(model, x, z)
    return np.exp(neg_e - logsumexp(neg_e))


def exact_visible_marginal(model, x=None, z=None) -> np.ndarray:
    """p(v | context) for every visible state, in enumerate_states order."""
    neg_e = -energy_table(model, x, z)
    return np.exp(logsumexp(neg_e, axis=1) - logsumexp(neg_e))


def enumeration_hidden_means(model, v, x=None, z=None) -> np.ndarray:
    """E[h | v, context] by summing over all hidden states (no factorization)."""
    _check_enumerable(model)
    a, b, w = effective_parameters(model, x, z)
    v = _single(v, model.n_visible_, "v")
    H = enumerate_states(model.n_hidden_)
    scores = H @ (b + w.T @ v)
    p = np.exp(scores - logsumexp(scores))
    return p @ H


def enumeration_visible_means(model, h, x=None, z=None) -> np.ndarray:
    """E[v | h, context] by summing over all visible states."""
    _check_enumerable(model)
    a, b, w = effective_parameters(model, x, z)
    h = _single(h, model.n_hidden_, "h")
    V = enumerate_states(model.n_visible_)
    scores = V @ (a + w @ h)
    p = np.exp(scores - logsumexp(scores))
    return p @ V


def _context_rows(model, n, X, Z):
    """Per-row (x, z) pairs (or Nones), validated against the model kind."""
    if model.kind == "rbm":
        if X is not None or Z is not None:
            raise ValueError("plain RBM takes no context")
        return [(None, None)] * n
    if model.kind == "crbm":
        if Z is not None:
            raise ValueError("conditional RBM takes no feature input")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape != (n, model.n_context_):
            raise ValueError("X must hold one context row per visible row")
        return [(X[i], None) for i in range(n)]
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if X.shape != (n, model.n_context_) or Z.shape != (n, model.n_features_):
        raise ValueError("X and Z must hold one row per visible row")
    return [(X[i], Z[i]) for i in range(n)]


def _table_cache_key(x, z):
    return (
        None if x is None else x.tobytes(),
        None if z is None else z.tobytes(),
    )


def exact_nll(model, V, X=None, Z=None) -> float:
    """Mean -log p(v | context) over the rows of V, by enumeration."""
    _check_enumerable(model)
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    n = V.shape[0]
    ctx = _context_rows(model, n, X, Z)
    Hs = enumerate_states(model.n_hidden_)
    cache: dict = {}
    total = 0.0
    for i in range(n):
        x, z = ctx[i]
        key = _table_cache_key(x, z)
        if key not in cache:
            a, b, w = effective_parameters(model, x, z)
            neg_e = -energy_table(model, x, z)
            cache[key] = (a, b, w, logsumexp(neg_e))
        a, b, w, log_z = cache[key]
        v = V[i]
        scores = Hs @ (b + w.T @ v)
        log_unnorm = float(v @ a + logsumexp(scores))
        total += log_z - log_unnorm
    return total / n


def _expected_stats(model, Vs, HM, w, x, z):
    """E[d(-E)/d theta] under weights ``w`` over visible rows ``Vs``.

    ``HM[i]`` must be E[h | Vs[i], context] (computed by enumeration).  The
    context is one fixed (x, z) pair shared by all rows.
    """
    wV = np.einsum("n,ni->i", w, Vs)
    wH = np.einsum("n,nj->j", w, HM)
    if model.kind == "rbm":
        return {
            "weights_": np.einsum("n,ni,nj->ij", w, Vs, HM),
            "visible_bias_": wV,
            "hidden_bias_": wH,
        }
    if model.kind == "crbm":
        return {
            "weights_": np.einsum("n,ni,nj->ij", w, Vs, HM),
            "visible_bias_": wV,
            "hidden_bias_": wH,
            "context_visible_": np.outer(x, wV),
            "context_hidden_": np.outer(x, wH),
        }
    sz = np.einsum("k,kf->f", z, model.w_feat_)
    sv = Vs @ model.w_vis_
    sh = HM @ model.w_hid_
    px = np.einsum("k,kf->f", x, model.a_ctx_)
    pz = np.einsum("k,kf->f", z, model.a_feat_)
    qx = np.einsum("k,kf->f", x, model.b_ctx_)
    qz = np.einsum("k,kf->f", z, model.b_feat_)
    return {
        "visible_bias_": wV,
        "hidden_bias_": wH,
        "w_vis_": np.einsum("n,ni,nf->if", w, Vs, sh * sz),
        "w_hid_": np.einsum("n,nj,nf->jf", w, HM, sv * sz),
        "w_feat_": np.outer(z, np.einsum("n,nf->f", w, sv * sh)),
        "a_vis_": np.outer(wV, px * pz),
        "a_ctx_": np.outer(x, (wV @ model.a_vis_) * pz),
        "a_feat_": np.outer(z, (wV @ model.a_vis_) * px),
        "b_hid_": np.outer(wH, qx * qz),
        "b_ctx_": np.outer(x, (wH @ model.b_hid_) * qz),
        "b_feat_": np.outer(z, (wH @ model.b_hid_) * qx),
    }


def exact_nll_gradient(model, V, X=None, Z=None) -> dict[str, np.ndarray]:
    """Exact gradient of mean NLL *descent* direction (i.e. -dNLL/dtheta).

    Returns positive-phase minus negative-phase expected statistics, the same
    orientation a contrastive-divergence update estimates, so the two can be
    compared by inner product.
    """
    _check_enumerable(model)
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    n = V.shape[0]
    ctx = _context_rows(model, n, X, Z)
    Vall = enumerate_states(model.n_visible_)
    Hs = enumerate_states(model.n_hidden_)
    cache: dict = {}
    grads: dict[str, np.ndarray] = {}
    for i in range(n):
        x, z = ctx[i]
        key = _table_cache_key(x, z)
        if key not in cache:
            a, b, w = effective_parameters(model, x, z)
            neg_e = -energy_table(model, x, z)
            p_v = np.exp(logsumexp(neg_e, axis=1) - logsumexp(neg_e))
            scores_all = (b + Vall @ w) @ Hs.T
            p_h = np.exp(scores_all - logsumexp(scores_all, axis=1)[:, None])
            cache[key] = (a, b, w, p_v, p_h @ Hs)
        a, b, w, p_v, hm_all = cache[key]
        v = V[i]
        # positive phase: this row, hidden means by enumeration
        s = Hs @ (b + w.T @ v)
        ph = np.exp(s - logsumexp(s))
        hm_pos = (ph @ Hs)[None, :]
        pos = _expected_stats(model, v[None, :], hm_pos, np.array([1.0]), x, z)
        # negative phase: all visible states weighted by p(v | context)
        neg = _expected_stats(model, Vall, hm_all, p_v, x, z)
        for name in pos:
            delta = pos[name] - neg[name]
            grads[name] = grads.get(name, 0.0) + delta
    return {name: g / n for name, g in grads.items()}


def effective_rbm(model, x=None, z=None) -> RBM:
    """The plain RBM a conditional model collapses to for one clamped context."""
    a, b, w = effective_parameters(model, x, z)
    return RBM.from_arrays(w, a, b)


def contract_features(model: FactoredGatedRBM, z) -> ConditionalRBM:
    """Collapse a gated model's feature input: the conditional RBM seen at fixed z.

    With z held constant every factored triple reduces to a single matrix, so
    the result is an exactly equivalent plain conditional RBM over (v, x).
    """
    if model.kind != "fgcrbm":
        raise ValueError("contract_features expects the factored gated kind")
    z = _single(z, model.n_features_, "z")
    gate_w = np.einsum("k,kf->f", z, model.w_feat_)
    gate_a = np.einsum("k,kf->f", z, model.a_feat_)
    gate_b = np.einsum("k,kf->f", z, model.b_feat_)
    weights = np.einsum("if,f,jf->ij", model.w_vis_, gate_w, model.w_hid_)
    ctx_vis = np.einsum("kf,f,if->ki", model.a_ctx_, gate_a, model.a_vis_)
    ctx_hid = np.einsum("kf,f,jf->kj", model.b_ctx_, gate_b, model.b_hid_)
    return ConditionalRBM.from_arrays(
        weights,
        model.visible_bias_.copy(),
        model.hidden_bias_.copy(),
        ctx_vis,
        ctx_hid,
    )
