"""Vectorized objective evaluation over stacks of candidate distributions.

These mirror the single-point evaluators in :mod:`wiretap_csi.channel` but
take arrays with a leading batch axis, so grid searches can score millions of
points without building a JointPmf for each.
"""

from __future__ import annotations

import numpy as np

from .info import ZERO_FLOOR


def plogp_sum(p: np.ndarray, axis) -> np.ndarray:
    """-sum p log2 p along ``axis`` with entries below 1e-15 treated as zero."""
    safe = np.where(p > ZERO_FLOOR, p, 1.0)
    return -np.sum(np.where(p > ZERO_FLOOR, p * np.log2(safe), 0.0), axis=axis)


def csi1_terms(p_s: np.ndarray, w_y: np.ndarray, w_z: np.ndarray, joint_vx: np.ndarray):
    """Return (I(V;Y|S), I(V;Z|S), H(S|Z)) for a batch of p(v,x|s).

    ``joint_vx`` has shape (N, S, V, X); ``w_y`` is p(y|x,s) with shape
    (S, X, Y) and ``w_z`` likewise.
    """
    a = _cond_mi_given_s(p_s, w_y, joint_vx)
    b = _cond_mi_given_s(p_s, w_z, joint_vx)
    p_xs = joint_vx.sum(axis=2)  # (N, S, X)
    c = _h_s_given_z(p_s, w_z, p_xs)
    return a, b, c


def _cond_mi_given_s(p_s, w, joint_vx):
    # per state: I(V;Out|S=s) = H(V|s) + H(Out|s) - H(V,Out|s)
    p_v_out = np.einsum("nsvx,sxo->nsvo", joint_vx, w)
    h_v = plogp_sum(joint_vx.sum(axis=3), axis=2)
    h_o = plogp_sum(p_v_out.sum(axis=2), axis=2)
    h_vo = plogp_sum(p_v_out, axis=(2, 3))
    return np.clip((h_v + h_o - h_vo) @ p_s, 0.0, None)


def _h_s_given_z(p_s, w_z, p_xs):
    p_sz = p_s[None, :, None] * np.einsum("nsx,sxz->nsz", p_xs, w_z)
    return np.clip(plogp_sum(p_sz, axis=(1, 2)) - plogp_sum(p_sz.sum(axis=1), axis=1), 0.0, None)


def csi1_objective(p_s, w_y, w_z, joint_vx) -> np.ndarray:
    """min{I(V;Y|S) - I(V;Z|S) + H(S|Z), I(V;Y|S)} for a batch of p(v,x|s)."""
    a, b, c = csi1_terms(p_s, w_y, w_z, joint_vx)
    return np.minimum(a - b + c, a)


def csi2_terms(p_s, w_y, w_z, p_v: np.ndarray, p_x_given_vs: np.ndarray):
    """Return (H(S|Z,V), I(V;Y|S)) for a batch with V independent of S.

    ``p_v`` has shape (N, V) and ``p_x_given_vs`` shape (N, V, S, X).
    """
    p_sz_v = p_s[None, None, :, None] * np.einsum("nvsx,sxz->nvsz", p_x_given_vs, w_z)
    h_s_zv = plogp_sum(p_sz_v, axis=(2, 3)) - plogp_sum(p_sz_v.sum(axis=2), axis=2)
    h_szv = np.clip((p_v * h_s_zv).sum(axis=1), 0.0, None)
    q = np.einsum("nvsx,sxy->nvsy", p_x_given_vs, w_y)  # p(y|v,s)
    mix = np.einsum("nv,nvsy->nsy", p_v, q)
    h_y_s = plogp_sum(mix, axis=2) @ p_s
    h_y_vs = np.einsum("nv,nvs->n", p_v, plogp_sum(q, axis=3) * p_s[None, None, :])
    return h_szv, np.clip(h_y_s - h_y_vs, 0.0, None)


def csi2_objective(p_s, w_y, w_z, p_v, p_x_given_vs) -> np.ndarray:
    h, i = csi2_terms(p_s, w_y, w_z, p_v, p_x_given_vs)
    return np.minimum(h, i)


def mutual_information_rows(p_x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """I(X;Out) for a batch of input pmfs ``p_x`` (N, X) through channel ``w`` (X, Out)."""
    out = p_x @ w
    return np.clip(plogp_sum(out, axis=1) - p_x @ plogp_sum(w, axis=1), 0.0, None)
