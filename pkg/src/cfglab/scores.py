"""Exact conditional and unconditional scores of noised Gaussian mixtures.

All functions accept a single point of shape ``(d,)`` or a batch of shape
``(n, d)``; ``t`` may be a scalar or broadcast against the batch axis.  At
time ``t`` every component is ``N(m_i exp(-t), gamma(t) I)``, so the
conditional score is that of one Gaussian and the unconditional score is a
softmax-weighted average over components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .errors import ValidationError
from .mixture import MixtureKind, MixtureSpec, gamma

__all__ = [
    "ScoreEval",
    "cond_score",
    "uncond_score",
    "score_diff",
    "log_density",
    "pair_reduction_check",
    "label_minus_tanh",
]


@dataclass(frozen=True)
class ScoreEval:
    """A score value plus the saturating argument that controls guidance.

    For the symmetric pair ``aux_tanh_arg`` is ``x.m exp(-t) / gamma``.  For
    the other kinds it is half the gap between the two largest component
    logits, which reduces to the same quantity when ``m1 = -m2``.
    """

    vector: np.ndarray
    aux_tanh_arg: np.ndarray | float


def label_minus_tanh(arg, c):
    """``c - tanh(arg)`` for ``c = +-1`` without cancellation.

    Uses the identity ``c - tanh(a) = 2c * sigmoid(-2ca)``, accurate when the
    result is exponentially small and free of overflow for any finite ``a``.
    """
    return 2.0 * c * expit(-2.0 * c * np.asarray(arg, dtype=float))


def _col(a):
    a = np.asarray(a, dtype=float)
    return a if a.ndim == 0 else a[..., None]


def _prepare(x, t, spec: MixtureSpec):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (spec.dim,):
        raise ValidationError("dimension_match", f"x has shape {x.shape}, mixture dim is {spec.dim}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("time_nonnegative", f"t must be >= 0, got {t}")
    g = gamma(t, spec.sigma2)
    return x, np.exp(-t), g


def _component_logits(x, e, g, spec: MixtureSpec):
    """Component log-weights at ``x``, up to a component-independent constant."""
    means = spec.component_means
    sq = np.einsum("kd,kd->k", means, means)
    e, g = _col(e), _col(g)
    return ((x @ means.T) * e - 0.5 * sq * e * e) / g


def _softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


def _half_top_gap(logits):
    top2 = np.sort(logits, axis=-1)[..., -2:]
    return 0.5 * (top2[..., 1] - top2[..., 0])


def _symmetric_arg(x, e, g, spec):
    return (x @ spec.mean_vectors[0]) * e / g


def cond_score(x, t, c, spec: MixtureSpec) -> ScoreEval:
    """Score of the single Gaussian selected by class label ``c``."""
    x, e, g = _prepare(x, t, spec)
    mc = spec.class_mean(c)
    vec = (mc * _col(e) - x) / _col(g)
    if spec.kind is MixtureKind.SYMMETRIC_PAIR:
        arg = _symmetric_arg(x, e, g, spec)
    else:
        arg = _half_top_gap(_component_logits(x, e, g, spec))
    return ScoreEval(vec, arg)


def uncond_score(x, t, spec: MixtureSpec) -> ScoreEval:
    """Score of the full mixture.

    The symmetric pair uses the ``tanh`` closed form; the other kinds use a
    max-subtracted softmax over component logits, so arbitrarily large
    arguments neither overflow nor produce NaN.
    """
    x, e, g = _prepare(x, t, spec)
    if spec.kind is MixtureKind.SYMMETRIC_PAIR:
        m = spec.mean_vectors[0]
        arg = _symmetric_arg(x, e, g, spec)
        vec = (-x + m * _col(e * np.tanh(arg))) / _col(g)
        return ScoreEval(vec, arg)
    logits = _component_logits(x, e, g, spec)
    post_mean = _softmax(logits) @ spec.component_means
    vec = (-x + post_mean * _col(e)) / _col(g)
    return ScoreEval(vec, _half_top_gap(logits))


def score_diff(x, t, c, spec: MixtureSpec):
    """Return ``(S(x, c) - S(x), |S(x, c) - S(x)|)``.

    Computed from the posterior over components rather than by subtracting
    the two scores, so the exponentially small values deep in a class are
    resolved to full relative precision.
    """
    x, e, g = _prepare(x, t, spec)
    k = spec.component_index(c)
    if spec.kind is MixtureKind.SYMMETRIC_PAIR:
        m = spec.mean_vectors[0]
        coef = (e / g) * label_minus_tanh(_symmetric_arg(x, e, g, spec), c)
        vec = m * _col(coef)
        return vec, np.abs(coef) * np.linalg.norm(m)
    means = spec.component_means
    w = _softmax(_component_logits(x, e, g, spec))
    w_other = np.delete(w, k, axis=-1)
    gaps = means[k] - np.delete(means, k, axis=0)
    vec = (w_other @ gaps) * _col(e / g)
    return vec, np.linalg.norm(vec, axis=-1)


def log_density(x, t, spec: MixtureSpec):
    """Normalised ``log P_t(x)`` by log-sum-exp over full Gaussian log-pdfs.

    Shares no code path with the score functions, so its numerical gradient
    is an independent check on them.
    """
    x = np.asarray(x, dtype=float)
    t = float(t)
    var = 1.0 + (spec.sigma2 - 1.0) * np.exp(-2.0 * t)
    centres = spec.component_means * np.exp(-t)
    sq = ((x[..., None, :] - centres) ** 2).sum(axis=-1)
    comp = -0.5 * sq / var - 0.5 * spec.dim * np.log(2.0 * np.pi * var)
    return logsumexp(comp, axis=-1, b=np.asarray(spec.weights))


def pair_reduction_check(spec_general: MixtureSpec, spec_symmetric: MixtureSpec, x, t) -> float:
    """Max-norm gap between general-pair and symmetric-pair unconditional scores.

    Requires ``spec_general`` to have ``m1 = -m2 = m`` with ``m`` the symmetric
    pair's mean; the two must agree to rounding error.
    """
    if spec_general.kind is not MixtureKind.GENERAL_PAIR or spec_symmetric.kind is not MixtureKind.SYMMETRIC_PAIR:
        raise ValidationError("spec_kinds", "expected a general pair and a symmetric pair")
    m = spec_symmetric.mean_vectors[0]
    m1, m2 = spec_general.mean_vectors
    if (spec_general.dim != spec_symmetric.dim or spec_general.sigma2 != spec_symmetric.sigma2
            or not np.array_equal(m1, m) or not np.array_equal(m2, -m)):
        raise ValidationError("spec_mismatch", "general pair must have m1 = -m2 = m and the same sigma2")
    a = uncond_score(x, t, spec_general).vector
    b = uncond_score(x, t, spec_symmetric).vector
    return float(np.max(np.abs(a - b))) if np.size(a) else 0.0
