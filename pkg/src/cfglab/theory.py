"""Closed-form predictions for the symmetric two-Gaussian mixture.

These are the analytic oracles that Monte Carlo ensembles are checked
against: the unguided mean of ``q``, the mean after guidance is switched
off, the effective potential of the projected dynamics, and the map from a
discrete DDPM step to continuous Ornstein-Uhlenbeck time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .mixture import speciation_time

__all__ = [
    "PotentialEval",
    "mean_closed_form",
    "interrupted_mean_prediction",
    "interrupted_final_mean",
    "effective_potential",
    "projected_drift_regime1",
    "mean_upper_bound",
    "ddpm_time_reparam",
    "ln_cosh",
]

_LN2 = math.log(2.0)


def _check_dim(d):
    if np.any(np.asarray(d) < 1):
        raise ValidationError("dim_positive", f"dimension must be >= 1, got {d}")


def _check_sigma2(sigma2):
    if np.any(np.asarray(sigma2) <= 0):
        raise ValidationError("sigma2_positive", f"sigma2 must be > 0, got {sigma2}")


def ln_cosh(x):
    """``log(cosh(x))`` without overflow for large ``|x|``."""
    a = np.abs(np.asarray(x, dtype=float))
    return a + np.log1p(np.exp(-2.0 * a)) - _LN2


def mean_closed_form(q0, t_f, tau, d, sigma2):
    """Exact unguided mean of ``q`` at backward time ``tau`` started from ``q0``.

    ``q0`` is the mean at ``tau = 0`` (forward time ``t_f``).  Solves the
    linear mean equation of the ``omega = 0`` projected dynamics with the
    exact ``gamma(t)``, so no Regime-I approximation is involved.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0) or np.any(tau > t_f * (1 + 1e-12)):
        raise ValidationError("tau_in_horizon", f"tau must lie in [0, {t_f}], got {tau}")
    _check_dim(d)
    _check_sigma2(sigma2)
    tau = np.minimum(tau, t_f)
    tail = (sigma2 - 1.0) * math.exp(-2.0 * t_f)
    denom = 1.0 + tail
    homog = q0 * np.exp(tau) * (np.exp(-2.0 * tau) + tail) / denom
    forced = math.sqrt(d) * np.exp(-(t_f - tau)) * (-np.expm1(-2.0 * tau)) / denom
    return homog + forced


def interrupted_mean_prediction(t, t1, delta_q, d, sigma2):
    """Mean of ``q`` at forward time ``t <= t1`` after guidance stops at ``t1``.

    ``delta_q`` is the overshoot of the ensemble mean over ``sqrt(d) e^{-t1}``
    measured at the switch time.  The excess then evolves under the
    homogeneous unguided dynamics.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t > t1 + 1e-12):
        raise ValidationError("t_before_switch", f"t must be <= t1={t1}, got {t}")
    if np.any(t < 0):
        raise ValidationError("time_nonnegative", f"t must be >= 0, got {t}")
    _check_dim(d)
    _check_sigma2(sigma2)
    growth = np.exp(t - t1) * (1.0 + (sigma2 - 1.0) * np.exp(-2.0 * t)) / (
        1.0 + (sigma2 - 1.0) * math.exp(-2.0 * t1))
    return math.sqrt(d) * np.exp(-t) + delta_q * growth


def interrupted_final_mean(delta_q, d, sigma2):
    """``t = 0`` mean when guidance stops exactly at the speciation time."""
    _check_dim(d)
    _check_sigma2(sigma2)
    r = sigma2 / d
    return math.sqrt(d) * (1.0 + delta_q * r / (1.0 + (sigma2 - 1.0) / d))


@dataclass(frozen=True)
class PotentialEval:
    v_class: float
    v_extra: float
    v_total: float


def effective_potential(q, t, d, omega, c=1) -> PotentialEval:
    """Potential whose negative ``q``-gradient is the Regime-I guided drift.

    With ``e = exp(-(t - t_s))``::

        v_class = q**2 / 2 - 2 c q e
        v_extra = -c q e + log(cosh(q e))
        v_total = v_class + 2 omega v_extra

    The extra part enters with weight ``2 omega`` because the drift carries
    the guided score with a factor 2; only then does ``-dV/dq`` equal
    :func:`projected_drift_regime1`.
    """
    if c not in (1, -1):
        raise ValidationError("label_range", f"label must be +1 or -1, got {c!r}")
    q = np.asarray(q, dtype=float)
    e = np.exp(-(np.asarray(t, dtype=float) - speciation_time(d)))
    x = q * e
    v_class = 0.5 * q * q - 2.0 * c * x
    # |x| - c x is exactly 0 on the target side, where the two terms would cancel
    ax = np.abs(x)
    v_extra = (ax - c * x) + np.log1p(np.exp(-2.0 * ax)) - _LN2
    return PotentialEval(v_class, v_extra, v_class + 2.0 * omega * v_extra)


def projected_drift_regime1(q, t, d, omega, c=1):
    """Drift of ``q`` in backward time with ``gamma`` set to 1."""
    e = np.exp(-(np.asarray(t, dtype=float) - speciation_time(d)))
    q = np.asarray(q, dtype=float)
    return -q + 2.0 * e * (c + omega * (c - np.tanh(q * e)))


def mean_upper_bound(t, d, omega):
    """Envelope ``sqrt(d) e^{-t} (1 + omega)`` for the guided mean of ``q``."""
    if np.any(np.asarray(t) < 0):
        raise ValidationError("time_nonnegative", f"t must be >= 0, got {t}")
    _check_dim(d)
    return math.sqrt(d) * np.exp(-np.asarray(t, dtype=float)) * (1.0 + omega)


def ddpm_time_reparam(t_prime, beta_start=1e-4, beta_end=2e-2, n_steps=1000):
    """Continuous OU time ``-log(alpha_bar(t')) / 2`` of DDPM step ``t'``.

    ``alpha_bar(t') = prod_{s<=t'} (1 - beta_s)`` with ``beta`` linear from
    ``beta_start`` to ``beta_end`` over ``n_steps`` steps.
    """
    if isinstance(n_steps, bool) or not isinstance(n_steps, (int, np.integer)) or n_steps < 1:
        raise ValidationError("steps_positive", f"n_steps must be an integer >= 1, got {n_steps!r}")
    tp = np.asarray(t_prime)
    if not np.issubdtype(tp.dtype, np.integer) or np.any(tp < 0) or np.any(tp > n_steps):
        raise ValidationError("step_in_range", f"t' must be an integer in [0, {n_steps}], got {t_prime}")
    betas = np.linspace(beta_start, beta_end, n_steps)
    cum = np.concatenate([[0.0], np.cumsum(np.log1p(-betas))])
    out = -0.5 * cum[tp]
    return float(out) if out.ndim == 0 else out
