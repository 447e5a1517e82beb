"""Guidance rules that combine conditional and unconditional scores.

Every rule has the form ``S(x, c) + [S(x, c) - S(x)] * phi_t(|S(x, c) - S(x)|)``.
Standard CFG is a constant ``phi = omega``; the other kinds make the weight
depend on time, on the score-difference norm, or on both.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .mixture import MixtureSpec, gamma, ou_scale_and_variance
from .scores import ScoreEval, cond_score, score_diff

__all__ = [
    "GuidanceKind",
    "GuidanceSpec",
    "phi_weight",
    "guidance_factor",
    "guidance_term",
    "guided_score",
    "regime2_inertness_bound",
    "guidance_violations",
]


class GuidanceKind(str, enum.Enum):
    NONE = "none"
    STANDARD = "standard"
    POWER_LAW = "power_law"
    RESCALED_POWER_LAW = "rescaled_power_law"
    LIMITED_INTERVAL = "limited_interval"
    WEIGHT_TABLE = "weight_table"
    INTERRUPTED = "interrupted"


def _finite(v):
    return isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) and math.isfinite(v)


def guidance_violations(kind, omega=0.0, alpha=0.0, gamma_exp=1.0, interval=None,
                        weight_table=None, switch_time=0.0, t_f=None) -> list[ValidationError]:
    """Every invariant violation of a would-be :class:`GuidanceSpec`.

    ``t_f`` is optional; when given, time windows are also checked against
    the integration horizon.
    """
    try:
        kind = GuidanceKind(kind)
    except ValueError:
        return [ValidationError("guidance_kind_known", f"unknown guidance kind {kind!r}")]
    out = []
    if not (_finite(omega) and omega >= 0):
        out.append(ValidationError("omega_nonnegative", f"omega must be >= 0, got {omega!r}"))
    if kind is GuidanceKind.POWER_LAW and not (_finite(alpha) and alpha > -1):
        out.append(ValidationError("alpha_gt_minus_one", f"power-law exponent alpha must be > -1, got {alpha!r}"))
    if kind is GuidanceKind.RESCALED_POWER_LAW and not (_finite(gamma_exp) and gamma_exp > 0):
        out.append(ValidationError("gamma_positive", f"rescaled power-law exponent gamma must be > 0, got {gamma_exp!r}"))
    if kind is GuidanceKind.LIMITED_INTERVAL:
        ok = interval is not None and len(interval) == 2 and all(_finite(v) for v in interval)
        if not ok or not (0 <= interval[0] < interval[1]):
            out.append(ValidationError("interval_ordered", f"interval must satisfy 0 <= t1 < t2, got {interval!r}"))
        elif t_f is not None and interval[1] > t_f + 1e-12:
            out.append(ValidationError("interval_within_horizon", f"interval end {interval[1]} exceeds t_f={t_f}"))
    if kind is GuidanceKind.WEIGHT_TABLE:
        rows = list(weight_table or ())
        if not rows:
            out.append(ValidationError("weight_table_nonempty", "weight_table needs at least one (t_start, omega) row"))
        else:
            starts = [r[0] for r in rows]
            vals = [r[1] for r in rows]
            if not all(_finite(v) for v in starts + vals):
                out.append(ValidationError("weight_table_finite", "weight_table entries must be finite numbers"))
            elif starts[0] != 0 or any(b <= a for a, b in zip(starts, starts[1:])):
                out.append(ValidationError(
                    "weight_table_ordered", "weight_table start times must begin at 0 and strictly increase"))
            elif any(v < 0 for v in vals):
                out.append(ValidationError("weight_table_nonnegative", "weight_table weights must be >= 0"))
    if kind is GuidanceKind.INTERRUPTED:
        if not (_finite(switch_time) and switch_time >= 0):
            out.append(ValidationError("switch_time_nonnegative", f"switch_time must be >= 0, got {switch_time!r}"))
        elif t_f is not None and switch_time >= t_f:
            out.append(ValidationError("switch_time_below_horizon", f"switch_time {switch_time} must be < t_f={t_f}"))
    return out


@dataclass(frozen=True)
class GuidanceSpec:
    """Which guidance rule to apply and its parameters.

    Only the fields relevant to ``kind`` are read: ``omega`` by all kinds
    except ``NONE`` and ``WEIGHT_TABLE``, ``alpha`` by ``POWER_LAW``,
    ``gamma_exp`` by ``RESCALED_POWER_LAW``, ``interval = (t1, t2)`` by
    ``LIMITED_INTERVAL`` (active on ``t1 <= t < t2``), ``weight_table`` rows
    ``(t_start, omega_t)`` by ``WEIGHT_TABLE``, and ``switch_time`` by
    ``INTERRUPTED`` (active while forward time ``t > switch_time``).
    """

    kind: GuidanceKind = GuidanceKind.STANDARD
    omega: float = 0.0
    alpha: float = 0.0
    gamma_exp: float = 1.0
    interval: tuple | None = None
    weight_table: tuple | None = None
    switch_time: float = 0.0

    def __post_init__(self):
        problems = guidance_violations(self.kind, self.omega, self.alpha, self.gamma_exp,
                                       self.interval, self.weight_table, self.switch_time)
        if problems:
            raise problems[0]
        object.__setattr__(self, "kind", GuidanceKind(self.kind))
        if self.interval is not None:
            object.__setattr__(self, "interval", tuple(float(v) for v in self.interval))
        if self.weight_table is not None:
            object.__setattr__(self, "weight_table", tuple((float(a), float(b)) for a, b in self.weight_table))

    @classmethod
    def none(cls):
        return cls(GuidanceKind.NONE)

    @classmethod
    def standard(cls, omega):
        return cls(GuidanceKind.STANDARD, omega)

    @classmethod
    def power_law(cls, omega, alpha):
        return cls(GuidanceKind.POWER_LAW, omega, alpha=alpha)

    @classmethod
    def rescaled_power_law(cls, omega, gamma_exp):
        return cls(GuidanceKind.RESCALED_POWER_LAW, omega, gamma_exp=gamma_exp)

    @classmethod
    def limited_interval(cls, omega, t1, t2):
        return cls(GuidanceKind.LIMITED_INTERVAL, omega, interval=(t1, t2))

    @classmethod
    def table(cls, rows):
        return cls(GuidanceKind.WEIGHT_TABLE, weight_table=tuple(rows))

    @classmethod
    def interrupted(cls, omega, switch_time):
        return cls(GuidanceKind.INTERRUPTED, omega, switch_time=switch_time)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "omega": self.omega}
        if self.kind is GuidanceKind.POWER_LAW:
            d["alpha"] = self.alpha
        elif self.kind is GuidanceKind.RESCALED_POWER_LAW:
            d["gamma_exp"] = self.gamma_exp
        elif self.kind is GuidanceKind.LIMITED_INTERVAL:
            d["interval"] = list(self.interval)
        elif self.kind is GuidanceKind.WEIGHT_TABLE:
            d["weight_table"] = [list(r) for r in self.weight_table]
        elif self.kind is GuidanceKind.INTERRUPTED:
            d["switch_time"] = self.switch_time
        return d

    @classmethod
    def from_dict(cls, data: dict) -> GuidanceSpec:
        return cls(
            kind=data.get("kind", "standard"),
            omega=data.get("omega", 0.0),
            alpha=data.get("alpha", 0.0),
            gamma_exp=data.get("gamma_exp", 1.0),
            interval=tuple(data["interval"]) if data.get("interval") is not None else None,
            weight_table=tuple(tuple(r) for r in data["weight_table"]) if data.get("weight_table") else None,
            switch_time=data.get("switch_time", 0.0),
        )


def _rescale(t, gamma_exp):
    s, var = ou_scale_and_variance(t)
    return (s * var) ** gamma_exp


def _table_lookup(t, rows):
    starts = np.array([r[0] for r in rows])
    vals = np.array([r[1] for r in rows])
    return vals[np.searchsorted(starts, np.asarray(t, dtype=float), side="right") - 1]


def phi_weight(s, t, g: GuidanceSpec, sched_scale=None):
    """Guidance weight ``phi_t(s)`` for score-difference norm ``s``.

    ``sched_scale`` is the ``(s(t) sigma2_ou(t))**gamma`` factor of the
    rescaled power law; it is computed from ``t`` when not supplied.  For a
    power law with negative exponent the weight is infinite at ``s = 0``;
    use :func:`guidance_factor` when the product ``s * phi`` is what matters.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValidationError("norm_nonnegative", "score-difference norm must be >= 0")
    t = np.asarray(t, dtype=float)
    shape = np.broadcast_shapes(s.shape, t.shape)
    k = g.kind
    if k is GuidanceKind.NONE:
        return np.zeros(shape)
    if k is GuidanceKind.STANDARD:
        return np.full(shape, g.omega)
    if k is GuidanceKind.POWER_LAW:
        with np.errstate(divide="ignore"):
            return np.broadcast_to(g.omega * s ** g.alpha, shape).copy()
    if k is GuidanceKind.RESCALED_POWER_LAW:
        scale = _rescale(t, g.gamma_exp) if sched_scale is None else np.asarray(sched_scale, dtype=float)
        return np.broadcast_to(g.omega * s ** g.gamma_exp * scale, shape).copy()
    if k is GuidanceKind.LIMITED_INTERVAL:
        t1, t2 = g.interval
        return np.broadcast_to(np.where((t >= t1) & (t < t2), g.omega, 0.0), shape).copy()
    if k is GuidanceKind.WEIGHT_TABLE:
        return np.broadcast_to(_table_lookup(t, g.weight_table), shape).copy()
    if k is GuidanceKind.INTERRUPTED:
        return np.broadcast_to(np.where(t > g.switch_time, g.omega, 0.0), shape).copy()
    raise ValidationError("guidance_kind_known", f"unhandled guidance kind {k}")


def guidance_factor(s, t, g: GuidanceSpec):
    """``phi_t(s)`` with the ``s = 0`` singularity of negative powers set to 0.

    Multiplying the score difference by this factor gives the guidance term;
    at ``s = 0`` the term is the zero vector for every kind.
    """
    s = np.asarray(s, dtype=float)
    phi = phi_weight(s, t, g)
    if g.kind is GuidanceKind.POWER_LAW and g.alpha < 0:
        phi = np.where(s > 0, phi, 0.0)
    return phi


def guidance_term(x, t, c, spec: MixtureSpec, g: GuidanceSpec):
    """Return ``([S(x,c) - S(x)] * phi, |S(x,c) - S(x)|)``."""
    diff, norm = score_diff(x, t, c, spec)
    phi = guidance_factor(norm, t, g)
    return diff * (phi if np.ndim(phi) == 0 else phi[..., None]), norm


def guided_score(x, t, c, spec: MixtureSpec, g: GuidanceSpec) -> ScoreEval:
    """Conditional score plus the guidance term for rule ``g``."""
    base = cond_score(x, t, c, spec)
    if g.kind is GuidanceKind.NONE:
        return base
    term, _ = guidance_term(x, t, c, spec, g)
    return ScoreEval(base.vector + term, base.aux_tanh_arg)


def regime2_inertness_bound(t, spec: MixtureSpec, arg=None):
    """Bound on the guidance-term scale once trajectories have committed.

    Returns ``(|m| e^{-t} / gamma) * exp(-2 a)`` with ``a = d e^{-2t} / gamma``,
    the saturating argument evaluated at the unguided mean
    ``q = sqrt(d) e^{-t}``.  Passing ``arg`` substitutes a trajectory's own
    ``x.m e^{-t} / gamma``.  Because ``1 - tanh(a) <= 2 exp(-2a)``, the
    standard-guidance term norm on such a trajectory is at most
    ``2 * omega`` times this value.
    """
    t = np.asarray(t, dtype=float)
    g = gamma(t, spec.sigma2)
    e = np.exp(-t)
    m_norm = float(np.linalg.norm(spec.mean_vectors[0]))
    if arg is None:
        arg = spec.dim * e * e / g
    return m_norm * e / g * np.exp(-2.0 * np.asarray(arg, dtype=float))
