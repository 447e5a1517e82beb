"""Gaussian mixture data distributions and the Ornstein-Uhlenbeck clock.

The forward process is ``dx = -x dt + sqrt(2) dB``; a point started at ``a``
is Gaussian at time ``t`` with mean ``a exp(-t)`` and variance
``delta(t) = 1 - exp(-2t)``.  A component of variance ``sigma2`` therefore has
variance ``gamma(t, sigma2) = 1 + (sigma2 - 1) exp(-2t)`` at time ``t``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "MixtureKind",
    "MixtureSpec",
    "Schedule",
    "delta",
    "gamma",
    "speciation_time",
    "ou_scale_and_variance",
    "mixture_violations",
    "schedule_violations",
]

ORTHOGONALITY_RTOL = 1e-9
WEIGHT_ATOL = 1e-12


class MixtureKind(str, enum.Enum):
    SYMMETRIC_PAIR = "symmetric_pair"
    GENERAL_PAIR = "general_pair"
    ORTHOGONAL_QUAD = "orthogonal_quad"


_N_COMPONENTS = {
    MixtureKind.SYMMETRIC_PAIR: 2,
    MixtureKind.GENERAL_PAIR: 2,
    MixtureKind.ORTHOGONAL_QUAD: 4,
}
_N_VECTORS = {
    MixtureKind.SYMMETRIC_PAIR: 1,
    MixtureKind.GENERAL_PAIR: 2,
    MixtureKind.ORTHOGONAL_QUAD: 2,
}


def _check_time(t, name="t"):
    if np.any(np.asarray(t) < 0):
        raise ValidationError("time_nonnegative", f"{name} must be >= 0, got {t}")


def delta(t):
    """Variance ``1 - exp(-2t)`` of the forward noise kernel at time ``t``."""
    _check_time(t)
    return -np.expm1(-2.0 * np.asarray(t, dtype=float))


def gamma(t, sigma2):
    """Variance of one noised mixture component, ``1 + (sigma2 - 1) exp(-2t)``."""
    _check_time(t)
    if np.any(np.asarray(sigma2) <= 0):
        raise ValidationError("sigma2_positive", f"sigma2 must be > 0, got {sigma2}")
    return 1.0 + (np.asarray(sigma2, dtype=float) - 1.0) * np.exp(-2.0 * np.asarray(t, dtype=float))


def speciation_time(d):
    """Forward time ``log(d) / 2`` at which trajectories commit to a class."""
    if np.any(np.asarray(d) < 1):
        raise ValidationError("dim_positive", f"dimension must be >= 1, got {d}")
    return 0.5 * np.log(np.asarray(d, dtype=float))


def ou_scale_and_variance(t):
    """Return ``(s(t), sigma2_ou(t))`` for drift ``f=-1`` and diffusion ``g=sqrt(2)``.

    ``s(t) = exp(-t)`` is the signal scale and ``sigma2_ou(t) = exp(2t) - 1`` the
    noise variance measured in unscaled units, so ``s**2 * sigma2_ou == delta``.
    """
    _check_time(t)
    t = np.asarray(t, dtype=float)
    return np.exp(-t), np.expm1(2.0 * t)


def mixture_violations(kind, dim, sigma2, mean_vectors, weights=None) -> list[ValidationError]:
    """Collect every invariant violation of a would-be :class:`MixtureSpec`."""
    out: list[ValidationError] = []
    try:
        kind = MixtureKind(kind)
    except ValueError:
        return [ValidationError("kind_known", f"unknown mixture kind {kind!r}")]
    if not isinstance(dim, (int, np.integer)) or isinstance(dim, bool) or dim < 1:
        out.append(ValidationError("dim_positive", f"dim must be an integer >= 1, got {dim!r}"))
        dim = None
    if not (isinstance(sigma2, (int, float, np.floating)) and math.isfinite(sigma2) and sigma2 > 0):
        out.append(ValidationError("sigma2_positive", f"sigma2 must be a finite number > 0, got {sigma2!r}"))
    vecs = [np.asarray(v, dtype=float) for v in mean_vectors]
    if len(vecs) != _N_VECTORS[kind]:
        out.append(ValidationError(
            "mean_vector_count",
            f"{kind.value} needs {_N_VECTORS[kind]} mean vector(s), got {len(vecs)}"))
    for i, v in enumerate(vecs):
        if v.ndim != 1 or (dim is not None and v.shape[0] != dim):
            out.append(ValidationError(
                "mean_vector_length", f"mean vector {i} has shape {v.shape}, expected ({dim},)"))
        elif not np.all(np.isfinite(v)):
            out.append(ValidationError("mean_vector_finite", f"mean vector {i} has non-finite entries"))
    if kind is MixtureKind.ORTHOGONAL_QUAD and len(vecs) == 2 and vecs[0].shape == vecs[1].shape:
        m1, m2 = vecs
        if abs(m1 @ m2) > ORTHOGONALITY_RTOL * np.linalg.norm(m1) * np.linalg.norm(m2):
            out.append(ValidationError(
                "orthogonality", f"orthogonal_quad needs m1.m2 = 0, got {m1 @ m2:.6g}"))
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        k = _N_COMPONENTS[kind]
        if w.shape != (k,):
            out.append(ValidationError("weights_shape", f"expected {k} weights, got shape {w.shape}"))
        elif np.any(w < 0):
            out.append(ValidationError("weights_nonnegative", "weights must be nonnegative"))
        elif abs(w.sum() - 1.0) > WEIGHT_ATOL:
            out.append(ValidationError("weights_normalized", f"weights sum to {w.sum():.17g}, not 1"))
        elif np.max(np.abs(w - 1.0 / k)) > WEIGHT_ATOL:
            out.append(ValidationError("weights_equal", "only equal component weights are supported"))
    return out


@dataclass(frozen=True, eq=False)
class MixtureSpec:
    """Equal-weight isotropic Gaussian mixture.

    ``mean_vectors`` holds ``m`` for a symmetric pair (components ``+m, -m``),
    ``m1, m2`` for a general pair, and ``m1, m2`` for the orthogonal quad
    (components ``+-m1 +- m2``).  Use the ``symmetric_pair``, ``general_pair``
    and ``orthogonal_quad`` constructors rather than building one directly.
    """

    kind: MixtureKind
    dim: int
    sigma2: float
    mean_vectors: tuple
    weights: tuple = field(default=None)

    def __post_init__(self):
        problems = mixture_violations(self.kind, self.dim, self.sigma2, self.mean_vectors, self.weights)
        if problems:
            raise problems[0]
        kind = MixtureKind(self.kind)
        vecs = []
        for v in self.mean_vectors:
            a = np.array(v, dtype=float)
            a.setflags(write=False)
            vecs.append(a)
        k = _N_COMPONENTS[kind]
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "mean_vectors", tuple(vecs))
        object.__setattr__(self, "weights", tuple([1.0 / k] * k))
        means = self._component_means()
        means.setflags(write=False)
        object.__setattr__(self, "_means", means)

    @classmethod
    def symmetric_pair(cls, dim: int, sigma2: float = 1.0, m=None) -> MixtureSpec:
        """Components at ``+-m``; ``m`` defaults to the all-ones vector."""
        if m is None:
            m = np.ones(dim) if isinstance(dim, (int, np.integer)) and dim >= 1 else []
        return cls(MixtureKind.SYMMETRIC_PAIR, dim, sigma2, (m,))

    @classmethod
    def general_pair(cls, m1, m2, sigma2: float = 1.0) -> MixtureSpec:
        return cls(MixtureKind.GENERAL_PAIR, len(m1), sigma2, (m1, m2))

    @classmethod
    def orthogonal_quad(cls, m1, m2, sigma2: float = 1.0) -> MixtureSpec:
        return cls(MixtureKind.ORTHOGONAL_QUAD, len(m1), sigma2, (m1, m2))

    def _component_means(self) -> np.ndarray:
        if self.kind is MixtureKind.SYMMETRIC_PAIR:
            (m,) = self.mean_vectors
            return np.stack([m, -m])
        if self.kind is MixtureKind.GENERAL_PAIR:
            return np.stack(self.mean_vectors)
        m1, m2 = self.mean_vectors
        return np.stack([m1 + m2, m1 - m2, -m1 + m2, -m1 - m2])

    @property
    def component_means(self) -> np.ndarray:
        """``(K, d)`` array of component centres at ``t = 0``."""
        return self._means

    @property
    def n_components(self) -> int:
        return self._means.shape[0]

    @property
    def class_labels(self) -> tuple[int, ...]:
        """Valid labels: ``(+1, -1)`` for a symmetric pair, else ``0..K-1``."""
        if self.kind is MixtureKind.SYMMETRIC_PAIR:
            return (1, -1)
        return tuple(range(self.n_components))

    def component_index(self, c) -> int:
        """Row of :attr:`component_means` selected by class label ``c``."""
        if isinstance(c, bool) or not isinstance(c, (int, np.integer)) or c not in self.class_labels:
            raise ValidationError(
                "label_range", f"label {c!r} not in {self.class_labels} for {self.kind.value}")
        if self.kind is MixtureKind.SYMMETRIC_PAIR:
            return 0 if c == 1 else 1
        return int(c)

    def class_mean(self, c) -> np.ndarray:
        return self._means[self.component_index(c)]

    def projection_direction(self, c=1) -> np.ndarray:
        """Unit vector along which the coordinate ``q`` is measured.

        For the symmetric pair this is ``m/|m|`` regardless of ``c`` so that
        ``q = x.m/|m|``; for other kinds it is the direction of the target
        class mean.
        """
        v = self.mean_vectors[0] if self.kind is MixtureKind.SYMMETRIC_PAIR else self.class_mean(c)
        return v / np.linalg.norm(v)

    def sample(self, n: int, rng: np.random.Generator, c=None) -> np.ndarray:
        """Draw ``n`` points from the ``t = 0`` distribution (or one class of it)."""
        if c is None:
            idx = rng.integers(self.n_components, size=n)
        else:
            idx = np.full(n, self.component_index(c))
        return self._means[idx] + math.sqrt(self.sigma2) * rng.standard_normal((n, self.dim))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "dim": self.dim,
            "sigma2": self.sigma2,
            "mean_vectors": [v.tolist() for v in self.mean_vectors],
        }

    @classmethod
    def from_dict(cls, data: dict) -> MixtureSpec:
        kind = MixtureKind(data.get("kind", "symmetric_pair"))
        vecs = data.get("mean_vectors")
        if vecs is None and kind is MixtureKind.SYMMETRIC_PAIR:
            return cls.symmetric_pair(data["dim"], data.get("sigma2", 1.0))
        return cls(kind, data["dim"], data.get("sigma2", 1.0), tuple(vecs), data.get("weights"))


def schedule_violations(t_f, steps, record_stride) -> list[ValidationError]:
    out = []
    if not (isinstance(t_f, (int, float, np.floating)) and math.isfinite(t_f) and t_f > 0):
        out.append(ValidationError("t_f_positive", f"t_f must be a finite number > 0, got {t_f!r}"))
    for name, val in (("steps", steps), ("record_stride", record_stride)):
        if not isinstance(val, (int, np.integer)) or isinstance(val, bool) or val < 1:
            out.append(ValidationError(f"{name}_positive", f"{name} must be an integer >= 1, got {val!r}"))
    if not out and steps % record_stride != 0:
        out.append(ValidationError(
            "record_stride_divides", f"record_stride {record_stride} does not divide steps {steps}"))
    return out


@dataclass(frozen=True)
class Schedule:
    """Backward integration grid: ``steps`` Euler steps of size ``t_f / steps``.

    Records are taken every ``record_stride`` steps, always including the
    start (``t = t_f``) and the end (``t = 0``).
    """

    t_f: float = 8.0
    steps: int = 800
    record_stride: int = 10

    def __post_init__(self):
        problems = schedule_violations(self.t_f, self.steps, self.record_stride)
        if problems:
            raise problems[0]
        object.__setattr__(self, "t_f", float(self.t_f))

    @classmethod
    def from_dt(cls, t_f: float, dt: float, record_stride: int = 10) -> Schedule:
        steps = int(round(t_f / dt))
        if steps < 1 or abs(steps * dt - t_f) > 1e-9 * max(1.0, t_f):
            raise ValidationError("dt_divides", f"dt={dt} does not divide t_f={t_f}")
        return cls(t_f, steps, record_stride)

    @property
    def dt(self) -> float:
        return self.t_f / self.steps

    def step_time(self, k) -> np.ndarray:
        """Forward time at the start of backward step ``k``."""
        return (self.steps - np.asarray(k)) * self.t_f / self.steps

    @property
    def record_steps(self) -> np.ndarray:
        return np.arange(0, self.steps + 1, self.record_stride)

    @property
    def times(self) -> np.ndarray:
        """Recorded forward times, descending from ``t_f`` to exactly 0."""
        return (self.steps - self.record_steps) * self.t_f / self.steps

    def to_dict(self) -> dict:
        return {"t_f": self.t_f, "steps": self.steps, "record_stride": self.record_stride}

    @classmethod
    def from_dict(cls, data: dict) -> Schedule:
        if "dt" in data and "steps" not in data:
            return cls.from_dt(data.get("t_f", 8.0), data["dt"], data.get("record_stride", 10))
        return cls(data.get("t_f", 8.0), data.get("steps", 800), data.get("record_stride", 10))
