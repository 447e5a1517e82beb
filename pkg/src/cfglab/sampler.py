"""Euler-Maruyama integration of the backward diffusion.

The backward SDE in backward time ``tau = t_f - t`` is
``dx = (x + 2 S(x, t)) dtau + sqrt(2) dB``.  One step of size ``dt`` is

    x <- x + dt * (x + 2 S_guided(x, t_k)) + sqrt(2 dt) * xi,   t_k = t_f - k dt

Three state representations are supported: the full ``d``-dimensional state,
the scalar projection ``q = x.m/|m|`` (exact for the symmetric pair because
guidance only acts along ``m``), and a transverse coordinate ``p = x.v`` with
``v`` orthogonal to ``m``.

Random numbers come from a counter-based Philox stream keyed by
``(seed, block)`` where trajectories are grouped into fixed blocks of
:data:`BLOCK_SIZE`.  Trajectory ``i`` always lives in block ``i // BLOCK_SIZE``
and every block draws a full ``BLOCK_SIZE`` of normals per step, so a path is
a function of ``(seed, i)`` alone: it depends neither on the ensemble size
nor on how many workers execute the blocks.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .guidance import GuidanceKind, GuidanceSpec, guidance_factor, guidance_term, guidance_violations
from .mixture import MixtureKind, MixtureSpec, Schedule, gamma
from .scores import cond_score, label_minus_tanh

__all__ = [
    "BLOCK_SIZE",
    "Mode",
    "NoiseMode",
    "SimPlan",
    "TrajectoryEnsemble",
    "simulate",
    "simulate_full",
    "simulate_projected_q",
    "simulate_transverse",
    "plan_violations",
]

BLOCK_SIZE = 4096
_SEED_LIMIT = 2 ** 64


class Mode(str, enum.Enum):
    FULL_STATE = "full_state"
    PROJECTED_Q = "projected_q"
    TRANSVERSE = "transverse"


class NoiseMode(str, enum.Enum):
    STOCHASTIC = "stochastic"
    FROZEN = "frozen"


def plan_violations(spec, guidance, schedule, target_class, n_traj, seed, mode,
                    noise=NoiseMode.STOCHASTIC) -> list[ValidationError]:
    out = []
    if not isinstance(n_traj, (int, np.integer)) or isinstance(n_traj, bool) or n_traj < 1:
        out.append(ValidationError("n_traj_positive", f"n_traj must be an integer >= 1, got {n_traj!r}"))
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or not 0 <= seed < _SEED_LIMIT:
        out.append(ValidationError("seed_u64", f"seed must be an unsigned 64-bit integer, got {seed!r}"))
    try:
        mode = Mode(mode)
    except ValueError:
        out.append(ValidationError("mode_known", f"unknown mode {mode!r}"))
        mode = None
    try:
        NoiseMode(noise)
    except ValueError:
        out.append(ValidationError("noise_known", f"unknown noise mode {noise!r}"))
    if mode in (Mode.PROJECTED_Q, Mode.TRANSVERSE) and spec is not None \
            and spec.kind is not MixtureKind.SYMMETRIC_PAIR:
        out.append(ValidationError(
            "mode_requires_symmetric_pair", f"{mode.value} mode is only defined for a symmetric pair"))
    if mode is Mode.TRANSVERSE and spec is not None and spec.dim < 2:
        out.append(ValidationError("transverse_needs_dim2", "a transverse direction needs dim >= 2"))
    if spec is not None:
        try:
            spec.component_index(target_class)
        except ValidationError as err:
            out.append(err)
    if guidance is not None and schedule is not None:
        out.extend(guidance_violations(
            guidance.kind, guidance.omega, guidance.alpha, guidance.gamma_exp, guidance.interval,
            guidance.weight_table, guidance.switch_time, t_f=schedule.t_f))
    return out


@dataclass(frozen=True)
class SimPlan:
    """Everything needed to reproduce one Monte Carlo ensemble.

    ``initial_q`` replaces the random ``N(0, I)`` start by the deterministic
    point ``initial_q * u`` (``u`` the projection direction; for the
    transverse mode it is the starting ``p``).  ``keep_final_states`` stores
    the ``t = 0`` states of a full-state run.
    """

    spec: MixtureSpec
    guidance: GuidanceSpec
    schedule: Schedule
    target_class: int = 1
    n_traj: int = 1000
    seed: int = 0
    mode: Mode = Mode.FULL_STATE
    noise: NoiseMode = NoiseMode.STOCHASTIC
    initial_q: float | None = None
    keep_final_states: bool = False

    def __post_init__(self):
        problems = plan_violations(self.spec, self.guidance, self.schedule, self.target_class,
                                   self.n_traj, self.seed, self.mode, self.noise)
        if problems:
            raise problems[0]
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "noise", NoiseMode(self.noise))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "n_traj", int(self.n_traj))

    def replace(self, **changes) -> SimPlan:
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return SimPlan(**fields)

    def to_dict(self) -> dict:
        return {
            "mixture": self.spec.to_dict(),
            "guidance": self.guidance.to_dict(),
            "schedule": self.schedule.to_dict(),
            "target_class": int(self.target_class),
            "n_traj": self.n_traj,
            "seed": self.seed,
            "mode": self.mode.value,
            "noise": self.noise.value,
            "initial_q": self.initial_q,
            "keep_final_states": self.keep_final_states,
        }

    @classmethod
    def from_dict(cls, data: dict) -> SimPlan:
        return cls(
            spec=MixtureSpec.from_dict(data["mixture"]),
            guidance=GuidanceSpec.from_dict(data.get("guidance", {"kind": "none"})),
            schedule=Schedule.from_dict(data.get("schedule", {})),
            target_class=data.get("target_class", 1),
            n_traj=data.get("n_traj", 1000),
            seed=data.get("seed", 0),
            mode=data.get("mode", "full_state"),
            noise=data.get("noise", "stochastic"),
            initial_q=data.get("initial_q"),
            keep_final_states=data.get("keep_final_states", False),
        )

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def record_steps(self) -> np.ndarray:
        """Step indices at which the state is recorded.

        The schedule's stride grid, plus the step at which an interrupted or
        limited-interval guidance switches when that time lies on the grid.
        """
        sched = self.schedule
        steps = set(sched.record_steps.tolist())
        g = self.guidance
        switch = []
        if g.kind is GuidanceKind.INTERRUPTED:
            switch = [g.switch_time]
        elif g.kind is GuidanceKind.LIMITED_INTERVAL:
            switch = list(g.interval)
        for ts in switch:
            k = (sched.t_f - ts) / sched.dt
            if abs(k - round(k)) < 1e-6 and 0 <= round(k) <= sched.steps:
                steps.add(int(round(k)))
        return np.array(sorted(steps))


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    """Recorded backward trajectories.

    ``q_values[i, j]`` is the projected coordinate (or transverse ``p``) of
    trajectory ``i`` at forward time ``times[j]``; ``times`` descends from
    ``t_f`` to 0.  ``score_diff_norms`` has the same shape and is ``None`` for
    transverse runs, where guidance never acts.
    """

    times: np.ndarray
    q_values: np.ndarray
    score_diff_norms: np.ndarray | None
    final_states: np.ndarray | None
    seed: int
    fingerprint: str
    mode: Mode = Mode.FULL_STATE

    def __post_init__(self):
        n_t = self.times.shape[0]
        if self.q_values.ndim != 2 or self.q_values.shape[1] != n_t:
            raise ValidationError("ensemble_shape", "q_values must be (n_traj, n_times)")
        if self.score_diff_norms is not None and self.score_diff_norms.shape != self.q_values.shape:
            raise ValidationError("ensemble_shape", "score_diff_norms must match q_values")

    @property
    def n_traj(self) -> int:
        return self.q_values.shape[0]

    def time_index(self, t, atol=1e-9) -> int:
        hits = np.flatnonzero(np.abs(self.times - t) <= atol)
        if hits.size == 0:
            raise ValidationError("time_on_grid", f"t={t} is not a recorded time")
        return int(hits[0])

    def at(self, t) -> np.ndarray:
        """Projected values of every trajectory at recorded time ``t``."""
        return self.q_values[:, self.time_index(t)]

    @property
    def final_q(self) -> np.ndarray:
        return self.q_values[:, -1]


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(block << 64) | seed))


def _blocks(n_traj: int):
    return [(b, lo, min(lo + BLOCK_SIZE, n_traj)) for b, lo in enumerate(range(0, n_traj, BLOCK_SIZE))]


def _time_grid(sched: Schedule) -> np.ndarray:
    # (L - k) * t_f / L rounds exactly onto decimal switch times such as 0.69
    return (sched.steps - np.arange(sched.steps + 1)) * sched.t_f / sched.steps


class _FullState:
    def __init__(self, plan: SimPlan):
        self.plan = plan
        self.u = plan.spec.projection_direction(plan.target_class)
        self.dim = plan.spec.dim

    def initial(self, rng, n):
        if self.plan.initial_q is not None:
            return np.tile(self.plan.initial_q * self.u, (n, 1))
        return rng.standard_normal((BLOCK_SIZE, self.dim))[:n]

    def drift(self, x, t):
        p = self.plan
        if p.spec.kind is MixtureKind.SYMMETRIC_PAIR:
            return self._pair_drift(x, t)
        cond = cond_score(x, t, p.target_class, p.spec).vector
        term, norm = guidance_term(x, t, p.target_class, p.spec, p.guidance)
        return x + 2.0 * (cond + term), norm

    def _pair_drift(self, x, t):
        # x + 2 S_guided = x (1 - 2/G) + m * 2 e/G * (c + phi (c - tanh(x.m e/G)))
        p = self.plan
        m = p.spec.mean_vectors[0]
        c = int(p.target_class)
        g = float(gamma(t, p.spec.sigma2))
        pull = math.exp(-t) / g
        coef = label_minus_tanh((x @ m) * pull, c)
        norm = pull * np.abs(coef) * np.linalg.norm(m)
        phi = guidance_factor(norm, t, p.guidance)
        out = x * (1.0 - 2.0 / g)
        out += np.outer(2.0 * pull * (c + phi * coef), m)
        return out, norm

    def project(self, x):
        return x @ self.u


class _Projected:
    dim = 1

    def __init__(self, plan: SimPlan):
        self.plan = plan
        self.m_norm = float(np.linalg.norm(plan.spec.mean_vectors[0]))
        self.c = int(plan.target_class)

    def initial(self, rng, n):
        if self.plan.initial_q is not None:
            return np.full(n, float(self.plan.initial_q))
        return rng.standard_normal(BLOCK_SIZE)[:n]

    def drift(self, q, t):
        p = self.plan
        g = gamma(t, p.spec.sigma2)
        pull = self.m_norm * math.exp(-t) / g
        coef = label_minus_tanh(q * pull, self.c)
        norm = pull * np.abs(coef)
        phi = guidance_factor(norm, t, p.guidance)
        return q * (1.0 - 2.0 / g) + 2.0 * pull * (self.c + phi * coef), norm

    @staticmethod
    def project(q):
        return q


class _Transverse(_Projected):
    def drift(self, p, t):
        g = gamma(t, self.plan.spec.sigma2)
        return p * (1.0 - 2.0 / g), None


def _run_block(dyn, plan: SimPlan, block: int, lo: int, hi: int, rec_steps: np.ndarray):
    sched = plan.schedule
    times = _time_grid(sched)
    dt = sched.dt
    noise_scale = math.sqrt(2.0 * dt)
    stochastic = plan.noise is NoiseMode.STOCHASTIC
    rng = _block_rng(plan.seed, block)
    n = hi - lo
    state = dyn.initial(rng, n)
    shape = state.shape
    q_rec = np.empty((n, rec_steps.size))
    d_rec = None if isinstance(dyn, _Transverse) else np.empty((n, rec_steps.size))
    is_rec = np.zeros(sched.steps + 1, dtype=bool)
    is_rec[rec_steps] = True
    # a full block of noise is drawn every step so that trajectory i sees the
    # same stream whatever the ensemble size
    noise = np.empty((BLOCK_SIZE,) + shape[1:])
    # overflow is caught by the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        col = 0
        for k in range(sched.steps + 1):
            t = float(times[k])
            drift, norm = dyn.drift(state, t)
            if is_rec[k]:
                q_rec[:, col] = dyn.project(state)
                if d_rec is not None:
                    d_rec[:, col] = norm
                col += 1
            if k == sched.steps:
                break
            state = state + dt * drift
            if stochastic:
                rng.standard_normal(out=noise)
                state += noise_scale * noise[:n]
            if not np.all(np.isfinite(state)):
                bad = np.flatnonzero(~np.isfinite(state.reshape(n, -1)).all(axis=1))[0]
                raise NumericalError(k, lo + int(bad), t)
    final = state if (plan.keep_final_states and state.ndim == 2) else None
    return q_rec, d_rec, final


def _simulate(dyn, plan: SimPlan, workers: int) -> TrajectoryEnsemble:
    rec_steps = plan.record_steps()
    blocks = _blocks(plan.n_traj)
    job = lambda blk: _run_block(dyn, plan, *blk, rec_steps)  # noqa: E731
    if workers and workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))
    else:
        parts = [job(b) for b in blocks]
    q = np.concatenate([p[0] for p in parts])
    dnorm = None if parts[0][1] is None else np.concatenate([p[1] for p in parts])
    finals = None if parts[0][2] is None else np.concatenate([p[2] for p in parts])
    times = _time_grid(plan.schedule)[rec_steps]
    return TrajectoryEnsemble(times, q, dnorm, finals, plan.seed, plan.fingerprint(), plan.mode)


def simulate_full(plan: SimPlan, workers: int = 1) -> TrajectoryEnsemble:
    """Integrate the full ``d``-dimensional backward SDE; works for every mixture kind."""
    return _simulate(_FullState(plan), plan.replace(mode=Mode.FULL_STATE), workers)


def simulate_projected_q(plan: SimPlan, workers: int = 1) -> TrajectoryEnsemble:
    """Integrate the scalar ``q`` dynamics of a symmetric pair.

    Drift ``q (1 - 2/G) + 2 |m| e^{-t}/G * (c + phi * (c - tanh(q |m| e^{-t}/G)))``
    with ``G = gamma(t)``; the score-difference norm fed to ``phi`` is the
    full-vector norm ``|m| e^{-t}/G * |c - tanh(.)|``, so every guidance rule
    matches its full-state counterpart in law.
    """
    return _simulate(_Projected(plan), plan.replace(mode=Mode.PROJECTED_Q), workers)


def simulate_transverse(plan: SimPlan, workers: int = 1) -> TrajectoryEnsemble:
    """Integrate ``dp = p (1 - 2/G) dtau + sqrt(2) dB`` for a direction orthogonal to ``m``."""
    return _simulate(_Transverse(plan), plan.replace(mode=Mode.TRANSVERSE), workers)


def simulate(plan: SimPlan, workers: int = 1) -> TrajectoryEnsemble:
    """Dispatch on ``plan.mode``."""
    fn = {
        Mode.FULL_STATE: simulate_full,
        Mode.PROJECTED_Q: simulate_projected_q,
        Mode.TRANSVERSE: simulate_transverse,
    }[plan.mode]
    return fn(plan, workers)
