import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from cfglab.errors import ValidationError
from cfglab.guidance import GuidanceSpec
from cfglab.mixture import MixtureSpec, Schedule, gamma, speciation_time
from cfglab.sampler import SimPlan, simulate
from cfglab.theory import (ddpm_time_reparam, effective_potential, interrupted_final_mean,
                           interrupted_mean_prediction, ln_cosh, mean_closed_form, mean_upper_bound,
                           projected_drift_regime1)

BSOL3 = 0.19547412207499994192
FINAL_MEAN = 4.8421052631578947368
V_EXTRA_M3 = 5.3093285045777851401
UPPER_200 = 15.986544593307306384
DDPM_1 = 0.000050002500166679167667
DDPM_1000 = 5.0588567712065519467


def test_mean_closed_form_examples():
    d, t_f = 9, 6.0
    tau = np.linspace(0, t_f, 13)
    q0 = math.sqrt(d) * math.exp(-t_f)
    for s2 in (1.0, 4.0):
        np.testing.assert_allclose(mean_closed_form(q0, t_f, tau, d, 1.0), math.sqrt(d) * np.exp(-(t_f - tau)),
                                   rtol=1e-13)
    assert mean_closed_form(0.7, t_f, 0.0, d, 3.0) == pytest.approx(0.7, rel=1e-15)
    assert mean_closed_form(0.0, 5.0, 2.0, 16, 4.0) == pytest.approx(BSOL3, rel=1e-13)


def test_mean_closed_form_range():
    for tau in (-0.1, 5.1):
        with pytest.raises(ValidationError):
            mean_closed_form(0.0, 5.0, tau, 16, 4.0)


def test_mean_closed_form_solves_ode():
    """Brute-force integration of the unguided mean equation."""
    d, s2, t_f, q0 = 5, 3.0, 4.0, 0.4

    def rhs(tau, q):
        t = t_f - tau
        g = gamma(t, s2)
        return q * (1 - 2 / g) + 2 * math.sqrt(d) * math.exp(-t) / g

    taus = np.linspace(0, t_f, 41)
    sol = solve_ivp(rhs, (0, t_f), [q0], t_eval=taus, rtol=1e-12, atol=1e-14, method="DOP853")
    assert np.max(np.abs(sol.y[0] - mean_closed_form(q0, t_f, taus, d, s2))) < 1e-6


def test_euler_error_is_first_order():
    d, s2, t_f = 16, 4.0, 5.0
    errs = []
    for steps in (500, 1000, 2000):
        e = simulate(SimPlan(MixtureSpec.symmetric_pair(d, s2), GuidanceSpec.none(), Schedule(t_f, steps, steps // 50),
                             n_traj=1, seed=0, noise="frozen", initial_q=0.0, mode="projected_q"))
        errs.append(np.max(np.abs(e.q_values[0] - mean_closed_form(0.0, t_f, t_f - e.times, d, s2))))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(ratios - 2) < 0.1)


def test_interrupted_prediction():
    d, s2, t1 = 16, 4.0, 1.38
    t = np.linspace(0, t1, 20)
    np.testing.assert_allclose(interrupted_mean_prediction(t, t1, 0.0, d, s2), math.sqrt(d) * np.exp(-t))
    assert interrupted_mean_prediction(t1, t1, 0.3, d, s2) == pytest.approx(math.sqrt(d) * math.exp(-t1) + 0.3)
    with pytest.raises(ValidationError):
        interrupted_mean_prediction(1.5, t1, 0.3, d, s2)


def test_interrupted_prediction_is_unguided_dynamics():
    """Backward time tau = t_f - t: the excess obeys the homogeneous mean equation."""
    d, s2, t_f, t1 = 16, 4.0, 5.0, 2.0
    q1 = math.sqrt(d) * math.exp(-t1) + 0.5
    t = np.linspace(0, t1, 11)
    # restart the closed form at t1 with horizon t1
    ref = mean_closed_form(q1, t1, t1 - t, d, s2)
    np.testing.assert_allclose(interrupted_mean_prediction(t, t1, 0.5, d, s2), ref, rtol=1e-12)


def test_interrupted_final_mean():
    assert interrupted_final_mean(0.0, 16, 4.0) == 4.0
    assert interrupted_final_mean(1.0, 16, 4.0) == pytest.approx(FINAL_MEAN, rel=1e-14)
    big = 10 ** 8
    assert interrupted_final_mean(1.0, big, 1.0) == pytest.approx(math.sqrt(big), rel=1e-7)
    ts = speciation_time(16)
    assert interrupted_final_mean(0.8, 16, 4.0) == pytest.approx(interrupted_mean_prediction(0.0, ts, 0.8, 16, 4.0))


def test_effective_potential_examples():
    p = effective_potential(0.0, 1.0, 16, 3.0)
    assert p.v_class == 0.0 and p.v_extra == 0.0 and p.v_total == 0.0
    assert effective_potential(1e6, 0.0, 16, 1.0).v_extra == pytest.approx(-math.log(2), abs=1e-12)
    ts = speciation_time(16)
    assert effective_potential(-3.0, ts, 16, 1.0).v_extra == pytest.approx(V_EXTRA_M3, rel=1e-14)


@given(st.floats(-1e3, 1e3), st.floats(0, 10), st.sampled_from([1, -1]))
def test_extra_potential_lower_bound(q, t, c):
    p = effective_potential(q, t, 50, 2.0, c)
    assert np.isfinite(p.v_total)
    assert p.v_extra >= -math.log(2) - 1e-9


def test_ln_cosh_no_overflow():
    x = np.array([0.0, 1.0, -3.0, 800.0, -1e300])
    ref = np.log(np.cosh(np.clip(x, -700, 700)))
    out = ln_cosh(x)
    np.testing.assert_allclose(out[:3], ref[:3], rtol=1e-15, atol=1e-16)
    assert out[3] == pytest.approx(800 - math.log(2))
    assert np.isfinite(out[4])


def test_potential_gradient_is_drift(rng):
    h = 1e-5
    worst = 0.0
    for _ in range(500):
        q, t, w = rng.uniform(-8, 8), rng.uniform(0, 6), rng.uniform(0, 10)
        d, c = int(rng.integers(1, 300)), int(rng.choice([1, -1]))
        grad = (effective_potential(q + h, t, d, w, c).v_total - effective_potential(q - h, t, d, w, c).v_total) / (2 * h)
        worst = max(worst, abs(-grad - projected_drift_regime1(q, t, d, w, c)))
    assert worst < 1e-8 * 100  # absolute; values are O(1..100)


def test_mean_upper_bound():
    assert mean_upper_bound(0.7, 16, 0.0) == pytest.approx(4 * math.exp(-0.7))
    assert mean_upper_bound(0.0, 16, 8.0) == 36.0
    assert mean_upper_bound(2.65, 200, 15.0) == pytest.approx(UPPER_200, rel=1e-14)


def test_ddpm_time_reparam():
    assert ddpm_time_reparam(0) == 0.0
    assert ddpm_time_reparam(1) == pytest.approx(DDPM_1, rel=1e-12)
    assert ddpm_time_reparam(1000) == pytest.approx(DDPM_1000, rel=1e-12)
    t = ddpm_time_reparam(np.arange(1001))
    assert np.all(np.diff(t) > 0)
    for bad in (-1, 1001, 2.5):
        with pytest.raises(ValidationError):
            ddpm_time_reparam(bad)
