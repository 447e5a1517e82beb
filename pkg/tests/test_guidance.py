import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cfglab.errors import ValidationError
from cfglab.guidance import (GuidanceKind, GuidanceSpec, guidance_factor, guidance_term, guidance_violations,
                             guided_score, phi_weight, regime2_inertness_bound)
from cfglab.mixture import MixtureSpec, gamma, ou_scale_and_variance
from cfglab.scores import cond_score, score_diff

from helpers import random_spec

PHI_PL = 2.6794336563407329105
R2_200_1 = 1.6072144535718462417e-23
R2_1_0 = 0.13533528323661269189


def test_phi_examples():
    for s in (1e-3, 0.5, 7.0):
        assert phi_weight(s, 1.0, GuidanceSpec.power_law(3.0, 0.0)) == 3.0
    assert phi_weight(0.4, 1.0, GuidanceSpec.standard(0.0)) == 0.0
    assert phi_weight(0.5, 1.0, GuidanceSpec.power_law(5.0, 0.9)) == pytest.approx(PHI_PL, rel=1e-14)
    assert phi_weight(0.5, 1.0, GuidanceSpec.none()) == 0.0
    with pytest.raises(ValidationError) as err:
        phi_weight(-0.1, 1.0, GuidanceSpec.standard(1.0))
    assert err.value.invariant == "norm_nonnegative"


def test_phi_time_windows():
    g = GuidanceSpec.limited_interval(2.0, 0.5, 1.5)
    assert [float(phi_weight(0.1, t, g)) for t in (0.4, 0.5, 1.0, 1.5)] == [0.0, 2.0, 2.0, 0.0]
    g = GuidanceSpec.interrupted(4.0, 1.0)
    assert [float(phi_weight(0.1, t, g)) for t in (0.5, 1.0, 1.01)] == [0.0, 0.0, 4.0]
    g = GuidanceSpec.table([(0.0, 1.0), (1.0, 3.0), (2.5, 0.0)])
    assert [float(phi_weight(0.1, t, g)) for t in (0.0, 0.99, 1.0, 2.0, 2.5, 9.0)] == [1, 1, 3, 3, 0, 0]


def test_rescaled_power_law_weight():
    g = GuidanceSpec.rescaled_power_law(8.0, 4.0)
    t, s = 0.7, 0.3
    sc, var = ou_scale_and_variance(t)
    assert phi_weight(s, t, g) == pytest.approx(8.0 * s ** 4 * (sc * var) ** 4, rel=1e-14)
    assert phi_weight(s, t, g, sched_scale=2.0) == pytest.approx(8.0 * s ** 4 * 2.0, rel=1e-14)


def test_guided_score_omega_zero_is_conditional(rng):
    for kind in ("symmetric_pair", "general_pair", "orthogonal_quad"):
        spec = random_spec(rng, kind)
        x = rng.normal(size=spec.dim)
        c = spec.class_labels[0]
        a = guided_score(x, 0.8, c, spec, GuidanceSpec.standard(0.0)).vector
        np.testing.assert_array_equal(a, cond_score(x, 0.8, c, spec).vector)


def test_guided_score_at_origin():
    spec = MixtureSpec.symmetric_pair(6, 2.0)
    t, w = 0.9, 3.5
    expected = (1 + w) * spec.mean_vectors[0] * math.exp(-t) / gamma(t, 2.0)
    got = guided_score(np.zeros(6), t, 1, spec, GuidanceSpec.standard(w)).vector
    np.testing.assert_allclose(got, expected, rtol=1e-14)


def test_guided_matches_tanh_closed_form(rng):
    spec = MixtureSpec.symmetric_pair(4, 3.0)
    m = spec.mean_vectors[0]
    for _ in range(200):
        x, t, w, c = rng.normal(0, 2, 4), rng.uniform(0, 4), rng.uniform(0, 10), rng.choice([1, -1])
        g = gamma(t, 3.0)
        e = math.exp(-t)
        closed = (-x + c * m * e) / g + w * m * (e / g) * (c - np.tanh((x @ m) * e / g))
        got = guided_score(x, t, c, spec, GuidanceSpec.standard(w)).vector
        assert np.max(np.abs(got - closed)) < 1e-10


def test_power_law_alpha_zero_equals_standard(rng):
    worst = 0.0
    for _ in range(1000):
        spec = random_spec(rng, ("symmetric_pair", "general_pair", "orthogonal_quad")[rng.integers(3)])
        x, t, w = rng.normal(0, 2, spec.dim), rng.uniform(0, 4), rng.uniform(0, 10)
        c = spec.class_labels[rng.integers(len(spec.class_labels))]
        a = guided_score(x, t, c, spec, GuidanceSpec.power_law(w, 0.0)).vector
        b = guided_score(x, t, c, spec, GuidanceSpec.standard(w)).vector
        worst = max(worst, float(np.max(np.abs(a - b))))
    assert worst < 1e-12


@pytest.mark.parametrize("g", [
    GuidanceSpec.power_law(2.0, -0.75), GuidanceSpec.power_law(2.0, 0.0), GuidanceSpec.power_law(2.0, 0.9),
    GuidanceSpec.rescaled_power_law(8.0, 4.0), GuidanceSpec.standard(5.0),
    GuidanceSpec.limited_interval(5.0, 0.0, 3.0), GuidanceSpec.interrupted(5.0, 0.1),
    GuidanceSpec.table([(0.0, 2.0), (1.0, 4.0)]),
])
def test_guidance_term_switches_off(g):
    s = 10.0 ** -np.arange(1, 13)
    term = s * guidance_factor(s, 1.0, g)
    assert np.all(np.diff(term) <= 0)
    # slowest case is alpha = -0.75, where the term scales as s**0.25
    assert term[-1] <= 0.01 * term[0] or term[-1] == 0.0
    assert guidance_factor(0.0, 1.0, g) * 0.0 == 0.0


def test_negative_power_zero_norm_gives_zero_term():
    g = GuidanceSpec.power_law(1.0, -0.5)
    assert guidance_factor(0.0, 1.0, g) == 0.0
    assert np.isinf(phi_weight(0.0, 1.0, g))
    spec = MixtureSpec.symmetric_pair(2)
    term, norm = guidance_term(np.array([1e4, 1e4]), 0.0, 1, spec, g)
    assert norm == 0.0 and np.all(term == 0.0)


def test_standard_guidance_is_linear_in_omega(rng):
    for _ in range(200):
        spec = random_spec(rng, ("symmetric_pair", "general_pair", "orthogonal_quad")[rng.integers(3)])
        x, t = rng.normal(0, 2, spec.dim), rng.uniform(0, 4)
        c = spec.class_labels[0]
        w1, w2 = rng.uniform(0, 8, 2)
        s = lambda w: guided_score(x, t, c, spec, GuidanceSpec.standard(w)).vector
        assert np.max(np.abs(s(w1) + s(w2) - s(0.0) - s(w1 + w2))) < 1e-10


def test_limited_interval_full_window_is_standard(rng):
    spec = MixtureSpec.symmetric_pair(3, 2.0)
    full = GuidanceSpec.limited_interval(6.0, 0.0, 8.0)
    for t in np.linspace(0, 8, 80, endpoint=False):
        x = rng.normal(size=3)
        a = guided_score(x, t, 1, spec, full).vector
        b = guided_score(x, t, 1, spec, GuidanceSpec.standard(6.0)).vector
        np.testing.assert_array_equal(a, b)


def test_regime2_bound_examples():
    assert regime2_inertness_bound(1.0, MixtureSpec.symmetric_pair(200)) == pytest.approx(R2_200_1, rel=1e-12)
    assert regime2_inertness_bound(1.0, MixtureSpec.symmetric_pair(200)) < 1e-20
    assert regime2_inertness_bound(0.0, MixtureSpec.symmetric_pair(1)) == pytest.approx(R2_1_0, rel=1e-14)
    assert regime2_inertness_bound(60.0, MixtureSpec.symmetric_pair(4)) < 1e-25


def test_committed_paths_are_inert(rng):
    spec = MixtureSpec.symmetric_pair(50)
    m = spec.mean_vectors[0]
    w = 15.0
    checked = 0
    for _ in range(500):
        t = rng.uniform(0, 2)
        x = rng.normal(size=50) + rng.uniform(0, 3) * m
        arg = (x @ m) * math.exp(-t) / gamma(t, 1.0)
        if arg <= 25:
            continue
        term, _ = guidance_term(x, t, 1, spec, GuidanceSpec.standard(w))
        assert np.linalg.norm(term) <= 2 * w * regime2_inertness_bound(t, spec, arg) * (1 + 1e-12)
        checked += 1
    assert checked > 50


@pytest.mark.parametrize("kwargs, invariant", [
    (dict(kind="standard", omega=-1.0), "omega_nonnegative"),
    (dict(kind="power_law", omega=1.0, alpha=-1.5), "alpha_gt_minus_one"),
    (dict(kind="power_law", omega=1.0, alpha=-1.0), "alpha_gt_minus_one"),
    (dict(kind="rescaled_power_law", omega=1.0, gamma_exp=0.0), "gamma_positive"),
    (dict(kind="limited_interval", omega=1.0, interval=(2.0, 1.0)), "interval_ordered"),
    (dict(kind="limited_interval", omega=1.0, interval=(1.0, 9.0), t_f=8.0), "interval_within_horizon"),
    (dict(kind="weight_table", weight_table=()), "weight_table_nonempty"),
    (dict(kind="weight_table", weight_table=((0.0, math.nan),)), "weight_table_finite"),
    (dict(kind="weight_table", weight_table=((0.5, 1.0),)), "weight_table_ordered"),
    (dict(kind="weight_table", weight_table=((0.0, -1.0),)), "weight_table_nonnegative"),
    (dict(kind="interrupted", omega=1.0, switch_time=-1.0), "switch_time_nonnegative"),
    (dict(kind="interrupted", omega=1.0, switch_time=8.0, t_f=8.0), "switch_time_below_horizon"),
    (dict(kind="nonsense"), "guidance_kind_known"),
])
def test_guidance_violations(kwargs, invariant):
    assert invariant in [e.invariant for e in guidance_violations(**kwargs)]


def test_spec_construction_rejects():
    with pytest.raises(ValidationError) as err:
        GuidanceSpec.power_law(1.0, -1.5)
    assert err.value.invariant == "alpha_gt_minus_one"


@given(st.sampled_from(list(GuidanceKind)))
def test_dict_round_trip(kind):
    examples = {
        GuidanceKind.NONE: GuidanceSpec.none(),
        GuidanceKind.STANDARD: GuidanceSpec.standard(2.0),
        GuidanceKind.POWER_LAW: GuidanceSpec.power_law(2.0, 0.5),
        GuidanceKind.RESCALED_POWER_LAW: GuidanceSpec.rescaled_power_law(2.0, 3.0),
        GuidanceKind.LIMITED_INTERVAL: GuidanceSpec.limited_interval(2.0, 0.5, 1.5),
        GuidanceKind.WEIGHT_TABLE: GuidanceSpec.table([(0.0, 1.0), (2.0, 0.5)]),
        GuidanceKind.INTERRUPTED: GuidanceSpec.interrupted(2.0, 1.0),
    }
    g = examples[kind]
    assert GuidanceSpec.from_dict(g.to_dict()) == g


def test_batched_guidance_term(rng):
    spec = MixtureSpec.orthogonal_quad([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    x = rng.normal(size=(5, 3))
    term, norm = guidance_term(x, 0.5, 2, spec, GuidanceSpec.power_law(2.0, 0.5))
    for i in range(5):
        v, n = score_diff(x[i], 0.5, 2, spec)
        np.testing.assert_allclose(term[i], v * 2.0 * n ** 0.5, rtol=1e-13)
