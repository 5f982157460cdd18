import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from addgrowth import process_spec as ps
from addgrowth import specfile
from addgrowth.errors import DriftUndefinedError, IntegrabilityError, SpecError

# frozen from tests/oracles/compute_oracles.py
STABLE_A1_TAIL_R05 = 4.0
STABLE_A1_MOMENT2_R05 = 1.0
SUB_MOMENT2_R025 = 0.08333333333333336
SUB_SMALL_MEAN_R025 = 0.9999999999999997
DISINT_TAIL_T06 = [5483.640653549459, 248.46529014002337, 11.031828714741165, 0.8247815364147105]
DISINT_M2_T06 = [0.011502649182597567, 0.05107219919257552, 0.2320164621876415, 0.6779932118394375]

LEVY_FAMILIES = ["stable_a05", "stable_a1", "stable_a15", "subordinator_half", "compound_poisson", "pareto_cp"]


def spec_from(text):
    return specfile.loads(text)


def test_stable_tail_mass(builtin):
    spec = builtin("stable_a1")
    assert ps.tail_mass(spec, 0, 1.0, 0.5) == pytest.approx(STABLE_A1_TAIL_R05, rel=1e-12)


def test_brownian_has_no_jumps(builtin):
    spec = builtin("brownian")
    assert ps.tail_mass(spec, 0, 0.7, 0.01) == 0.0
    assert ps.truncated_moment2(spec, 0, 0.7, 0.01) == 0.0
    assert ps.total_mass(spec, 1.0) == 0.0


def test_compound_poisson_tail(builtin):
    spec = builtin("compound_poisson").with_horizon(2.0)
    assert ps.tail_mass(spec, 0, 2.0, 0.5) == pytest.approx(6.0, rel=1e-14)
    assert ps.tail_mass(spec, 0, 2.0, 1.5) == 0.0
    assert ps.total_mass(spec, 2.0) == pytest.approx(6.0, rel=1e-14)


def test_truncated_moment(builtin):
    assert ps.truncated_moment2(builtin("stable_a1"), 0, 1.0, 0.5) == pytest.approx(STABLE_A1_MOMENT2_R05, rel=1e-12)
    assert ps.truncated_moment2(builtin("subordinator_half"), 0, 1.0, 0.25) == pytest.approx(SUB_MOMENT2_R025,
                                                                                             rel=1e-12)


def test_signed_mean_examples(builtin):
    drift = builtin("drift").with_horizon(2.0)
    for r in (1e-3, 0.5, 7.0):
        assert ps.signed_mean(drift, 0, 2.0, r) == pytest.approx(2.0, rel=1e-14)
    assert ps.signed_mean(builtin("compound_poisson"), 0, 1.0, 0.5) == pytest.approx(0.0, abs=1e-14)
    sub = builtin("subordinator_half")
    assert ps.signed_mean(sub, 0, 1.0, 0.25) == pytest.approx(SUB_SMALL_MEAN_R025, rel=1e-12)


def test_signed_mean_no_cancellation_at_tiny_r(builtin):
    # the drift-free subordinator has signed mean 2 sqrt(r) all the way down
    sub = builtin("subordinator_half")
    r = np.logspace(-30, 0, 31)
    got = np.asarray(ps.signed_mean(sub, 0, 1.0, r))
    np.testing.assert_allclose(got, 2 * np.sqrt(r), rtol=1e-10)


def test_gamma0(builtin):
    assert float(ps.gamma0(builtin("brownian"), 0, 1.0)) == 0.0
    assert float(ps.gamma0(builtin("subordinator_half"), 0, 0.6)) == 0.0
    spec = spec_from('[[component]]\ndrift = { kind = "linear", a = 3.0 }\n')
    assert float(ps.gamma0(spec, 0, 0.4)) == pytest.approx(1.2)
    assert ps.gamma0_star(spec, 0.4) == pytest.approx(1.2)


def test_gamma0_undefined_for_infinite_variation(builtin):
    with pytest.raises(DriftUndefinedError):
        ps.gamma0(builtin("stable_a15"), 0, 1.0)


def test_total_mass_infinite_for_stable(builtin):
    assert math.isinf(ps.total_mass(builtin("stable_a1"), 1.0))


def test_heavy_tail_mean_diverges():
    spec = spec_from('[[component]]\n[component.kernel]\nkind = "time_scaled"\n'
                     'measure = { kind = "pareto", alpha = 0.5, lower = 1.0 }\n')
    # ∫_1^10 x·x^{-3/2} dx = 2(√10 - 1) is finite; the full upper tail is not
    assert ps.signed_mean(spec, 0, 1.0, 10.0) == pytest.approx(2 * (math.sqrt(10) - 1), rel=1e-12)
    with pytest.raises(IntegrabilityError):
        ps.signed_mean(spec, 0, 1.0, math.inf)


def test_argument_checks(builtin):
    spec = builtin("brownian")
    with pytest.raises(SpecError):
        ps.tail_mass(spec, 0, 2.0, 0.5)
    with pytest.raises(SpecError):
        ps.tail_mass(spec, 0, 0.5, 0.0)


@pytest.mark.parametrize("name", LEVY_FAMILIES)
def test_quadrature_matches_closed_form(builtin, name):
    spec = builtin(name)
    r = np.logspace(-3, 1, 9)
    for fun in (ps.tail_mass, ps.truncated_moment2):
        closed = np.asarray(fun(spec, 0, 0.8, r))
        quad = np.asarray(fun(spec, 0, 0.8, r, method="quad"))
        np.testing.assert_allclose(quad, closed, rtol=1e-8, atol=1e-300)


def test_disintegrated_kernel_against_nested_quadrature(builtin):
    spec = builtin("stable_like_martingale")
    r = np.array([0.001, 0.01, 0.1, 0.5])
    np.testing.assert_allclose(np.asarray(ps.tail_mass(spec, 0, 0.6, r)), DISINT_TAIL_T06, rtol=1e-8)
    np.testing.assert_allclose(np.asarray(ps.truncated_moment2(spec, 0, 0.6, r)), DISINT_M2_T06, rtol=1e-8)


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(specfile.builtin_names()),
       t1=st.floats(0.0, 1.0), t2=st.floats(0.0, 1.0),
       lr1=st.floats(-6, 1), lr2=st.floats(-6, 1))
def test_monotonicity(name, t1, t2, lr1, lr2):
    spec = specfile.load_builtin(name)
    t_lo, t_hi = sorted((t1 * spec.T_max, t2 * spec.T_max))
    r_lo, r_hi = sorted((10.0**lr1, 10.0**lr2))
    for i in range(spec.d):
        G = lambda t, r: float(ps.tail_mass(spec, i, t, r))
        M2 = lambda t, r: float(ps.truncated_moment2(spec, i, t, r))
        tol = 1e-12
        assert G(t_lo, r_lo) <= G(t_hi, r_lo) * (1 + tol) + tol
        assert G(t_hi, r_hi) <= G(t_hi, r_lo) * (1 + tol) + tol
        assert M2(t_lo, r_lo) <= M2(t_hi, r_lo) * (1 + tol) + tol
        assert M2(t_hi, r_lo) <= M2(t_hi, r_hi) * (1 + tol) + tol


@settings(max_examples=30, deadline=None)
@given(a1=st.floats(0.2, 1.8), a2=st.floats(0.2, 1.8), c1=st.floats(0.1, 5), c2=st.floats(0.1, 5),
       t=st.floats(0.01, 1.0), lr=st.floats(-5, 1))
def test_sum_kernel_additivity(a1, a2, c1, c2, t, lr):
    k1 = ps.TimeScaled(ps.Linear(1.0), ps.symmetric_stable(a1, c1))
    k2 = ps.TimeScaled(ps.Power(1.0, 2.0), ps.subordinator(a2 / 2, c2))
    both = ps.ProcessSpec((ps.Component(kernel=ps.SumKernel((k1, k2))),))
    one = ps.ProcessSpec((ps.Component(kernel=k1),))
    two = ps.ProcessSpec((ps.Component(kernel=k2),))
    r = 10.0**lr
    for fun in (ps.tail_mass, ps.truncated_moment2):
        total = float(fun(both, 0, t, r))
        parts = float(fun(one, 0, t, r)) + float(fun(two, 0, t, r))
        assert total == pytest.approx(parts, rel=1e-10)


def test_spec_rejects_decreasing_gaussian():
    with pytest.raises(SpecError, match="nondecreasing"):
        spec_from('[[component]]\ngaussian = { kind = "piecewise_linear", t = [0.0, 0.5, 1.0], '
                  'values = [0.0, 1.0, 0.5] }\n')


def test_spec_error_names_the_field():
    with pytest.raises(SpecError, match=r"component\[0\]\.drift\.a: missing required field"):
        spec_from('[[component]]\ndrift = { kind = "linear" }\n')


def test_all_builtins_load():
    names = specfile.builtin_names()
    assert len(names) == 12
    for name in names:
        spec = specfile.load_builtin(name)
        assert spec.label == name
        assert spec.d == len(spec.components)
