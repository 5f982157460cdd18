import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from addgrowth import indices as ix
from addgrowth import process_spec as ps
from addgrowth import simulate as sim
from addgrowth import specfile
from addgrowth import verify as vf
from addgrowth.errors import CertificateError, GrowthRangeError, InapplicableError, InsufficientRangeError

# frozen from tests/oracles/compute_oracles.py
SIGMA_SEQ_SECOND = 0.027955199614682572


def oscillating_values(r):
    """log10 value has slope 1 on even decades of log10(1/r) and 1/2 on odd ones."""
    x = np.log10(1.0 / r)
    whole = np.floor(x)
    k = np.arange(int(whole.max()) + 1)
    slopes = np.where(k % 2 == 0, 1.0, 0.5)
    cum = np.concatenate([[0.0], np.cumsum(slopes)])
    lv = cum[whole.astype(int)] + slopes[whole.astype(int)] * (x - whole)
    return 10.0**lv


def test_exponent_of_power_law():
    r = np.logspace(-12, 0, 97)
    est = ix.critical_exponent(r, 0.7 * r**-2.0, "liminf")
    assert est.value == pytest.approx(2.0, abs=0.05)
    assert ix.critical_exponent(r, 0.7 * r**-2.0, "limsup").value == pytest.approx(2.0, abs=0.05)


def test_exponent_of_constant():
    r = np.logspace(-12, 0, 97)
    assert ix.critical_exponent(r, np.full_like(r, 3.0), "liminf").value == pytest.approx(0.0, abs=1e-12)


def test_oscillating_exponents():
    r = np.logspace(-12, 0, 12 * 8 + 1)
    v = oscillating_values(r)
    assert ix.critical_exponent(r, v, "liminf").value == pytest.approx(0.5, abs=0.01)
    assert ix.critical_exponent(r, v, "limsup").value == pytest.approx(1.0, abs=0.01)


def test_exponent_needs_four_decades():
    r = np.logspace(-3, 0, 25)
    with pytest.raises(InsufficientRangeError):
        ix.critical_exponent(r, r**-1.0)
    with pytest.raises(ValueError):
        ix.critical_exponent(r, r**-1.0, mode="median")


@settings(max_examples=40, deadline=None)
@given(p=st.floats(0.0, 3.0), scale=st.floats(1e-3, 1e3))
def test_exponent_recovers_any_power(p, scale):
    r = np.logspace(-10, 0, 81)
    v = scale * r**-p
    for mode in ("liminf", "limsup"):
        assert ix.critical_exponent(r, v, mode).value == pytest.approx(p, abs=1e-6)


@pytest.mark.parametrize("name,index", [("brownian", 2.0), ("drift", 1.0), ("stable_like_martingale", 2.0),
                                        ("stable_a15", 1.5), ("subordinator_half", 0.5)])
def test_delta_beta(builtin, name, index):
    delta, beta = ix.delta_beta_from_y(builtin(name), 1.0)
    assert delta.value == pytest.approx(index, abs=0.1)
    assert beta.value == pytest.approx(index, abs=0.1)


def test_delta_beta_range_check(builtin):
    with pytest.raises(GrowthRangeError):
        ix.delta_beta_from_y(builtin("brownian"), 2.0)


def test_growth_u_brownian(builtin):
    phi = ix.ModerateFunctionSpec("power", 1.0)
    t = np.logspace(-6, 0, 13)
    (tu, u), (tv, v) = ix.build_growth_u(builtin("brownian"), 1.0, phi, t)
    np.testing.assert_allclose(u, tu, rtol=1e-12)
    # v comes from bisection with an absolute tolerance
    np.testing.assert_allclose(v, tv, rtol=0, atol=1e-13)


def test_growth_u_time_changed(builtin):
    phi = ix.ModerateFunctionSpec("power", 1.0)
    t = np.logspace(-4, 0, 9)
    (tu, u), (tv, v) = ix.build_growth_u(builtin("tc_brownian"), 1.0, phi, t)
    np.testing.assert_allclose(u, tu**2, rtol=1e-12)
    np.testing.assert_allclose(v, np.sqrt(tv), rtol=1e-9)


@pytest.mark.parametrize("name", ["stable_a1", "subordinator_half", "compound_poisson", "levy_sum"])
def test_growth_u_inverse_pair(builtin, name):
    spec = builtin(name)
    t = np.logspace(-5, 0, 11)
    (tu, u), (tv, v) = ix.build_growth_u(spec, 1.0, None, t)
    assert np.all(np.diff(u) >= 0) and np.all(np.diff(v) >= 0)
    # u(v(t)) = t
    uv = ix.default_phi(spec, 1.0).inverse(np.asarray(
        [float(np.asarray(ix.fn.y_total(spec, vv, 1.0))) for vv in v]))
    np.testing.assert_allclose(uv, tv, rtol=1e-6)
    if name != "levy_sum":
        np.testing.assert_allclose(v, tv, rtol=1e-9)


def test_growth_u_range_error(builtin):
    with pytest.raises(GrowthRangeError):
        ix.build_growth_u(builtin("brownian"), 1.0, ix.ModerateFunctionSpec("power", 1.0, scale=10.0),
                          np.array([0.5, 1.0]))


@pytest.mark.parametrize("name,index", [("brownian", 2.0), ("stable_a1", 1.0)])
def test_indices_along_v(builtin, name, index):
    for est in ix.indices_along_v(builtin(name)):
        assert est.value == pytest.approx(index, abs=0.1)


@pytest.mark.parametrize("name", specfile.builtin_names())
def test_indices_along_v_ordering(builtin, name):
    d1, d2, b1, b2 = ix.indices_along_v(builtin(name))
    assert d2.value <= b1.value + d2.half_width + b1.half_width
    assert d1.value <= b2.value + d1.half_width + b2.half_width


def test_sigma_sequences():
    seq, ok = ix.sigma_sequence(ix.SlowFunctionSpec("constant", 0.5), 0.3, n_terms=12)
    np.testing.assert_allclose(seq, 0.3 * 2.0 ** -np.arange(12), rtol=1e-12)
    assert ok
    seq, _ = ix.sigma_sequence(ix.SlowFunctionSpec("inverse_log"), 0.1, n_terms=5)
    assert seq[1] == pytest.approx(SIGMA_SEQ_SECOND, rel=1e-10)
    assert np.all(np.diff(seq) < 0)
    with pytest.raises(ValueError):
        ix.sigma_sequence(ix.SlowFunctionSpec("inverse_log"), 0.5)


@pytest.mark.parametrize("kind", ["constant", "inverse_log", "inverse_loglog"])
def test_slow_functions_certified(kind):
    assert ix.SlowFunctionSpec(kind).spot_check()


def test_slow_function_validation():
    with pytest.raises(CertificateError):
        ix.SlowFunctionSpec("constant", c=1.5)
    with pytest.raises(CertificateError):
        ix.SlowFunctionSpec("cubic")


@settings(max_examples=30, deadline=None)
@given(p=st.floats(0.1, 3.0), kappa=st.floats(-2.0, 0.05), scale=st.floats(0.1, 10.0))
def test_moderate_certificates_hold(p, kappa, scale):
    ix.ModerateFunctionSpec("power", p, scale=scale).check(quasiconvex=True)
    if kappa < p:
        ix.ModerateFunctionSpec("power_log", p, kappa=kappa, scale=scale).check(quasiconvex=True)


def test_moderate_validation():
    with pytest.raises(CertificateError):
        ix.ModerateFunctionSpec("power", -1.0)
    with pytest.raises(CertificateError):
        ix.ModerateFunctionSpec("sampled")


def test_quasiconvexity_examples(builtin):
    assert ix.quasiconvexity_test(builtin("stable_a1")) == (True, 1.0)
    # y ≈ f(t) z(r): the clock inverse makes the ratio exactly t2/t1
    assert ix.quasiconvexity_test(builtin("tc_brownian"), v=ps.Power(1.0, 0.5)) == (True, 1.0)
    # the needed exponent 1/(1 + log 1/r) shrinks to 0 as r -> 0
    flag, _ = ix.quasiconvexity_test(lambda t, r: t ** (1.0 / (1.0 + np.log(1.0 / r))))
    assert not flag


def test_quasiconvexity_growing_exponent_passes():
    # t^(1 + log 1/r) only gets steeper as r -> 0, so sigma = 1 always works
    flag, sigma = ix.quasiconvexity_test(lambda t, r: t ** (1.0 + np.log(1.0 / r)))
    assert flag and sigma == pytest.approx(1.0)


def test_class_I_examples(builtin):
    assert ix.class_I_test(builtin("stable_a1"))
    assert ix.class_I_test(builtin("stable_like_martingale"))
    concave = specfile.loads('[[component]]\ngaussian = { kind = "power", a = 1.0, p = 0.5 }\n')
    assert not ix.class_I_test(concave)


DISINTEGRATED = """
[[component]]
{drift}
gaussian = {{ kind = "linear", a = 1.0 }}
[component.kernel]
kind = "disintegrated"
alpha = 1.5
c_pos = 1.0
c_neg = 1.0
"""


def test_conditions_i_ii(builtin):
    assert ix.conditions_i_ii_check(builtin("stable_like_martingale")) == (True, True)
    sym = specfile.loads(DISINTEGRATED.format(drift=""))
    assert ix.conditions_i_ii_check(sym)[0]
    alternating = specfile.loads(DISINTEGRATED.format(
        drift='drift = { kind = "piecewise_linear", t = [0.0, 0.25, 0.5, 0.75, 1.0], '
              'values = [0.0, 0.25, 0.0, 0.25, 0.0] }'))
    assert not ix.conditions_i_ii_check(alternating)[0]


def test_conditions_need_disintegrated_form(builtin):
    with pytest.raises(ix.UnsupportedShapeError):
        ix.conditions_i_ii_check(builtin("stable_a1"))


def test_v_bounds_brownian(builtin):
    # y_s(r) = s/r² turns both conditions into s >= c t and s <= t/c
    c = ix.SlowFunctionSpec("constant", 0.5)
    t, v_up, v_lo, extra = ix.v_bounds(builtin("brownian"), 1.0, 0.5, c, 2.0, thetas=(1.0, 1.5))
    np.testing.assert_allclose(v_up, 0.5 * t, rtol=1e-5)
    np.testing.assert_allclose(v_lo, 2.0 * t, rtol=1e-5)
    for theta, v in extra.items():
        np.testing.assert_allclose(v, t ** (theta / 2), rtol=1e-5)
        assert np.all((v >= v_up) & (v < 1.0))


def test_v_bounds_time_changed_bracket(builtin):
    c = ix.SlowFunctionSpec("constant", 0.5)
    t, v_up, v_lo, _ = ix.v_bounds(builtin("tc_brownian"), 1.0, 0.5, c, 2.0)
    assert np.all(v_up <= np.sqrt(t)) and np.all(np.sqrt(t) <= v_lo)


def test_regularity_conditions(builtin):
    assert ix.regularity_conditions_check(builtin("brownian"), 1.0) == (True, True)
    assert ix.regularity_conditions_check(builtin("tc_brownian"), 1.0) == (True, True)
    # slope in r depends on s: the ratio across r is unbounded
    flag_i, _ = ix.regularity_conditions_check(lambda s, r: s * r ** (-1.0 - s), 1.0)
    assert not flag_i


def test_simplified_forms(builtin):
    out = ix.simplified_indices(builtin("subordinator_half"), 1.0)
    for key in ("beta_G", "delta_g", "beta_g"):
        assert out[key].value == pytest.approx(0.5, abs=0.02)
    assert out["agrees"]
    out = ix.simplified_indices(builtin("compound_poisson"), 1.0)
    assert out["beta_G"].value == pytest.approx(0.0, abs=0.02)
    with pytest.raises(InapplicableError):
        ix.simplified_indices(builtin("drift"), 1.0)


def test_moment_method_power(builtin):
    r = np.logspace(-4, 0, 17)
    e = ix.ModerateFunctionSpec("power", 1.5)
    H, h, idx, _ = ix.moment_method_hH(e, r)
    np.testing.assert_allclose(H, r**-1.5, rtol=1e-12)
    assert h is None
    assert idx["delta1"].value == pytest.approx(1.5, abs=0.01)
    assert idx["beta2"].value == pytest.approx(1.5, abs=0.01)


def test_moment_method_continuous_process(builtin):
    spec = builtin("brownian")
    r = np.logspace(-4, 0, 17)
    batch, long_spec = vf.passage_batch(spec, r, 300, 0, 2.0)
    e = ix.ModerateFunctionSpec("power", 1.0)
    H, h, idx, cond = ix.moment_method_hH(e, r, sim.passage_tail_hook(long_spec, batch),
                                          c=ix.SlowFunctionSpec("constant", 0.5))
    np.testing.assert_allclose(h, H, rtol=1e-12)
    assert cond
    vals = [idx[k].value for k in ("delta1", "delta2", "beta1", "beta2")]
    assert max(vals) - min(vals) <= 0.01


def test_moment_method_slow_function():
    # a continuous process contributes no jump term, so h = H = log(e + 1/r)
    r = np.logspace(-60, -1, 60)
    e = ix.ModerateFunctionSpec("inverse_log")
    _, _, idx, _ = ix.moment_method_hH(e, r, lambda rv, lam: np.zeros_like(lam))
    for est in idx.values():
        assert est.value == pytest.approx(0.0, abs=0.1)


def test_moment_method_rejects_bad_certificate():
    bad = ix.ModerateFunctionSpec("sampled", samples=ix.SampledFunction((0.1, 0.2, 1.0), (1.0, 100.0, 101.0)),
                                  rho=1.0, sigma=1.0)
    with pytest.raises(CertificateError):
        ix.moment_method_hH(bad, np.logspace(-4, 0, 9))


@pytest.mark.parametrize("name,index", [("brownian", 2.0), ("subordinator_half", 0.5)])
def test_growth_report(builtin, name, index):
    rep = ix.growth_report(builtin(name))
    assert rep.ordering_ok()
    for q, est, hw, _ in rep.rows():
        if q in ("delta", "beta", "delta1", "delta2", "beta1", "beta2", "beta_G", "delta_g", "beta_g"):
            assert est == pytest.approx(index, abs=0.1), q
    u = np.asarray(rep.u_samples[1])
    assert np.all(np.diff(u) >= 0)
    assert "growth report" in rep.text()


def test_step_process_report(builtin):
    rep = ix.growth_report(builtin("compound_poisson"))
    assert rep.step_process
    assert rep.beta.value == pytest.approx(0.0, abs=0.1)
