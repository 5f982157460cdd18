"""Independent reference values for the test suite.

Nothing here imports addgrowth. Each value comes from a direct quadrature,
root solve or series evaluation, and the printed numbers are frozen into the
tests as literals. Rerun with `python3 tests/oracles/compute_oracles.py`.
"""

import math
import warnings

import numpy as np
from scipy import integrate, optimize, special


def quad(f, a, b, **kw):
    return integrate.quad(f, a, b, limit=400, epsabs=0, epsrel=1e-13, **kw)[0]


def stable_tail(r, alpha, c=1.0):
    # symmetric density c|x|^{-1-alpha}, both sides
    return 2 * quad(lambda x: c * x ** (-1 - alpha), r, math.inf)


def stable_moment2(r, alpha, c=1.0):
    return 2 * quad(lambda x: x * x * c * x ** (-1 - alpha), 0, r)


def sub_density(x):
    return x ** -1.5


def brownian_sup_below(a, t=1.0):
    """P(sup_{s<=t}|B_s| < a), eigenfunction series."""
    k = np.arange(0, 200)
    terms = (-1.0) ** k / (2 * k + 1) * np.exp(-((2 * k + 1) ** 2) * math.pi ** 2 * t / (8 * a * a))
    return 4 / math.pi * float(np.sum(terms))


def levy_char_exponent(density, u, lo=-math.inf, hi=math.inf):
    """∫ (e^{iux} - 1 - iux 1{|x|<=1}) density(x) dx with the compensator dropped for
    symmetric measures (caller passes a one-sided range when needed)."""
    re = 0.0
    im = 0.0
    for a, b in ((-1.0, 0.0), (0.0, 1.0)):
        a, b = max(a, lo), min(b, hi)
        if a >= b:
            continue
        re += quad(lambda x: (math.cos(u * x) - 1) * density(x), a, b)
        im += quad(lambda x: math.sin(u * x) * density(x), a, b)
    # |x| > 1: Fourier-weighted quadrature on the half line, minus the mass
    for sign, ok in ((1.0, hi > 1.0), (-1.0, lo < -1.0)):
        if not ok:
            continue
        g = lambda x, s=sign: density(s * x)
        c = integrate.quad(g, 1.0, math.inf, weight="cos", wvar=u, limlst=200)[0]
        sn = integrate.quad(g, 1.0, math.inf, weight="sin", wvar=u, limlst=200)[0]
        re += c - quad(g, 1.0, math.inf)
        im += sign * sn
    return complex(re, im)


def main():
    warnings.simplefilter("ignore", integrate.IntegrationWarning)
    out = {}
    # tail mass, truncated moment and signed mean
    out["stable_a1_tail_r05"] = stable_tail(0.5, 1.0)
    out["stable_a1_moment2_r05"] = stable_moment2(0.5, 1.0)
    out["sub_moment2_r025"] = quad(lambda x: x * x * sub_density(x), 0, 0.25)
    out["sub_small_mean_r025"] = quad(lambda x: x * sub_density(x), 0, 0.25)
    out["sub_small_mean_r1"] = quad(lambda x: x * sub_density(x), 0, 1.0)
    sub_G = quad(sub_density, 0.25, math.inf)
    out["sub_tail_r025"] = sub_G
    out["sub_y_r025"] = sub_G + out["sub_moment2_r025"] / 0.25 ** 2 + out["sub_small_mean_r025"] / 0.25
    # smoothed functional: r / ∫_0^r dx / y(x)
    out["brownian_ysmooth_r03"] = 0.3 / quad(lambda x: x * x, 0, 0.3)
    out["drift_ysmooth_r03_t2"] = 0.3 / quad(lambda x: x / 2.0, 0, 0.3)
    # threshold time for Brownian with m = 1/(2 a)
    a = (3 + math.sqrt(5)) / 2
    m = 1 / (2 * a)
    out["m_d1"] = m
    out["n_brownian_r01"] = optimize.brentq(lambda t: t / 0.01 - m, 0, 1, xtol=1e-18, rtol=1e-15)
    # Laplace exponent of the 1/2-subordinator at λ = 1 and λ = 4
    out["sub_laplace_1"] = quad(lambda x: (1 - math.exp(-x)) * sub_density(x), 0, math.inf)
    out["sub_laplace_4"] = quad(lambda x: (1 - math.exp(-4 * x)) * sub_density(x), 0, math.inf)
    # Σ-sequence second term for c(t) = 1/log(1/t), s0 = 0.1
    out["sigma_seq_second"] = optimize.brentq(lambda s: s * math.log(1 / s) - 0.1, 1e-6, 1 / math.e, xtol=1e-16)
    # Brownian running maximum
    out["brownian_P_sup_ge_1"] = 1 - brownian_sup_below(1.0)
    # reflection bound 4·P(N > 10) for P(sup_{[0,0.01]}|B| >= 1)
    out["brownian_sup_bound_t001"] = 2 * special.erfc(10 / math.sqrt(2))
    # dichotomy single-level event: sup_{[0,2^-20]}|B| < 0.1·2^{-20/3}
    out["brownian_dyadic20_eta3"] = brownian_sup_below(0.1 * 2 ** (10 - 20 / 3))
    # characteristic exponents at t = 1
    us = [0.3, 0.7, 1.0, 1.5, 2.5]
    for alpha, name in ((0.5, "stable_a05"), (1.0, "stable_a1"), (1.5, "stable_a15")):
        out[f"char_{name}"] = [levy_char_exponent(lambda x, al=alpha: abs(x) ** (-1 - al), u).real for u in us]
    sub = []
    for u in us:
        z = levy_char_exponent(lambda x: x ** -1.5, u, lo=0.0)
        sub.append((z.real, z.imag))
    out["char_subordinator_half"] = sub
    out["char_subordinator_gamma_form"] = [
        complex(special.gamma(-0.5) * (-1j * u) ** 0.5) for u in us
    ]
    out["char_u"] = us
    # Pareto compound Poisson: E[min(T, H)] for T ~ Exp(1), H = 5
    out["pareto_capped_mean_H5"] = quad(lambda s: math.exp(-s), 0, 5.0)
    # stable-like kernel: alpha_s = 1.2 + 0.4 s, c'_s = 1 + s, c'' = 0.5 on |x| <= 1
    def kappa_tail(sv, r):
        al = 1.2 + 0.4 * sv
        dens = lambda x: (2 - al) * x ** (-1 - al)
        return (1 + sv + 0.5) * quad(dens, r, 1.0)

    def kappa_m2(sv, r):
        al = 1.2 + 0.4 * sv
        return (1 + sv + 0.5) * quad(lambda x: (2 - al) * x ** (1 - al), 0, r)

    out["disint_tail_t06"] = [quad(lambda sv: kappa_tail(sv, r), 0, 0.6) for r in (0.001, 0.01, 0.1, 0.5)]
    out["disint_m2_t06"] = [quad(lambda sv: kappa_m2(sv, r), 0, 0.6) for r in (0.001, 0.01, 0.1, 0.5)]
    # passage bracket constants for e(x) = x, d = 1
    k = 3
    delta = k / 2 - 1
    c_prime = (18 * math.sqrt(2 * k)) ** k * m ** (-k / 2)
    out["bracket_c1_x"] = m / 2
    out["bracket_c2_x"] = (1 + c_prime / delta) * m
    for key, val in out.items():
        print(f"{key} = {val!r}")


if __name__ == "__main__":
    main()
