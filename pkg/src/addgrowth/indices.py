"""Growth indices of an additive process and the growth functions u, v.

Indices are asymptotic (r -> 0) quantities; everything here estimates them
from finite log-spaced grids with an explicit window protocol, so each
estimate carries a half-width diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from . import functionals as fn
from . import process_spec as ps
from .errors import (
    CertificateError,
    DriftUndefinedError,
    GrowthRangeError,
    InapplicableError,
    InsufficientRangeError,
    UnsupportedShapeError,
)

ETA_LO, ETA_HI, ETA_TOL = 0.1, 4.0, 0.01


# --------------------------------------------------------------------------
# Function families


@dataclass(frozen=True)
class SlowFunctionSpec:
    """c(t) with c(t)·t^-η -> ∞ as t -> 0 for every η > 0.

    kinds: ``constant`` (value ``c`` in (0,1)), ``inverse_log``
    ((log 1/t)^-p) and ``inverse_loglog`` ((log log 1/t)^-p).
    """

    kind: str = "constant"
    c: float = 0.5
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "inverse_log", "inverse_loglog"):
            raise CertificateError(f"unknown slow-function kind '{self.kind}'")
        if self.kind == "constant" and not 0 < self.c < 1:
            raise CertificateError("a constant slow function needs c in (0, 1)")
        if self.p <= 0:
            raise CertificateError("slow-function power p must be positive")

    @property
    def domain_max(self) -> float:
        """Largest t where the function is defined and below 1."""
        return {"constant": math.inf, "inverse_log": math.exp(-1.0),
                "inverse_loglog": math.exp(-math.e)}[self.kind]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "constant":
                out = np.full(t.shape, self.c)
            elif self.kind == "inverse_log":
                out = np.log(1.0 / t) ** (-self.p)
            else:
                out = np.log(np.log(1.0 / t)) ** (-self.p)
        return out if out.ndim else float(out)

    def spot_check(self, decades=range(2, 300, 2), etas=(0.05, 0.2, 1.0)) -> bool:
        """c(r)·r^-η stays positive and increases over the deeper half of the
        given decades (log families dip before they grow)."""
        r = 10.0 ** -np.asarray(list(decades), dtype=float)
        r = r[r < self.domain_max]
        vals = np.asarray(self(r))
        if np.any(~(vals > 0)):
            return False
        tail = slice(r.size // 2, None)
        return all(bool(np.all(np.diff(np.log(vals[tail]) - eta * np.log(r[tail])) > 0)) for eta in etas)


@dataclass(frozen=True)
class SampledFunction:
    """Positive increasing function from samples; log-log interpolation,
    power-law extrapolation below the first sample and f(0) = 0."""

    x: tuple
    y: tuple

    def __post_init__(self):
        x, y = np.asarray(self.x, float), np.asarray(self.y, float)
        if x.size < 2 or np.any(np.diff(x) <= 0) or np.any(x <= 0) or np.any(y <= 0):
            raise ValueError("sampled function needs >= 2 increasing positive x with positive y")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        lx, ly = np.log(np.asarray(self.x)), np.log(np.asarray(self.y))
        with np.errstate(divide="ignore"):
            lt = np.log(np.where(t > 0, t, np.nan))
        slope0 = (ly[1] - ly[0]) / (lx[1] - lx[0])
        body = np.interp(lt, lx, ly)
        body = np.where(lt < lx[0], ly[0] + slope0 * (lt - lx[0]), body)
        out = np.where(t > 0, np.exp(body), 0.0)
        return out if out.ndim else float(out)

    def inverse(self, w):
        return SampledFunction(self.y, self.x)(w) if np.all(np.diff(self.y) > 0) else _bisect_inverse(self, w)


def _bisect_inverse(f, w, hi=None):
    w = np.atleast_1d(np.asarray(w, dtype=float))
    lo_t = np.zeros_like(w)
    hi_t = np.full_like(w, hi if hi is not None else max(f.x[-1], 1.0) if hasattr(f, "x") else 1.0)
    while np.any(np.asarray(f(hi_t)) < w) and hi_t.max() < 1e300:
        hi_t = np.where(np.asarray(f(hi_t)) < w, hi_t * 2, hi_t)
    for _ in range(200):
        mid = 0.5 * (lo_t + hi_t)
        below = np.asarray(f(mid)) < w
        lo_t, hi_t = np.where(below, mid, lo_t), np.where(below, hi_t, mid)
    return hi_t


@dataclass(frozen=True)
class ModerateFunctionSpec:
    """φ with φ(t₂)/φ(t₁) <= ρ(t₂/t₁)^σ for t₁ < t₂ (moderate).

    kinds: ``power`` (scale·t^p), ``power_log`` (scale·t^p·log(e+1/t)^κ),
    ``inverse_log`` (scale/log(e+1/t)) and ``sampled`` (interpolated
    samples with caller-supplied certificates).  The log families use
    log(e + 1/t) so they stay defined and increasing on all of (0, ∞).
    """

    kind: str = "power"
    p: float = 1.0
    kappa: float = 0.0
    scale: float = 1.0
    samples: SampledFunction | None = None
    rho: float | None = None
    sigma: float | None = None

    def __post_init__(self):
        if self.kind not in ("power", "power_log", "inverse_log", "sampled"):
            raise CertificateError(f"unknown moderate-function kind '{self.kind}'")
        if self.scale <= 0:
            raise CertificateError("scale must be positive")
        if self.kind in ("power", "power_log") and self.p <= 0:
            raise CertificateError("exponent p must be positive")
        if self.kind == "power_log" and self.kappa > 0 and self.kappa >= self.p:
            raise CertificateError("power_log needs kappa < p to stay increasing")
        if self.kind == "sampled" and (self.samples is None or self.rho is None or self.sigma is None):
            raise CertificateError("sampled moderate functions need samples and (rho, sigma) certificates")

    @property
    def certificate(self) -> tuple[float, float]:
        """(ρ, σ) for the moderate inequality."""
        if self.kind == "power":
            return 1.0, self.p
        if self.kind == "power_log":
            return 1.0, self.p + max(-self.kappa, 0.0)
        if self.kind == "inverse_log":
            return 1.0, 1.0
        return float(self.rho), float(self.sigma)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "power":
                out = self.scale * np.power(np.maximum(t, 0.0), self.p)
            elif self.kind == "power_log":
                out = np.where(t > 0, self.scale * t**self.p * np.log(math.e + 1.0 / t) ** self.kappa, 0.0)
            elif self.kind == "inverse_log":
                out = np.where(t > 0, self.scale / np.log(math.e + 1.0 / t), 0.0)
            else:
                out = self.scale * np.asarray(self.samples(t))
        return out if np.ndim(out) else float(out)

    def inverse(self, w):
        w = np.asarray(w, dtype=float)
        if self.kind == "power":
            out = np.power(np.maximum(w, 0.0) / self.scale, 1.0 / self.p)
            return out if out.ndim else float(out)
        out = _bisect_inverse(self, w, hi=1.0).reshape(w.shape)
        return out if out.ndim else float(out)

    def check(self, t_lo: float = 1e-12, t_hi: float = 1.0, n: int = 49, quasiconvex: bool = False) -> None:
        """Raise CertificateError unless the certificate holds on sampled pairs."""
        rho, sigma = self.certificate
        t = np.logspace(math.log10(t_lo), math.log10(t_hi), n)
        f = np.asarray(self(t))
        i, j = np.triu_indices(n, 1)
        ratio = f[j] / f[i]
        k = t[j] / t[i]
        if np.any(ratio > rho * k**sigma * (1 + 1e-9)):
            raise CertificateError(f"{self.kind} function violates its moderate certificate (rho={rho}, sigma={sigma})")
        if quasiconvex and np.any(ratio < k**self.quasiconvex_exponent * (1 - 1e-9)):
            raise CertificateError(f"{self.kind} function is not quasiconvex with exponent {self.quasiconvex_exponent}")

    @property
    def quasiconvex_exponent(self) -> float:
        """σ with φ(t₂)/φ(t₁) >= (t₂/t₁)^σ (c = 1); only exact for powers."""
        if self.kind == "power":
            return self.p
        if self.kind == "power_log":
            return self.p - max(self.kappa, 0.0)
        return 0.0


# --------------------------------------------------------------------------
# Critical exponents


@dataclass(frozen=True)
class ExponentEstimate:
    value: float
    half_width: float
    per_window: tuple = ()
    mode: str = "liminf"

    def __float__(self):
        return float(self.value)


def critical_exponent(r, values, mode: str = "liminf", tail_decades: float = 3.0,
                      widths=(1, 2, 3), stride: float = 0.25, floor: float = ETA_TOL) -> ExponentEstimate:
    """Critical η for r^η·value -> 0 as r -> 0.

    Local exponents are Theil-Sen slopes of log value against log(1/r) on
    windows of each width (decades) sliding over the last ``tail_decades``.
    liminf mode takes the smallest window slope, limsup mode the largest.
    The width-1 result is the estimate; the spread over widths is the
    half-width (never below ``floor``).
    """
    if mode not in ("liminf", "limsup"):
        raise ValueError("mode must be 'liminf' or 'limsup'")
    r = np.asarray(r, dtype=float).ravel()
    v = np.asarray(values, dtype=float).ravel()
    if r.shape != v.shape:
        raise ValueError("r and values must have equal length")
    keep = np.isfinite(v) & (v > 0) & (r > 0)
    r, v = r[keep], v[keep]
    if r.size < 2:
        raise InsufficientRangeError("need at least two positive samples")
    x = np.log10(1.0 / r)
    y = np.log10(v)
    order = np.argsort(x)
    x, y = x[order], y[order]
    span = x[-1] - x[0]
    if span < 4.0 - 1e-9:
        raise InsufficientRangeError(f"samples span {span:.2f} decades; at least 4 are needed")
    end = x[-1]
    per_width = []
    windows = []
    pick = min if mode == "liminf" else max
    for k in widths:
        slopes = []
        a = end - tail_decades
        while a + k <= end + 1e-9:
            sel = (x >= a - 1e-9) & (x <= a + k + 1e-9)
            if sel.sum() >= 2:
                slopes.append(stats.theilslopes(y[sel], x[sel])[0])
            a += stride
        if slopes:
            per_width.append(pick(slopes))
            windows.append((k, float(per_width[-1])))
    value = float(per_width[0])
    spread = (max(per_width) - min(per_width)) / 2.0
    return ExponentEstimate(value, max(spread, floor), tuple(windows), mode)


def default_r_grid_deep() -> np.ndarray:
    return fn.default_r_grid(1e-12, 1.0, 8)


def default_r_grid_indices() -> np.ndarray:
    # r^(1/η) at η = ETA_LO must stay representable: (1e-14)^10 = 1e-140
    return fn.default_r_grid(1e-14, 1e-2, 8)


def delta_beta_from_y(spec: ps.ProcessSpec, b: float, r_grid=None):
    """(δ, β): liminf/limsup critical exponents of r ↦ y_b(r)."""
    if not 0 < b <= spec.T_max:
        raise GrowthRangeError(f"b must lie in (0, {spec.T_max}]")
    r = default_r_grid_deep() if r_grid is None else np.asarray(r_grid, float)
    y = np.asarray(fn.y_total(spec, np.full_like(r, b), r))
    return critical_exponent(r, y, "liminf"), critical_exponent(r, y, "limsup")


# --------------------------------------------------------------------------
# Growth functions


def _y_source(source, v=None):
    """Normalize a spec or a callable y(t, r) into y(t, r) with time change v."""
    if isinstance(source, ps.ProcessSpec):
        spec = source

        def y(t, r):
            t = np.asarray(v(t) if v is not None else t, dtype=float)
            return np.asarray(fn.y_total(spec, np.minimum(t, spec.T_max), r))
        return y
    if v is None:
        return lambda t, r: np.asarray(source(np.asarray(t, float), np.asarray(r, float)), dtype=float)
    return lambda t, r: np.asarray(source(np.asarray(v(t), float), np.asarray(r, float)), dtype=float)


def first_passage_time(yfun, target, s_hi: float, strict: bool = False, tol: float = 1e-14):
    """inf{s in [0, s_hi] : y(s) >= target} (or > target), vectorized over target.

    ``yfun(s)`` must be nondecreasing in s; entries never reached give nan.
    """
    target = np.atleast_1d(np.asarray(target, dtype=float))
    top = np.asarray(yfun(np.full(target.shape, s_hi)))
    reach = top > target if strict else top >= target
    lo = np.zeros(target.shape)
    hi = np.full(target.shape, s_hi)
    while np.max(hi - lo) > tol * s_hi:
        mid = 0.5 * (lo + hi)
        val = np.asarray(yfun(mid))
        hit = val > target if strict else val >= target
        hi, lo = np.where(hit, mid, hi), np.where(hit, lo, mid)
    return np.where(reach, hi, np.nan)


def default_phi(spec: ps.ProcessSpec, b: float) -> ModerateFunctionSpec:
    """φ(t) = (y_b(b)/b)·t, which gives v = u = id for Lévy specs."""
    return ModerateFunctionSpec("power", 1.0, scale=float(fn.y_total(spec, b, b)) / b)


def build_growth_u(spec: ps.ProcessSpec, b: float, phi: ModerateFunctionSpec | None = None, t_grid=None):
    """Solve y_{v(t)}(b) = φ(t) for v and return (u_samples, v_samples).

    u(t) = φ⁻¹(y_t(b)) is the inverse of v; both are sampled on ``t_grid``.
    """
    if b <= 0:
        raise GrowthRangeError("b must be positive")
    phi = phi or default_phi(spec, min(b, spec.T_max))
    t = np.asarray(t_grid if t_grid is not None else np.logspace(-8, math.log10(spec.T_max), 57), dtype=float)
    target = np.asarray(phi(t))
    top = float(fn.y_total(spec, spec.T_max, b))
    if np.any(target > top * (1 + 1e-12)):
        bad = t[target > top * (1 + 1e-12)][0]
        raise GrowthRangeError(f"φ({bad:.4g}) exceeds y_T(b) = {top:.6g}; shrink the t-grid")
    v = first_passage_time(lambda s: fn.y_total(spec, s, np.full(np.shape(s), b)), target, spec.T_max)
    u = np.asarray(phi.inverse(np.asarray(fn.y_total(spec, t[t <= spec.T_max], np.full(np.sum(t <= spec.T_max), b)))))
    return (t[t <= spec.T_max], u), (t, v)


# --------------------------------------------------------------------------
# Indices along a growth function v


def _bisect_eta(decides, lo=ETA_LO, hi=ETA_HI, tol=ETA_TOL):
    """Smallest η where decides(η) flips from False to True (monotone)."""
    if decides(lo):
        return 0.0
    if not decides(hi):
        return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if decides(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _summable(terms, last: int) -> bool:
    """Geometric-rate test on the last terms: fitted log-ratio below 0."""
    terms = np.asarray(terms, dtype=float)[-last:]
    if np.any(~np.isfinite(terms)):
        return False
    if np.any(terms <= 0):
        return True
    n = np.arange(terms.size)
    slope = np.polyfit(n, np.log(terms), 1)[0]
    return bool(slope < 0)


def indices_along_v(source, v=None, r_grid=None, n_terms: int = 20, sigma_seq=None):
    """(δ₁, δ₂, β₁, β₂) for w_η(r) = y_{v(r)}(r^{1/η}).

    δ₁, β₁ bisect η on the sign of the liminf/limsup exponent of w_η; δ₂,
    β₂ bisect η on summability of w_η(σ_n)^{∓1} along σ_n = 2⁻ⁿ (or the
    given Σ-sequence).  ``source`` is a spec or a callable y(t, r).
    """
    y = _y_source(source, v)
    r = default_r_grid_indices() if r_grid is None else np.asarray(r_grid, float)
    r_min = float(r.min())
    if sigma_seq is None:
        sigma_seq = 2.0 ** -np.arange(1, int(math.floor(math.log2(1.0 / r_min))) + 1)
    sig = np.asarray(sigma_seq, dtype=float)
    if sig.size < n_terms:
        raise InsufficientRangeError(f"Σ-sequence has {sig.size} terms; {n_terms} needed")

    def w(rr, eta):
        return y(rr, rr ** (1.0 / eta))

    cache = {}

    def exponent(eta, mode):
        key = (eta, mode)
        if key not in cache:
            cache[key] = critical_exponent(r, w(r, eta), mode)
        return cache[key]

    out = {}
    for name, mode in (("delta1", "liminf"), ("beta1", "limsup")):
        root = _bisect_eta(lambda eta, m=mode: exponent(eta, m).value < 0)
        out[name] = _root_estimate(root, lambda eta, m=mode: exponent(eta, m))

    terms_cache = {}

    def terms(eta):
        if eta not in terms_cache:
            terms_cache[eta] = w(sig, eta)
        return terms_cache[eta]

    for name, sign, conv_small in (("delta2", -1.0, True), ("beta2", 1.0, False)):
        roots = []
        for last in (n_terms, max(n_terms // 2, 5)):
            if conv_small:
                # δ₂ = sup{η : Σ w⁻¹ < ∞}: flip when the sum stops converging
                root = _bisect_eta(lambda eta, k=last: not _summable(terms(eta) ** sign, k))
            else:
                root = _bisect_eta(lambda eta, k=last: _summable(terms(eta) ** sign, k))
            roots.append(root)
        spread = abs(roots[0] - roots[1]) / 2 if all(map(math.isfinite, roots)) else math.inf
        out[name] = ExponentEstimate(roots[0], max(spread, ETA_TOL), tuple(roots), "summability")
    return out["delta1"], out["delta2"], out["beta1"], out["beta2"]


def _root_estimate(root, exponent_at):
    """Map the exponent half-width at the root to a half-width in η."""
    if not math.isfinite(root) or root == 0.0:
        return ExponentEstimate(root, ETA_TOL, (), "bisection")
    step = 0.05
    lo, hi = max(root - step, ETA_LO), min(root + step, ETA_HI)
    f_lo, f_hi = exponent_at(lo), exponent_at(hi)
    slope = abs(f_hi.value - f_lo.value) / (hi - lo)
    hw = exponent_at(root).half_width
    eta_hw = hw / slope if slope > 0 else math.inf
    return ExponentEstimate(root, max(ETA_TOL, min(eta_hw, ETA_HI)), (), "bisection")


def sigma_sequence(c: SlowFunctionSpec, s0: float, n_terms: int = 30, etas=(0.05, 0.1, 0.5, 1.0)):
    """Σ-sequence from s_{n+1}/c(s_{n+1}) = s_n, and whether
    (σ_{n-1}/σ_n)·σ_n^η decays for every η in ``etas``."""
    if not 0 < s0 < 1:
        raise ValueError("s0 must lie in (0, 1)")
    if s0 >= c.domain_max:
        raise ValueError(f"s0 must lie below {c.domain_max:.4g} for this slow function")
    seq = [s0]
    for _ in range(n_terms - 1):
        prev = seq[-1]
        f = lambda ls, p=prev: math.exp(ls) / float(c(math.exp(ls))) - p
        lo = math.log(prev) - 50.0
        while f(lo) > 0:
            lo -= 50.0
        seq.append(math.exp(optimize.brentq(f, lo, math.log(prev), xtol=1e-15, rtol=1e-15)))
    s = np.array(seq)
    ok = True
    for eta in etas:
        q = (s[:-1] / s[1:]) * s[1:] ** eta
        tail = q[len(q) // 2:]
        ok &= bool(np.all(np.diff(tail) < 0) and tail[-1] < q[len(q) // 2 - 1])
    return s, ok


# --------------------------------------------------------------------------
# Structural tests


def quasiconvexity_test(source, v=None, b: float = 1.0, c: SlowFunctionSpec | None = None,
                        t_grid=None, r_grid=None, grid_step: float = 0.01, stable_drop: float = 0.10):
    """Largest σ (on a 0.01 grid) with y_{v(t₂)}(r)/y_{v(t₁)}(r) >= c(r)(t₂/t₁)^σ.

    The flag also requires σ to survive extending the r-range: dropping the
    last two decades may raise σ by at most ``stable_drop`` (relative).
    """
    y = _y_source(source, v)
    t = np.asarray(t_grid if t_grid is not None else np.logspace(-4, 0, 13), dtype=float)
    r = np.asarray(r_grid if r_grid is not None else np.logspace(-8, math.log10(min(b, 1.0)), 33), dtype=float)
    r = r[r <= b]
    cval = np.ones_like(r) if c is None else np.asarray(c(r))
    tt, rr = np.meshgrid(t, r, indexing="ij")
    Y = y(tt, rr)
    i, j = np.triu_indices(t.size, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = Y[j] / Y[i]
        need = np.log(ratio / cval[None, :]) / np.log(t[j] / t[i])[:, None]
    need = np.where(np.isfinite(need), need, -np.inf)
    per_r = need.min(axis=0)

    def grid_floor(x):
        return math.floor(x / grid_step + 1e-6) * grid_step

    sigma_all = grid_floor(float(per_r.min()))
    upper = r >= r.min() * 100.0
    sigma_upper = grid_floor(float(per_r[upper].min())) if upper.any() else sigma_all
    stable = sigma_upper <= 0 or (sigma_upper - sigma_all) <= stable_drop * sigma_upper + 1e-12
    flag = sigma_all > 0 and stable
    return bool(flag), sigma_all


def class_I_test(source, v=None, t_max: float | None = None, t_grid=None, r_grid=None, rtol: float = 1e-8) -> bool:
    """Discrete convexity of t ↦ y_{v(t)}(r) on each small r."""
    y = _y_source(source, v)
    if t_grid is None:
        if t_max is None:
            t_max = source.T_max if isinstance(source, ps.ProcessSpec) else 1.0
        t_grid = np.linspace(0.0, t_max, 17)
    t = np.asarray(t_grid, dtype=float)
    r = np.asarray(r_grid if r_grid is not None else np.logspace(-6, -2, 9), dtype=float)
    tt, rr = np.meshgrid(t, r, indexing="ij")
    Y = y(tt, rr)
    slopes = np.diff(Y, axis=0) / np.diff(t)[:, None]
    scale = np.max(np.abs(slopes), axis=0)
    return bool(np.all(np.diff(slopes, axis=0) >= -rtol * scale[None, :]))


def _density_wrt(f: ps.TimeFunction, u: ps.TimeFunction, s):
    """Numerical Radon-Nikodym derivative df/du at s (central differences)."""
    s = np.asarray(s, dtype=float)
    h = 1e-6
    lo, hi = np.maximum(s - h, 0.0), s + h
    du = np.asarray(u(hi)) - np.asarray(u(lo))
    return (np.asarray(f(hi)) - np.asarray(f(lo))) / du


def conditions_i_ii_check(spec: ps.ProcessSpec, s_grid=None, r_grid=None, rtol: float = 1e-9):
    """(flag_i, flag_ii) for a spec whose components are in disintegrated form.

    flag_i: m̃_s(r) = r⁻¹(b_s − ∫_{r<|x|<=1} x κ_s(dx)) keeps one sign in s.
    flag_ii: Σ_i h_s(r) is nondecreasing in s.
    """
    kernels = [c.kernel for c in spec.components]
    if not all(isinstance(k, ps.Disintegrated) for k in kernels):
        raise UnsupportedShapeError("conditions (i)/(ii) need every component kernel in disintegrated form")
    u = kernels[0].u
    s = np.asarray(s_grid if s_grid is not None else np.linspace(0.0, spec.T_max, 41)[1:], dtype=float)
    r = np.asarray(r_grid if r_grid is not None else np.logspace(-6, -0.5, 12), dtype=float)
    ss, rr = np.meshgrid(s, r, indexing="ij")
    flag_i = True
    h_total = np.zeros(ss.shape)
    for comp, kern in zip(spec.components, kernels):
        b_s = _density_wrt(comp.drift, kern.u, s)[:, None]
        sig2 = _density_wrt(comp.gaussian, kern.u, s)[:, None]
        mean_band = np.asarray(kern.kappa_band(ss, rr, 1.0, 1, signed=True))
        m_tilde = (b_s - mean_band) / rr
        scale = np.max(np.abs(m_tilde), axis=0)
        pos = np.any(m_tilde > rtol * scale, axis=0)
        neg = np.any(m_tilde < -rtol * scale, axis=0)
        flag_i &= not np.any(pos & neg)
        h = (sig2 / rr**2 + np.asarray(kern.kappa_band(ss, 0.0, rr, 2)) / rr**2
             + np.asarray(kern.kappa_band(ss, rr, np.inf, 0)) + np.abs(m_tilde))
        h_total += h
    steps = np.diff(h_total, axis=0)
    flag_ii = bool(np.all(steps >= -rtol * np.abs(h_total[1:])))
    return bool(flag_i), flag_ii


def v_bounds(spec: ps.ProcessSpec, b: float, eps: float, c: SlowFunctionSpec, index: float,
                      t_grid=None, n_eta: int = 5, thetas=()):
    """Samples of v̄ and v̲ built from the index ``index`` (δ or β).

    v̄(t) = max over η in [index−eps, index) of inf{s : y_s(t^{1/η}) >= c(t)t·y_b(t^{1/η})}
    v̲(t) = min over η in (index, index+eps] of sup{s : y_s(t^{1/η}) <= t·y_b(t^{1/η})/c(t)}
    Also returns {θ: v(θ, t)} with v(θ, t) = inf{s : y_s(t^{1/index}) > t^{θ/index}·y_b(t^{1/index})}.
    """
    if not 0 < eps < index:
        raise GrowthRangeError("eps must lie in (0, index)")
    t = np.asarray(t_grid if t_grid is not None else np.logspace(-4, -1, 7), dtype=float)
    t = t[t < min(1.0, c.domain_max)]
    ct = np.asarray(c(t))

    def solve(etas, factor, strict):
        out = []
        for eta in etas:
            x = t ** (1.0 / eta)
            yb = np.asarray(fn.y_total(spec, np.full_like(x, b), x))
            target = factor * t * yb
            out.append(first_passage_time(
                lambda s, x=x: fn.y_total(spec, s, x), target, b, strict=strict, tol=1e-10))
        return np.array(out)

    below = np.linspace(index - eps, index, n_eta, endpoint=False)
    above = np.linspace(index + eps, index, n_eta, endpoint=False)
    v_upper_bar = np.nanmax(solve(below, ct, False), axis=0)
    v_lower_bar = np.nanmin(solve(above, 1.0 / ct, True), axis=0)
    extras = {}
    x = t ** (1.0 / index)
    yb = np.asarray(fn.y_total(spec, np.full_like(x, b), x))
    for theta in thetas:
        extras[theta] = first_passage_time(
            lambda s: fn.y_total(spec, s, x), t ** (theta / index) * yb, b, strict=True, tol=1e-10)
    return t, v_upper_bar, v_lower_bar, extras


def regularity_conditions_check(source, b: float, c1: SlowFunctionSpec | None = None, c2: SlowFunctionSpec | None = None,
                  c: SlowFunctionSpec | None = None, s_grid=None, r_grid=None):
    """(flag_i, flag_ii) for the two ratio conditions guaranteeing v̄ <= v̲."""
    c1 = c1 or SlowFunctionSpec("constant", 0.5)
    c2 = c2 or SlowFunctionSpec("constant", 0.5)
    c = c or SlowFunctionSpec("constant", 0.5)
    y = _y_source(source)
    s = np.asarray(s_grid if s_grid is not None else b * np.logspace(-3, -0.05, 9), dtype=float)
    r = np.asarray(r_grid if r_grid is not None else np.logspace(-6, -1, 21), dtype=float)
    ss, rr = np.meshgrid(s, r, indexing="ij")
    ratio = y(ss, rr) / y(np.full_like(ss, b), rr)
    # ratio(s, r2) <= ratio(s, r1) / (c1(r1) c2(r2)) for r1 < r2
    i, j = np.triu_indices(r.size, 1)
    allowed = ratio[:, i] / (np.asarray(c1(r[i])) * np.asarray(c2(r[j])))[None, :]
    flag_i = bool(np.all(ratio[:, j] <= allowed * (1 + 1e-12)))
    breaks = ()
    if isinstance(source, ps.ProcessSpec):
        breaks = ps.component_breakpoints(source)

    def gap(tv):
        ys = fn.smooth_functional(lambda x: y(np.full_like(x, tv), x), r, breaks)
        return y(np.full_like(r, tv), r) / ys

    g_b = gap(b)
    bound = np.log(np.asarray(c(r))) / np.log(r)
    flag_ii = all(bool(np.all(gap(sv) - g_b <= bound + 1e-12)) for sv in s)
    return flag_i, flag_ii


# --------------------------------------------------------------------------
# Simplified forms


def _drift_free_gaussian_free(spec: ps.ProcessSpec, b: float) -> bool:
    if any(np.asarray(comp.gaussian(b)) != 0 for comp in spec.components):
        return False
    try:
        return float(ps.gamma0_star(spec, b)) == 0.0
    except DriftUndefinedError:
        # infinite small-jump first moment: no drift term can dominate
        return True


def simplified_indices(spec: ps.ProcessSpec, b: float, r_grid=None, agree_tol: float = 0.1):
    """Indices through G_b (drift- and Gaussian-free) or g_b (increasing
    components): returns a dict with any of beta_G, delta_g, beta_g and
    the comparison against the y_b exponents."""
    r = default_r_grid_deep() if r_grid is None else np.asarray(r_grid, float)
    out = {}
    if _drift_free_gaussian_free(spec, b):
        G = sum(np.asarray(ps.tail_mass(spec, i, b, r)) for i in range(spec.d))
        out["beta_G"] = critical_exponent(r, G, "limsup")
    increasing = all(ps.is_increasing_component(spec, i) for i in range(spec.d))
    if increasing:
        try:
            drift_free = all(float(np.asarray(ps.gamma0(spec, i, b))) == 0.0 for i in range(spec.d))
        except DriftUndefinedError:
            drift_free = False
        if drift_free:
            g = sum(np.asarray(fn.laplace_exponent(spec, i, b, 1.0 / r)) for i in range(spec.d))
            out["delta_g"] = critical_exponent(r, g, "liminf")
            out["beta_g"] = critical_exponent(r, g, "limsup")
    if not out:
        raise InapplicableError("simplified forms need a drift-free Gaussian-free spec or increasing drift-free components")
    delta, beta = delta_beta_from_y(spec, b, r)
    out["agrees"] = all(
        abs(est.value - (delta.value if key == "delta_g" else beta.value)) <= agree_tol
        for key, est in out.items() if isinstance(est, ExponentEstimate)
    )
    return out


def moment_method_hH(e: ModerateFunctionSpec, r_grid, eg_hook=None, c: SlowFunctionSpec | None = None,
                     n_lambda: int = 24):
    """H(r) = e(r)⁻¹ and h(r) = [e(r) + ∫_r^1 E G_{T_r}(λ) e(dλ)]⁻¹.

    ``eg_hook(r, lam)`` returns E G_{T_r}(λ) for an array of λ (typically a
    Monte Carlo estimate).  Without it only H and its indices (δ₁, β₂)
    are produced.  Returns (H, h, indices, summable_condition).
    """
    e.check()
    r = np.asarray(r_grid, dtype=float)
    e_r = np.asarray(e(r))
    H = 1.0 / e_r
    idx = {"delta1": critical_exponent(r, H, "liminf"), "beta2": critical_exponent(r, H, "limsup")}
    if eg_hook is None:
        return H, None, idx, None
    integral = np.zeros_like(r)
    for k, rv in enumerate(r):
        if rv >= 1.0:
            continue
        lam = np.logspace(math.log10(rv), 0.0, n_lambda)
        eg = np.asarray(eg_hook(rv, lam), dtype=float)
        de = np.diff(np.asarray(e(lam)))
        integral[k] = float(np.sum(0.5 * (eg[1:] + eg[:-1]) * de))
    h = 1.0 / (e_r + integral)
    idx["delta2"] = critical_exponent(r, h, "liminf")
    idx["beta1"] = critical_exponent(r, h, "limsup")
    cond = None
    if c is not None:
        cond = bool(np.all(integral <= e_r / np.asarray(c(np.minimum(r, c.domain_max * 0.999)))))
    return H, h, idx, cond


# --------------------------------------------------------------------------
# Report


@dataclass
class GrowthReport:
    label: str
    b: float
    delta: ExponentEstimate
    beta: ExponentEstimate
    delta1: ExponentEstimate
    delta2: ExponentEstimate
    beta1: ExponentEstimate
    beta2: ExponentEstimate
    u_samples: tuple
    v_samples: tuple
    quasiconvex: bool
    sigma_exponent: float
    class_I: bool
    step_process: bool
    simplified: dict = field(default_factory=dict)

    def rows(self):
        """(quantity, estimate, half_width, method) tuples."""
        yield ("delta", self.delta.value, self.delta.half_width, "y_b liminf exponent")
        yield ("beta", self.beta.value, self.beta.half_width, "y_b limsup exponent")
        for name in ("delta1", "beta1"):
            est = getattr(self, name)
            yield (name, est.value, est.half_width, "eta bisection on w_eta exponent")
        for name in ("delta2", "beta2"):
            est = getattr(self, name)
            yield (name, est.value, est.half_width, "eta bisection on sigma_n summability")
        for key, est in self.simplified.items():
            if isinstance(est, ExponentEstimate):
                yield (key, est.value, est.half_width, "G_b tail" if key == "beta_G" else "g_b Laplace exponent")
        yield ("sigma_exponent", self.sigma_exponent, 0.01, "quasiconvexity grid search")
        yield ("quasiconvex", float(self.quasiconvex), 0.0, "flag")
        yield ("class_I", float(self.class_I), 0.0, "flag")
        yield ("step_process", float(self.step_process), 0.0, "flag")

    def ordering_ok(self) -> bool:
        """δ₂ <= β₁ and δ₁ <= β₂ up to the combined half-widths; δ <= β <= 2."""
        ok = self.delta2.value <= self.beta1.value + self.delta2.half_width + self.beta1.half_width
        ok &= self.delta1.value <= self.beta2.value + self.delta1.half_width + self.beta2.half_width
        ok &= self.delta.value <= self.beta.value + self.delta.half_width + self.beta.half_width
        ok &= self.beta.value <= 2.0 + self.beta.half_width
        return bool(ok)

    def text(self) -> str:
        lines = [f"growth report: {self.label} (b = {self.b:g})"]
        for q, est, hw, method in self.rows():
            lines.append(f"  {q:<15} {est:>9.4f} ± {hw:<7.4f} [{method}]")
        return "\n".join(lines) + "\n"


def growth_report(spec: ps.ProcessSpec, b: float | None = None, phi: ModerateFunctionSpec | None = None) -> GrowthReport:
    b = min(spec.T_max, 1.0) if b is None else b
    delta, beta = delta_beta_from_y(spec, b)
    t_grid = np.logspace(-9, math.log10(spec.T_max), 65)
    u_s, v_s = build_growth_u(spec, b, phi, t_grid)
    v_fun = SampledFunction(tuple(v_s[0]), tuple(np.maximum(v_s[1], 1e-300)))
    d1, d2, b1, b2 = indices_along_v(spec, v_fun)
    quasi, sigma = quasiconvexity_test(spec, v_fun, b)
    t_max = float(v_s[0][-1])
    class_i = class_I_test(spec, v_fun, t_max=t_max)
    try:
        simple = simplified_indices(spec, b)
    except InapplicableError:
        simple = {}
    return GrowthReport(spec.label, b, delta, beta, d1, d2, b1, b2, u_s, v_s, quasi, sigma, class_i,
                        ps.is_step_process(spec), simple)
