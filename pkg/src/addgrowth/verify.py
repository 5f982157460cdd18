"""Pass/fail checks that compare analytic bounds and identities with Monte
Carlo estimates.

Verdict rule for an inequality `empirical <= bound` (or `>=`): pass when the
slack is at least 3 standard errors, fail when the violation exceeds 3
standard errors, inconclusive otherwise. Identities pass when the two sides
differ by at most 3 standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import functionals as fn
from . import indices as ix
from . import process_spec as ps
from . import simulate as sim
from .errors import SpecError

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
PROXY_LABEL = "finite-horizon proxy for an almost-sure limit"


@dataclass(frozen=True)
class CheckOutcome:
    check: str
    label: str
    point: dict
    analytic: float
    empirical: float
    se: float
    margin: float
    verdict: str
    note: str = ""

    COLUMNS = ("check", "label", "point", "analytic", "empirical", "se", "margin", "verdict", "note")

    def row(self):
        pt = ";".join(f"{k}={_fmt(v)}" for k, v in self.point.items())
        return [self.check, self.label, pt, self.analytic, self.empirical, self.se, self.margin, self.verdict, self.note]


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def upper_verdict(empirical: float, bound: float, se: float, z: float = 3.0):
    """Verdict and margin for empirical <= bound."""
    gap = bound - empirical
    if gap >= z * se and gap >= 0:
        return PASS, gap
    if gap < -z * se:
        return FAIL, gap
    return INCONCLUSIVE, gap


def lower_verdict(empirical: float, bound: float, se: float, z: float = 3.0):
    """Verdict and margin for empirical >= bound."""
    return upper_verdict(-empirical, -bound, se, z)


def identity_verdict(diff: float, se: float, z: float = 3.0, degenerate: bool = False):
    if degenerate or not np.isfinite(diff):
        return INCONCLUSIVE, diff
    return (PASS if abs(diff) <= z * se else FAIL), diff


def summarize(outcomes) -> dict:
    out = {PASS: 0, FAIL: 0, INCONCLUSIVE: 0}
    for o in outcomes:
        out[o.verdict] += 1
    return out


# --------------------------------------------------------------------------
# Two-sided tail bounds on P(X*_t >= r) and P(X*_t <= r)


def _budget_threshold(spec: ps.ProcessSpec, t: float, jumps_per_path: float) -> float:
    """Smallest ε in (0, 1] with total jump mass above ε at time t under the budget."""
    def mass(eps):
        return sum(float(ps.tail_mass(spec, i, t, eps)) for i in range(spec.d))

    if mass(1e-12) <= jumps_per_path:
        return 1e-12
    lo, hi = math.log(1e-12), 0.0
    if mass(1.0) > jumps_per_path:
        return 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mass(math.exp(mid)) > jumps_per_path:
            lo = mid
        else:
            hi = mid
    return math.exp(hi)


def tail_bound_grid(spec: ps.ProcessSpec, t_points=None, n_r: int = 10, y_range=(0.01, 3000.0)):
    """(t points, r points) spanning y from the upper-bound to the lower-bound regime."""
    T = spec.T_max
    t_points = np.asarray(t_points if t_points is not None else T * np.array([0.25, 0.5, 1.0]), dtype=float)
    r_scan = np.logspace(-6, 2, 161)
    y = np.array([np.asarray(fn.y_total(spec, np.full_like(r_scan, t), r_scan)) for t in t_points])
    inside = np.any((y >= y_range[0]) & (y <= y_range[1]), axis=0)
    if not inside.any():
        raise SpecError("no r in [1e-6, 100] gives a nontrivial tail bound")
    cand = r_scan[inside]
    pick = np.unique(np.round(np.linspace(0, cand.size - 1, min(n_r, cand.size))).astype(int))
    return t_points, cand[pick]


def check_tail_bounds(spec: ps.ProcessSpec, n_paths: int = 100_000, seed: int = 0, t_points=None, r_grid=None,
                  ks=(1, 2), jumps_per_path: float = 200.0) -> list:
    """Both tail bounds at every (t, r) where the analytic side is below 1.

    Jumps below ε are replaced by a matching Gaussian. ε is r_min/20, raised
    when needed so that at most ``jumps_per_path`` jumps are drawn per path.
    """
    if r_grid is None:
        t_points, r_grid = tail_bound_grid(spec, t_points)
    else:
        t_points = np.asarray(t_points if t_points is not None else spec.T_max * np.array([0.25, 0.5, 1.0]))
    r_grid = np.asarray(r_grid, dtype=float)
    H = float(np.max(t_points))
    eps = min(1.0, max(float(r_grid.min()) / 20.0, _budget_threshold(spec, H, jumps_per_path)))
    n_steps = 200
    cfg = sim.SimConfig(n_paths=n_paths, seed=seed, jump_threshold=eps, time_step=H / n_steps,
                        small_jump_mode="gaussian", horizon=H, store_paths=False)
    batch = sim.sample_paths(spec, cfg)
    d = spec.d
    pi_d = fn.upper_tail_constant(d)
    out = []
    for t in t_points:
        y = np.asarray(fn.y_total(spec, np.full_like(r_grid, t), r_grid))
        for r, yv in zip(r_grid, y):
            resolved = "resolved" if r >= 20 * eps else f"r < 20 eps (eps={eps:.3g})"
            bound = pi_d * yv
            if bound < 1:
                est = sim.estimate_prob(batch, "xstar_ge", t=float(t), r=float(r))
                verdict, margin = upper_verdict(est.value, bound, est.se)
                out.append(CheckOutcome("tail_upper", spec.label, {"t": float(t), "r": float(r)},
                                        bound, est.value, est.se, margin, verdict, resolved))
            for k in ks:
                bound = fn.lower_tail_constant(k, d) * yv ** (-k / 2.0) if yv > 0 else math.inf
                if bound < 1:
                    est = sim.estimate_prob(batch, "xstar_le", t=float(t), r=float(r))
                    verdict, margin = upper_verdict(est.value, bound, est.se)
                    out.append(CheckOutcome(f"tail_lower_k{k}", spec.label,
                                            {"t": float(t), "r": float(r), "k": k},
                                            bound, est.value, est.se, margin, verdict, resolved))
    return out


# --------------------------------------------------------------------------
# First-passage moments


def passage_batch(spec: ps.ProcessSpec, levels, n_paths: int, seed: int, horizon: float,
                  steps_per_octave: int = 16, adaptive_fraction: float = 0.05) -> sim.PathBatch:
    """Paths on a geometric time grid long enough for every level to be passed.

    The spec's horizon is extended to ``horizon`` when needed. Jump
    thresholds follow the time scale: ε(t) = adaptive_fraction·ρ(t).
    """
    levels = tuple(float(r) for r in levels)
    long_spec = spec if horizon <= spec.T_max else spec.with_horizon(horizon)
    n0 = float(fn.n_of_r(long_spec, min(levels)))
    t_min = min(horizon / 4, (n0 if np.isfinite(n0) and n0 > 0 else horizon) / 1000.0)
    cfg = sim.SimConfig(n_paths=n_paths, seed=seed, jump_threshold=1.0, small_jump_mode="gaussian",
                        grid="dyadic", t_min=t_min, steps_per_octave=steps_per_octave, horizon=horizon,
                        adaptive_fraction=adaptive_fraction, levels=levels, early_stop=True,
                        store_paths=False)
    return sim.sample_paths(long_spec, cfg), long_spec


def default_passage_horizon(spec: ps.ProcessSpec, r_max: float, factor: float = 40.0) -> float:
    """Horizon by which y_H(r_max) is `factor` times the threshold m."""
    m = fn.default_threshold(spec.d)
    H = spec.T_max
    for _ in range(60):
        if float(fn.y_total(spec.with_horizon(H), H, r_max)) >= factor * m:
            return H
        H *= 2
    return H


def bracket_constants(e: ix.ModerateFunctionSpec, m: float, d: int):
    """(c₁, c₂) bracketing E e(y_{T_r}(r)), from the moderate certificate (ρ, σ)."""
    rho, sigma = e.certificate
    k = math.floor(2 * sigma) + 1
    delta = k / (2 * sigma) - 1
    c_prime = fn.lower_tail_constant(k, d) * rho ** (1 + delta) * m ** (-k / 2.0)
    em = float(e(m))
    return em / 2.0, (1.0 + c_prime / delta) * em


def check_passage_moments(spec: ps.ProcessSpec, r_grid=None, e_list=None, psi_list=None, n_paths: int = 10_000,
                     seed: int = 0, horizon: float | None = None) -> list:
    """Eψ(T_r) >= ψ(n(r))/2 and c₁ <= E e(y_{T_r}(r)) <= c₂ on r_grid.

    T_r is capped at the simulation horizon. The cap makes the ψ check
    conservative. The fraction of unpassed paths is reported in each note.
    """
    r_grid = np.asarray(r_grid if r_grid is not None else np.geomspace(0.05, 1.0, 6), dtype=float)
    e_list = e_list or [("x", ix.ModerateFunctionSpec("power", p=1.0)),
                        ("sqrt", ix.ModerateFunctionSpec("power", p=0.5))]
    psi_list = psi_list or [("t", ix.ModerateFunctionSpec("power", p=1.0)),
                            ("sqrt_t", ix.ModerateFunctionSpec("power", p=0.5))]
    H = horizon or default_passage_horizon(spec, float(r_grid.max()))
    batch, long_spec = passage_batch(spec, r_grid, n_paths, seed, H)
    m = fn.default_threshold(spec.d)
    n_r = np.asarray(fn.n_of_r(long_spec, r_grid, m=m))
    out = []
    for r, nr in zip(r_grid, n_r):
        T = sim.capped_passage(batch, float(r))
        unpassed = float(np.mean(~np.isfinite(batch.T[:, batch.level_index(float(r))])))
        note = f"unpassed fraction {unpassed:.3g}"
        for name, psi in psi_list:
            est = sim.estimate_mean(batch, psi(T))
            bound = 0.5 * float(psi(nr))
            verdict, margin = lower_verdict(est.value, bound, est.se)
            out.append(CheckOutcome(f"passage_time_lower_{name}", spec.label, {"r": float(r)}, bound, est.value, est.se,
                                    margin, verdict, note))
        y = sim.y_at_passage(long_spec, batch, float(r))
        for name, e in e_list:
            c1, c2 = bracket_constants(e, m, spec.d)
            est = sim.estimate_mean(batch, e(y))
            v1, g1 = lower_verdict(est.value, c1, est.se)
            v2, g2 = upper_verdict(est.value, c2, est.se)
            verdict = FAIL if FAIL in (v1, v2) else (PASS if v1 == v2 == PASS else INCONCLUSIVE)
            out.append(CheckOutcome(f"passage_y_bracket_{name}", spec.label, {"r": float(r), "c1": c1, "c2": c2},
                                    c1, est.value, est.se, min(g1, g2), verdict, note))
    return out


def check_exit_time(spec: ps.ProcessSpec, r: float = 0.5, n_paths: int = 20_000, seed: int = 0,
                    horizon: float = 20.0, time_step: float = 0.005) -> CheckOutcome:
    """E T_r = r² for a standard Brownian motion (exit time of [-r, r])."""
    long_spec = spec.with_horizon(horizon)
    cfg = sim.SimConfig(n_paths=n_paths, seed=seed, time_step=time_step, horizon=horizon, levels=(r,),
                        early_stop=True, store_paths=False)
    batch = sim.sample_paths(long_spec, cfg)
    est = sim.estimate_mean(batch, sim.capped_passage(batch, r))
    verdict, diff = identity_verdict(est.value - r * r, est.se)
    return CheckOutcome("exit_time", spec.label, {"r": r}, r * r, est.value, est.se, diff, verdict)


# --------------------------------------------------------------------------
# Jump at passage


def pareto_passage_oracle(lam_plus, horizon: float, rate: float = 1.0):
    """P(|ΔX_{T_r}| > x) for the unit Pareto compound Poisson with r < 1 and x >= 1."""
    return (1.0 - math.exp(-rate * horizon)) / np.asarray(lam_plus, dtype=float)


def check_passage_jump(spec: ps.ProcessSpec, r: float = 0.5, lam_grid=None, n_paths: int = 20_000, seed: int = 0,
               oracle=None) -> list:
    """P(|ΔX_{T_r}| > λ+2r, T_r <= H) against E G_{T_r ∧ H}(λ+2r) on the same paths.

    ``oracle(x)``, when given, supplies a closed form for both sides.
    """
    lam = np.asarray(lam_grid if lam_grid is not None else np.geomspace(0.05, 20.0, 10), dtype=float)
    cfg = sim.SimConfig(n_paths=n_paths, seed=seed, levels=(r,), store_paths=False,
                        small_jump_mode="gaussian", jump_threshold=min(1.0, r / 20))
    batch = sim.sample_paths(spec, cfg)
    x = lam + 2 * r
    col = batch.jump_at_passage[:, 0]
    left_ind = np.where(np.isnan(col)[:, None], False, col[:, None] > x[None, :]).astype(float)
    right = sim.tail_at_passage(spec, batch, r, x)
    n = batch.n_paths
    degenerate = bool(np.all(np.nan_to_num(col) == 0))
    out = []
    # residuals for the sign test come from disjoint path groups so that they are independent
    groups = np.array_split(np.arange(n), lam.size)
    resid = [float(np.mean(left_ind[g, j] - right[g, j])) for j, g in enumerate(groups)]
    for j, lv in enumerate(lam):
        diff = left_ind[:, j] - right[:, j]
        mean, se = float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(n))
        left_m, right_m = float(left_ind[:, j].mean()), float(right[:, j].mean())
        note = "no jump-triggered passage" if degenerate else ""
        verdict, margin = identity_verdict(mean, se, degenerate=degenerate)
        out.append(CheckOutcome("passage_jump_identity", spec.label, {"r": r, "lambda": float(lv)}, right_m, left_m, se,
                                margin, verdict, note))
        if oracle is not None:
            exact = float(oracle(x[j]))
            for side, vals in (("left", left_ind[:, j]), ("right", right[:, j])):
                m_, s_ = float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))
                v_, g_ = identity_verdict(m_ - exact, s_)
                out.append(CheckOutcome(f"passage_jump_{side}_oracle", spec.label, {"r": r, "lambda": float(lv)}, exact,
                                        m_, s_, g_, v_))
    if not degenerate:
        pos = int(np.sum(np.asarray(resid) > 0))
        p = float(stats.binomtest(pos, len(resid), 0.5).pvalue)
        out.append(CheckOutcome("passage_jump_sign_test", spec.label, {"r": r, "positive": pos, "n": len(resid)}, 0.01, p,
                                0.0, p - 0.01, PASS if p > 0.01 else FAIL))
    return out


# --------------------------------------------------------------------------
# Comparability of E e(|X_{T_r}|)


def _stieltjes_tail(e, r: float, eg_matrix: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Per-path ∫_r^∞ G_{T_r}(λ) e(dλ) by the trapezoid rule on lam."""
    de = np.diff(np.asarray(e(lam), dtype=float))
    return np.sum(0.5 * (eg_matrix[:, 1:] + eg_matrix[:, :-1]) * de[None, :], axis=1)


def check_overshoot_ratio(spec: ps.ProcessSpec, e, r_grid=None, n_paths: int = 10_000, seed: int = 0,
                 bracket=(1 / 64, 64.0), max_drift: float = 4.0, horizon: float | None = None,
                 e_name: str = "e") -> list:
    """Ratio E e(|X_{T_r}|) / [e(r) + ∫_r^∞ E G_{T_r}(λ) e(dλ)] inside a fixed
    bracket and drifting by less than `max_drift` across r_grid."""
    r_grid = np.asarray(r_grid if r_grid is not None else np.geomspace(0.1, 2.0, 6), dtype=float)
    H = horizon or default_passage_horizon(spec, float(r_grid.max()))
    batch, long_spec = passage_batch(spec, r_grid, n_paths, seed, H)
    out = []
    ratios = []
    for r in r_grid:
        j = batch.level_index(float(r))
        over = batch.overshoot[:, j]
        num = sim.estimate_mean(batch, e(over))
        lam = r * np.logspace(0.0, 10.0, 241)
        eg = sim.tail_at_passage(long_spec, batch, float(r), lam)
        integ = _stieltjes_tail(e, float(r), eg, lam)
        den_vals = float(e(r)) + integ
        den = sim.estimate_mean(batch, den_vals)
        ratio = num.value / den.value
        se = ratio * math.hypot(num.se / num.value, den.se / den.value)
        ratios.append(ratio)
        lo, hi = bracket
        v1, g1 = lower_verdict(ratio, lo, se)
        v2, g2 = upper_verdict(ratio, hi, se)
        verdict = FAIL if FAIL in (v1, v2) else (PASS if v1 == v2 == PASS else INCONCLUSIVE)
        unpassed = float(np.mean(np.isnan(over)))
        out.append(CheckOutcome(f"overshoot_ratio_{e_name}", spec.label, {"r": float(r)}, den.value, num.value,
                                se, min(g1 / lo, g2 / hi), verdict, f"ratio {ratio:.4g}; unpassed {unpassed:.3g}"))
    drift = max(ratios) / min(ratios)
    out.append(CheckOutcome(f"overshoot_drift_{e_name}", spec.label,
                            {"r_min": float(r_grid.min()), "r_max": float(r_grid.max())}, max_drift, drift, 0.0,
                            max_drift - drift, PASS if drift < max_drift else FAIL))
    return out


# --------------------------------------------------------------------------
# Sojourn time against n(r)


def check_sojourn(spec: ps.ProcessSpec, r_grid=None, l: float | None = None, n_paths: int = 4000,
                  seed: int = 0, sigma: float = 1.0, c: float = 1.0) -> list:
    """(1 - π_d m)(n(r) ∧ l) <= E(T_r ∧ l) <= [1 + (θc₁)⁻¹] n(r), plus the
    critical exponents of both sides.

    Here v is the identity, c₁⁻¹ = A_k(d)(m c)^{-k/2}, θ = kσ/2 - 1 and k is
    the smallest integer above 2/σ; (c, σ) is the quasiconvexity certificate.
    """
    r_grid = np.asarray(r_grid if r_grid is not None else np.logspace(-4, 0, 17), dtype=float)
    l = spec.T_max if l is None else l
    d = spec.d
    m = fn.default_threshold(d)
    batch, long_spec = passage_batch(spec, r_grid, n_paths, seed, l)
    n_r = np.asarray(fn.n_of_r(spec.with_horizon(max(l, spec.T_max)), r_grid, m=m))
    k = math.floor(2 / sigma) + 1
    theta = k * sigma / 2 - 1
    c1_inv = fn.lower_tail_constant(k, d) * (m * c) ** (-k / 2)
    upper_factor = 1 + c1_inv / theta
    lower_factor = 1 - fn.upper_tail_constant(d) * m
    out = []
    sojourn = []
    for r, nr in zip(r_grid, n_r):
        est = sim.estimate_mean(batch, sim.capped_passage(batch, float(r), l))
        sojourn.append(est.value)
        lo_b = lower_factor * min(nr, l)
        v1, g1 = lower_verdict(est.value, lo_b, est.se)
        out.append(CheckOutcome("sojourn_lower", spec.label, {"r": float(r), "l": l}, lo_b, est.value, est.se, g1, v1))
        up_b = upper_factor * nr
        v2, g2 = upper_verdict(est.value, up_b, est.se)
        out.append(CheckOutcome("sojourn_upper", spec.label, {"r": float(r), "l": l}, up_b, est.value, est.se, g2, v2))
    finite = np.isfinite(n_r)
    for mode in ("liminf", "limsup"):
        a = ix.critical_exponent(r_grid[finite], np.minimum(n_r[finite], l), mode)
        b = ix.critical_exponent(r_grid[finite], np.asarray(sojourn)[finite], mode)
        tol = a.half_width + b.half_width + 0.1
        diff = b.value - a.value
        out.append(CheckOutcome(f"sojourn_exponent_{mode}", spec.label, {"tol": tol}, a.value, b.value,
                                b.half_width, diff, PASS if abs(diff) <= tol else FAIL))
    return out


# --------------------------------------------------------------------------
# Dichotomy demonstration


@dataclass
class DichotomyReport:
    label: str
    t: np.ndarray  # dyadic times, decreasing
    etas: tuple
    frac_min_below: np.ndarray  # (n_eta, n_t) fraction of paths whose running min fell below lo
    frac_max_above: np.ndarray
    expected: dict  # eta -> "zero" | "infinite" | None
    lo: float = 0.1
    hi: float = 10.0
    verdicts: dict = field(default_factory=dict)

    COLUMNS = ("eta", "n", "t", "frac_min_below", "frac_max_above")

    def rows(self):
        for a, eta in enumerate(self.etas):
            for n, t in enumerate(self.t):
                yield [eta, n, t, self.frac_min_below[a, n], self.frac_max_above[a, n]]

    def outcomes(self, level: float = 0.95) -> list:
        out = []
        for a, eta in enumerate(self.etas):
            exp = self.expected.get(eta)
            if exp is None:
                continue
            frac = self.frac_min_below[a, -1] if exp == "zero" else self.frac_max_above[a, -1]
            verdict = PASS if frac >= level else FAIL
            name = "dichotomy_min_below" if exp == "zero" else "dichotomy_max_above"
            out.append(CheckOutcome(name, self.label, {"eta": eta, "t_end": float(self.t[-1])}, level, float(frac),
                                    0.0, float(frac) - level, verdict, PROXY_LABEL))
        return out


def dichotomy_demo(spec: ps.ProcessSpec, etas, u=None, index: float | None = None, n_paths: int = 10_000,
                   seed: int = 0, n_dyadic: int = 20, steps_per_octave: int = 2, lo: float = 0.1,
                   hi: float = 10.0, adaptive_fraction: float = 0.05) -> DichotomyReport:
    """Running min and max of u(t_n)^{-1/η} X*_{t_n} along t_n = 2^-n.

    With ``index`` given, η above it is expected to drive the min to 0 and
    η below it to drive the max to infinity.
    """
    u = u or (lambda t: np.asarray(t, dtype=float))
    H = min(1.0, spec.T_max)
    cfg = sim.SimConfig(n_paths=n_paths, seed=seed, grid="dyadic", t_min=H * 2.0 ** -n_dyadic,
                        steps_per_octave=steps_per_octave, horizon=H, jump_threshold=1.0,
                        small_jump_mode="gaussian", adaptive_fraction=adaptive_fraction, store_paths=False)
    batch = sim.sample_paths(spec, cfg)
    t_dy = H * 2.0 ** -np.arange(n_dyadic + 1)
    cols = [batch.grid_index(float(t)) for t in t_dy]
    xs = batch.X_star[:, cols]
    etas = tuple(float(e) for e in etas)
    fmin = np.zeros((len(etas), t_dy.size))
    fmax = np.zeros_like(fmin)
    uval = np.asarray(u(t_dy), dtype=float)
    for a, eta in enumerate(etas):
        z = xs * uval[None, :] ** (-1.0 / eta)
        fmin[a] = np.mean(np.minimum.accumulate(z, axis=1) < lo, axis=0)
        fmax[a] = np.mean(np.maximum.accumulate(z, axis=1) > hi, axis=0)
    expected = {}
    for eta in etas:
        if index is None or abs(eta - index) < 0.25:
            expected[eta] = None
        else:
            expected[eta] = "zero" if eta > index else "infinite"
    return DichotomyReport(spec.label, t_dy, etas, fmin, fmax, expected, lo, hi)


CHECKS = ("tail_bounds", "exit_time", "passage_moments", "passage_jump", "overshoot_ratio", "sojourn")
