"""Monte Carlo sampling of additive processes from their characteristics.

Each time step adds a deterministic drift, a Gaussian increment and the jumps
larger than a threshold ε. Jumps below ε are either dropped or replaced by a
Gaussian with matching variance. Inside a step the path is treated as a
sequence of continuous pieces separated by jumps. In one dimension the
maximum of each piece is drawn from the Brownian-bridge law, so first
passages that happen between grid times are still detected. A passage caused
by a jump is recorded with the exact jump time, overshoot and jump size.

Random streams are Philox generators keyed by (seed, block), so results do
not depend on how many blocks run or in which order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import functionals as fn
from . import process_spec as ps
from .errors import GrowthError, SpecError, StepSizeError

MAX_JUMPS_PER_STEP = 1e4


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 1000
    seed: int = 0
    jump_threshold: float | None = None  # None: min(levels)/20, capped at 0.01 without levels
    time_step: float | None = None  # uniform grid only; None: horizon/200
    small_jump_mode: str = "discard"  # or "gaussian"
    grid: str = "uniform"  # or "dyadic"
    t_min: float = 2.0**-20
    steps_per_octave: int = 4
    horizon: float | None = None
    adaptive_fraction: float | None = None
    levels: tuple = ()
    bridge: bool = True
    early_stop: bool = False
    store_paths: bool = True
    block_size: int = 4096

    def resolved_threshold(self) -> float:
        if self.jump_threshold is not None:
            return float(self.jump_threshold)
        if self.levels:
            return min(1.0, min(self.levels) / 20.0)
        return 0.01

    def validate(self, spec: ps.ProcessSpec) -> None:
        eps = self.resolved_threshold()
        if not 0 < eps <= 1:
            raise SpecError(f"jump threshold must lie in (0, 1], got {eps}")
        if self.n_paths < 100:
            raise SpecError(f"n_paths must be at least 100, got {self.n_paths}")
        if self.small_jump_mode not in ("discard", "gaussian"):
            raise SpecError(f"small_jump_mode must be 'discard' or 'gaussian', got {self.small_jump_mode!r}")
        if self.grid not in ("uniform", "dyadic"):
            raise SpecError(f"grid must be 'uniform' or 'dyadic', got {self.grid!r}")
        H = self.horizon_for(spec)
        if not 0 < H <= spec.T_max * (1 + 1e-12):
            raise SpecError(f"horizon must lie in (0, T_max={spec.T_max}]; use a longer T_max in the spec")
        if self.grid == "uniform" and self.time_step is not None:
            if not 0 < self.time_step <= H / 100 * (1 + 1e-12):
                raise SpecError(f"time_step must lie in (0, horizon/100 = {H / 100:g}]")
        if self.grid == "dyadic":
            if not 0 < self.t_min < H:
                raise SpecError("t_min must lie in (0, horizon)")
            if self.steps_per_octave < 1:
                raise SpecError("steps_per_octave must be positive")
        if self.adaptive_fraction is not None and not 0 < self.adaptive_fraction <= 1:
            raise SpecError("adaptive_fraction must lie in (0, 1]")
        if any(not r > 0 for r in self.levels):
            raise SpecError("passage levels must be positive")
        if self.block_size < 1:
            raise SpecError("block_size must be positive")

    def horizon_for(self, spec: ps.ProcessSpec) -> float:
        return float(spec.T_max if self.horizon is None else self.horizon)


def time_grid(spec: ps.ProcessSpec, cfg: SimConfig) -> np.ndarray:
    H = cfg.horizon_for(spec)
    if cfg.grid == "uniform":
        dt = cfg.time_step or H / 200
        n = int(math.ceil(H / dt - 1e-9))
        t = np.minimum(np.arange(n + 1) * dt, H)
        t[-1] = H
        return t
    octaves = math.log2(H / cfg.t_min)
    n = int(math.ceil(octaves * cfg.steps_per_octave))
    return np.concatenate([[0.0], H * 2.0 ** (-np.linspace(octaves, 0.0, n + 1))])


def _crossover_scale(spec: ps.ProcessSpec, t: np.ndarray) -> np.ndarray:
    """ρ(t) solving Σ_i G_i + K_i = 1, by bisection in log ρ."""
    t = np.asarray(t, dtype=float)
    lo = np.full(t.shape, -60.0)
    hi = np.full(t.shape, 30.0)

    def gk(tt, rho):
        out = 0.0
        for i, comp in enumerate(spec.components):
            out = out + np.asarray(ps.tail_mass(spec, i, tt, rho))
            out = out + (np.asarray(comp.gaussian(tt)) + np.asarray(ps.truncated_moment2(spec, i, tt, rho))) / rho**2
        return out

    for _ in range(60):
        mid = 0.5 * (lo + hi)
        above = gk(t, np.exp(mid)) > 1.0
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return np.exp(hi)


@dataclass
class _Part:
    kind: str  # "scaled" or "disint"
    comp: int
    kernel: ps.Kernel
    count: np.ndarray  # expected candidate count per path per step
    rate: np.ndarray | None = None  # thinning bound for disintegrated parts


@dataclass
class _Plan:
    t: np.ndarray
    eps: np.ndarray
    mean_inc: np.ndarray  # (n_steps, d)
    var: np.ndarray  # (n_steps, d)
    parts: list


def _plan(spec: ps.ProcessSpec, cfg: SimConfig) -> _Plan:
    t = time_grid(spec, cfg)
    t0, t1 = t[:-1], t[1:]
    eps = np.full(t1.shape, cfg.resolved_threshold())
    if cfg.adaptive_fraction is not None:
        eps = np.minimum(eps, cfg.adaptive_fraction * _crossover_scale(spec, t1))
    d = spec.d
    mean_inc = np.zeros((t1.size, d))
    var = np.zeros((t1.size, d))
    parts = []
    for i, comp in enumerate(spec.components):
        mean_inc[:, i] = np.asarray(ps.signed_mean(spec, i, t1, eps)) - np.asarray(ps.signed_mean(spec, i, t0, eps))
        v = np.asarray(comp.gaussian(t1), dtype=float) - np.asarray(comp.gaussian(t0), dtype=float)
        if cfg.small_jump_mode == "gaussian":
            v = v + np.asarray(ps.truncated_moment2(spec, i, t1, eps)) - np.asarray(ps.truncated_moment2(spec, i, t0, eps))
        var[:, i] = np.maximum(v, 0.0)
        for part in comp.kernel.parts():
            if part.is_zero:
                continue
            if isinstance(part, ps.TimeScaled):
                ds = np.asarray(part.scale(t1), dtype=float) - np.asarray(part.scale(t0), dtype=float)
                mass = np.asarray(part.measure.band(eps, np.inf, 0), dtype=float)
                parts.append(_Part("scaled", i, part, np.maximum(ds, 0.0) * mass))
            elif isinstance(part, ps.Disintegrated):
                probe = t0[:, None] + (t1 - t0)[:, None] * np.linspace(0.0, 1.0, 17)[None, :]
                tails = np.asarray(part.kappa_band(probe, eps[:, None], np.inf, 0))
                rate = 1.05 * tails.max(axis=1)
                du = np.asarray(part.u(t1), dtype=float) - np.asarray(part.u(t0), dtype=float)
                parts.append(_Part("disint", i, part, np.maximum(du, 0.0) * rate, rate))
            else:
                raise SpecError(f"cannot sample kernel part {type(part).__name__}")
    total = sum((p.count for p in parts), np.zeros(t1.size))
    worst = int(np.argmax(total)) if total.size else 0
    if total.size and total[worst] > MAX_JUMPS_PER_STEP:
        raise StepSizeError(
            f"about {total[worst]:.3g} jumps per path in step [{t0[worst]:.3g}, {t1[worst]:.3g}] "
            f"(limit {MAX_JUMPS_PER_STEP:g}); raise the jump threshold, use adaptive thresholds "
            f"or shorten the time step"
        )
    return _Plan(t, eps, mean_inc, var, parts)


def _draw_jumps(plan: _Plan, k: int, B: int, rng: np.random.Generator):
    t0, t1 = plan.t[k], plan.t[k + 1]
    eps = plan.eps[k]
    paths, times, comps, sizes = [], [], [], []
    for part in plan.parts:
        mean = part.count[k]
        if mean <= 0:
            continue
        n = rng.poisson(mean, B)
        N = int(n.sum())
        if N == 0:
            continue
        p = np.repeat(np.arange(B), n)
        if part.kind == "scaled":
            f = part.kernel.scale
            lo, hi = float(f(t0)), float(f(t1))
            tau = np.clip(np.asarray(f.inverse(lo + rng.random(N) * (hi - lo)), dtype=float), t0, t1)
            x = part.kernel.measure.sample(rng, N, eps)
        else:
            u = part.kernel.u
            lo, hi = float(u(t0)), float(u(t1))
            tau = np.clip(np.asarray(u.inverse(lo + rng.random(N) * (hi - lo)), dtype=float), t0, t1)
            accept_p = np.asarray(part.kernel.kappa_band(tau, eps, np.inf, 0)) / part.rate[k]
            if np.any(accept_p > 1 + 1e-9):
                raise GrowthError("thinning bound too small for the disintegrated kernel; refine the time grid")
            keep = rng.random(N) < accept_p
            p, tau = p[keep], tau[keep]
            x = part.kernel.kappa_sample(rng, tau, eps)
        paths.append(p)
        times.append(tau)
        comps.append(np.full(p.size, part.comp))
        sizes.append(x)
    if not paths:
        z = np.zeros(0)
        return z.astype(int), z, z.astype(int), z
    p, tau, c, x = (np.concatenate(a) for a in (paths, times, comps, sizes))
    order = np.lexsort((tau, p))
    return p[order], tau[order], c[order], x[order]


def _norm(v):
    return np.abs(v[:, 0]) if v.shape[1] == 1 else np.sqrt(np.sum(v * v, axis=1))


def _crossing_fraction(a, b, r):
    """Fraction φ in [0, 1] where |a + φ(b - a)| first reaches r; 0.5 if the
    straight line never does (the passage happened inside a bridge)."""
    D = b - a
    dd = np.sum(D * D, axis=1)
    ad = np.sum(a * D, axis=1)
    aa = np.sum(a * a, axis=1)
    disc = ad * ad - dd * (aa - r * r)
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = (-ad + np.sqrt(np.maximum(disc, 0.0))) / dd
    ok = (_norm(b) > r) & (dd > 0) & np.isfinite(phi)
    return np.where(ok, np.clip(phi, 0.0, 1.0), 0.5)


@dataclass(frozen=True)
class PathBatch:
    label: str
    config: SimConfig
    t: np.ndarray  # grid times, t[0] = 0
    eps: np.ndarray  # threshold used in each step
    X: np.ndarray | None  # (n_paths, n_grid, d)
    X_star: np.ndarray  # (n_paths, n_grid); inf after an early stop
    levels: np.ndarray
    T: np.ndarray  # (n_paths, n_levels); inf when not passed by the horizon
    overshoot: np.ndarray  # |X_{T_r}|, nan when not passed
    jump_at_passage: np.ndarray  # |ΔX_{T_r}|, 0 for creeping passages, nan when not passed
    n_jumps: np.ndarray
    horizon: float

    @property
    def n_paths(self) -> int:
        return self.X_star.shape[0]

    def grid_index(self, t: float) -> int:
        j = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[j] - t) > 1e-9 * max(1.0, abs(t)):
            raise SpecError(f"t = {t} is not a grid time of this batch")
        return j

    def level_index(self, r: float) -> int:
        hits = np.flatnonzero(np.isclose(self.levels, r, rtol=1e-12, atol=0.0))
        if not hits.size:
            raise SpecError(f"r = {r} is not a simulated passage level")
        return int(hits[0])

    def summary_columns(self):
        d = self.X.shape[2] if self.X is not None else 0
        head = ["t"]
        for i in range(d):
            head += [f"mean_X{i}", f"var_X{i}"]
        return head + ["mean_Xstar", "median_Xstar", "q90_Xstar"]

    def summary_rows(self):
        for j, t in enumerate(self.t):
            row = [t]
            if self.X is not None:
                for i in range(self.X.shape[2]):
                    col = self.X[:, j, i]
                    row += [float(np.mean(col)), float(np.var(col, ddof=1))]
            xs = self.X_star[:, j]
            row += [float(np.mean(xs)), float(np.median(xs)), float(np.quantile(xs, 0.9))]
            yield row

    def passage_columns(self):
        return ["r", "fraction_passed", "mean_T_passed", "mean_overshoot", "fraction_by_jump"]

    def passage_rows(self):
        for j, r in enumerate(self.levels):
            hit = np.isfinite(self.T[:, j])
            n = int(hit.sum())
            yield [
                r,
                n / self.n_paths,
                float(np.mean(self.T[hit, j])) if n else math.nan,
                float(np.mean(self.overshoot[hit, j])) if n else math.nan,
                float(np.mean(self.jump_at_passage[hit, j] > 0)) if n else math.nan,
            ]

    def path_rows(self, max_paths: int = 20):
        if self.X is None:
            raise SpecError("paths were not stored; rerun with store_paths enabled")
        for p in range(min(max_paths, self.n_paths)):
            for j, t in enumerate(self.t):
                yield [p, t, *self.X[p, j].tolist(), self.X_star[p, j]]


def _simulate_block(plan: _Plan, cfg: SimConfig, d: int, levels: np.ndarray, B: int, rng):
    n_grid = plan.t.size
    L = levels.size
    X = np.zeros((B, d))
    Xs = np.zeros(B)
    X_grid = np.zeros((B, n_grid, d)) if cfg.store_paths else None
    Xs_grid = np.zeros((B, n_grid))
    T = np.full((B, L), np.inf)
    over = np.full((B, L), np.nan)
    jump = np.full((B, L), np.nan)
    n_jumps = np.zeros(B, dtype=np.int64)
    use_bridge = cfg.bridge and d == 1
    all_paths = np.arange(B)
    for k in range(n_grid - 1):
        t0, t1 = plan.t[k], plan.t[k + 1]
        dt = t1 - t0
        sd = np.sqrt(plan.var[k])
        cont = plan.mean_inc[k][None, :] + sd[None, :] * rng.standard_normal((B, d))
        ev_p, ev_t, ev_c, ev_x = _draw_jumps(plan, k, B, rng)
        E = ev_p.size
        n_e = np.bincount(ev_p, minlength=B)
        ev_off = np.concatenate([[0], np.cumsum(n_e)[:-1]])
        f = (ev_t - t0) / dt
        jv = np.zeros((E, d))
        jv[np.arange(E), ev_c] = ev_x
        cs = np.cumsum(jv, axis=0)
        cs0 = np.vstack([np.zeros((1, d)), cs])
        incl = cs - cs0[ev_off[ev_p]]
        # segment s of path p sits at global index ev_off[p] + p + s
        S = B + E
        seg_p = np.repeat(all_paths, n_e + 1)
        seg_of_ev = np.arange(E) + ev_p
        J_seg = np.zeros((S, d))
        J_seg[seg_of_ev + 1] = incl
        fs = np.zeros(S)
        fs[seg_of_ev + 1] = f
        fe = np.ones(S)
        fe[seg_of_ev] = f
        base = X[seg_p] + J_seg
        a = base + cont[seg_p] * fs[:, None]
        b = base + cont[seg_p] * fe[:, None]
        if use_bridge:
            v = plan.var[k, 0] * (fe - fs)
            gap = (b - a)[:, 0]
            u1 = rng.random(S)
            u2 = rng.random(S)
            hi = 0.5 * (a[:, 0] + b[:, 0] + np.sqrt(gap * gap - 2.0 * v * np.log1p(-u1)))
            lo = 0.5 * (a[:, 0] + b[:, 0] - np.sqrt(gap * gap - 2.0 * v * np.log1p(-u2)))
            seg_val = np.maximum(np.abs(hi), np.abs(lo))
        else:
            seg_val = np.maximum(_norm(a), _norm(b))
        post = b[seg_of_ev] + jv  # end of the segment before event e, plus the jump
        seg_rank = np.arange(S) - (ev_off + all_paths)[seg_p]
        seg_cp = np.arange(S) + ev_off[seg_p] + seg_rank
        ev_cp = 2 * np.arange(E) + ev_p + 1
        n_cp = S + E
        cp_val = np.empty(n_cp)
        cp_val[seg_cp] = seg_val
        cp_val[ev_cp] = _norm(post)
        cp_ref = np.empty(n_cp, dtype=np.int64)
        cp_ref[seg_cp] = np.arange(S)
        cp_ref[ev_cp] = np.arange(E)
        cp_is_ev = np.zeros(n_cp, dtype=bool)
        cp_is_ev[ev_cp] = True
        cp_p = np.repeat(all_paths, 2 * n_e + 1)
        cp_start = 2 * ev_off + all_paths
        Xs_new = np.maximum(Xs, np.maximum.reduceat(cp_val, cp_start))
        for j in range(L):
            r = levels[j]
            need = np.isinf(T[:, j]) & (Xs_new > r)
            if not need.any():
                continue
            idx = np.flatnonzero((cp_val > r) & need[cp_p])
            hit_p, first = np.unique(cp_p[idx], return_index=True)
            cp = idx[first]
            ev_hit = cp_is_ev[cp]
            ref = cp_ref[cp]
            e = ref[ev_hit]
            ph = hit_p[ev_hit]
            T[ph, j] = ev_t[e]
            over[ph, j] = _norm(post[e])
            jump[ph, j] = np.abs(ev_x[e])
            sgi = ref[~ev_hit]
            ph = hit_p[~ev_hit]
            phi = _crossing_fraction(a[sgi], b[sgi], r)
            T[ph, j] = t0 + dt * (fs[sgi] + phi * (fe[sgi] - fs[sgi]))
            over[ph, j] = r
            jump[ph, j] = 0.0
        Xs = Xs_new
        X = X + cont + (cs0[ev_off + n_e] - cs0[ev_off])
        n_jumps += n_e
        if X_grid is not None:
            X_grid[:, k + 1] = X
        Xs_grid[:, k + 1] = Xs
        if cfg.early_stop and L and np.all(np.isfinite(T)):
            if X_grid is not None:
                X_grid[:, k + 2:] = np.nan
            Xs_grid[:, k + 2:] = np.inf
            break
    return X_grid, Xs_grid, T, over, jump, n_jumps


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def sample_paths(spec: ps.ProcessSpec, cfg: SimConfig) -> PathBatch:
    """Simulate cfg.n_paths independent paths on the configured time grid."""
    cfg.validate(spec)
    plan = _plan(spec, cfg)
    levels = np.asarray(sorted(set(float(r) for r in cfg.levels)), dtype=float)
    pieces = []
    for block, start in enumerate(range(0, cfg.n_paths, cfg.block_size)):
        B = min(cfg.block_size, cfg.n_paths - start)
        pieces.append(_simulate_block(plan, cfg, spec.d, levels, B, block_rng(cfg.seed, block)))
    cat = [None if pieces[0][0] is None else np.concatenate([p[0] for p in pieces])]
    cat += [np.concatenate([p[j] for p in pieces]) for j in range(1, 6)]
    X, Xs, T, over, jump, nj = cat
    return PathBatch(spec.label, cfg, plan.t, plan.eps, X, Xs, levels, T, over, jump, nj,
                     cfg.horizon_for(spec))


# --------------------------------------------------------------------------
# Estimators


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    n: int
    degenerate: bool = False  # no usable sample, or a probability of exactly 0 or 1

    def __iter__(self):
        return iter((self.value, self.se))


def estimate_prob(batch: PathBatch, event: str, t: float | None = None, r: float | None = None,
                  lam: float | None = None) -> Estimate:
    """Probability of one of the events

    ``xstar_ge``  X*_t >= r          ``xstar_le``  X*_t <= r
    ``T_ge``      T_r >= t           ``jump_gt``   |ΔX_{T_r}| > lam, with T_r <= horizon

    with a binomial standard error.
    """
    if event in ("xstar_ge", "xstar_le"):
        xs = batch.X_star[:, batch.grid_index(t)]
        hit = xs >= r if event == "xstar_ge" else xs <= r
    elif event == "T_ge":
        hit = batch.T[:, batch.level_index(r)] >= t
    elif event == "jump_gt":
        col = batch.jump_at_passage[:, batch.level_index(r)]
        hit = np.where(np.isnan(col), False, col > lam)
    else:
        raise SpecError(f"unknown event '{event}'")
    n = hit.size
    p = float(np.mean(hit))
    return Estimate(p, math.sqrt(p * (1 - p) / n), n, p in (0.0, 1.0))


def _mean(values) -> Estimate:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size < 2:
        return Estimate(math.nan, math.nan, int(v.size), True)
    return Estimate(float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(v.size)), int(v.size))


def estimate_mean(batch: PathBatch, values) -> Estimate:
    """Sample mean and standard error of per-path values (non-finite ones dropped)."""
    return _mean(values)


def capped_passage(batch: PathBatch, r: float, cap: float | None = None) -> np.ndarray:
    """T_r ∧ cap per path; cap defaults to the horizon."""
    cap = batch.horizon if cap is None else cap
    return np.minimum(batch.T[:, batch.level_index(r)], cap)


def _interp_in_time(f, t_samples: np.ndarray, n_nodes: int = 513) -> np.ndarray:
    """Evaluate a continuous nondecreasing f(t) at many times through a table
    built on sample quantiles."""
    nodes = np.unique(np.concatenate([[0.0], np.quantile(t_samples, np.linspace(0.0, 1.0, n_nodes))]))
    table = np.asarray(f(nodes), dtype=float)
    return np.interp(t_samples, nodes, table)


def y_at_passage(spec: ps.ProcessSpec, batch: PathBatch, r: float) -> np.ndarray:
    """y_{T_r ∧ H}(r) per path."""
    T = capped_passage(batch, r)
    return _interp_in_time(lambda s: fn.y_total(spec, s, np.full_like(s, r)), T)


def tail_at_passage(spec: ps.ProcessSpec, batch: PathBatch, r: float, lam) -> np.ndarray:
    """Σ_i G^(i)_{T_r ∧ H}(λ) per path, for each λ in lam: shape (n_paths, n_lam)."""
    T = capped_passage(batch, r)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.zeros((T.size, lam.size))
    for i in range(spec.d):
        out += np.asarray(ps.tail_mass(spec, i, T[:, None], lam[None, :]))
    return out


def passage_tail_hook(spec: ps.ProcessSpec, batch: PathBatch):
    """Callable (r, λ) -> E G_{T_r ∧ H}(λ) estimated from the batch."""

    def hook(r, lam):
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        return tail_at_passage(spec, batch, float(r), lam).mean(axis=0)

    return hook


def with_config(cfg: SimConfig, **changes) -> SimConfig:
    return replace(cfg, **changes)
