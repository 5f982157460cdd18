"""Growth functional y_t(r), its smoothed form, threshold times n(r) and the
Laplace exponent of increasing components."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import process_spec as ps
from .errors import SpecError, UnsupportedShapeError

GOLDEN = (3.0 + math.sqrt(5.0)) / 2.0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def dimension_constant(d: int) -> float:
    return 1.0 if d == 1 else 3.0 * d * d


def upper_tail_constant(d: int) -> float:
    """Constant multiplying y in the bound on P(X*_t >= r)."""
    return GOLDEN * dimension_constant(d)


def lower_tail_constant(k: int, d: int) -> float:
    """Constant multiplying y^(-k/2) in the bound on P(X*_t <= r)."""
    return (18.0 * math.sqrt(2.0 * d * k)) ** k


def default_threshold(d: int) -> float:
    return 1.0 / (2.0 * upper_tail_constant(d))


def running_max_mean(spec: ps.ProcessSpec, i: int, t: float, r, n0: int = 256,
                     rtol: float = 1e-6, max_points: int = 2**14) -> np.ndarray:
    """max_{s<=t} |signed_mean(s, r)| / r on an s-grid doubled until stable."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    comp = spec.components[i]
    if t == 0 or (comp.drift.is_zero and comp.kernel.is_zero):
        return np.zeros_like(r)
    n = n0
    prev = None
    while True:
        s = np.linspace(0.0, t, n + 1)
        vals = np.max(np.abs(ps.signed_mean(spec, i, s[:, None], r[None, :])), axis=0)
        if prev is not None:
            if np.all(np.abs(vals - prev) <= rtol * np.maximum(vals, 1e-300)):
                return vals / r
        if n >= max_points:
            return vals / r
        prev = vals
        n *= 2


def component_parts(spec: ps.ProcessSpec, i: int, t, r):
    """(G, K, M*) for component i, broadcasting t against r."""
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    comp = spec.components[i]
    G = np.asarray(ps.tail_mass(spec, i, t, r), dtype=float)
    K = (np.asarray(comp.gaussian(t), dtype=float) + np.asarray(ps.truncated_moment2(spec, i, t, r))) / r**2
    M = np.zeros(t.shape)
    flat_t, flat_r, flat_m = t.ravel(), r.ravel(), M.reshape(-1)
    for tv in np.unique(flat_t):
        sel = flat_t == tv
        flat_m[sel] = running_max_mean(spec, i, float(tv), flat_r[sel])
    return G, K, M


def y_component(spec: ps.ProcessSpec, i: int, t, r):
    """y_t(r) = G_t(r) + K_t(r) + M*_t(r) for component i."""
    G, K, M = component_parts(spec, i, t, r)
    out = G + K + M
    return out if out.ndim else float(out)


def y_total(spec: ps.ProcessSpec, t, r):
    """Σ_i y^(i)_t(r)."""
    out = sum(np.asarray(y_component(spec, i, t, r)) for i in range(spec.d))
    return out if np.ndim(out) else float(out)


def smooth_functional(yfun, r, breakpoints=(), floor_decades: float = 20.0,
                      per_decade: int = 4) -> np.ndarray:
    """1 / (r⁻¹ ∫_0^r dx / y(x)) for a callable y evaluated on arrays.

    The integral runs in log x on panels cut at every requested r and every
    breakpoint (kinks of y), down to r_min·10^-floor_decades; the piece
    below that is bounded by x_lo / y(x_lo).
    """
    r = np.asarray(r, dtype=float)
    flat = np.atleast_1d(r).ravel()
    if np.any(flat <= 0):
        raise SpecError("r must be positive")
    ur, inv = np.unique(flat, return_inverse=True)
    x_lo = ur[0] * 10.0 ** (-floor_decades)
    lo, hi = math.log(x_lo), math.log(ur[-1])
    n_uniform = int(math.ceil((hi - lo) / (math.log(10.0) / per_decade)))
    cuts = set(np.linspace(lo, hi, n_uniform + 1).tolist())
    cuts.update(np.log(ur).tolist())
    cuts.update(math.log(b) for b in breakpoints if x_lo < b < ur[-1])
    edges = np.array(sorted(cuts))
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = mid[:, None] + half[:, None] * _GL_X[None, :]
    x = np.exp(u)
    yv = np.asarray(yfun(x.ravel()), dtype=float).reshape(x.shape)
    if np.any(yv <= 0):
        raise SpecError("y vanishes; the smoothed functional is undefined")
    panel = np.sum(half[:, None] * _GL_W[None, :] * x / yv, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    tail = x_lo / float(np.asarray(yfun(np.array([x_lo])))[0])
    at = cum[np.searchsorted(edges, np.log(ur))] + tail
    out = (ur / at)[inv].reshape(np.shape(r)) if np.ndim(r) else float(ur[0] / at[0])
    return out


def y_smooth(spec: ps.ProcessSpec, t: float, r):
    """ẏ_t(r) = 1 / I_t(r) with I_t(r) = r⁻¹∫_0^r y_t(x)⁻¹ dx."""
    if not t > 0:
        raise SpecError("the smoothed functional needs t > 0")
    return smooth_functional(lambda x: y_total(spec, t, x), r, ps.component_breakpoints(spec))


def n_of_r(spec: ps.ProcessSpec, r, m: float | None = None, v: ps.TimeFunction | None = None,
           tol: float = 1e-12):
    """n(r) = inf{t > 0 : y_{v(t)}(r) > m}; math.inf when never exceeded."""
    d = spec.d
    if m is None:
        m = default_threshold(d)
    if not 0 < m < 1.0 / upper_tail_constant(d):
        raise SpecError(f"m must lie in (0, {1.0 / upper_tail_constant(d):.6g})")
    v = v or ps.Linear(1.0)
    t_hi = float(v.inverse(spec.T_max))
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    top = np.asarray(y_total(spec, np.full_like(r_arr, spec.T_max), r_arr))
    out = np.full(r_arr.shape, math.inf)
    live = top > m
    lo = np.zeros(int(live.sum()))
    hi = np.full_like(lo, t_hi)
    rl = r_arr[live]
    while lo.size and np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        s = np.minimum(np.asarray(v(mid), dtype=float), spec.T_max)
        above = np.asarray(y_total(spec, s, rl)) > m
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    out[live] = hi
    return out if np.ndim(r) else float(out[0])


def laplace_exponent(spec: ps.ProcessSpec, i: int, t, lam):
    """g_t(λ) = ∫_0^∞ (1 - e^{-λx}) ν_t(dx) for an increasing component."""
    if not ps.is_increasing_component(spec, i):
        raise UnsupportedShapeError(f"component {i} is not increasing (needs ν on (0,∞), C = 0, γ₀ ≥ 0)")
    out = spec.components[i].kernel.laplace(t, lam)
    return out if np.ndim(out) else float(out)


def laplace_bounds(spec: ps.ProcessSpec, i: int, t, r):
    """(e⁻¹J, g_t(1/r), J) with J = ∫ (x/r)∧1 ν_t(dx); the middle lies between."""
    kern = spec.components[i].kernel
    r = np.asarray(r, dtype=float)
    J = np.asarray(kern.band(t, 0.0, r, 1)) / r + np.asarray(kern.band(t, r, np.inf, 0))
    g = np.asarray(laplace_exponent(spec, i, t, 1.0 / r))
    return J / math.e, g, J


def running_sup_smooth(s, h_inv, r: float) -> float:
    """k(r) = r⁻¹ ∫_0^r sup_{0<q<=x} h(q)⁻¹ dx from samples of h⁻¹ on (0, r]."""
    s = np.asarray(s, dtype=float)
    h_inv = np.asarray(h_inv, dtype=float)
    keep = (s > 0) & (s <= r)
    if not keep.any():
        raise ValueError("running_sup_smooth needs at least one sample in (0, r]")
    order = np.argsort(s[keep])
    s, h_inv = s[keep][order], h_inv[keep][order]
    env = np.maximum.accumulate(h_inv)
    s_ext = np.append(s, r)
    env_ext = np.append(env, env[-1])
    # below the first sample the envelope is taken as its first value
    area = s[0] * env[0] + np.sum(0.5 * (env_ext[1:] + env_ext[:-1]) * np.diff(s_ext))
    return float(area / r)


@dataclass(frozen=True)
class FunctionalGrid:
    t: np.ndarray
    r: np.ndarray
    G: np.ndarray  # (d, n_t, n_r)
    K: np.ndarray
    Mstar: np.ndarray
    y: np.ndarray  # (n_t, n_r)
    y_smooth: np.ndarray  # nan where t = 0
    label: str
    m: float

    @property
    def y_components(self):
        return self.G + self.K + self.Mstar

    def doubling_violations(self, rtol: float = 1e-9) -> int:
        """Grid pairs (r, θr) breaking (3θ²)⁻¹y(r) <= y(θr) <= 2y(r)."""
        count = 0
        for row in self.y:
            yi, yj = row[:, None], row[None, :]
            theta = self.r[None, :] / self.r[:, None]
            pair = theta > 1
            low = yj < yi / (3 * theta**2) * (1 - rtol)
            high = yj > 2 * yi * (1 + rtol)
            count += int(np.sum(pair & (low | high)))
        return count

    def sandwich_violations(self) -> int:
        """Points with t > 0 where y/ẏ leaves [1/48, 2]."""
        live = self.t > 0
        ratio = self.y[live] / self.y_smooth[live]
        return int(np.sum((ratio < 1 / 48) | (ratio > 2)))

    def columns(self):
        d = self.G.shape[0]
        head = ["t", "r"]
        for i in range(d):
            head += [f"G{i}", f"K{i}", f"Mstar{i}", f"y{i}"]
        return head + ["y", "y_smooth"]

    def rows(self):
        d = self.G.shape[0]
        yc = self.y_components
        for a, t in enumerate(self.t):
            for b, r in enumerate(self.r):
                row = [t, r]
                for i in range(d):
                    row += [self.G[i, a, b], self.K[i, a, b], self.Mstar[i, a, b], yc[i, a, b]]
                yield row + [self.y[a, b], self.y_smooth[a, b]]


def default_r_grid(r_min: float = 1e-7, r_max: float = 10.0, per_decade: int = 8) -> np.ndarray:
    n = int(round(math.log10(r_max / r_min) * per_decade))
    return np.logspace(math.log10(r_min), math.log10(r_max), n + 1)


def build_grid(spec: ps.ProcessSpec, t_grid=None, r_grid=None, m: float | None = None) -> FunctionalGrid:
    t_grid = np.asarray(
        t_grid if t_grid is not None else spec.T_max * np.array([0.0, 0.1, 0.25, 0.5, 0.75, 1.0]),
        dtype=float,
    )
    r_grid = np.asarray(r_grid if r_grid is not None else default_r_grid(), dtype=float)
    d = spec.d
    G = np.zeros((d, t_grid.size, r_grid.size))
    K = np.zeros_like(G)
    M = np.zeros_like(G)
    tt, rr = np.meshgrid(t_grid, r_grid, indexing="ij")
    for i in range(d):
        G[i], K[i], M[i] = component_parts(spec, i, tt, rr)
    y = (G + K + M).sum(axis=0)
    ys = np.full_like(y, np.nan)
    for a, t in enumerate(t_grid):
        if t > 0:
            ys[a] = y_smooth(spec, float(t), r_grid)
    return FunctionalGrid(t_grid, r_grid, G, K, M, y, ys, spec.label,
                          default_threshold(d) if m is None else m)
