"""CSV and PNG output.

Every CSV starts with one `#` comment line carrying a timestamp; everything
after it is a deterministic function of the inputs.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import __version__  # noqa: E402


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows, title: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    head = f"# addgrowth {__version__} {title} generated {stamp}\n"
    path.write_text(head + csv_text(columns, rows), encoding="utf-8")
    return path


def csv_body(path) -> str:
    """File contents without the timestamp line."""
    text = Path(path).read_text(encoding="utf-8")
    return text.split("\n", 1)[1] if text.startswith("#") else text


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_functional_grid(grid, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for a, t in enumerate(grid.t):
        if t <= 0:
            continue
        ax1.loglog(grid.r, grid.y[a], label=f"t={t:.3g}")
        ax2.semilogx(grid.r, grid.y[a] / grid.y_smooth[a], label=f"t={t:.3g}")
    ax1.axhline(grid.m, color="k", lw=0.8, ls="--", label="threshold m")
    ax1.set(xlabel="r", ylabel="y_t(r)", title=f"{grid.label}: growth functional")
    ax2.axhline(2.0, color="r", lw=0.8, ls=":")
    ax2.axhline(1 / 48, color="r", lw=0.8, ls=":")
    ax2.set(xlabel="r", ylabel="y / smoothed y", yscale="log", title="sandwich ratio")
    ax1.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_growth_report(spec_label: str, r, y_b, report, path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.loglog(r, y_b, label="y_b(r)")
    ax1.set(xlabel="r", ylabel="y_b(r)", title=f"{spec_label}: y at t = b")
    ax1.legend(fontsize=8)
    names, vals, errs = [], [], []
    for q, est, hw, _ in report.rows():
        if q in ("quasiconvex", "class_I", "step_process", "sigma_exponent"):
            continue
        names.append(q)
        vals.append(est)
        errs.append(hw)
    ax2.errorbar(range(len(vals)), vals, yerr=errs, fmt="o")
    ax2.set_xticks(range(len(vals)), names, rotation=45, ha="right", fontsize=8)
    ax2.set(ylabel="index estimate", title="index estimates")
    fig.tight_layout()
    return _save(fig, path)


def plot_paths(batch, path, max_paths: int = 20) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    if batch.X is not None:
        for p in range(min(max_paths, batch.n_paths)):
            ax1.plot(batch.t, batch.X[p, :, 0], lw=0.7)
    ax1.set(xlabel="t", ylabel="X_t (component 0)", title=f"{batch.label}: sample paths")
    finite = np.where(np.isfinite(batch.X_star), batch.X_star, np.nan)
    ax2.plot(batch.t, np.nanmean(finite, axis=0), label="mean X*")
    ax2.plot(batch.t, np.nanquantile(finite, 0.9, axis=0), label="90% quantile")
    ax2.set(xlabel="t", ylabel="running max of |X|", title="running maximum")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_outcomes(outcomes, path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(7, 5))
    colours = {"pass": "tab:green", "fail": "tab:red", "inconclusive": "tab:orange"}
    for verdict, colour in colours.items():
        sel = [o for o in outcomes if o.verdict == verdict and o.analytic > 0 and o.empirical > 0
               and math.isfinite(o.analytic) and math.isfinite(o.empirical)]
        if sel:
            ax.loglog([o.analytic for o in sel], [o.empirical for o in sel], "o", ms=4, color=colour, label=verdict)
    lim = ax.get_xlim()
    ax.plot(lim, lim, "k:", lw=0.8)
    ax.set(xlabel="analytic side", ylabel="empirical side", title=title or "check outcomes")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_dichotomy(report, path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    n = np.arange(report.t.size)
    for a, eta in enumerate(report.etas):
        ax.plot(n, report.frac_min_below[a], "-o", ms=3, label=f"eta={eta:g}: min < {report.lo:g}")
        ax.plot(n, report.frac_max_above[a], "--s", ms=3, label=f"eta={eta:g}: max > {report.hi:g}")
    ax.axhline(0.95, color="k", lw=0.8, ls=":")
    ax.set(xlabel="n (t = 2^-n)", ylabel="fraction of paths", ylim=(-0.02, 1.02),
           title=f"{report.label}: dichotomy (finite-horizon proxy)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)
