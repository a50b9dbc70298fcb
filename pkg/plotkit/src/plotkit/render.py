"""Render experiment CSVs into diagnostic figures.

Pure functions of their inputs: fixed style, fixed DPI, no timestamps, so a
re-run on the same CSV produces a pixel-identical image.  Only the documented
CSV schemas are read; unknown columns are tolerated, missing ones are a
schema error that names the difference.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
}

PLOT_KINDS = ("loglog_regression", "trace_envelope", "histogram", "qq")


class SchemaError(ValueError):
    """Input CSV does not carry the columns the plot kind needs."""


class EmptyInputError(ValueError):
    """Input CSV has a header but no data rows."""


def read_csv(path: str) -> dict[str, list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{path}: no header")
        cols = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                cols[name].append(cell)
    if not cols or not next(iter(cols.values())):
        raise EmptyInputError(f"{path}: no data rows")
    return cols


def require_columns(cols: dict, needed: list[str], path: str):
    missing = [c for c in needed if c not in cols]
    if missing:
        raise SchemaError(
            f"{path}: missing columns {missing}; have {sorted(cols)}"
        )


def _numeric(cols: dict, name: str) -> np.ndarray:
    return np.array([float(x) for x in cols[name]])


def _filtered(cols: dict, flt: dict) -> dict:
    if not flt:
        return cols
    n = len(next(iter(cols.values())))
    keep = np.ones(n, dtype=bool)
    for key, val in flt.items():
        if key not in cols:
            raise SchemaError(f"missing columns [{key!r}] (filter); have {sorted(cols)}")
        keep &= np.array([x == str(val) for x in cols[key]])
    out = {k: [x for x, m in zip(v, keep) if m] for k, v in cols.items()}
    if not next(iter(out.values())):
        raise EmptyInputError(f"filter {flt} matches no rows")
    return out


def render(spec: dict) -> Path:
    """Render one figure; returns the output path.

    spec: {"kind", "input", "output", optional "x"/"y"/"value", "filter",
    "group", "bins", "reference", "title"}.
    """
    kind = spec.get("kind")
    if kind not in PLOT_KINDS:
        raise SchemaError(f"unknown plot kind {kind!r}; one of {PLOT_KINDS}")
    cols = _filtered(read_csv(spec["input"]), spec.get("filter", {}))
    out = Path(spec["output"])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        if kind == "loglog_regression":
            _loglog(ax, cols, spec)
        elif kind == "trace_envelope":
            _envelope(ax, cols, spec)
        elif kind == "histogram":
            _histogram(ax, cols, spec)
        else:
            _qq(ax, cols, spec)
        if spec.get("title"):
            ax.set_title(spec["title"])
        fig.tight_layout()
        fig.savefig(out, metadata={"Software": "plotkit"})
        plt.close(fig)
    return out


def _loglog(ax, cols, spec):
    x_col = spec.get("x", "n")
    y_col = spec.get("y", "value")
    require_columns(cols, [x_col, y_col], spec["input"])
    x = _numeric(cols, x_col)
    y = _numeric(cols, y_col)
    if np.any(x <= 0) or np.any(y <= 0):
        raise SchemaError("loglog_regression needs positive x and y")
    med_x = np.array(sorted(set(x)))
    med_y = np.array([np.median(y[x == v]) for v in med_x])
    slope, intercept = np.polyfit(np.log(med_x), np.log(med_y), 1)
    ax.loglog(x, y, ".", color="#a0a0a0", ms=4, label="replicas")
    ax.loglog(med_x, med_y, "o", color="C0", label="median")
    grid = np.linspace(math.log(med_x[0]), math.log(med_x[-1]), 50)
    ax.loglog(np.exp(grid), np.exp(intercept + slope * grid), "-", color="C3",
              label=f"slope = {slope:.3f}")
    ax.set_xlabel(x_col)
    ax.set_ylabel(y_col)
    ax.legend()


def _envelope(ax, cols, spec):
    t_col = spec.get("x", "t")
    y_col = spec.get("y", "value")
    require_columns(cols, [t_col, y_col], spec["input"])
    group_cols = [c for c in spec.get("group", ["seed", "n", "replica"]) if c in cols]
    t = _numeric(cols, t_col)
    y = _numeric(cols, y_col)
    if group_cols:
        keys = list(zip(*(cols[c] for c in group_cols)))
        uniq = sorted(set(keys))
        for i, key in enumerate(uniq):
            mask = np.array([k == key for k in keys])
            ax.plot(t[mask], y[mask], lw=0.9, alpha=0.8,
                    label=",".join(map(str, key)) if len(uniq) <= 6 else None)
        if len(uniq) <= 6:
            ax.legend(fontsize=7)
    else:
        ax.plot(t, y, lw=0.9)
    # min/max envelope over a common grid
    order = np.argsort(t)
    ts, ys = t[order], y[order]
    grid = np.unique(ts)
    if len(grid) > 1:
        lo = np.array([ys[ts == g].min() for g in grid])
        hi = np.array([ys[ts == g].max() for g in grid])
        ax.fill_between(grid, lo, hi, color="C0", alpha=0.12)
    ax.set_xlabel(t_col)
    ax.set_ylabel(y_col)


def _histogram(ax, cols, spec):
    y_col = spec.get("y", "value")
    require_columns(cols, [y_col], spec["input"])
    y = _numeric(cols, y_col)
    bins = int(spec.get("bins", 40))
    ax.hist(y, bins=bins, color="C0", edgecolor="white")
    ax.set_xlabel(y_col)
    ax.set_ylabel("count")


def _qq(ax, cols, spec):
    y_col = spec.get("y", "value")
    require_columns(cols, [y_col], spec["input"])
    y = np.sort(_numeric(cols, y_col))
    m = len(y)
    probs = (np.arange(1, m + 1) - 0.5) / m
    if "reference" in spec:
        ref_cols = read_csv(spec["reference"])
        ref_col = spec.get("reference_column", y_col)
        require_columns(ref_cols, [ref_col], spec["reference"])
        ref = np.sort(_numeric(ref_cols, ref_col))
        q_ref = np.quantile(ref, probs)
        ax.set_xlabel(f"reference {ref_col}")
    else:
        # standard normal quantiles against the standardised sample
        from math import sqrt

        mu, sd = y.mean(), y.std() or 1.0
        y = (y - mu) / sd
        q_ref = _norm_ppf(probs)
        ax.set_xlabel("normal quantiles")
    ax.plot(q_ref, y, ".", ms=4)
    lims = [min(q_ref[0], y[0]), max(q_ref[-1], y[-1])]
    ax.plot(lims, lims, "-", color="C3", lw=1)
    ax.set_ylabel(y_col)


def _norm_ppf(p: np.ndarray) -> np.ndarray:
    # Acklam's rational approximation; keeps scipy out of the dependencies
    a = [-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00]
    b = [-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01]
    c = [-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00]
    d = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00]
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    lo = p < 0.02425
    hi = p > 1 - 0.02425
    mid = ~(lo | hi)
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        out[mid] = (
            (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1)
        )
    for mask, sign in ((lo, 1.0), (hi, -1.0)):
        if np.any(mask):
            q = np.sqrt(-2 * np.log(np.where(sign > 0, p[mask], 1 - p[mask])))
            out[mask] = sign * (
                ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
            ) / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1)
    return out
