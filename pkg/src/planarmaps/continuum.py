"""Discretised simulators of the continuum reference objects.

Brownian bridges and first-passage bridges on a uniform grid of [0, 1], the
forest-coding process X (first-passage bridge above its running minimum),
and the Gaussian label field with covariance min X built by the stack
(snake) construction, which enforces tree-consistency structurally.  These
are reference distributions for the scaling-limit checks, not the limits
themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ContinuumPath:
    """Values on the grid {0, 1/N, ..., 1}; kind documents the construction."""

    values: np.ndarray
    kind: str
    rho: float = 0.0

    @property
    def n_grid(self) -> int:
        return int(self.values.shape[0]) - 1

    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_grid + 1)

    def trace_csv(self) -> str:
        lines = ["t,value"]
        lines += [f"{t!r},{v!r}" for t, v in zip(self.times(), self.values)]
        return "\n".join(lines) + "\n"


def simulate_bridge(rho: float, n_grid: int, rng: np.random.Generator) -> ContinuumPath:
    """Standard Brownian bridge from 0 to -rho on the grid."""
    g = rng.standard_normal(n_grid) / math.sqrt(n_grid)
    w = np.concatenate(([0.0], np.cumsum(g)))
    t = np.linspace(0.0, 1.0, n_grid + 1)
    b = w - t * w[-1] - t * rho
    return ContinuumPath(values=b, kind="bridge", rho=rho)


def vervaat_grid(b: ContinuumPath, rng: np.random.Generator) -> ContinuumPath:
    """Discrete Vervaat shift at the first grid passage of (min + uniform level)."""
    v = b.values
    n = b.n_grid
    m = float(v.min())
    u = float(rng.uniform(0.0, b.rho)) if b.rho > 0 else 0.0
    level = m + u
    i0 = int(np.argmax(v <= level)) if u > 0 else int(np.argmin(v))
    inc = np.diff(v)
    shifted = np.concatenate(([0.0], np.cumsum(np.roll(inc, -i0))))
    return ContinuumPath(values=shifted, kind="first_passage", rho=b.rho)


def simulate_first_passage_bridge(
    rho: float, n_grid: int, rng: np.random.Generator
) -> ContinuumPath:
    """First-passage bridge to -rho (the excursion approximation when rho=0)."""
    return vervaat_grid(simulate_bridge(rho, n_grid, rng), rng)


def x_process(fp: ContinuumPath) -> ContinuumPath:
    """X = F - running min F: the forest-coding process (>= 0)."""
    rm = np.minimum.accumulate(fp.values)
    return ContinuumPath(values=fp.values - rm, kind="x_process", rho=fp.rho)


def running_min(fp: ContinuumPath) -> np.ndarray:
    return np.minimum.accumulate(fp.values)


def simulate_label_field(
    fp: ContinuumPath, rng: np.random.Generator, boundary_grid: int | None = None
) -> ContinuumPath:
    """The label field Z on the grid of the first-passage bridge ``fp``.

    Z = Z_tilde + sqrt(3) * b(-running min F) where Z_tilde is the Gaussian
    snake driven by X = F - min F (covariance min X, built exactly at grid
    times by the stack construction) and b is an independent Brownian bridge
    of duration rho (absent when rho = 0).
    """
    x = x_process(fp).values
    z_tilde = _snake(x, rng)
    if fp.rho <= 0:
        return ContinuumPath(values=z_tilde, kind="z_field", rho=fp.rho)
    rm = running_min(fp)
    bb = _bridge_interp(fp.rho, boundary_grid or max(1024, fp.n_grid // 4), rng)
    z = z_tilde + math.sqrt(3.0) * bb(-rm)
    return ContinuumPath(values=z, kind="z_field", rho=fp.rho)


def _bridge_interp(rho: float, m: int, rng: np.random.Generator):
    """A Brownian bridge 0 -> 0 of duration rho as an interpolating callable."""
    g = rng.standard_normal(m) * math.sqrt(rho / m)
    w = np.concatenate(([0.0], np.cumsum(g)))
    t = np.linspace(0.0, rho, m + 1)
    b = w - (t / rho) * w[-1]

    def at(y):
        return np.interp(y, t, b)

    return at


def _snake(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Gaussian labels along the contour encoded by x (x[0] = 0).

    Stack of (height, label) records per branch; moving up adds fresh
    Gaussian increments, moving down reveals bridge-interpolated labels at
    intermediate heights.  Exact at grid times for the piecewise-linear
    reading of x; labels agree whenever the same tree point is revisited.
    """
    n = x.shape[0]
    z = np.empty(n)
    heights = [0.0]
    labels = [0.0]
    z[0] = 0.0
    for t in range(1, n):
        y = float(x[t])
        top_h = heights[-1]
        if y > top_h:
            lab = labels[-1] + math.sqrt(y - top_h) * rng.standard_normal()
            heights.append(y)
            labels.append(lab)
        elif y < top_h:
            while heights and heights[-1] > y:
                h_hi, z_hi = heights.pop(), labels.pop()
            h_lo, z_lo = heights[-1], labels[-1]
            if y > h_lo:
                frac = (y - h_lo) / (h_hi - h_lo)
                mean = z_lo + frac * (z_hi - z_lo)
                var = (y - h_lo) * (h_hi - y) / (h_hi - h_lo)
                lab = mean + math.sqrt(var) * rng.standard_normal()
                heights.append(y)
                labels.append(lab)
            # y == h_lo: label z_lo is already on the stack
        z[t] = labels[-1]
    return z


def snake_marginals(
    x: np.ndarray, indices: np.ndarray, reps: int, rng: np.random.Generator
) -> np.ndarray:
    """(reps, len(indices)) snake labels at the given grid indices, all reps
    sharing the driving path x (for conditional-covariance checks).

    The stack structure is deterministic given x, so the replicas vectorise.
    """
    n = x.shape[0]
    want = np.zeros(n, dtype=bool)
    want[indices] = True
    heights = [0.0]
    labels = [np.zeros(reps)]
    out = np.empty((reps, int(want.sum())))
    col = {int(i): c for c, i in enumerate(np.flatnonzero(want))}
    if want[0]:
        out[:, col[0]] = 0.0
    for t in range(1, n):
        y = float(x[t])
        top_h = heights[-1]
        if y > top_h:
            lab = labels[-1] + math.sqrt(y - top_h) * rng.standard_normal(reps)
            heights.append(y)
            labels.append(lab)
        elif y < top_h:
            while heights and heights[-1] > y:
                h_hi, z_hi = heights.pop(), labels.pop()
            h_lo, z_lo = heights[-1], labels[-1]
            if y > h_lo:
                frac = (y - h_lo) / (h_hi - h_lo)
                mean = z_lo + frac * (z_hi - z_lo)
                var = (y - h_lo) * (h_hi - y) / (h_hi - h_lo)
                lab = mean + math.sqrt(var) * rng.standard_normal(reps)
                heights.append(y)
                labels.append(lab)
        if want[t]:
            out[:, col[t]] = labels[-1]
    return out


def z0_marginal_samples(
    n_grid: int, reps: int, rng: np.random.Generator, chunk: int = 1024
) -> np.ndarray:
    """i.i.d. samples of the head of the rho = 0 label field at a uniform time.

    Uses the conditional identity Var(Z_t | X) = X_t: sample an excursion (a
    fresh one per draw), a uniform time U, and return sqrt(X_U) * N(0, 1).
    """
    out = np.empty(reps)
    t = np.linspace(0.0, 1.0, n_grid + 1)
    for lo in range(0, reps, chunk):
        hi = min(reps, lo + chunk)
        m = hi - lo
        g = rng.standard_normal((m, n_grid)) / math.sqrt(n_grid)
        w = np.cumsum(g, axis=1)
        b = np.concatenate((np.zeros((m, 1)), w), axis=1)
        b -= t[None, :] * b[:, -1:]
        # cyclic shift of a 0 -> 0 bridge: drop the duplicated endpoint and
        # index mod n_grid; the excursion value needs no wrap correction
        bc = b[:, :n_grid]
        imin = np.argmin(bc, axis=1)
        u = rng.integers(0, n_grid, size=m)
        rows = np.arange(m)
        x_u = bc[rows, (imin + u) % n_grid] - bc[rows, imin]
        out[lo:hi] = np.sqrt(np.maximum(x_u, 0.0)) * rng.standard_normal(m)
    return out


def crt_pair_distances(
    x: ContinuumPath, pairs: np.ndarray
) -> np.ndarray:
    """Tree distances d_g(s, t) of the encoding (delegates to metrics)."""
    from .metrics import EncodedMetric, tree_distance

    g = EncodedMetric(values=np.asarray(x.values, dtype=float))
    pairs = np.asarray(pairs, dtype=float)
    return np.array([tree_distance(g, float(s), float(t)) for s, t in pairs])
