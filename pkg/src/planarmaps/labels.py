"""Uniform label bridges and label decoration of plane forests.

Around a branch-point with k offspring, the admissible label increments are
the discrete bridges of length k whose consecutive increments are >= -1 and
whose values end at 0.  The extra root of the planted forest is treated as a
branch-point of arity rho, which makes the root labels a random-walk bridge
automatically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .forest import PlaneForest


def label_bridge_count(k: int) -> int:
    """|B_k| = C(2k-1, k-1)."""
    return math.comb(2 * k - 1, k - 1)


def sample_label_bridge(k: int, rng: np.random.Generator) -> np.ndarray:
    """Exactly uniform bridge values (b_1, ..., b_k), b_k = 0.

    Stars-and-bars: a uniform (k-1)-subset of 2k-1 slots gives a uniform
    composition of k into k non-negative parts c_i; the increments are
    c_i - 1.  O(k), no rejection, safe for huge arities.
    """
    if k < 1:
        raise ValueError(f"arity must be >= 1, got {k}")
    bars = np.sort(rng.choice(2 * k - 1, size=k - 1, replace=False))
    parts = np.diff(np.concatenate(([-1], bars, [2 * k - 1]))) - 1
    return np.cumsum(parts - 1).astype(np.int64)


def sample_label_bridges(k: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """m independent uniform bridges of arity k as an (m, k) array."""
    if k < 1:
        raise ValueError(f"arity must be >= 1, got {k}")
    if k == 1:
        return np.zeros((m, 1), dtype=np.int64)
    out = np.empty((m, k), dtype=np.int64)
    # chunk rows so the scratch matrix stays ~1e7 entries
    chunk = max(1, int(1e7) // (2 * k - 1))
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        u = rng.random((hi - lo, 2 * k - 1))
        bars = np.sort(np.argpartition(u, k - 1, axis=1)[:, : k - 1], axis=1)
        edges = np.concatenate(
            (np.full((hi - lo, 1), -1), bars, np.full((hi - lo, 1), 2 * k - 1)), axis=1
        )
        parts = np.diff(edges, axis=1) - 1
        np.cumsum(parts - 1, axis=1, out=out[lo:hi])
    return out


def enumerate_label_bridges(k: int) -> list[tuple[int, ...]]:
    """All bridges of arity k (exponential; for small k only)."""
    out = []
    for incs in product(range(-1, k), repeat=k):
        vals = np.cumsum(incs)
        if vals[-1] == 0:
            out.append(tuple(int(v) for v in vals))
    return out


def sample_label_bridge_rejection(k: int, rng: np.random.Generator) -> np.ndarray:
    """Equivalent sampler: geometric walk conditioned on S_k = 0 (cross-check)."""
    while True:
        steps = rng.geometric(0.5, size=k) - 2  # P(step = i) = 2^{-(i+2)}, i >= -1
        vals = np.cumsum(steps)
        if vals[-1] == 0:
            return vals.astype(np.int64)


def bridge_variance(k: int, j: int) -> Fraction:
    """Var of the j-th value of a uniform arity-k bridge: 2j(k-j)/(k+1)."""
    if not 1 <= j <= k:
        raise ValueError(f"need 1 <= j <= k, got j={j}, k={k}")
    return Fraction(2 * j * (k - j), k + 1)


# -- the geometric step law P(S_1 = i) = 2^{-(i+2)}, i >= -1 ------------------


class GeometricStepLaw:
    """Step law of the random walk whose bridge is the uniform label bridge."""

    mean = 0.0
    variance = 2.0
    fourth_moment = 38.0  # E[S_1^4]; E[S_j^4] = 12 j^2 + 26 j

    @staticmethod
    def pmf(i) -> np.ndarray:
        i = np.asarray(i)
        return np.where(i >= -1, 0.5 ** (i + 2.0), 0.0)

    @staticmethod
    def sample(size, rng: np.random.Generator) -> np.ndarray:
        return rng.geometric(0.5, size=size).astype(np.int64) - 2

    @staticmethod
    def sum_fourth_moment(j: int) -> float:
        return 12.0 * j * j + 26.0 * j


GEOMETRIC_STEP = GeometricStepLaw()


# -- decoration ---------------------------------------------------------------


@dataclass
class LabelledForest:
    """A plane forest with integer labels on every vertex.

    ``label[j]`` is the label of the j-th vertex in lexicographic order;
    ``b[t]`` is the label of the root of tree t (1-based; b[0] = 0, and
    b[rho] = 0 always since the root bridge ends at 0).
    """

    forest: PlaneForest
    label: np.ndarray
    b: np.ndarray

    @property
    def rho(self) -> int:
        return self.forest.rho

    def label_process(self) -> np.ndarray:
        """L indexed by forest vertices (length upsilon)."""
        return self.label

    def planted_label_process(self) -> np.ndarray:
        """L with the extra root's 0 prepended (length upsilon + 1)."""
        return np.concatenate(([0], self.label))

    def to_text(self) -> str:
        return self.forest.to_text() + " ".join(str(int(x)) for x in self.label) + "\n"

    def trace_csv(self) -> str:
        """Rows ``t,L(upsilon t)`` over vertex indices, t in [0, 1]."""
        ups = self.forest.upsilon
        lines = ["t,label"]
        lines += [f"{j / ups!r},{int(v)}" for j, v in enumerate(self.label)]
        return "\n".join(lines) + "\n"


def decorate(f: PlaneForest, rng: np.random.Generator) -> LabelledForest:
    """Uniform labelling of ``f``: independent uniform bridges at every
    branch-point, with the planted extra root treated as an arity-rho
    branch-point (which yields the root-label bridge law).

    Root labels and branch-point labels come from two independent spawned
    streams, so the processes ``b`` and ``L_tilde`` are generated from
    disjoint randomness.
    """
    rng_roots, rng_branch = rng.spawn(2)
    ups = f.upsilon
    b = np.zeros(f.rho + 1, dtype=np.int64)
    b[1:] = sample_label_bridge(f.rho, rng_roots)

    delta = np.zeros(ups, dtype=np.int64)  # label offset from parent (roots: from b)
    internal = np.flatnonzero(f.out_degree > 0)
    start, flat = f._children_index()
    for k in np.unique(f.out_degree[internal]):
        vs = internal[f.out_degree[internal] == k]
        bridges = sample_label_bridges(int(k), len(vs), rng_branch)
        # children of v are flat[start[v]:start[v]+k] in sibling order
        idx = (start[vs][:, None] + np.arange(k)[None, :]).ravel()
        delta[flat[idx]] = bridges.ravel()

    label = np.empty(ups, dtype=np.int64)
    parent = f.parent
    tree = f.tree_id
    for j in range(ups):
        p = parent[j]
        label[j] = (b[tree[j] + 1] if p < 0 else label[p] + delta[j])
    return LabelledForest(forest=f, label=label, b=b)


def decompose_labels(lf: LabelledForest) -> dict[str, np.ndarray]:
    """The three-way decomposition ``L(k) = L_tilde(k) + b(1 - Wmin(k))``.

    ``L_tilde`` is the per-tree label process shifted so every tree root has
    label 0; ``1 - Wmin(k)`` recovers the index of the tree containing the
    k-th vertex from the running minimum of the Lukasiewicz path.
    """
    f = lf.forest
    wmin = f.running_min()
    root_index = 1 - wmin  # = tree_id + 1
    l_tilde = lf.label - lf.b[root_index]
    return {"L": lf.label, "L_tilde": l_tilde, "b": lf.b, "Wmin": wmin}
