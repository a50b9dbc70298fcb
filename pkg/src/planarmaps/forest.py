"""Plane forests with prescribed out-degrees and their path encodings.

A forest with ``rho`` trees and out-degree counts ``d`` is sampled exactly
uniformly by shuffling the jump multiset (a bridge from 0 to ``-rho``) and
applying the discrete Vervaat transform (cyclic shift at a uniform level
above the minimum).  Vertices are indexed lexicographically (depth-first)
throughout, so the Lukasiewicz path, height process and label process are
plain arrays indexed by visit order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .degrees import DegreeSequence, derive_stats

BRIDGE = "bridge"
FIRST_PASSAGE = "first_passage"
LUKASIEWICZ = "lukasiewicz"


class MalformedPathError(ValueError):
    """A jump sequence that is not a valid path of the declared kind."""


@dataclass(frozen=True)
class LatticePath:
    """Integer path given by its jumps (each >= -1 in the walk form).

    ``values()`` returns the prefix sums with a leading 0, so a path with
    ``m`` jumps has ``m + 1`` values.
    """

    jumps: np.ndarray
    kind: str

    def __post_init__(self):
        object.__setattr__(self, "jumps", np.asarray(self.jumps, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.jumps.shape[0])

    def values(self) -> np.ndarray:
        out = np.empty(len(self) + 1, dtype=np.int64)
        out[0] = 0
        np.cumsum(self.jumps, out=out[1:])
        return out

    @property
    def terminal(self) -> int:
        return int(self.jumps.sum())

    def to_text(self) -> str:
        return " ".join(str(int(j)) for j in self.jumps) + "\n"

    @classmethod
    def from_text(cls, text: str, kind: str) -> "LatticePath":
        return cls(np.array([int(t) for t in text.split()], dtype=np.int64), kind)


def degree_bridge_jumps(d: DegreeSequence) -> np.ndarray:
    """The jump multiset of a (d, rho) bridge: d(k) jumps of value k - 1, k >= 0."""
    st = derive_stats(d)
    jumps = np.empty(st.upsilon, dtype=np.int64)
    jumps[: st.leaves] = -1
    pos = st.leaves
    for k, c in d.counts.items():
        jumps[pos : pos + c] = k - 1
        pos += c
    return jumps


def sample_degree_bridge(d: DegreeSequence, rng: np.random.Generator) -> LatticePath:
    """Uniformly random ordering of the (d, rho) jump multiset; ends at -rho."""
    jumps = degree_bridge_jumps(d)
    st = derive_stats(d)
    # shuffle in the narrowest dtype that holds the jumps; keeps the memory
    # ceiling low for upsilon ~ 1e7+ without a separate reservoir strategy
    if st.delta - 1 <= np.iinfo(np.int8).max:
        small = jumps.astype(np.int8)
        rng.shuffle(small)
        jumps = small.astype(np.int64)
    else:
        rng.shuffle(jumps)
    return LatticePath(jumps, BRIDGE)


def vervaat_shift(
    b: LatticePath, rng: np.random.Generator, return_index: bool = False
):
    """Discrete Vervaat transform of a bridge to ``-rho``.

    Samples ``p`` uniform in ``{0, ..., rho-1}``, cuts at the first index where
    the bridge equals ``p + min`` and shifts cyclically; the result is the
    Lukasiewicz path of a uniform forest with the bridge's jump content.
    """
    values = b.values()
    rho = -int(values[-1])
    if rho < 1:
        raise MalformedPathError(f"bridge must end at a negative level, ends at {-rho}")
    p = int(rng.integers(rho))
    level = p + int(values[1:].min())
    # first i in {1, ..., upsilon} with B(i) == level
    i_n = 1 + int(np.argmax(values[1:] == level))
    shifted = LatticePath(np.roll(b.jumps, -i_n), LUKASIEWICZ)
    return (shifted, i_n) if return_index else shifted


def first_passage_check(path: LatticePath) -> int:
    """Return rho if the path first hits its terminal value -rho at the final
    index, else raise."""
    values = path.values()
    rho = -int(values[-1])
    if rho < 1:
        raise MalformedPathError("path does not end below 0")
    if len(values) > 1 and values[:-1].min() < -rho + 1:
        raise MalformedPathError("path hits its terminal level before the end")
    return rho


@dataclass
class PlaneForest:
    """Rooted ordered forest in lexicographic (depth-first) vertex order.

    ``parent[j]`` is -1 for the rho roots; children of a vertex appear in
    sibling order as increasing vertex indices.  Immutable by convention once
    built (arrays are not written to after decode).
    """

    parent: np.ndarray
    out_degree: np.ndarray
    tree_id: np.ndarray
    rho: int
    _w: LatticePath | None = field(default=None, repr=False)
    _children_start: np.ndarray | None = field(default=None, repr=False)
    _children_flat: np.ndarray | None = field(default=None, repr=False)

    @property
    def upsilon(self) -> int:
        return int(self.parent.shape[0])

    def lukasiewicz_path(self) -> LatticePath:
        if self._w is None:
            self._w = LatticePath(self.out_degree.astype(np.int64) - 1, LUKASIEWICZ)
        return self._w

    def running_min(self) -> np.ndarray:
        """W_underbar(j) = min over i <= j of W(i), indexed by vertex j."""
        w = self.lukasiewicz_path().values()
        return np.minimum.accumulate(w[:-1])

    def children(self, v: int) -> np.ndarray:
        start, flat = self._children_index()
        return flat[start[v] : start[v + 1]]

    def _children_index(self) -> tuple[np.ndarray, np.ndarray]:
        if self._children_start is None:
            order = np.argsort(self.parent, kind="stable")
            n_roots = self.rho
            flat = order[n_roots:]  # children sorted by parent then by index
            start = np.zeros(self.upsilon + 1, dtype=np.int64)
            np.add.at(start, self.parent[self.parent >= 0] + 1, 1)
            np.cumsum(start, out=start)
            self._children_start, self._children_flat = start, flat
        return self._children_start, self._children_flat

    def roots(self) -> np.ndarray:
        return np.flatnonzero(self.parent == -1)

    def depth(self) -> np.ndarray:
        """Depth within the own tree, roots at 0."""
        d = np.zeros(self.upsilon, dtype=np.int64)
        par = self.parent
        for j in range(self.upsilon):
            p = par[j]
            if p >= 0:
                d[j] = d[p] + 1
        return d

    def to_text(self) -> str:
        return " ".join(str(int(p)) for p in self.parent) + "\n"


def decode_forest(w: LatticePath) -> PlaneForest:
    """Forest whose Lukasiewicz path is ``w``; out-degree of x_j is jump + 1.

    Malformed paths (premature first passage, jumps < -1, non-closing stack)
    are rejected eagerly.
    """
    jumps = w.jumps
    ups = int(jumps.shape[0])
    if ups == 0:
        raise MalformedPathError("empty path")
    if jumps.min() < -1:
        raise MalformedPathError("jump below -1")
    rho = first_passage_check(w)
    parent = np.empty(ups, dtype=np.int64)
    out_degree = (jumps + 1).astype(np.int64)
    tree_id = np.empty(ups, dtype=np.int64)
    stack_v: list[int] = []
    stack_rem: list[int] = []
    tree = -1
    deg = out_degree
    for j in range(ups):
        if stack_v:
            parent[j] = stack_v[-1]
            stack_rem[-1] -= 1
            if stack_rem[-1] == 0:
                stack_v.pop()
                stack_rem.pop()
        else:
            tree += 1
            parent[j] = -1
        tree_id[j] = tree
        k = deg[j]
        if k > 0:
            stack_v.append(j)
            stack_rem.append(int(k))
    if stack_v:
        raise MalformedPathError("unfinished subtrees at end of path")
    if tree + 1 != rho:
        raise MalformedPathError(f"decoded {tree + 1} trees, expected {rho}")
    f = PlaneForest(parent=parent, out_degree=out_degree, tree_id=tree_id, rho=rho)
    f._w = LatticePath(jumps, LUKASIEWICZ)
    return f


def encode_forest(f: PlaneForest) -> LatticePath:
    return LatticePath(f.out_degree.astype(np.int64) - 1, LUKASIEWICZ)


def height_process(f: PlaneForest) -> np.ndarray:
    """Heights in the planted forest: H(0) = 0 for the extra root and
    H(j+1) = generation of x_j, with the rho tree roots at height 1.

    This matches the convention in which the forest is a single tree planted
    at an extra root vertex.
    """
    h = np.empty(f.upsilon + 1, dtype=np.int64)
    h[0] = 0
    h[1:] = f.depth() + 1
    return h


def lr_counts(f: PlaneForest, i: int) -> dict[str, int]:
    """Counts of vertices branching off the ancestral line of x_i, within the
    tree containing x_i (roots of the forest never counted).

    R is computed from the Lukasiewicz path, ``R = W(i) - min_{j<=i} W(j)``;
    L by direct traversal of the ancestral line; LR = L + R.
    """
    w = f.lukasiewicz_path().values()
    wmin = int(np.min(w[: i + 1]))
    r = int(w[i]) - wmin
    l = _left_count(f, i)
    return {"R": r, "L": l, "LR": l + r}


def _line_counts_direct(f: PlaneForest, i: int) -> tuple[int, int]:
    """(L, R) by walking the ancestral line; O(height * max degree)."""
    left = right = 0
    v = i
    p = int(f.parent[v])
    while p >= 0:
        sibs = f.children(p)
        pos = int(np.searchsorted(sibs, v))
        left += pos
        right += len(sibs) - pos - 1
        v = p
        p = int(f.parent[v])
    return left, right


def _left_count(f: PlaneForest, i: int) -> int:
    return _line_counts_direct(f, i)[0]


def lr_counts_direct(f: PlaneForest, i: int) -> dict[str, int]:
    """Brute-force oracle for :func:`lr_counts`."""
    l, r = _line_counts_direct(f, i)
    return {"R": r, "L": l, "LR": l + r}


def spine_sample(
    d: DegreeSequence, h: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Spine decomposition draws: ``xi`` picked without replacement from an urn
    with ``k * d(k)`` balls labelled k, and ``chi_i`` uniform on {1..xi_i}.

    Raises when ``h`` exceeds the urn size ``eps``.
    """
    st = derive_stats(d)
    if h > st.eps:
        raise ValueError(f"urn exhausted: h={h} > eps={st.eps}")
    ks = np.array(sorted(d.counts), dtype=np.int64)
    ball_counts = np.array([k * d.counts[int(k)] for k in ks], dtype=np.int64)
    bounds = np.cumsum(ball_counts)
    picks = rng.choice(st.eps, size=h, replace=False)
    xi = ks[np.searchsorted(bounds, picks, side="right")]
    chi = rng.integers(1, xi + 1)
    return xi, chi
