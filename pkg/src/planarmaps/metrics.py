"""Graph metrics on maps, encoding-based distance functionals, cactus bounds.

BFS distances are exact graph distances computed through scipy's compiled
csgraph routines.  The encoding-based functionals operate on functions
sampled on a grid of [0, 1] and evaluated as piecewise-linear interpolations,
so the minima used by the tree and belt distances are exact for
piecewise-linear inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.stats import ks_2samp

from .mapping import HalfEdgeMap, PointedMap


def adjacency(hmap: HalfEdgeMap) -> sparse.csr_matrix:
    edges = hmap.edge_array()
    n = hmap.n_vertices
    u = np.concatenate([edges[:, 0], edges[:, 1]])
    v = np.concatenate([edges[:, 1], edges[:, 0]])
    data = np.ones(u.shape[0], dtype=np.int8)
    return sparse.csr_matrix((data, (u, v)), shape=(n, n))


def bfs_distances(hmap: HalfEdgeMap, sources) -> np.ndarray:
    """Exact graph distances from each source; (len(sources), V) int array."""
    adj = adjacency(hmap)
    n_comp, _ = csgraph.connected_components(adj, directed=False)
    if n_comp != 1:
        raise ValueError(f"map graph is disconnected ({n_comp} components)")
    d = csgraph.shortest_path(adj, method="D", unweighted=True, indices=list(sources))
    return d.astype(np.int64)


# -- encoding-based functionals ------------------------------------------------


@dataclass(frozen=True)
class EncodedMetric:
    """A continuous encoding function sampled on the uniform grid of [0, 1]."""

    values: np.ndarray  # length N + 1, grid i / N

    @property
    def n_grid(self) -> int:
        return int(self.values.shape[0]) - 1

    def at(self, s: float) -> float:
        x = s * self.n_grid
        i = int(np.floor(x))
        if i >= self.n_grid:
            return float(self.values[-1])
        frac = x - i
        return float((1 - frac) * self.values[i] + frac * self.values[i + 1])

    def min_on(self, s: float, t: float) -> float:
        """Minimum over [s, t] of the piecewise-linear interpolation (exact)."""
        if t < s:
            s, t = t, s
        lo = int(np.ceil(s * self.n_grid))
        hi = int(np.floor(t * self.n_grid))
        m = min(self.at(s), self.at(t))
        if lo <= hi:
            m = min(m, float(self.values[lo : hi + 1].min()))
        return m

    def min_complement(self, s: float, t: float) -> float:
        """Minimum over [0, s] union [t, 1]."""
        if t < s:
            s, t = t, s
        return min(self.min_on(0.0, s), self.min_on(t, 1.0))


def tree_distance(g: EncodedMetric, s: float, t: float) -> float:
    """d_g(s, t) = g(s) + g(t) - 2 min_{[s, t]} g (symmetric pseudo-metric)."""
    return g.at(s) + g.at(t) - 2.0 * g.min_on(s, t)


def belt_distance(g: EncodedMetric, s: float, t: float) -> float:
    """D_g(s, t) = g(s) + g(t) - 2 max(min_[s,t] g, min_complement g) <= d_g."""
    return g.at(s) + g.at(t) - 2.0 * max(g.min_on(s, t), g.min_complement(s, t))


# -- cactus bounds --------------------------------------------------------------


def _ancestor_label_mins(lf) -> np.ndarray:
    """min label over the weak ancestral line of each vertex, within its tree."""
    f = lf.forest
    lab = lf.label
    out = np.empty(f.upsilon, dtype=np.int64)
    par = f.parent
    for j in range(f.upsilon):
        p = par[j]
        out[j] = lab[j] if p < 0 else min(lab[j], out[p])
    return out


def check_cactus(pm: PointedMap, lf, pairs, distances=None) -> dict:
    """Evaluate both cactus bounds on the given lexicographic index pairs.

    Upper bound: d <= L(i) + L(j) + 2 - 2 max(min over [i, j], min over [j, i])
    with plain cyclic index intervals over the forest vertices.  Lower bound:
    d >= L(i) + L(j) - 2 max over the two ancestral intervals (ancestors of
    either endpoint, truncated at the last common ancestor on the geodesic
    side, plus the roots of the trees between / not between them).  ``i = j``
    and same-tree pairs are resolved by this reading and counted in the
    report rather than silently assumed.
    """
    f = lf.forest
    lab = lf.label
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if distances is None:
        srcs, inv = np.unique(pm.phi[pairs[:, 0]], return_inverse=True)
        table = bfs_distances(pm.hmap, srcs)
        dvals = table[inv, pm.phi[pairs[:, 1]]]
    else:
        dvals = np.asarray(distances)

    pref = np.minimum.accumulate(lab)
    suff = np.minimum.accumulate(lab[::-1])[::-1]
    anc_min = _ancestor_label_mins(lf)
    depth = f.depth()
    parent = f.parent
    tree = f.tree_id
    root_lab = lab[f.roots()]
    root_pref = np.minimum.accumulate(root_lab)
    root_suff = np.minimum.accumulate(root_lab[::-1])[::-1]
    all_roots_min = int(root_lab.min())

    def interval_min(a: int, b: int) -> int:
        if a <= b:
            return int(lab[a : b + 1].min())
        return int(min(suff[a], pref[b]))

    def geodesic_min_same_tree(a: int, b: int) -> int:
        # min label along the tree geodesic a -> b, excluding the meet vertex
        # (the last common ancestor); the sharp reading, tight on siblings
        if a == b:
            return int(lab[a])
        chain = {a, b}
        while depth[a] > depth[b]:
            a = int(parent[a])
            chain.add(a)
        while depth[b] > depth[a]:
            b = int(parent[b])
            chain.add(b)
        while a != b:
            a, b = int(parent[a]), int(parent[b])
            chain.add(a)
            chain.add(b)
        chain.discard(a)  # a == b == meet vertex
        return int(min(lab[k] for k in chain))

    n_flagged = 0
    upper_ok = lower_ok = 0
    viol = []
    for (i, j), dv in zip(pairs, dvals):
        i, j = (int(i), int(j)) if i <= j else (int(j), int(i))
        li, lj = int(lab[i]), int(lab[j])
        upper = li + lj + 2 - 2 * max(interval_min(i, j), interval_min(j, i))
        ti, tj = int(tree[i]), int(tree[j])
        base = min(int(anc_min[i]), int(anc_min[j]))
        if ti == tj:
            n_flagged += 1
            m_arc1 = geodesic_min_same_tree(i, j)
            m_arc2 = min(base, all_roots_min)
        else:
            m_arc1 = base
            if tj - ti >= 2:
                m_arc1 = min(m_arc1, int(root_lab[ti + 1 : tj].min()))
            m_arc2 = base
            if ti > 0:
                m_arc2 = min(m_arc2, int(root_pref[ti - 1]))
            if tj + 1 < f.rho:
                m_arc2 = min(m_arc2, int(root_suff[tj + 1]))
        lower = li + lj - 2 * max(m_arc1, m_arc2)
        ok_u = dv <= upper
        ok_l = dv >= lower
        upper_ok += ok_u
        lower_ok += ok_l
        if not (ok_u and ok_l):
            viol.append({"i": i, "j": j, "d": int(dv), "lower": int(lower), "upper": int(upper)})
    return {
        "pairs": int(len(pairs)),
        "upper_ok": int(upper_ok),
        "lower_ok": int(lower_ok),
        "flagged_same_tree_or_equal": int(n_flagged),
        "violations": viol[:20],
        "pass": not viol,
    }


# -- correspondences -------------------------------------------------------------


def distortion(corr, dX: np.ndarray, dY: np.ndarray) -> float:
    """sup over pairs of pairs in the correspondence of |dX - dY|.

    ``corr`` is a sequence of index pairs (x, y); it must cover both index
    sets.  O(len(corr)^2).
    """
    corr = np.asarray(corr, dtype=np.int64)
    dX = np.asarray(dX, dtype=float)
    dY = np.asarray(dY, dtype=float)
    if set(corr[:, 0].tolist()) != set(range(dX.shape[0])):
        raise ValueError("correspondence does not cover the first space")
    if set(corr[:, 1].tolist()) != set(range(dY.shape[0])):
        raise ValueError("correspondence does not cover the second space")
    a = dX[np.ix_(corr[:, 0], corr[:, 0])]
    b = dY[np.ix_(corr[:, 1], corr[:, 1])]
    return float(np.abs(a - b).max())


# -- distributional identity -----------------------------------------------------


def rerooting_identity_test(sampler, reps: int, rng: np.random.Generator, pairs_per_map: int = 1) -> dict:
    """Two-sample KS test of d(X, Y) =law= d(star, Y) on uniform pointed maps.

    ``sampler(rng)`` must return a uniform pointed map; X and Y are uniform
    over all vertices, so that (star, X, Y) are exchangeable and the identity
    is exact in distribution at every size.  Returns a JSON-ready KS report.
    """
    d_xy = []
    d_sy = []
    n_maps = max(1, reps // pairs_per_map)
    for _ in range(n_maps):
        pm = sampler(rng)
        h = pm.hmap
        nv = h.n_vertices
        for _ in range(pairs_per_map):
            x, y = rng.integers(0, nv, size=2)
            d = bfs_distances(h, [int(x), pm.star])
            d_xy.append(int(d[0, int(y)]))
            d_sy.append(int(d[1, int(y)]))
    stat = ks_2samp(d_xy, d_sy)
    return {
        "statistic": float(stat.statistic),
        "pvalue": float(stat.pvalue),
        "n1": len(d_xy),
        "n2": len(d_sy),
    }


def ks_report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, separators=(",", ":"))


def distance_csv(rows) -> str:
    """CSV rows (i, j, d, scaled_d)."""
    lines = ["i,j,d,scaled_d"]
    lines += [f"{int(i)},{int(j)},{int(d)},{sd!r}" for i, j, d, sd in rows]
    return "\n".join(lines) + "\n"
