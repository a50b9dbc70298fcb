"""Labelled forest -> negative pointed bipartite map, and map surgery.

The construction chains corners: list the forest vertices x_0 < ... in
lexicographic order with their labels; every vertex emits one edge toward the
next position (cyclically) whose label is one less, and the minimal-label
positions connect to the distinguished vertex.  Map vertices are the classes
of the right-most-leaf identification (labels are constant along right-most
ancestral lines because label bridges end at 0), faces correspond to internal
vertices, and the external face to the extra root.

The embedding is a half-edge structure (rotation system) recovered by a
planar sweep of the nested chord diagram; the defining properties (leaf
labels = distances to the distinguished vertex up to shift, half face
degrees = out-degrees, external degree = 2 rho) are enforced by assertions
and by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .labels import LabelledForest


class MapBuildError(ValueError):
    """Labelled forest that does not produce a consistent map."""


@dataclass
class HalfEdgeMap:
    """Rotation-system representation: 2E half-edges.

    ``twin[h]`` is the opposite half-edge, ``nxt[h]`` the next half-edge
    counterclockwise around ``origin[h]``.  Faces are the orbits of
    ``h -> nxt[twin[h]]``; ``face_left[h]`` names the face on that orbit.
    """

    twin: np.ndarray
    nxt: np.ndarray
    origin: np.ndarray
    root: int
    n_vertices: int
    external_face: int = -1
    _face_left: np.ndarray | None = field(default=None, repr=False)
    _face_degrees: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_edges(self) -> int:
        return int(self.twin.shape[0]) // 2

    def tip(self, h: int) -> int:
        return int(self.origin[self.twin[h]])

    def face_left(self) -> np.ndarray:
        if self._face_left is None:
            self._compute_faces()
        return self._face_left

    def face_degrees(self) -> np.ndarray:
        if self._face_degrees is None:
            self._compute_faces()
        return self._face_degrees

    @property
    def n_faces(self) -> int:
        return int(self.face_degrees().shape[0])

    def _compute_faces(self):
        m = self.twin.shape[0]
        face = np.full(m, -1, dtype=np.int64)
        degs = []
        fid = 0
        for h0 in range(m):
            if face[h0] >= 0:
                continue
            h = h0
            deg = 0
            while face[h] < 0:
                face[h] = fid
                deg += 1
                h = int(self.nxt[self.twin[h]])
            if h != h0:
                raise MapBuildError("face traversal did not close")
            degs.append(deg)
            fid += 1
        self._face_left = face
        self._face_degrees = np.array(degs, dtype=np.int64)

    def face_circuit(self, fid: int) -> list[int]:
        face = self.face_left()
        start = int(np.flatnonzero(face == fid)[0])
        out = [start]
        h = int(self.nxt[self.twin[start]])
        while h != start:
            out.append(h)
            h = int(self.nxt[self.twin[h]])
        return out

    def vertex_degrees(self) -> np.ndarray:
        return np.bincount(self.origin, minlength=self.n_vertices)

    def edge_array(self) -> np.ndarray:
        """(E, 2) endpoints, one row per edge (h < twin[h])."""
        hs = np.flatnonzero(np.arange(self.twin.shape[0]) < self.twin)
        return np.stack([self.origin[hs], self.origin[self.twin[hs]]], axis=1)

    def edge_list_text(self) -> str:
        return "\n".join(f"{u} {v}" for u, v in self.edge_array()) + "\n"

    def to_text(self) -> str:
        lines = [
            f"half_edges {self.twin.shape[0]}",
            f"vertices {self.n_vertices}",
            f"root {self.root}",
            "twin " + " ".join(map(str, self.twin.tolist())),
            "next " + " ".join(map(str, self.nxt.tolist())),
            "origin " + " ".join(map(str, self.origin.tolist())),
        ]
        return "\n".join(lines) + "\n"


NEGATIVE = "negative"
POSITIVE = "positive"


@dataclass
class PointedMap:
    """A rooted bipartite map with a distinguished vertex ``star``.

    ``phi`` maps every forest vertex index to its map vertex (the right-most
    leaf identification), when the map was built from a forest.
    """

    hmap: HalfEdgeMap
    star: int
    phi: np.ndarray | None = None

    def sign(self) -> str:
        from .metrics import bfs_distances

        h = self.hmap
        d = bfs_distances(h, [self.star])[0]
        o = int(h.origin[h.root])
        t = h.tip(h.root)
        if d[t] == d[o] - 1:
            return NEGATIVE
        if d[t] == d[o] + 1:
            return POSITIVE
        raise MapBuildError("root edge endpoints not at adjacent distances from star")


def rightmost_leaf_classes(lf: LabelledForest) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex class (map vertex id) of the right-most-leaf identification.

    Returns (class_of_vertex, leaf_positions): leaves numbered 0..d(0)-1 in
    lexicographic order; class_of_vertex[j] is the class of x_j.
    """
    f = lf.forest
    ups = f.upsilon
    out_deg = f.out_degree
    start, flat = f._children_index()
    rl = np.empty(ups, dtype=np.int64)
    for j in range(ups - 1, -1, -1):
        if out_deg[j] == 0:
            rl[j] = j
        else:
            rl[j] = rl[flat[start[j + 1] - 1]]  # right-most (last) child
    leaves = np.flatnonzero(out_deg == 0)
    leaf_rank = np.full(ups, -1, dtype=np.int64)
    leaf_rank[leaves] = np.arange(leaves.shape[0])
    return leaf_rank[rl], leaves


def _successor_targets(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """t[j] = next cyclic position with label[j] - 1 (or -1 for minima)."""
    ups = labels.shape[0]
    lmin = int(labels.min())
    offset = lmin
    span = int(labels.max()) - lmin + 1
    nxt_pos = np.full(span, -1, dtype=np.int64)
    t = np.full(ups, -1, dtype=np.int64)
    for idx in range(2 * ups - 1, -1, -1):
        j = idx % ups
        lam = labels[j] - offset
        if idx < ups and lam > 0:
            t[j] = nxt_pos[lam - 1]
        nxt_pos[lam] = j
    return t, lmin


def build_map(lf: LabelledForest) -> PointedMap:
    """The bijection: labelled forest -> negative pointed map.

    One edge per forest vertex; the root is the edge emitted by the last
    vertex in lexicographic order, which lies on the external face.
    """
    f = lf.forest
    ups = f.upsilon
    labels = lf.label
    cls, leaves = rightmost_leaf_classes(lf)
    if np.any(labels != labels[leaves][cls]):
        raise MapBuildError("labels not constant along right-most ancestral lines")
    n_leaf = int(leaves.shape[0])
    star = n_leaf
    t, lmin = _successor_targets(labels)

    # half-edge 2j = chord emitted at corner j; 2j+1 = its other end
    origin = np.empty(2 * ups, dtype=np.int64)
    origin[0::2] = cls
    origin[1::2] = np.where(t >= 0, cls[np.maximum(t, 0)], star)

    # planar sweep from a minimum-label corner: chords never properly cross a
    # minimum-label position, but chords seeking the minimum level may end at
    # the start corner after wrapping; those close at the very end
    m0 = int(np.argmin(labels))
    corner_ins: list[list[int]] = [[] for _ in range(ups)]
    star_list: list[int] = []
    stack: list[int] = []
    for k in range(ups):
        j = (m0 + k) % ups
        lam = labels[j]
        while stack and labels[stack[-1]] == lam + 1:
            corner_ins[j].append(2 * stack.pop() + 1)
        if lam > lmin:
            stack.append(j)
        else:
            star_list.append(2 * j + 1)
    while stack:
        src = stack.pop()
        if labels[src] != lmin + 1:
            raise MapBuildError("open chord with non-minimal target after sweep")
        corner_ins[m0].append(2 * src + 1)

    # rotation at a corner: incoming ends in pop (innermost-first) order, then
    # the outgoing chord; the star rotation runs against the walk order.
    # Calibrated on the known 16-edge example and pinned by the face-degree
    # checks in verify_euler.
    rot_lists: list[list[int]] = [[] for _ in range(n_leaf + 1)]
    for j in range(ups):
        rot_lists[cls[j]].extend(corner_ins[j])
        rot_lists[cls[j]].append(2 * j)
    rot_lists[star] = star_list[::-1]

    nxt = np.empty(2 * ups, dtype=np.int64)
    for lst in rot_lists:
        if not lst:
            raise MapBuildError("isolated map vertex")
        arr = np.array(lst, dtype=np.int64)
        nxt[arr] = np.roll(arr, -1)
    twin = np.empty(2 * ups, dtype=np.int64)
    twin[0::2] = np.arange(ups) * 2 + 1
    twin[1::2] = np.arange(ups) * 2

    root = 2 * (ups - 1)
    hmap = HalfEdgeMap(twin=twin, nxt=nxt, origin=origin, root=root, n_vertices=n_leaf + 1)
    _identify_external(hmap, lf)
    pm = PointedMap(hmap=hmap, star=star, phi=cls)
    return pm


def _identify_external(hmap: HalfEdgeMap, lf: LabelledForest):
    """Mark the external face (the extra-root face): it lies on the side of
    the root chord matching the 2 rho degree; asserted, not assumed."""
    face = hmap.face_left()
    degs = hmap.face_degrees()
    rho = lf.forest.rho
    # the external face sits on the twin side of the root chord (the root has
    # the external face on its right); calibrated on the 16-edge example
    cand = [int(face[hmap.twin[hmap.root]]), int(face[hmap.root])]
    ok = [c for c in dict.fromkeys(cand) if degs[c] == 2 * rho]
    if not ok:
        raise MapBuildError(
            f"no face of degree {2 * rho} adjacent to the root chord; got "
            f"{[int(degs[c]) for c in cand]}"
        )
    hmap.external_face = ok[0]


def verify_euler(pm: PointedMap, d) -> dict:
    """Structured report of the Euler / bijection counts for a built map."""
    from .degrees import derive_stats

    st = derive_stats(d)
    h = pm.hmap
    degs = h.face_degrees()
    inner = np.delete(degs, h.external_face)
    expected_inner = sorted(2 * k for k, c in d.counts.items() for _ in range(c))
    report = {
        "edges": (h.n_edges, st.upsilon),
        "vertices": (h.n_vertices, st.leaves + 1),
        "inner_faces": (len(inner), d.n_inner),
        "external_degree": (int(degs[h.external_face]), 2 * d.rho),
        "euler_characteristic": (h.n_vertices - h.n_edges + h.n_faces, 2),
        "inner_degrees_match": (sorted(int(x) for x in inner) == expected_inner),
    }
    report["pass"] = all(
        (v[0] == v[1]) if isinstance(v, tuple) else bool(v) for v in report.values()
    )
    return report


def external_circuit(pm: PointedMap) -> list[int]:
    """Half-edges of the external face circuit (2 rho sides)."""
    return pm.hmap.face_circuit(pm.hmap.external_face)


def reroot_to_uniform(pm: PointedMap, rng: np.random.Generator) -> PointedMap:
    """Re-root uniformly among the 2 rho boundary sides (external face kept on
    the root's right); turns the uniform negative pointed law into the uniform
    pointed law."""
    circuit = external_circuit(pm)
    h = int(pm.hmap.twin[circuit[rng.integers(len(circuit))]])
    hmap = HalfEdgeMap(
        twin=pm.hmap.twin,
        nxt=pm.hmap.nxt,
        origin=pm.hmap.origin,
        root=h,
        n_vertices=pm.hmap.n_vertices,
        external_face=pm.hmap.external_face,
    )
    hmap._face_left = pm.hmap._face_left
    hmap._face_degrees = pm.hmap._face_degrees
    return PointedMap(hmap=hmap, star=pm.star, phi=pm.phi)


def glue_degree_two(hmap: HalfEdgeMap) -> HalfEdgeMap:
    """Collapse every inner face of degree 2 to a single edge.

    Deletes one parallel edge per digon and splices the rotations; iterates
    until no inner digon remains.  Graph distances between retained vertices
    are unchanged; idempotent.
    """
    cur = hmap
    while True:
        face = cur.face_left()
        degs = cur.face_degrees()
        digons = [
            fid
            for fid in range(len(degs))
            if degs[fid] == 2 and fid != cur.external_face
        ]
        if not digons:
            return cur
        drop = np.zeros(cur.twin.shape[0], dtype=bool)
        root_e = min(cur.root, int(cur.twin[cur.root]))
        for fid in digons:
            h1, h2 = cur.face_circuit(fid)
            # delete the edge of h2 unless it carries the root
            dead = h2 if min(h2, int(cur.twin[h2])) != root_e else h1
            if drop[dead] or drop[int(cur.twin[dead])]:
                continue  # already removed via a neighbouring digon this pass
            drop[dead] = drop[int(cur.twin[dead])] = True
        cur = _remove_edges(cur, drop)


def _remove_edges(hmap: HalfEdgeMap, drop: np.ndarray) -> HalfEdgeMap:
    keep = ~drop
    if not np.any(drop):
        return hmap
    if drop[hmap.root]:
        raise MapBuildError("cannot remove the root edge")
    old_ids = np.flatnonzero(keep)
    new_id = np.full(hmap.twin.shape[0], -1, dtype=np.int64)
    new_id[old_ids] = np.arange(old_ids.shape[0])
    # rebuild rotation lists per vertex preserving cyclic order of kept ends
    m = hmap.twin.shape[0]
    visited = np.zeros(m, dtype=bool)
    new_nxt = np.empty(old_ids.shape[0], dtype=np.int64)
    for h0 in range(m):
        if visited[h0]:
            continue
        cyc = [h0]
        visited[h0] = True
        h = int(hmap.nxt[h0])
        while h != h0:
            visited[h] = True
            cyc.append(h)
            h = int(hmap.nxt[h])
        kept = [h for h in cyc if keep[h]]
        for a, b in zip(kept, kept[1:] + kept[:1]):
            new_nxt[new_id[a]] = new_id[b]
    out = HalfEdgeMap(
        twin=new_id[hmap.twin[old_ids]],
        nxt=new_nxt,
        origin=hmap.origin[old_ids],
        root=int(new_id[hmap.root]),
        n_vertices=hmap.n_vertices,
    )
    # external face: re-identify as the face left of the (kept) root side
    ext_h = None
    if hmap.external_face >= 0:
        face = hmap.face_left()
        for h in np.flatnonzero(face == hmap.external_face):
            if keep[h]:
                ext_h = int(new_id[h])
                break
    if ext_h is not None:
        out.external_face = int(out.face_left()[ext_h])
    return out


def map_fingerprint(pm: PointedMap) -> tuple:
    """Canonical encoding of a rooted pointed map (for injectivity tests)."""
    h = pm.hmap
    m = h.twin.shape[0]
    canon = np.full(m, -1, dtype=np.int64)
    order: list[int] = []

    def visit(h0: int):
        if canon[h0] < 0:
            canon[h0] = len(order)
            order.append(h0)

    visit(h.root)
    i = 0
    while i < len(order):
        cur = order[i]
        visit(int(h.nxt[cur]))
        visit(int(h.twin[cur]))
        i += 1
    nxt_c = tuple(int(canon[h.nxt[x]]) for x in order)
    twin_c = tuple(int(canon[h.twin[x]]) for x in order)
    star_hs = np.flatnonzero(h.origin == pm.star)
    star_c = min(int(canon[x]) for x in star_hs) if len(star_hs) else -1
    return (nxt_c, twin_c, star_c)
