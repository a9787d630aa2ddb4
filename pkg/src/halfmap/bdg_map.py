"""Corner sequences, successor arcs, and window map assembly.

The plane representation of a treed-bridge window lists, in left-to-right
contour order, every corner of every graft. Real corners (labeled vertices)
each send one arc to their successor, the next real corner to the right
whose value is one lower. In the triangular model, flagged vertices emit one
arc from each of their two corners to the next real corner with the *same*
value; the two arcs are a single edge of the final map and the flags are
erased together with the face vertices.

Arcs nest like parentheses, because corner values along the full contour
never drop by more than one per corner and only drop after a real corner.
That nesting yields the planar rotation system used for face walks: within
a corner, sweeping from its left bounding edge to its right one, incoming
arc ends appear ordered from nearest origin to farthest, followed by the
corner's outgoing arc.

Everything here works on a finite window of the infinite object, so every
query answers either a value or Unresolved; `build_map` extends the window
rightward until the requested core is fully resolved and reports the core.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field

import numpy as np

from . import labeled_trees, mobiles
from .errors import NoAnchor, Unresolved
from .treed_bridge import LAW_QUAD, LAW_TRI, TreedBridgeWindow

CORNER_REAL = 0
CORNER_FLAG = 1


def _walk(children, visit):
    """Iterative contour walk: visit(v) fires once per corner of v (arrival
    plus one return per child)."""
    stack = [(0, 0)]
    while stack:
        v, ci = stack.pop()
        visit(v)
        kids = children[v]
        if ci < len(kids):
            stack.append((v, ci + 1))
            stack.append((kids[ci], 0))


@dataclass
class CornerSequence:
    """Flat contour-ordered corner arrays for one window, with vertex and
    successor tables. Corner index = position in contour order."""

    law: str
    owner: np.ndarray  # vertex id for real corners, flag id for flag corners
    label: np.ndarray
    kind: np.ndarray
    pos: np.ndarray  # graft position the corner lives above
    succ: np.ndarray  # -1 where unresolved inside this window
    first_of_label: np.ndarray  # real corners that could receive arcs from beyond
    v_label: np.ndarray
    v_pos: np.ndarray
    v_first_corner: np.ndarray
    v_last_corner: np.ndarray
    root_vertex_of: dict
    corner_range_of: dict
    flag_corners: list  # per flag id, [left corner, right corner]
    anchor: int

    @property
    def n_corners(self):
        return len(self.label)

    @property
    def n_vertices(self):
        return len(self.v_label)

    def corners_of_vertex(self, v):
        first, last = self.v_first_corner[v], self.v_last_corner[v]
        return [k for k in range(first, last + 1) if self.kind[k] == CORNER_REAL
                and self.owner[k] == v]


def build_corner_sequence(w: TreedBridgeWindow, require_anchor=True) -> CornerSequence:
    """Contour-order corners of all grafts in [w.lo, w.hi); anchor is the
    leftmost real corner with label 0 above a nonnegative position."""
    owners, vals, kinds, poss = [], [], [], []
    v_label, v_pos, v_first, v_last = [], [], [], []
    root_vertex_of, corner_range_of = {}, {}
    flag_corners = []

    for p in w.graft_positions(w.lo, w.hi):
        g = w.grafts[p]
        cstart = len(vals)
        if w.law == LAW_QUAD:
            base = len(v_label)
            for u in range(g.tree.n_nodes):
                v_label.append(g.labels[u])
                v_pos.append(p)
                v_first.append(-1)
                v_last.append(-1)

            def visit(u, base=base, g=g, p=p):
                vid = base + u
                k = len(vals)
                owners.append(vid)
                vals.append(g.labels[u])
                kinds.append(CORNER_REAL)
                poss.append(p)
                if v_first[vid] < 0:
                    v_first[vid] = k
                v_last[vid] = k

            _walk(g.tree.children, visit)
            root_vertex_of[p] = base
        else:
            vid_of = {}
            fid_of = {}
            for u in range(g.n_nodes):
                if g.kinds[u] == mobiles.KIND_LABELED:
                    vid_of[u] = len(v_label)
                    v_label.append(g.values[u])
                    v_pos.append(p)
                    v_first.append(-1)
                    v_last.append(-1)
                elif g.kinds[u] == mobiles.KIND_FLAG:
                    fid_of[u] = len(flag_corners)
                    flag_corners.append([])

            def visit(u, g=g, p=p, vid_of=vid_of, fid_of=fid_of):
                ku = g.kinds[u]
                if ku == mobiles.KIND_FACE:
                    return
                k = len(vals)
                if ku == mobiles.KIND_LABELED:
                    vid = vid_of[u]
                    owners.append(vid)
                    vals.append(g.values[u])
                    kinds.append(CORNER_REAL)
                    if v_first[vid] < 0:
                        v_first[vid] = k
                    v_last[vid] = k
                else:
                    fid = fid_of[u]
                    owners.append(fid)
                    vals.append(g.values[u])
                    kinds.append(CORNER_FLAG)
                    flag_corners[fid].append(k)
                poss.append(p)

            _walk(g.children, visit)
            if g.kinds[0] == mobiles.KIND_LABELED:
                root_vertex_of[p] = vid_of[0]
        corner_range_of[p] = (cstart, len(vals))

    assert all(len(pair) == 2 for pair in flag_corners)

    n = len(vals)
    label = np.asarray(vals, dtype=np.int64)
    kind = np.asarray(kinds, dtype=np.int8)
    succ = np.full(n, -1, dtype=np.int64)
    next_real = {}
    for k in range(n - 1, -1, -1):
        x = int(label[k])
        if kind[k] == CORNER_REAL:
            succ[k] = next_real.get(x - 1, -1)
            next_real[x] = k
        else:
            succ[k] = next_real.get(x, -1)

    first_of = np.zeros(n, dtype=bool)
    seen = set()
    for k in range(n):
        if kind[k] == CORNER_REAL:
            x = int(label[k])
            if x not in seen:
                first_of[k] = True
                seen.add(x)

    anchor = -1
    for k in range(n):
        if kind[k] == CORNER_REAL and label[k] == 0 and poss[k] >= 0:
            anchor = k
            break
    if anchor < 0 and require_anchor:
        raise NoAnchor()

    return CornerSequence(
        law=w.law,
        owner=np.asarray(owners, dtype=np.int64),
        label=label,
        kind=kind,
        pos=np.asarray(poss, dtype=np.int64),
        succ=succ,
        first_of_label=first_of,
        v_label=np.asarray(v_label, dtype=np.int64),
        v_pos=np.asarray(v_pos, dtype=np.int64),
        v_first_corner=np.asarray(v_first, dtype=np.int64),
        v_last_corner=np.asarray(v_last, dtype=np.int64),
        root_vertex_of=root_vertex_of,
        corner_range_of=corner_range_of,
        flag_corners=flag_corners,
        anchor=anchor,
    )


def successor(cs: CornerSequence, i: int) -> int:
    """Index of the first corner right of i whose value is value(i)-1 (for
    real corners) or value(i) (for flag corners, which target real corners)."""
    s = int(cs.succ[i])
    if s < 0:
        raise Unresolved(pending=("successor", i))
    return s


@dataclass
class MapGraph:
    """Assembled window map: vertices are real vertices of the grafts, edges
    are successor arcs plus merged flag edges. Rotations follow the planar
    nesting order, so face walks are exact on rotation-complete vertices."""

    law: str
    cs: CornerSequence
    edges: list  # (u, v, corner_u, corner_v, tag)
    rotation: list  # per vertex, list of dart ids (dart 2e/2e+1 = u/v end)
    complete: np.ndarray
    phi: dict  # window index -> vertex id or None
    phi_phantom: dict  # window index -> True where i carried no real root
    root_edge: tuple
    core: tuple
    window: TreedBridgeWindow

    @property
    def n_vertices(self):
        return self.cs.n_vertices

    @property
    def labels(self):
        return self.cs.v_label

    def dart_tail(self, d):
        u, v = self.edges[d // 2][0], self.edges[d // 2][1]
        return u if d % 2 == 0 else v

    def dart_head(self, d):
        u, v = self.edges[d // 2][0], self.edges[d // 2][1]
        return v if d % 2 == 0 else u

    def adjacency(self):
        adj = [[] for _ in range(self.n_vertices)]
        for u, v, *_ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def bfs_distances(self, source, cutoff=None):
        dist = {source: 0}
        adj = self.adjacency()
        q = deque([source])
        while q:
            x = q.popleft()
            if cutoff is not None and dist[x] >= cutoff:
                continue
            for y in adj[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    q.append(y)
        return dist

    # -- faces ---------------------------------------------------------------

    def _dart_rotation_index(self):
        idx = {}
        for v, rot in enumerate(self.rotation):
            for j, d in enumerate(rot):
                idx[d] = (v, j)
        return idx

    def face_orbits(self):
        """Orbits of d -> rotation-successor of twin(d), restricted to darts
        whose orbit touches only rotation-complete vertices."""
        idx = self._dart_rotation_index()
        seen = set()
        faces = []
        for d0 in idx:
            if d0 in seen:
                continue
            orbit = []
            d = d0
            ok = True
            while True:
                orbit.append(d)
                seen.add(d)
                if not self.complete[self.dart_tail(d)]:
                    ok = False
                t = d ^ 1
                v, j = idx.get(t, (None, None))
                if v is None or not self.complete[v]:
                    ok = False
                    break
                rot = self.rotation[v]
                d = rot[(j + 1) % len(rot)]
                if d == d0:
                    break
                if d in seen:
                    ok = False  # merged into an earlier partial orbit
                    break
            if ok:
                faces.append(orbit)
        return faces

    def face_census(self) -> Counter:
        return Counter(len(orbit) for orbit in self.face_orbits())

    # -- boundary --------------------------------------------------------------

    def boundary_right(self):
        return {v for i, v in self.phi.items() if i >= 0 and v is not None}

    def boundary_left(self):
        return {v for i, v in self.phi.items() if i <= 0 and v is not None}

    # -- exports -----------------------------------------------------------------

    def to_json_dict(self):
        right, left = self.boundary_right(), self.boundary_left()
        return {
            "n": int(self.n_vertices),
            "edges": [[int(u), int(v)] for u, v, *_ in self.edges],
            "labels": [int(x) for x in self.labels],
            "phi": {
                str(i): (int(v) if v is not None else None)
                for i, v in sorted(self.phi.items())
            },
            "phi_phantom": {
                str(i): bool(self.phi_phantom.get(i, False))
                for i in sorted(self.phi.keys())
            },
            "root": [int(self.root_edge[0]), int(self.root_edge[1])],
            "boundary_right": sorted(int(v) for v in right),
            "boundary_left": sorted(int(v) for v in left),
            "core": list(self.core),
        }

    def to_dot(self):
        right, left = self.boundary_right(), self.boundary_left()
        lines = ["graph window_map {", "  node [shape=circle];"]
        for v in range(self.n_vertices):
            flags = []
            if v in right:
                flags.append("R")
            if v in left:
                flags.append("L")
            color = "lightblue" if flags else "white"
            lines.append(
                f'  v{v} [label="{self.labels[v]}{"/" + "".join(flags) if flags else ""}"'
                f' style=filled fillcolor={color}];'
            )
        ru, rv = self.root_edge
        root_done = False
        for u, v, *_ in self.edges:
            attr = ""
            if not root_done and {u, v} == {ru, rv}:
                attr = " [penwidth=3 color=red]"
                root_done = True
            lines.append(f"  v{u} -- v{v}{attr};")
        lines.append("}")
        return "\n".join(lines)


def _compute_phi(w: TreedBridgeWindow, cs: CornerSequence):
    """phi(i) for every window index, one right-to-left pass. phantom marks
    indices that carried no real root (up-steps, and level-steps whose
    identification goes through the scan)."""
    phi, phantom = {}, {}
    next_real = {}
    positions = sorted(cs.corner_range_of.keys(), reverse=True)
    pos_iter = iter(positions)
    pending = next(pos_iter, None)

    def absorb(p):
        start, end = cs.corner_range_of[p]
        for k in range(end - 1, start - 1, -1):
            if cs.kind[k] == CORNER_REAL:
                next_real[int(cs.label[k])] = k

    for i in range(w.hi, w.lo - 1, -1):
        while pending is not None and pending > i:
            absorb(pending)
            pending = next(pos_iter, None)
        if i < w.hi and i in cs.root_vertex_of:
            phi[i] = cs.root_vertex_of[i]
            phantom[i] = False
            continue
        if pending is not None and pending == i:
            # level-step graft: its own corners are right of vertex i
            absorb(pending)
            pending = next(pos_iter, None)
        k = next_real.get(w.bridge.value(i))
        phi[i] = None if k is None else int(cs.owner[k])
        phantom[i] = True
    return phi, phantom


def boundary_phi(m: "MapGraph", i: int) -> int:
    v = m.phi.get(i)
    if v is None:
        raise Unresolved(pending=("phi", i))
    return v


def _assemble(w: TreedBridgeWindow, cs: CornerSequence, core) -> MapGraph:
    edges = []
    corner_in = [[] for _ in range(cs.n_corners)]  # (origin corner, dart)
    corner_out = [None] * cs.n_corners
    half_flags = set()

    for k in range(cs.n_corners):
        if cs.kind[k] == CORNER_REAL and cs.succ[k] >= 0:
            e = len(edges)
            t = int(cs.succ[k])
            edges.append((int(cs.owner[k]), int(cs.owner[t]), k, t, "succ"))
            corner_out[k] = 2 * e
            corner_in[t].append((k, 2 * e + 1))
    for pair in cs.flag_corners:
        cl, cr = pair
        sl, sr = int(cs.succ[cl]), int(cs.succ[cr])
        if sl >= 0 and sr >= 0:
            e = len(edges)
            edges.append((int(cs.owner[sl]), int(cs.owner[sr]), sl, sr, "flag"))
            corner_in[sl].append((cl, 2 * e))
            corner_in[sr].append((cr, 2 * e + 1))
        else:
            for c, s in ((cl, sl), (cr, sr)):
                if s >= 0:
                    half_flags.add(int(cs.owner[s]))

    rotation = [[] for _ in range(cs.n_vertices)]
    has_unresolved = np.zeros(cs.n_vertices, dtype=bool)
    receives_first = np.zeros(cs.n_vertices, dtype=bool)
    for k in range(cs.n_corners):
        if cs.kind[k] != CORNER_REAL:
            continue
        v = int(cs.owner[k])
        ends = sorted(corner_in[k], key=lambda t: -t[0])
        rotation[v].extend(d for _, d in ends)
        if corner_out[k] is not None:
            rotation[v].append(corner_out[k])
        else:
            has_unresolved[v] = True
        if cs.first_of_label[k]:
            receives_first[v] = True

    complete = ~(has_unresolved | receives_first)
    for v in half_flags:
        complete[v] = False

    phi, phantom = _compute_phi(w, cs)
    root_edge = (phi.get(0), phi.get(1))
    return MapGraph(
        law=w.law,
        cs=cs,
        edges=edges,
        rotation=rotation,
        complete=complete,
        phi=phi,
        phi_phantom=phantom,
        root_edge=root_edge,
        core=tuple(core),
        window=w,
    )


def _core_resolved(w, cs, core) -> bool:
    c_lo, c_hi = core
    if cs.anchor < 0:
        return False
    for p in w.graft_positions(max(c_lo, w.lo), min(c_hi, w.hi)):
        start, end = cs.corner_range_of[p]
        if np.any(cs.succ[start:end] < 0):
            return False
    # phi over the core needs a real corner of the right value to the right
    next_vals = {}
    positions = sorted(cs.corner_range_of.keys())
    # cheap check: recompute phi only over the core via the shared pass
    phi, _ = _compute_phi(w, cs)
    for i in range(c_lo, c_hi + 1):
        if phi.get(i) is None:
            return False
    return True


def build_map(w: TreedBridgeWindow, core=None, auto_extend=True,
              max_extend=None) -> MapGraph:
    """Assemble the window map, extending w rightward until every corner of
    every graft inside `core` has a resolved successor and phi is resolved
    on all of core. The resolved core is recorded on the result."""
    if core is None:
        core = (w.lo, w.hi)
    if max_extend is None:
        max_extend = w.step_budget
    grown = 0
    while True:
        try:
            cs = build_corner_sequence(w)
            ok = _core_resolved(w, cs, core)
        except NoAnchor:
            ok = False
            cs = None
        if ok:
            return _assemble(w, cs, core)
        if not auto_extend:
            raise Unresolved(pending=("core", core))
        chunk = max(64, w.hi - w.lo)
        if grown + chunk > max_extend:
            raise Unresolved(pending=("extension budget", max_extend))
        w.extend_right(chunk)
        grown += chunk
