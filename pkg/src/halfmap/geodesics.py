"""Geodesic rays and their boundary intersection sets.

Rays are traced on a window map through the successor structure: the
maximal (leftmost) ray iterates successors of the start vertex's leftmost
corner, the minimal (rightmost) ray re-anchors at the rightmost corner of
each visited vertex, and random proper rays pick a uniform corner at every
step. Labels drop by exactly one per step, which both certifies properness
and (with the one-Lipschitz label bound) makes every traced path a geodesic
of the infinite map.

Boundary hit sets come in two independent flavours that must agree window
by window: `intersections_by_labels` uses the per-excursion label deficits
of the bridge grafts, `intersections_by_tracing` walks the actual ray and
tests membership in the boundary identification tables.

A window's vertex ids are stable under *right* extension only, so callers
extend left (for left-boundary tables) before building a map and let the
tracing helpers grow the window rightward on demand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bdg_map import MapGraph, build_map
from .errors import CapExceeded, Unresolved
from .treed_bridge import TreedBridgeWindow


@dataclass(frozen=True)
class GeodesicRay:
    kind: str
    start_vertex: int
    vertices: tuple
    corners: tuple
    labels: tuple

    def __len__(self):
        return len(self.vertices) - 1

    def validate_proper(self):
        for i in range(1, len(self.labels)):
            assert self.labels[i] == self.labels[i - 1] - 1, "ray must be proper"


@dataclass(frozen=True)
class IntersectionRecord:
    """Hit-time sets of one ray (or of the label criterion) up to a horizon."""

    r_plus: frozenset
    r_minus: frozenset
    horizon: int
    method: str

    def gaps(self, side="plus"):
        times = sorted(self.r_plus if side == "plus" else self.r_minus)
        return [b - a for a, b in zip(times, times[1:])]


class WindowMapContext:
    """A map over a window that can grow rightward on demand; rebuilds keep
    vertex ids stable because grafts are only appended on the right."""

    def __init__(self, w: TreedBridgeWindow, core=None, max_extend=None):
        self.w = w
        self.core = core if core is not None else (w.lo, w.hi)
        self.max_extend = max_extend if max_extend is not None else w.step_budget
        self.grown = 0
        self.map = build_map(w, self.core, max_extend=self.max_extend)

    def grow(self):
        chunk = max(64, self.w.hi - self.w.lo)
        if self.grown + chunk > self.max_extend:
            raise CapExceeded(self.max_extend, "steps")
        self.w.extend_right(chunk)
        self.grown += chunk
        self.map = build_map(self.w, self.core, auto_extend=False)

    def root_vertex(self):
        v = self.map.phi.get(0)
        if v is None:
            raise Unresolved(pending=("phi", 0))
        return v


def _trace(ctx: WindowMapContext, start, n_steps, pick_corner, kind,
           reset=None) -> GeodesicRay:
    """Shared ray tracer; pick_corner(cs, vertex, step_corner) chooses the
    corner whose successor defines the next step. Grows the window and
    restarts when a successor is unresolved; `reset` reinitializes any
    per-attempt state (e.g. the corner-choice stream) so the returned ray
    does not depend on how many restarts happened."""
    while True:
        cs = ctx.map.cs
        if reset is not None:
            reset()
        try:
            v = start if start is not None else ctx.root_vertex()
            vertices = [v]
            corners = []
            labels = [int(cs.v_label[v])]
            chain_corner = None
            for _ in range(n_steps):
                c = pick_corner(cs, vertices[-1], chain_corner)
                s = int(cs.succ[c])
                if s < 0:
                    raise Unresolved(pending=("successor", c))
                corners.append(s)
                chain_corner = s
                vertices.append(int(cs.owner[s]))
                labels.append(int(cs.label[s]))
            ray = GeodesicRay(kind, vertices[0], tuple(vertices), tuple(corners),
                              tuple(labels))
            ray.validate_proper()
            return ray
        except Unresolved:
            ctx.grow()


def maximal_geodesic(ctx: WindowMapContext, v=None, n_steps=32) -> GeodesicRay:
    """Iterated successors of the leftmost corner of the start vertex."""

    def pick(cs, vertex, chain_corner):
        if chain_corner is None:
            return int(cs.v_first_corner[vertex])
        return chain_corner  # keep iterating successors of the chain corner

    return _trace(ctx, v, n_steps, pick, "maximal")


def minimal_geodesic(ctx: WindowMapContext, v=None, n_steps=32) -> GeodesicRay:
    """Successor of the rightmost corner of each visited vertex."""

    def pick(cs, vertex, chain_corner):
        return int(cs.v_last_corner[vertex])

    return _trace(ctx, v, n_steps, pick, "minimal")


def random_proper_geodesic(ctx: WindowMapContext, stream, v=None,
                           n_steps=32) -> GeodesicRay:
    """Uniformly chosen corner of the current vertex at every step.
    `stream` is a StreamHandle; the corner-choice generator restarts from it
    on every tracing attempt, so window growth cannot shift the draw."""
    state = {}

    def reset():
        state["rng"] = stream.stream()

    def pick(cs, vertex, chain_corner):
        corners = cs.corners_of_vertex(vertex)
        return int(corners[state["rng"].integers(0, len(corners))])

    return _trace(ctx, v, n_steps, pick, "random-proper", reset=reset)


# ---------------------------------------------------------------------------
# intersection sets
# ---------------------------------------------------------------------------


def intersections_by_labels(w: TreedBridgeWindow, horizon: int) -> IntersectionRecord:
    """Hit sets of the maximal ray from the label deficits alone:
    i is a right hit iff j + delta_j < i for every j < i, and the left
    analog with delta'. Auto-extends the window through the hitting times;
    CapExceeded propagates with the window's truncation tally."""
    r_plus, r_minus = {0}, {0}
    run_max = 0
    for i in range(1, horizon + 1):
        run_max = max(run_max, (i - 1) + w.delta(i - 1))
        if run_max < i:
            r_plus.add(i)
    run_max = 0
    for i in range(1, horizon + 1):
        run_max = max(run_max, (i - 1) + w.delta_prime(i - 1))
        if run_max < i:
            r_minus.add(i)
    return IntersectionRecord(frozenset(r_plus), frozenset(r_minus), horizon, "labels")


def intersections_by_tracing(ctx: WindowMapContext, horizon: int,
                             kind="maximal") -> IntersectionRecord:
    """Trace the ray and test raw membership in the boundary tables."""
    if kind == "maximal":
        ray = maximal_geodesic(ctx, None, horizon)
    elif kind == "minimal":
        ray = minimal_geodesic(ctx, None, horizon)
    else:
        raise ValueError(kind)
    right = ctx.map.boundary_right()
    left = ctx.map.boundary_left()
    r_plus = frozenset(i for i, v in enumerate(ray.vertices) if v in right)
    r_minus = frozenset(i for i, v in enumerate(ray.vertices) if v in left)
    return IntersectionRecord(r_plus, r_minus, horizon, f"tracing-{kind}")


def ray_boundary_hits(ctx: WindowMapContext, ray: GeodesicRay) -> frozenset:
    right = ctx.map.boundary_right()
    left = ctx.map.boundary_left()
    return frozenset(
        i for i, v in enumerate(ray.vertices) if v in right or v in left
    )


def sandwich_check(ctx: WindowMapContext, ray: GeodesicRay,
                   labels_rec: IntersectionRecord,
                   min_rec: IntersectionRecord) -> dict:
    """Verify R+ u R-_min  subseteq  hits(ray)  subseteq  R+_min u R- on the
    common horizon. Report-only; violations come back with the window seed."""
    horizon = min(labels_rec.horizon, min_rec.horizon, len(ray))
    hits = ray_boundary_hits(ctx, ray)
    lower = {i for i in (labels_rec.r_plus | min_rec.r_minus) if i <= horizon}
    upper = labels_rec.r_minus | min_rec.r_plus
    missing = sorted(i for i in lower if i not in hits)
    excess = sorted(i for i in hits if i <= horizon and i not in upper)
    return {
        "horizon": horizon,
        "violations_lower": missing,
        "violations_upper": excess,
        "ok": not missing and not excess,
        "entropy": ctx.w.stream.entropy,
        "key": list(ctx.w.stream.key),
    }
