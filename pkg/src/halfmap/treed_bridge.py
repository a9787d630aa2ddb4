"""Lazy two-sided boundary walk with grafted trees or mobiles.

The bridge value at position 0 is 0; the two halves are independent walks.
Quadrangular law: +-1 steps, a critically labeled tree grafted on every
down-step. Triangular law: +-1/0 steps with the critical step law, a mobile
on every down-step and a half-mobile on every level-step.

Randomness is position-addressed (see halfmap.rng): the step across edge
{i, i+1} and the graft at position i each have their own derived stream, so
windows extended in any order from the same handle are bit-identical.

Budget overruns raise CapExceeded and are tallied on the window; callers
must treat such replicates as truncated, never resample them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import labeled_trees, mobiles
from .analytics import TRI_P_UP
from .errors import CapExceeded
from .rng import STEP, STEP_BLOCK, TREE, StreamHandle

DEFAULT_STEP_BUDGET = 1_000_000

LAW_QUAD = "quad"
LAW_TRI = "tri"


class BridgeWindow:
    """Cached bridge values over a growable window [lo, hi]."""

    def __init__(self, stream: StreamHandle, law: str):
        if law not in (LAW_QUAD, LAW_TRI):
            raise ValueError(f"unknown law {law!r}")
        self.law = law
        self.stream = stream
        self._right = [0]  # v(0), v(1), ..., v(hi)
        self._left = [0]  # v(0), v(-1), ..., v(lo)
        self._blocks = {}

    @property
    def lo(self):
        return -(len(self._left) - 1)

    @property
    def hi(self):
        return len(self._right) - 1

    def _steps_block(self, side: int, block: int) -> np.ndarray:
        key = (side, block)
        cached = self._blocks.get(key)
        if cached is None:
            rng = self.stream.stream(STEP, side, block)
            u = rng.random(STEP_BLOCK)
            if self.law == LAW_QUAD:
                cached = np.where(u < 0.5, 1, -1).astype(np.int64)
            else:
                cached = np.where(
                    u < TRI_P_UP, 1, np.where(u < 2.0 * TRI_P_UP, -1, 0)
                ).astype(np.int64)
            self._blocks[key] = cached
        return cached

    def step(self, e: int) -> int:
        """Increment across edge {e, e+1}."""
        if e >= 0:
            return int(self._steps_block(0, e // STEP_BLOCK)[e % STEP_BLOCK])
        ep = -1 - e
        return int(self._steps_block(1, ep // STEP_BLOCK)[ep % STEP_BLOCK])

    def ensure(self, lo: int, hi: int):
        while self.hi < hi:
            e = self.hi
            self._right.append(self._right[-1] + self.step(e))
        while self.lo > lo:
            i = self.lo  # extend to i-1 across edge {i-1, i}
            self._left.append(self._left[-1] - self.step(i - 1))

    def value(self, i: int) -> int:
        self.ensure(min(i, 0), max(i, 0))
        return self._right[i] if i >= 0 else self._left[-i]

    def values(self, lo: int, hi: int) -> np.ndarray:
        self.ensure(lo, hi)
        out = np.empty(hi - lo + 1, dtype=np.int64)
        for k, i in enumerate(range(lo, hi + 1)):
            out[k] = self._right[i] if i >= 0 else self._left[-i]
        return out

    def is_down_step(self, i: int) -> bool:
        return self.value(i + 1) == self.value(i) - 1

    def is_level_step(self, i: int) -> bool:
        return self.value(i + 1) == self.value(i)


@dataclass
class TreedBridgeWindow:
    """Bridge window plus grafts on [lo, hi-1]. Single writer during
    extension; treat as immutable once shared."""

    law: str
    stream: StreamHandle
    bridge: BridgeWindow
    lo: int
    hi: int
    node_cap: int = labeled_trees.DEFAULT_NODE_CAP
    step_budget: int = DEFAULT_STEP_BUDGET
    grafts: dict = field(default_factory=dict)
    truncations: dict = field(default_factory=lambda: {"nodes": 0, "steps": 0})
    _min_labels: dict = field(default_factory=dict)
    _hits_right: dict = field(default_factory=dict)
    _hits_left: dict = field(default_factory=dict)

    # -- grafting ----------------------------------------------------------

    def _graft_kind(self, i: int):
        if self.bridge.is_down_step(i):
            return "down"
        if self.law == LAW_TRI and self.bridge.is_level_step(i):
            return "level"
        return None

    def _materialize(self, i: int):
        if i in self.grafts:
            return
        kind = self._graft_kind(i)
        if kind is None:
            return
        rng = self.stream.stream(TREE, i)
        root_val = self.bridge.value(i)
        try:
            if self.law == LAW_QUAD:
                g = labeled_trees.sample_labeled_tree(rng, root_val, self.node_cap)
            elif kind == "down":
                g = mobiles.sample_mobile(rng, root_val, self.node_cap)
            else:
                g = mobiles.sample_half_mobile(rng, root_val, self.node_cap)
        except CapExceeded:
            self.truncations["nodes"] += 1
            raise
        self.grafts[i] = g

    def _graft_range(self, lo: int, hi: int):
        for i in range(lo, hi):
            self._materialize(i)

    def min_graft_label(self, i: int) -> int:
        m = self._min_labels.get(i)
        if m is None:
            g = self.grafts[i]
            if self.law == LAW_QUAD:
                m = labeled_trees.min_label(g)
            else:
                m = mobiles.min_label(g)
            self._min_labels[i] = m
        return m

    def graft_positions(self, lo: int, hi: int):
        """Grafted positions in [lo, hi), ascending."""
        return [i for i in range(lo, hi) if i in self.grafts]

    # -- extension ---------------------------------------------------------

    def extend_right(self, k: int):
        if k < 0:
            raise ValueError("k must be >= 0")
        new_hi = self.hi + k
        self.bridge.ensure(self.lo, new_hi)
        self._graft_range(self.hi, new_hi)
        self.hi = new_hi
        return self

    def extend_left(self, k: int):
        if k < 0:
            raise ValueError("k must be >= 0")
        new_lo = self.lo - k
        self.bridge.ensure(new_lo, self.hi)
        self._graft_range(new_lo, self.lo)
        self.lo = new_lo
        return self

    # -- hitting times and label deficits -----------------------------------

    def hitting_time(self, j: int, side: str = "right") -> int:
        """First index m >= 0 (resp. last m <= 0) with value(m) = -j.
        Auto-extends; a query inspecting more than step_budget new positions
        raises CapExceeded('steps') and is tallied."""
        if j < 0:
            raise ValueError("j must be >= 0")
        cache = self._hits_right if side == "right" else self._hits_left
        if j in cache:
            return cache[j]
        sgn = 1 if side == "right" else -1
        # resume the scan from the deepest cached hit
        start = 0
        for jj, pos in cache.items():
            if jj < j and abs(pos) > abs(start):
                start = pos
        budget = self.step_budget
        m = start
        examined = 0
        while True:
            if self.bridge.value(m) == -j:
                cache[j] = m
                # window must own grafts up to the hit
                if sgn > 0 and m >= self.hi:
                    self.extend_right(m - self.hi + 1)
                if sgn < 0 and m <= self.lo:
                    self.extend_left(self.lo - m + 1)
                return m
            m += sgn
            examined += 1
            if examined > budget:
                self.truncations["steps"] += 1
                raise CapExceeded(budget, "steps")

    def delta(self, j: int) -> int:
        """Largest -(min graft label + j) over grafts on [H_j, H_{j+1})."""
        h0 = self.hitting_time(j, "right")
        h1 = self.hitting_time(j + 1, "right")
        best = None
        for i in self.graft_positions(h0, h1):
            val = -(self.min_graft_label(i) + j)
            best = val if best is None else max(best, val)
        assert best is not None and best >= 0, "right segment always carries a graft"
        return best

    def delta_prime(self, j: int) -> int:
        """Left-side analog over [H'_{j+1}, H'_j); empty range gives 0.
        The raw maximum can be negative (grafts rooted above the level);
        it is clamped at 0, which leaves every tail law for m >= 1 and the
        regenerative interval representation unchanged."""
        h0 = self.hitting_time(j, "left")
        h1 = self.hitting_time(j + 1, "left")
        best = 0
        for i in self.graft_positions(h1, h0):
            best = max(best, -(self.min_graft_label(i) + j))
        return best

    # -- logs ----------------------------------------------------------------

    def replicate_record(self, horizon: int = 0) -> dict:
        rec = {
            "entropy": self.stream.entropy,
            "key": list(self.stream.key),
            "law": self.law,
            "lo": self.lo,
            "hi": self.hi,
            "truncations": dict(self.truncations),
            "H": {str(j): v for j, v in sorted(self._hits_right.items())},
            "H_left": {str(j): v for j, v in sorted(self._hits_left.items())},
        }
        if horizon:
            rec["delta"] = [self.delta(j) for j in range(horizon)]
            rec["delta_prime"] = [self.delta_prime(j) for j in range(horizon)]
        return rec


def sample_window(stream: StreamHandle, lo: int, hi: int, law: str = LAW_QUAD,
                  node_cap: int = labeled_trees.DEFAULT_NODE_CAP,
                  step_budget: int = DEFAULT_STEP_BUDGET) -> TreedBridgeWindow:
    """Materialize the window [lo, hi]: bridge values and all grafts on
    [lo, hi). Requires lo <= 0 <= hi."""
    if not (lo <= 0 <= hi):
        raise ValueError("window must contain 0")
    bridge = BridgeWindow(stream, law)
    bridge.ensure(lo, hi)
    w = TreedBridgeWindow(law, stream, bridge, 0, 0,
                          node_cap=node_cap, step_budget=step_budget)
    w.extend_right(hi)
    w.extend_left(-lo)
    return w


def extend_right(w: TreedBridgeWindow, k: int) -> TreedBridgeWindow:
    return w.extend_right(k)


def extend_left(w: TreedBridgeWindow, k: int) -> TreedBridgeWindow:
    return w.extend_left(k)


def hitting_time(w: TreedBridgeWindow, j: int, side: str = "right") -> int:
    return w.hitting_time(j, side)


def delta(w: TreedBridgeWindow, j: int) -> int:
    return w.delta(j)


def delta_prime(w: TreedBridgeWindow, j: int) -> int:
    return w.delta_prime(j)


def write_ndjson(path, records):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True))
            fh.write("\n")


class ExplicitWindow:
    """Hand-specified window for oracle tests: fixed bridge values on
    [lo, hi] and a graft for every down-step (and, in the triangular law,
    every level-step). Cannot be extended."""

    class _FixedBridge:
        def __init__(self, lo, values):
            self._lo = lo
            self._values = list(values)

        def value(self, i):
            return self._values[i - self._lo]

        def is_down_step(self, i):
            return self.value(i + 1) == self.value(i) - 1

        def is_level_step(self, i):
            return self.value(i + 1) == self.value(i)

    def __init__(self, values, grafts, lo=None, law=LAW_QUAD):
        self.law = law
        self.lo = 0 if lo is None else lo
        self.hi = self.lo + len(values) - 1
        self.bridge = self._FixedBridge(self.lo, values)
        self.grafts = dict(grafts)
        self.truncations = {"nodes": 0, "steps": 0}
        self.step_budget = 1 << 30
        self.stream = StreamHandle(0)
        self._min_labels = {}
        for i in range(self.lo, self.hi):
            step_down = self.bridge.is_down_step(i)
            step_level = law == LAW_TRI and self.bridge.is_level_step(i)
            has = i in self.grafts
            assert has == (step_down or step_level), f"graft mismatch at {i}"
            if has:
                root_val = (self.grafts[i].labels[0] if law == LAW_QUAD
                            else self.grafts[i].values[0])
                assert root_val == self.bridge.value(i), f"root label at {i}"

    min_graft_label = TreedBridgeWindow.min_graft_label
    graft_positions = TreedBridgeWindow.graft_positions

    def hitting_time(self, j, side="right"):
        rng_iter = range(0, self.hi + 1) if side == "right" else range(0, self.lo - 1, -1)
        for m in rng_iter:
            if self.bridge.value(m) == -j:
                return m
        raise CapExceeded(self.hi - self.lo, "steps")

    delta = TreedBridgeWindow.delta
    delta_prime = TreedBridgeWindow.delta_prime

    def extend_right(self, k):
        raise CapExceeded(0, "steps")

    extend_left = extend_right
