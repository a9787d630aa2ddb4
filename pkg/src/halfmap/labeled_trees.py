"""Critically labeled plane trees.

Sampling and label statistics for plane trees with geometric(1/2) offspring
and i.i.d. uniform {-1,0,+1} edge label increments, the building block
grafted on the down-steps of the quadrangular boundary walk.

`oracle_h` computes P(min label > -m) by solving the offspring fixed-point
system numerically with a free far boundary. It never touches the
closed form for that probability, so downstream comparisons against the
closed form are genuine checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytics import newton_banded
from .errors import CapExceeded

DEFAULT_NODE_CAP = 10_000_000


@dataclass(frozen=True)
class PlaneTree:
    """Rooted ordered tree. Node 0 is the root; parent[0] == -1; children
    lists are in planar (left-to-right) order. Nodes are ordered so that a
    parent always precedes its children."""

    parent: tuple
    children: tuple

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    @property
    def n_edges(self) -> int:
        return len(self.parent) - 1

    def validate(self):
        assert self.parent[0] == -1
        seen = [0] * self.n_nodes
        for v, kids in enumerate(self.children):
            for u in kids:
                assert self.parent[u] == v
                seen[u] += 1
        assert all(s == 1 for s in seen[1:]) and seen[0] == 0
        assert all(self.parent[u] < u for u in range(1, self.n_nodes))


@dataclass(frozen=True)
class WellLabeledTree:
    """A plane tree with integer labels changing by at most 1 along edges."""

    tree: PlaneTree
    labels: tuple

    @property
    def root_label(self) -> int:
        return self.labels[0]

    def validate(self):
        self.tree.validate()
        for u in range(1, self.tree.n_nodes):
            assert abs(self.labels[u] - self.labels[self.tree.parent[u]]) <= 1

    def to_json_dict(self):
        return {"parents": list(self.tree.parent), "labels": list(self.labels)}


def sample_gw_tree(rng: np.random.Generator, node_cap=DEFAULT_NODE_CAP) -> PlaneTree:
    """Sample a plane tree with geometric(1/2) offspring: each node has k
    children with probability 2^-(k+1). Depth-first with an explicit stack;
    raises CapExceeded when the node count passes node_cap (the replicate
    must then be discarded and tallied, not resampled)."""
    parent = [-1]
    children = [()]
    stack = [0]
    while stack:
        v = stack.pop()
        k = int(rng.geometric(0.5)) - 1
        if k:
            base = len(parent)
            if base + k > node_cap:
                raise CapExceeded(node_cap)
            kids = tuple(range(base, base + k))
            parent.extend([v] * k)
            children.extend([()] * k)
            children[v] = kids
            stack.extend(reversed(kids))
    return PlaneTree(tuple(parent), tuple(children))


def label_uniform(tree: PlaneTree, root_label: int, rng: np.random.Generator) -> WellLabeledTree:
    """Attach labels: root gets root_label, each edge an independent uniform
    {-1,0,+1} increment. Parents precede children, so one forward pass."""
    n = tree.n_nodes
    labels = np.empty(n, dtype=np.int64)
    labels[0] = root_label
    if n > 1:
        inc = rng.integers(-1, 2, size=n - 1)
        for u in range(1, n):
            labels[u] = labels[tree.parent[u]] + inc[u - 1]
    return WellLabeledTree(tree, tuple(int(x) for x in labels))


def sample_labeled_tree(rng: np.random.Generator, root_label: int,
                        node_cap=DEFAULT_NODE_CAP) -> WellLabeledTree:
    return label_uniform(sample_gw_tree(rng, node_cap), root_label, rng)


def min_label(t: WellLabeledTree) -> int:
    return min(t.labels)


# ---------------------------------------------------------------------------
# independent oracle for P(min label > -m)
# ---------------------------------------------------------------------------


def _h_residual(h, M):
    """Residual of h_m (2 - (h_{m-1}+h_m+h_{m+1})/3) = 1 on m = 1..M with
    h_0 = 0 and the free boundary h_{M+1} = h_M, plus its tridiagonal
    Jacobian in solve_banded layout."""
    full = np.concatenate(([0.0], h))
    up = np.concatenate((full[2:], [h[-1]]))  # h_{m+1}, folded at the top
    dn = full[:-1]  # h_{m-1}
    f = h * (2.0 - (dn + h + up) / 3.0) - 1.0

    diag = 2.0 - (dn + 2.0 * h + up) / 3.0
    diag[-1] -= h[-1] / 3.0  # free boundary folds h_{M+1} into h_M
    lower = -h[1:] / 3.0  # dF_m/dh_{m-1}, m = 2..M
    upper = -h[:-1] / 3.0  # dF_m/dh_{m+1}, m = 1..M-1
    M_ = len(h)
    bands = np.zeros((3, M_))
    bands[0, 1:] = upper
    bands[1, :] = diag
    bands[2, :-1] = lower
    return f, bands


def oracle_h_table(M: int, tol=1e-12, max_iter=80) -> np.ndarray:
    """h(0..M) where h(m) = P(min label > -m) for root label 0, solved from
    the offspring decomposition h(m) = 1/(2 - (h(m-1)+h(m)+h(m+1))/3) with
    h(0)=0 and free boundary h(M+1)=h(M). Newton iteration with damping;
    insensitivity to M is checked by doubling M in the tests."""
    h0 = np.arange(1, M + 1) / np.arange(2, M + 2)  # neutral increasing init
    h = newton_banded(lambda x: _h_residual(x, M), h0, tol=tol, max_iter=max_iter)
    return np.concatenate(([0.0], h))


def oracle_h(m: int, max_iter=80, tol=1e-12, M=None) -> float:
    """P(min label > -m), computed without the closed form. The working
    grid extends to M = max(10 m, 1000) so the free boundary is far."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return 0.0
    if M is None:
        M = max(10 * m, 1000)
    return float(oracle_h_table(M, tol=tol, max_iter=max_iter)[m])


# ---------------------------------------------------------------------------
# enumeration helpers (test oracles)
# ---------------------------------------------------------------------------


def catalan(n: int) -> int:
    import math

    return math.comb(2 * n, n) // (n + 1)


def tree_size_pmf(n: int) -> float:
    """P(|tree| has n edges) = Catalan(n) 2^-(2n+1)."""
    return catalan(n) * 2.0 ** -(2 * n + 1)


def enumerate_plane_trees(max_edges: int):
    """Yield all plane trees with up to max_edges edges as PlaneTree objects
    (Catalan(n) trees of each edge count n)."""

    def shapes(n_edges):
        # all ordered forests with n_edges edges total, as nested tuples
        if n_edges == 0:
            yield ()
            return
        # first subtree uses k edges (k-1 inside + 1 connecting), rest n-k
        for k in range(1, n_edges + 1):
            for first in shapes(k - 1):
                for rest in shapes(n_edges - k):
                    yield (first,) + rest

    def to_tree(shape):
        parent = [-1]
        children = [()]

        def build(v, kids_shape):
            ids = []
            for sub in kids_shape:
                u = len(parent)
                parent.append(v)
                children.append(())
                ids.append(u)
            children[v] = tuple(ids)
            for u, sub in zip(ids, kids_shape):
                build(u, sub)

        build(0, shape)
        return PlaneTree(tuple(parent), tuple(children))

    for n in range(max_edges + 1):
        for shape in shapes(n):
            yield to_tree(shape)
