"""Three-type mobiles for the critical triangular model.

A mobile is a plane tree with labeled vertices (integers), unlabeled face
vertices, and flagged vertices (integers). Around each face vertex the
triangular degree identity 2*(#labeled neighbours) + (#flagged neighbours)
= 3 holds, which leaves exactly three local face types:

  * face below a labeled parent L: one flag child at value L-1 or L;
  * face below a flag parent f: one labeled child at value f+1 or f,
    or two flag children at value f.

Sampling follows the critical multi-type branching process whose transition
probabilities come from the partition-function fixed point
R = 1/(1 - 2 g3 S), S = g3 (2R + S^2); the sampler is validated against an
exhaustive Boltzmann enumeration, never against itself.

`oracle_r_table` / `oracle_s_table` solve the min-label survival recursion
for mobiles and half-mobiles numerically (free far boundary, no closed
forms), mirroring the tree-side oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .analytics import (
    BETA_TRI,
    G3_CRITICAL,
    P_BB_TRI,
    P_LAB_TRI,
    R_TRI,
    S_TRI,
    newton_banded,
)
from .errors import CapExceeded
from .labeled_trees import DEFAULT_NODE_CAP

KIND_LABELED = 0
KIND_FACE = 1
KIND_FLAG = 2


@dataclass(frozen=True)
class Mobile:
    """Plane tree with three node kinds. Node 0 is the root (labeled for
    mobiles, flagged of degree 1 for half-mobiles). values[v] is the label
    of a labeled node or the flag of a flagged node; faces carry None."""

    parent: tuple
    children: tuple
    kinds: tuple
    values: tuple

    @property
    def n_nodes(self):
        return len(self.parent)

    @property
    def n_faces(self):
        return sum(1 for k in self.kinds if k == KIND_FACE)

    def labeled_values(self):
        return [self.values[v] for v in range(self.n_nodes) if self.kinds[v] == KIND_LABELED]

    def flag_values(self):
        return [self.values[v] for v in range(self.n_nodes) if self.kinds[v] == KIND_FLAG]

    def validate(self):
        assert self.parent[0] == -1
        for v in range(self.n_nodes):
            k = self.kinds[v]
            kids = self.children[v]
            if k == KIND_FLAG:
                # flags have one face child (root flag of a half-mobile too)
                assert len(kids) == 1 and self.kinds[kids[0]] == KIND_FACE
            elif k == KIND_FACE:
                assert self.values[v] is None
                # triangular degree identity, counting the parent
                pk = self.kinds[self.parent[v]]
                lab = sum(1 for u in kids if self.kinds[u] == KIND_LABELED)
                flg = sum(1 for u in kids if self.kinds[u] == KIND_FLAG)
                lab += 1 if pk == KIND_LABELED else 0
                flg += 1 if pk == KIND_FLAG else 0
                assert 2 * lab + flg == 3
            else:
                assert all(self.kinds[u] == KIND_FACE for u in kids)

    def to_json_dict(self):
        return {
            "parents": list(self.parent),
            "labels": [
                self.values[v] if self.kinds[v] == KIND_LABELED else None
                for v in range(self.n_nodes)
            ],
            "kinds": list(self.kinds),
            "flags": [
                self.values[v] if self.kinds[v] == KIND_FLAG else None
                for v in range(self.n_nodes)
            ],
        }


class HalfMobile(Mobile):
    """Mobile rooted at a degree-1 flagged node (the root flag)."""


def min_label(mobile: Mobile):
    """Smallest labeled value; every finite mobile or half-mobile has at
    least one labeled vertex (branches terminate at labeled leaves)."""
    return min(
        mobile.values[v]
        for v in range(mobile.n_nodes)
        if mobile.kinds[v] == KIND_LABELED
    )


def _grow(rng, parent, children, kinds, values, stack, node_cap):
    """Run the branching process until the stack empties."""
    while stack:
        v = stack.pop()
        k = kinds[v]
        if k == KIND_LABELED:
            n_faces = int(rng.geometric(1.0 - BETA_TRI)) - 1
            if n_faces:
                base = len(parent)
                if base + n_faces > node_cap:
                    raise CapExceeded(node_cap)
                kids = tuple(range(base, base + n_faces))
                parent.extend([v] * n_faces)
                kinds.extend([KIND_FACE] * n_faces)
                values.extend([None] * n_faces)
                children.extend([()] * n_faces)
                children[v] = kids
                stack.extend(reversed(kids))
        elif k == KIND_FLAG:
            base = len(parent)
            if base + 1 > node_cap:
                raise CapExceeded(node_cap)
            parent.append(v)
            kinds.append(KIND_FACE)
            values.append(None)
            children.append(())
            children[v] = (base,)
            stack.append(base)
        else:  # face: content depends on the parent kind
            pk = kinds[parent[v]]
            pv = values[parent[v]]
            base = len(parent)
            if pk == KIND_LABELED:
                if base + 1 > node_cap:
                    raise CapExceeded(node_cap)
                flag_val = pv - 1 if rng.random() < 0.5 else pv
                parent.append(v)
                kinds.append(KIND_FLAG)
                values.append(flag_val)
                children.append(())
                children[v] = (base,)
                stack.append(base)
            else:
                u = rng.random()
                if u < 2.0 * P_LAB_TRI:
                    if base + 1 > node_cap:
                        raise CapExceeded(node_cap)
                    lab_val = pv + 1 if u < P_LAB_TRI else pv
                    parent.append(v)
                    kinds.append(KIND_LABELED)
                    values.append(lab_val)
                    children.append(())
                    children[v] = (base,)
                    stack.append(base)
                else:
                    if base + 2 > node_cap:
                        raise CapExceeded(node_cap)
                    parent.extend([v, v])
                    kinds.extend([KIND_FLAG, KIND_FLAG])
                    values.extend([pv, pv])
                    children.extend([(), ()])
                    children[v] = (base, base + 1)
                    stack.extend((base + 1, base))


def sample_mobile(rng: np.random.Generator, root_label: int,
                  node_cap=DEFAULT_NODE_CAP) -> Mobile:
    """Boltzmann mobile rooted at a labeled vertex: P(mobile) = g3^#faces / R."""
    parent, children = [-1], [()]
    kinds, values = [KIND_LABELED], [root_label]
    _grow(rng, parent, children, kinds, values, [0], node_cap)
    return Mobile(tuple(parent), tuple(children), tuple(kinds), tuple(values))


def sample_half_mobile(rng: np.random.Generator, root_flag: int,
                       node_cap=DEFAULT_NODE_CAP) -> HalfMobile:
    """Boltzmann half-mobile rooted at a degree-1 flag: P = g3^#faces / S."""
    parent, children = [-1], [()]
    kinds, values = [KIND_FLAG], [root_flag]
    _grow(rng, parent, children, kinds, values, [0], node_cap)
    return HalfMobile(tuple(parent), tuple(children), tuple(kinds), tuple(values))


# ---------------------------------------------------------------------------
# min-label survival oracles
#
#   r(m) = P(all labels > -m | mobile, root label 0)
#   s(m) = P(all labels > -m | half-mobile, root flag 0)
#
# satisfy r(0) = 0 and, from one branching step,
#   r(m) = (1-beta) / (1 - beta (s(m-1)+s(m))/2)
#   s(m) = p_lab (r(m+1) + r(m)) + p_bb s(m)^2
# Solved jointly by damped Newton with free far boundary r(M+1) = r(M).
# ---------------------------------------------------------------------------


def _rs_residual(x, M):
    # layout: x = [s_0, r_1, s_1, r_2, s_2, ..., r_M, s_M], s_m at 2m, r_m at 2m-1
    n = 2 * M + 1
    s = x[0::2]
    r = np.concatenate(([0.0], x[1::2]))  # r_0 = 0 constant
    r_up = np.concatenate((r[1:], [r[M]]))  # r_{m+1}, folded at the top

    f = np.empty(n)
    f[0::2] = s - P_LAB_TRI * (r_up + r) - P_BB_TRI * s * s
    f[1::2] = r[1:] * (1.0 - BETA_TRI * (s[:-1] + s[1:]) / 2.0) - (1.0 - BETA_TRI)

    bands = np.zeros((3, n))
    # rows 2m: E_s(m)
    bands[1, 0::2] = 1.0 - 2.0 * P_BB_TRI * s  # d/ds_m
    bands[2, 0:-1:2] = -r[1:] * BETA_TRI / 2.0  # row 2m+1 wrt s_m (below diag)
    # careful: bands[2, j] is element (j+1, j); fill below
    # rows 2m-1: E_r(m)
    bands[1, 1::2] = 1.0 - BETA_TRI * (s[:-1] + s[1:]) / 2.0  # d/dr_m
    # superdiagonal: bands[0, j] is element (j-1, j)
    bands[0, 1::2] = -P_LAB_TRI  # E_s(m) wrt r_{m+1} at col 2m+1... see below
    bands[0, 2::2] = -r[1:] * BETA_TRI / 2.0  # E_r(m) wrt s_m at col 2m
    # subdiagonal entries (row j+1, col j)
    bands[2, 1:-1:2] = -P_LAB_TRI  # E_s(m) wrt r_m at col 2m-1  (row 2m)
    # E_s(m) also depends on r_m (col 2m-1, row 2m): that IS bands[2, 2m-1]
    # free boundary: E_s(M) sees r_{M+1} -> r_M (col 2M-1, row 2M)
    bands[2, n - 2] += -P_LAB_TRI
    return f, bands


def oracle_rs_tables(M: int, tol=1e-12, max_iter=120):
    """(r, s) arrays with r[m], s[m] for m = 0..M; closed-form-free."""
    m = np.arange(M + 1, dtype=float)
    x0 = np.empty(2 * M + 1)
    x0[0::2] = (m + 1.0) / (m + 3.0)  # s init
    x0[1::2] = m[1:] / (m[1:] + 1.0)  # r init
    x = newton_banded(lambda y: _rs_residual(y, M), x0, tol=tol, max_iter=max_iter)
    r = np.concatenate(([0.0], x[1::2]))
    s = x[0::2]
    return r, s


def oracle_r(m: int, M=None) -> float:
    if M is None:
        M = max(10 * m, 1000)
    return float(oracle_rs_tables(M)[0][m])


def oracle_s(m: int, M=None) -> float:
    if M is None:
        M = max(10 * m, 1000)
    return float(oracle_rs_tables(M)[1][m])


# ---------------------------------------------------------------------------
# exhaustive Boltzmann enumeration (test oracle for the sampler)
# ---------------------------------------------------------------------------


def canonical_shape(mobile: Mobile):
    """Serialize a mobile to a nested tuple recording kinds and the value
    offsets relative to the root value, so samples can be compared with the
    enumerated catalogue."""
    root_val = mobile.values[0]

    def rec(v):
        k = mobile.kinds[v]
        val = mobile.values[v]
        off = None if val is None else val - root_val
        return (k, off, tuple(rec(u) for u in mobile.children[v]))

    return rec(0)


def enumerate_mobiles(max_faces: int, half=False):
    """All mobile shapes (canonical tuples, root value 0) with at most
    max_faces face vertices, each with its exact Boltzmann probability
    g3^#faces / R (or / S for half-mobiles). Probabilities are floats built
    from the critical constants."""

    def flag_subtrees(budget, flag_off):
        """Subtrees hanging below a flag (one face), by face count used."""
        for n_used, shape in face_below_flag(budget, flag_off):
            yield n_used, (KIND_FLAG, flag_off, (shape,))

    def face_below_flag(budget, f):
        if budget < 1:
            return
        # one labeled child at f+1 or f
        for dv in (f + 1, f):
            for n_used, sub in labeled_subtrees(budget - 1, dv):
                yield n_used + 1, (KIND_FACE, None, (sub,))
        # two flag children at f
        for n1, s1 in flag_subtrees(budget - 1, f):
            for n2, s2 in flag_subtrees(budget - 1 - n1, f):
                yield n1 + n2 + 1, (KIND_FACE, None, (s1, s2))

    def labeled_subtrees(budget, off):
        """Labeled vertex with a sequence of face children."""
        for n_used, kids in face_sequences(budget, off):
            yield n_used, (KIND_LABELED, off, kids)

    def face_sequences(budget, parent_off):
        yield 0, ()
        for dv in (parent_off - 1, parent_off):
            for n1, flag_sub in flag_subtrees(budget - 1, dv):
                first = (KIND_FACE, None, (flag_sub,))
                for n2, rest in face_sequences(budget - 1 - n1, parent_off):
                    yield n1 + n2 + 1, (first,) + rest

    out = []
    if half:
        for n_used, shape in face_below_flag(max_faces, 0):
            prob = G3_CRITICAL**n_used / S_TRI
            out.append(((KIND_FLAG, 0, (shape,)), n_used, prob))
    else:
        for n_used, kids in face_sequences(max_faces, 0):
            prob = G3_CRITICAL**n_used / R_TRI
            out.append(((KIND_LABELED, 0, kids), n_used, prob))
    return out
