"""Exact and numeric reference computations.

This module owns three things:

* the critical constants of the two models (quadrangular and triangular
  weights) and the step law / branching probabilities derived from them,
* closed-form reference laws used as acceptance targets,
* independent numeric machinery that recomputes those laws without using
  the closed forms: a shooting solver for the nonlinear gap system, a
  backward solver for the arch recursion, renewal deconvolution and formal
  power-series expansion in exact rational arithmetic.

The numeric machinery is deliberately closed-form-free so that agreement
with the closed forms is a real check and not a tautology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NoConvergence

# ---------------------------------------------------------------------------
# critical constants
#
# Quadrangular model: critical face weight 1/12, geometric(1/2) offspring,
# uniform {-1,0,1} edge labels. Triangular model: critical face weight
# g3 = 3^(-3/4)/2 with partition functions R (mobiles rooted at a labeled
# vertex) and S (half-mobiles rooted at a degree-1 flag).
# ---------------------------------------------------------------------------

G4_CRITICAL = 1.0 / 12.0

G3_CRITICAL = 0.5 * 3.0 ** (-0.75)
R_TRI = math.sqrt(3.0)
S_TRI = 3.0 ** 0.25 * (math.sqrt(3.0) - 1.0)
C_TRI = 2.0 * math.sqrt(R_TRI) + S_TRI

# step law of the triangular boundary walk
TRI_P_UP = math.sqrt(R_TRI) / C_TRI
TRI_P_DOWN = TRI_P_UP
TRI_P_LEVEL = S_TRI / C_TRI

# branching probabilities of the critical mobile sampler, derived from the
# fixed-point system  R = 1/(1 - 2 g3 S),  S = g3 (2 R + S^2):
#   * a labeled vertex has k face children with prob (1-beta) beta^k,
#     beta = 2 g3 S; each such face carries one flag, at value L-1 or L
#     with equal probability (L = parent label);
#   * a flag's single face child holds one labeled child at value f+1 or f
#     (prob P_LAB each) or two flag children at value f (prob P_BB).
BETA_TRI = 2.0 * G3_CRITICAL * S_TRI
P_LAB_TRI = G3_CRITICAL * R_TRI / S_TRI
P_BB_TRI = G3_CRITICAL * S_TRI


# ---------------------------------------------------------------------------
# closed-form reference laws (acceptance targets)
# ---------------------------------------------------------------------------


def min_label_tail_closed(m: int) -> float:
    """P(min label > -m) for a critically labeled tree with root label 0."""
    return 1.0 - 2.0 / ((m + 1) * (m + 2))


def delta_tail(m: int) -> float:
    """P(excursion label deficit >= m), right side, quadrangular."""
    return 1.0 / (m + 1)


def delta_prime_tail(m: int) -> float:
    return 1.0 / (m + 3)


def r_plus_prob(i: int) -> float:
    """P(i is a right-boundary hit time of the leftmost geodesic)."""
    return 1.0 / (i + 1)


def r_minus_prob(i: int) -> float:
    return 3.0 / (i + 3)


def tri_delta_tail(m: int) -> float:
    return 1.0 / (m + 1)


def tri_delta_prime_tail(m: int) -> float:
    return 1.0 / (m + 2)


def tri_r_plus_prob(i: int) -> float:
    return 1.0 / (i + 1)


def tri_r_minus_prob(i: int) -> float:
    return 2.0 / (i + 2)


def quad_rm_ratio(m: int) -> float:
    """Constrained-to-free partition ratio, quadrangular: m(m+3)/((m+1)(m+2))."""
    return m * (m + 3) / ((m + 1) * (m + 2))


def tri_rm_ratio(m: int) -> float:
    """Mobile min-label tail, triangular: m(m+2)/(m+1)^2."""
    return m * (m + 2) / ((m + 1) ** 2 * 1.0)


def tri_sm_ratio(m: int) -> float:
    """Half-mobile constrained ratio: 1 - g3 R^2/S * 2/((m+1)(m+2))."""
    return 1.0 - (G3_CRITICAL * R_TRI**2 / S_TRI) * 2.0 / ((m + 1) * (m + 2))


def intersection_product(i: int) -> float:
    """P(i is hit on both boundary sides) = product of the two membership
    probabilities (the two regenerative sets are independent)."""
    return r_plus_prob(i) * r_minus_prob(i)


# ---------------------------------------------------------------------------
# series tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeriesTable:
    """An indexed numeric sequence with provenance metadata.

    values[k] is the entry at index start+k. Entries are Fractions for
    exact provenance, floats otherwise; `error` optionally carries a crude
    per-entry error bound for float tables.
    """

    name: str
    start: int
    values: tuple
    provenance: str
    error: tuple = field(default=None)

    def __getitem__(self, m):
        k = m - self.start
        if k < 0 or k >= len(self.values):
            raise IndexError(f"{self.name}[{m}] outside [{self.start}, {self.end}]")
        return self.values[k]

    def __len__(self):
        return len(self.values)

    @property
    def end(self):
        return self.start + len(self.values) - 1

    def indices(self):
        return range(self.start, self.start + len(self.values))

    def to_rows(self):
        """Rows (index, value, error, provenance) for CSV export."""
        rows = []
        for k, v in enumerate(self.values):
            err = self.error[k] if self.error is not None else ""
            rows.append((self.start + k, v, err, self.provenance))
        return rows


# ---------------------------------------------------------------------------
# banded Newton helper (shared by the fixed-point oracles)
# ---------------------------------------------------------------------------


def newton_banded(residual_and_jac, x0, tol=1e-12, max_iter=60):
    """Damped Newton iteration for F(x)=0 with tridiagonal Jacobian.

    residual_and_jac(x) must return (F, bands) where bands is the 3xN
    matrix accepted by scipy.linalg.solve_banded((1,1), ...). Steps are
    halved until the max-norm residual decreases. Raises NoConvergence.
    """
    from scipy.linalg import solve_banded

    x = np.asarray(x0, dtype=float).copy()
    f, bands = residual_and_jac(x)
    res = np.abs(f).max()
    for it in range(max_iter):
        if res < tol:
            return x
        step = solve_banded((1, 1), bands, f)
        lam = 1.0
        while True:
            x_new = x - lam * step
            f_new, bands_new = residual_and_jac(x_new)
            res_new = np.abs(f_new).max()
            if res_new < res or lam < 1e-8:
                break
            lam *= 0.5
        x, f, bands, res = x_new, f_new, bands_new, res_new
    if res < tol:
        return x
    raise NoConvergence(res, max_iter)


# ---------------------------------------------------------------------------
# arch recursion  g(m) (2 - g(m+1)) = h(m)
# ---------------------------------------------------------------------------


def solve_arch_recursion(h_values, M, tol=1e-13, max_iter=200) -> SeriesTable:
    """Solve the backward arch recursion g(m) = h(m) / (2 - g(m+1)).

    h_values[m] must be valid for m <= M. The far boundary g(M+1) is fixed
    by bisecting the one-step self-consistency gamma (2 - gamma) = h(M)
    (constant continuation), never by the conjectured closed form. The
    sweep then runs down to m = 0. Doubling M is the caller's insensitivity
    check.
    """
    hM = float(h_values[M])
    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        gamma = 0.5 * (lo + hi)
        val = gamma * (2.0 - gamma) - hM
        if abs(val) < tol:
            break
        if val < 0.0:
            lo = gamma
        else:
            hi = gamma
    else:
        raise NoConvergence(abs(val), max_iter)

    g = np.empty(M + 2)
    g[M + 1] = gamma
    for m in range(M, -1, -1):
        g[m] = float(h_values[m]) / (2.0 - g[m + 1])
    if not (np.all(g[1 : M + 1] > 0.0) and np.all(g[1 : M + 1] < 1.0)):
        raise NoConvergence(float(np.max(np.abs(g))), 1)
    return SeriesTable("g_arch", 0, tuple(g[: M + 1]), "recursion")


# ---------------------------------------------------------------------------
# shooting solver for the nonlinear gap system
#   f(m) - f(m+1) + f(m) f(m+1) = 2/((m+1)(m+2)),  f(0)=1,  f -> 0
# ---------------------------------------------------------------------------


def _forward_quad(x, M):
    """Forward trajectory from f(1)=x; returns (values, exit_side).

    exit_side is 0 if the trajectory stayed in (0,1) up to M, -1 if it left
    through 0, +1 if it left through 1.
    """
    f = [1.0, x]
    for m in range(1, M):
        c = (m + 1) * (m + 2)
        nxt = (c * f[m] - 2.0) / (c * (1.0 - f[m]))
        f.append(nxt)
        if nxt <= 0.0:
            return f, -1
        if nxt >= 1.0:
            return f, +1
    return f, 0


def _forward_tri(x, M):
    """Same shooting for the triangular variant of the gap system."""
    f = [1.0, x]
    for m in range(1, M):
        c = (m + 1) * (m + 1)
        nxt = (c * f[m] - 1.0) / (c * (1.0 - f[m])) - 1.0 / ((m + 1) * (m + 2))
        f.append(nxt)
        if nxt <= 0.0:
            return f, -1
        if nxt >= 1.0:
            return f, +1
    return f, 0


def shoot_gap_system(M, variant="quad", bisect_iter=200):
    """Locate by bisection the unique f(1) whose forward trajectory stays in
    (0,1), and return the first M+1 trajectory entries as a SeriesTable.

    The system is forward-unstable (perturbations grow roughly like m^2),
    which is what makes the shooting classification work: starts above the
    true f(1) exit through 1, starts below exit through 0. The trajectory is
    run well past M so that starts within the bisection core are accurate to
    ~ M^2 * interval at index M.
    """
    fwd = _forward_quad if variant == "quad" else _forward_tri
    m_shoot = max(3 * M, 3000)
    lo, hi = 1e-12, 1.0 - 1e-12
    for _ in range(bisect_iter):
        x = 0.5 * (lo + hi)
        traj, side = fwd(x, m_shoot)
        if side == 0 or hi - lo < 4e-16:
            break
        if side < 0:
            lo = x
        else:
            hi = x
    traj, _ = fwd(0.5 * (lo + hi), m_shoot)
    if len(traj) <= M:
        raise NoConvergence(float(hi - lo), bisect_iter)
    name = "f_gap" if variant == "quad" else "f_gap_tri"
    return SeriesTable(name, 0, tuple(traj[: M + 1]), "recursion")


def verify_nl_uniqueness(M=100, pairs=((0.3, 0.4), (0.45, 0.55), (0.2, 0.8))):
    """Shooting run for the quadrangular gap system plus the monotone
    ordering property: trajectories started from x1 < x2 stay ordered while
    both remain in (0,1), and off-solution starts exit (0,1) finitely fast.
    """
    table = shoot_gap_system(M, "quad")
    report = {"f1": table[1], "table": table, "ordering_ok": True, "exits": []}
    for x1, x2 in pairs:
        t1, s1 = _forward_quad(x1, M)
        t2, s2 = _forward_quad(x2, M)
        n = min(len(t1), len(t2))
        for m in range(1, n):
            if not (t1[m] < t2[m]):
                report["ordering_ok"] = False
        report["exits"].append((s1, s2))
    eps_exits = []
    for dx in (1e-6, -1e-6):
        _, side = _forward_quad(0.5 + dx, M)
        eps_exits.append(side)
    report["eps_exits"] = tuple(eps_exits)
    return report


def tri_recursion_residual(m: int) -> float:
    """Residual of the triangular gap recursion at the candidate f(m)=1/(m+1)."""
    f_m = 1.0 / (m + 1)
    f_m1 = 1.0 / (m + 2)
    c = (m + 1) * (m + 1)
    rhs = (c * f_m - 1.0) / (c * (1.0 - f_m)) - 1.0 / ((m + 1) * (m + 2))
    return rhs - f_m1


# ---------------------------------------------------------------------------
# renewal deconvolution and power series, exact arithmetic
# ---------------------------------------------------------------------------


def renewal_deconvolve(u: SeriesTable) -> SeriesTable:
    """Solve u_n = sum_{k=1}^n f_k u_{n-k} for f by forward substitution.

    Exact if u holds Fractions. Requires u_0 = 1 (and u starting at 0)."""
    if u.start != 0 or u.values[0] != 1:
        raise ValueError("renewal table must start at 0 with u_0 = 1")
    uv = u.values
    n_max = len(uv) - 1
    f = [Fraction(0)]
    for n in range(1, n_max + 1):
        acc = uv[n]
        for k in range(1, n):
            acc = acc - f[k] * uv[n - k]
        f.append(acc)
    return SeriesTable("f_renewal", 0, tuple(f), "deconvolution")


def _series_reciprocal(a, N):
    """Coefficients of 1/A(s) mod s^(N+1) for A with a[0] != 0."""
    inv0 = 1 / a[0] if isinstance(a[0], Fraction) else 1.0 / a[0]
    b = [inv0]
    for n in range(1, N + 1):
        acc = 0
        for k in range(1, n + 1):
            if k < len(a):
                acc = acc + a[k] * b[n - k]
        b.append(-inv0 * acc)
    return b


def series_coefficients(which: str, N: int) -> SeriesTable:
    """Formal power-series coefficients in exact rationals.

    U: the membership series sum u_n s^n with U = L/s, L = log(1/(1-s));
    F: the first-return series 1 - s/L;
    H: the left-side first-return series 1 - (s^3/3)/(L - s - s^2/2).
    """
    if which == "U":
        vals = tuple(Fraction(1, n + 1) for n in range(N + 1))
        return SeriesTable("U", 0, vals, "series")
    if which == "F":
        # s/L = 1/U as formal series
        u = [Fraction(1, n + 1) for n in range(N + 1)]
        b = _series_reciprocal(u, N)
        vals = [Fraction(0)] + [-b[n] for n in range(1, N + 1)]
        return SeriesTable("F", 0, tuple(vals), "series")
    if which == "H":
        # L - s - s^2/2 = s^3 E(s), E_j = 1/(j+3)
        e = [Fraction(1, j + 3) for j in range(N + 1)]
        b = _series_reciprocal(e, N)
        third = Fraction(1, 3)
        vals = [Fraction(0)] + [-third * b[n] for n in range(1, N + 1)]
        return SeriesTable("H", 0, tuple(vals), "series")
    raise ValueError(f"unknown series {which!r}")


def gap_series_float(which: str, N: int) -> SeriesTable:
    """Float64 extension of series_coefficients for large N (tail trends).

    Carries a crude accumulated rounding bound per entry; the log-singular
    coefficients shrink slowly, so float64 keeps ample headroom for the
    monotone-trend checks used downstream.
    """
    if which == "F":
        a = np.array([1.0 / (n + 1) for n in range(N + 1)])
    elif which == "H":
        a = np.array([1.0 / (j + 3) for j in range(N + 1)])
    else:
        raise ValueError(f"unknown float series {which!r}")
    b = np.empty(N + 1)
    b[0] = 1.0 / a[0]
    err = np.zeros(N + 1)
    eps = np.finfo(float).eps
    for n in range(1, N + 1):
        acc = np.dot(a[1 : n + 1], b[n - 1 :: -1])
        b[n] = -b[0] * acc
        err[n] = eps * (n + 1) * (abs(acc) + abs(b[n]))
    if which == "F":
        vals = np.concatenate(([0.0], -b[1:]))
    else:
        vals = np.concatenate(([0.0], -b[1:] / 3.0))
    return SeriesTable(which + "_float", 0, tuple(vals), "series", tuple(err))


# ---------------------------------------------------------------------------
# triangular tables and the universal arch relation
# ---------------------------------------------------------------------------


def universal_arch_residual(g_m, g_m1, rm_ratio, sm_ratio, R, S):
    """Residual of the model-independent arch relation

        g(m) (C/sqrt(R) - (S_m/S)(S/sqrt(R)) - g(m+1)) = R_m/R

    evaluated at given sequence values and model constants (S may be 0)."""
    C = 2.0 * math.sqrt(R) + S
    lhs = g_m * (C / math.sqrt(R) - sm_ratio * (S / math.sqrt(R)) - g_m1)
    return lhs - rm_ratio


def triangular_tables(M: int) -> dict:
    """Closed-form triangular tables plus the recursion and identity checks.

    Returns a dict with SeriesTables for R_m/R, S_m/S and the shooting
    solution of the triangular gap recursion, together with the residuals
    of 2 g3 R^(3/2) = 1 and of the universal relation reductions.
    """
    rm = SeriesTable(
        "tri_rm_ratio", 1, tuple(tri_rm_ratio(m) for m in range(1, M + 1)),
        "closed-form",
    )
    sm = SeriesTable(
        "tri_sm_ratio", 1, tuple(tri_sm_ratio(m) for m in range(1, M + 1)),
        "closed-form",
    )
    f_tilde = shoot_gap_system(M, "tri")
    residuals = [abs(tri_recursion_residual(m)) for m in range(1, M + 1)]

    # universal relation at triangular parameters, g(m) = m/(m+1)
    uni_tri = max(
        abs(
            universal_arch_residual(
                m / (m + 1.0), (m + 1.0) / (m + 2.0),
                tri_rm_ratio(m), tri_sm_ratio(m), R_TRI, S_TRI,
            )
        )
        for m in range(1, M)
    )
    # quadrangular reduction: S=0 collapses the relation to g(m)(2-g(m+1)) = h(m)
    uni_quad = max(
        abs(
            universal_arch_residual(
                m / (m + 1.0), (m + 1.0) / (m + 2.0),
                quad_rm_ratio(m), 1.0, 1.0, 0.0,
            )
        )
        for m in range(1, M)
    )
    return {
        "rm": rm,
        "sm": sm,
        "f_tilde": f_tilde,
        "g3_identity_residual": abs(2.0 * G3_CRITICAL * R_TRI**1.5 - 1.0),
        "recursion_residual": max(residuals),
        "universal_tri_residual": uni_tri,
        "universal_quad_residual": uni_quad,
    }
