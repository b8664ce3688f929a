"""Dense two-phase simplex solver.

Solves  min c'x  s.t.  H x <= h,  A_eq x = b_eq  with free x, from scratch
(no external solver). Entering variable follows Dantzig's rule and falls back
to Bland's rule when the objective stalls, which guarantees termination.
Problems with many inequality rows and few variables are routed through the
LP dual (n equality rows instead of q inequality rows) and the primal point
is recovered from the optimal dual basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9
MAX_ITER = 20000
_STALL_LIMIT = 60


class LPInfeasibleError(Exception):
    """The constraint set is empty."""


class LPUnboundedError(Exception):
    """The objective is unbounded below on the feasible set."""


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    value: float


_OPTIMAL, _INFEASIBLE, _UNBOUNDED = 0, 1, 2


def _pivot_once(T, basis, col):
    """Pivot the tableau on (row, col) with min-ratio row selection.

    Returns False when the column proves unboundedness.
    """
    rows = T.shape[0] - 1
    a = T[:rows, col]
    mask = a > PIVOT_TOL
    if not mask.any():
        return False
    ratios = np.full(rows, np.inf)
    ratios[mask] = T[:rows, -1][mask] / a[mask]
    best = ratios.min()
    # ties broken on the lowest basis index (Bland-compatible)
    tied = np.flatnonzero(ratios <= best + PIVOT_TOL * (1.0 + abs(best)))
    row = tied[np.argmin(basis[tied])]
    piv = T[row, col]
    T[row, :] /= piv
    coef = T[:, col].copy()
    coef[row] = 0.0
    T -= np.outer(coef, T[row, :])
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col
    return True


def _run_simplex(T, basis, ncols):
    """Drive the cost row of tableau T to optimality. Returns a status code."""
    stall = 0
    bland = False
    last = T[-1, -1]
    for _ in range(MAX_ITER):
        red = T[-1, :ncols]
        if bland:
            neg = np.flatnonzero(red < -PIVOT_TOL)
            if neg.size == 0:
                return _OPTIMAL
            col = neg[0]
        else:
            col = int(np.argmin(red))
            if red[col] >= -PIVOT_TOL:
                return _OPTIMAL
        if not _pivot_once(T, basis, col):
            return _UNBOUNDED
        if not bland:
            obj = T[-1, -1]
            if obj > last - PIVOT_TOL:
                stall += 1
                if stall >= _STALL_LIMIT:
                    bland = True
            else:
                stall = 0
            last = obj
    raise RuntimeError("simplex iteration limit reached")


def simplex_standard(c, A, b):
    """min c'x s.t. Ax = b, x >= 0. Returns (status, x, value)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    A = A.copy()
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # phase 1: artificial basis
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)

    status = _run_simplex(T, basis, n + m)
    if status != _OPTIMAL or T[-1, -1] < -FEAS_TOL * max(1.0, abs(b).max(initial=1.0)):
        return _INFEASIBLE, None, None

    # drive artificial variables out of the basis; drop redundant rows
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] >= n:
            row = T[i, :n]
            piv_candidates = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if piv_candidates.size:
                col = piv_candidates[0]
                piv = T[i, col]
                T[i, :] /= piv
                coef = T[:, col].copy()
                coef[i] = 0.0
                T -= np.outer(coef, T[i, :])
                T[:, col] = 0.0
                T[i, col] = 1.0
                basis[i] = col
            else:
                keep[i] = False
    if not keep.all():
        T = np.vstack([T[:m][keep], T[-1:]])
        basis = basis[keep]
        m = int(keep.sum())

    # phase 2
    T2 = np.zeros((m + 1, n + 1))
    T2[:m, :n] = T[:m, :n]
    T2[:m, -1] = T[:m, -1]
    T2[-1, :n] = c
    for i in range(m):
        T2[-1, :] -= c[basis[i]] * T2[i, :]
    status = _run_simplex(T2, basis, n)
    if status == _UNBOUNDED:
        return _UNBOUNDED, None, None
    x = np.zeros(n)
    x[basis] = T2[:m, -1]
    return _OPTIMAL, x, float(c @ x)


def _solve_standard(c, A, b):
    return simplex_standard(c, A, b)


def _primal_route(c, H, h, A_eq, b_eq):
    """Free-variable split x = xp - xm with slack on inequality rows."""
    n = c.shape[0]
    q = 0 if H is None else H.shape[0]
    p = 0 if A_eq is None else A_eq.shape[0]
    ncols = 2 * n + q
    A = np.zeros((q + p, ncols))
    b = np.zeros(q + p)
    if q:
        A[:q, :n] = H
        A[:q, n:2 * n] = -H
        A[:q, 2 * n:] = np.eye(q)
        b[:q] = h
    if p:
        A[q:, :n] = A_eq
        A[q:, n:2 * n] = -A_eq
        b[q:] = b_eq
    cs = np.concatenate([c, -c, np.zeros(q)])
    status, z, value = _solve_standard(cs, A, b)
    if status == _INFEASIBLE:
        raise LPInfeasibleError("LP constraints are infeasible")
    if status == _UNBOUNDED:
        raise LPUnboundedError("LP objective is unbounded")
    x = z[:n] - z[n:2 * n]
    return LPResult(x=x, value=float(value))


def _dual_route(c, H, h):
    """Solve min c'x s.t. Hx <= h through its dual min h'lam, H'lam = -c."""
    status, lam, value = _solve_standard(h, H.T, -c)
    if status == _UNBOUNDED:
        raise LPInfeasibleError("LP constraints are infeasible")
    if status == _INFEASIBLE:
        # dual infeasible: primal unbounded or infeasible; let the primal decide
        return None
    # primal recovery from complementary slackness on the tight basis rows
    tight = np.flatnonzero(lam > PIVOT_TOL)
    if tight.size:
        HB = H[tight]
        hB = h[tight]
        x, *_ = np.linalg.lstsq(HB, hB, rcond=None)
        scale = 1.0 + np.abs(h).max(initial=1.0)
        if (H @ x <= h + 1e-7 * scale).all() and abs(c @ x + value) <= 1e-6 * (1.0 + abs(value)):
            return LPResult(x=x, value=float(-value))
    return None


def solve_lp(c, H=None, h=None, A_eq=None, b_eq=None):
    """min c'x subject to H x <= h and A_eq x = b_eq (x free).

    Raises LPInfeasibleError / LPUnboundedError, distinguished.
    """
    c = np.asarray(c, dtype=float).ravel()
    if H is not None:
        H = np.asarray(H, dtype=float)
        h = np.asarray(h, dtype=float).ravel()
        if H.size == 0:
            H, h = None, None
    if A_eq is not None:
        A_eq = np.asarray(A_eq, dtype=float)
        b_eq = np.asarray(b_eq, dtype=float).ravel()
        if A_eq.size == 0:
            A_eq, b_eq = None, None
    if H is None and A_eq is None:
        raise ValueError("LP needs at least one constraint")
    if A_eq is None and H is not None and H.shape[0] >= 3 * max(c.shape[0], 4):
        res = _dual_route(c, H, h)
        if res is not None:
            return res
    return _primal_route(c, H, h, A_eq, b_eq)


def is_feasible(H=None, h=None, A_eq=None, b_eq=None):
    """Phase-1 feasibility test of {Hx <= h, A_eq x = b_eq}."""
    try:
        solve_lp(np.zeros(_ncols(H, A_eq)), H, h, A_eq, b_eq)
        return True
    except LPInfeasibleError:
        return False


def _ncols(H, A_eq):
    if H is not None and np.asarray(H).size:
        return np.asarray(H).shape[1]
    return np.asarray(A_eq).shape[1]


def max_support(H, h, d):
    """max d'x over {Hx <= h}; raises if empty or unbounded in direction d."""
    res = solve_lp(-np.asarray(d, dtype=float), H, h)
    return -res.value, res.x


def chebyshev_center(H, h, r_cap=1e6):
    """Largest inscribed ball center of {Hx <= h}: returns (x, radius).

    The radius is capped at r_cap so unbounded polyhedra still yield an
    interior point.
    """
    H = np.asarray(H, dtype=float)
    h = np.asarray(h, dtype=float).ravel()
    q, n = H.shape
    norms = np.linalg.norm(H, axis=1)
    Hx = np.hstack([H, norms[:, None]])
    rows = np.vstack([Hx, np.zeros((2, n + 1))])
    rows[-2, -1] = -1.0  # r >= 0
    rows[-1, -1] = 1.0   # r <= r_cap
    rhs = np.concatenate([h, [0.0, r_cap]])
    cc = np.zeros(n + 1)
    cc[-1] = -1.0
    res = solve_lp(cc, rows, rhs)
    return res.x[:n], float(res.x[-1])
