"""Plant-side safety verification and emergency control.

Every received input is checked against the input constraints and the
data-driven one-step reachable set; on failure a local set-theoretic
controller takes over, descending the offline level sets until the terminal
invariant region is reached. The tracking flag f latches at 0 for the whole
emergency episode.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ctrlsets import classify_voronoi
from .lp import LPInfeasibleError, chebyshev_center, solve_lp
from .reach import rors_point
from .sets import EPS_FEAS, HPolytope, Zonotope, contains_point, contains_set

VERDICT_SAFE = "safe"
VERDICT_UNSAFE_INPUT = "unsafe_input"
VERDICT_UNSAFE_REACH = "unsafe_reach"

_FW_STEPS = 3
_FW_TOL = 1e-6


@dataclass(frozen=True)
class SafetyState:
    """f = 1 allows the tracking input through; f = 0 while the emergency
    controller drives toward the terminal set. The active cell is latched for
    the whole episode so the level index decreases monotonically."""

    f: int = 1
    active_cell: int | None = None
    level: int | None = None
    alarm: bool = False


def verify(u_recv, x, M, U: HPolytope, X_eta: HPolytope, W: Zonotope):
    """Input validity plus one-step worst-case containment in the domain."""
    u_recv = np.asarray(u_recv, dtype=float).ravel()
    if not contains_point(U, u_recv):
        return VERDICT_UNSAFE_INPUT
    ahead = rors_point(M, x, u_recv, W)
    if not contains_set(X_eta, ahead):
        return VERDICT_UNSAFE_REACH
    return VERDICT_SAFE


class PlantGuard:
    """Safety verification plus emergency controller over a synthesis bundle."""

    def __init__(self, M, W, U: HPolytope, X_eta: HPolytope, cells, families,
                 latch_cell: bool = True):
        self.M = M
        self.W = W
        self.U = U
        self.X_eta = X_eta
        self.cells = cells
        self.families = families
        self.seeds = [c.x_e for c in cells]
        self.latch_cell = latch_cell

    # -- feasibility over an augmented level set --------------------------

    def _input_polytope(self, Xi: HPolytope, x):
        n = len(x)
        Hu = Xi.H[:, n:]
        hu = Xi.h - Xi.H[:, :n] @ x
        keep = np.linalg.norm(Hu, axis=1) > 1e-12
        if (~keep & (hu < -EPS_FEAS)).any():
            return None
        return HPolytope(Hu[keep], hu[keep], normalize=False)

    def feasible_input(self, Xi: HPolytope, x):
        """Any input u with [x; u] in Xi, or None."""
        x = np.asarray(x, dtype=float).ravel()
        poly = self._input_polytope(Xi, x)
        if poly is None:
            return None
        try:
            u, _ = chebyshev_center(poly.H, poly.h, r_cap=1e3)
        except LPInfeasibleError:
            return None
        if (poly.H @ u <= poly.h + 1e-6).all():
            return u
        return None

    def _qp_toward(self, Xi: HPolytope, x, u_ref):
        """min ||u - u_ref||^2 over the level set, by a few Frank-Wolfe steps."""
        poly = self._input_polytope(Xi, x)
        if poly is None:
            return None
        try:
            u, _ = chebyshev_center(poly.H, poly.h, r_cap=1e3)
        except LPInfeasibleError:
            return None
        for _ in range(_FW_STEPS):
            grad = u - u_ref
            try:
                v = solve_lp(grad, poly.H, poly.h).x
            except LPInfeasibleError:
                return None
            gap = grad @ (u - v)
            if gap < _FW_TOL:
                break
            dv = v - u
            denom = dv @ dv
            gamma = 1.0 if denom < 1e-15 else min(max((u_ref - u) @ dv / denom, 0.0), 1.0)
            u = u + gamma * dv
        return u

    # -- Algorithm-1 online logic ----------------------------------------

    def terminal_law(self, cell_idx, x):
        c = self.cells[cell_idx]
        return c.K @ (x - c.x_e) + c.u_e

    def ec_step(self, x, st: SafetyState):
        """One emergency-controller step: (applied input, next state)."""
        x = np.asarray(x, dtype=float).ravel()
        if self.latch_cell and st.active_cell is not None:
            l_bar = st.active_cell
        else:
            l_bar = classify_voronoi(self.seeds, x)
        fam = self.families[l_bar]
        j = fam.level_of(x)
        if j is None:
            return self._fallback(x, st)
        if j == 0:
            u = self.terminal_law(l_bar, x)
            return u, replace(st, f=1, active_cell=None, level=0)
        u_ref = self.terminal_law(l_bar, x)
        u = self._qp_toward(fam.Xi[j], x, u_ref)
        if u is None:
            return self._fallback(x, st)
        return u, replace(st, f=0, active_cell=l_bar, level=j)

    def _fallback(self, x, st: SafetyState):
        """State escaped every level set: minimize constraint violation and
        raise the safety alarm in the state."""
        best = None
        for l, fam in enumerate(self.families):
            for j in range(1, fam.N + 1):
                viol = float(np.max(fam.C[j].H @ x - fam.C[j].h))
                if best is None or viol < best[0]:
                    best = (viol, l, j)
        if best is None:
            return np.zeros(self.U.dim), replace(st, f=0, alarm=True)
        _, l, j = best
        fam = self.families[l]
        u = self._slack_input(fam.Xi[j], x)
        return u, replace(st, f=0, active_cell=l, level=j, alarm=True)

    def _slack_input(self, Xi: HPolytope, x):
        n = len(x)
        Hu = Xi.H[:, n:]
        hu = Xi.h - Xi.H[:, :n] @ x
        m = Hu.shape[1]
        # vars (u, s): Hu u - s <= hu, s >= 0, min s
        rows = np.block([[Hu, -np.ones((Hu.shape[0], 1))],
                         [np.zeros((1, m)), -np.ones((1, 1))]])
        offs = np.concatenate([hu, [0.0]])
        # keep u within the raw input box to stay bounded
        rows = np.vstack([rows, np.hstack([self.U.H, np.zeros((self.U.nrows, 1))])])
        offs = np.concatenate([offs, self.U.h])
        cost = np.zeros(m + 1)
        cost[-1] = 1.0
        res = solve_lp(cost, rows, offs)
        return res.x[:m]

    def plant_side_step(self, u_recv, x, st: SafetyState):
        """Dispatch per the online logic: returns (u_applied, state, verdict).

        The emergency branch runs when the flag is latched at 0 or the
        received input fails verification; otherwise the received input is
        applied unchanged.
        """
        x = np.asarray(x, dtype=float).ravel()
        verdict = verify(u_recv, x, self.M, self.U, self.X_eta, self.W)
        if st.f == 0 or verdict != VERDICT_SAFE:
            u, st2 = self.ec_step(x, replace(st, f=0))
            return u, st2, verdict
        return np.asarray(u_recv, dtype=float).ravel(), replace(st, level=None), verdict
