"""Offline synthesis of the emergency controller's set family.

Per equilibrium cell: a stabilizing terminal gain and its robust control
invariant set, the Voronoi partition of the tracking domain, and a family of
one-step controllable sets (augmented state-input polytopes plus their exact
state projections) grown until the cell is covered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sets import (
    EPS_FEAS,
    HPolytope,
    MatrixZonotope,
    Zonotope,
    _sample_polytope,
    contains_set,
    inner_zonotope,
    intersect,
    is_empty,
    minkowski_sum,
    project,
    prune_polytope,
    zonotope_to_hpolytope,
)
from .sysid import vertex_matrices

COVERAGE_TARGET = 0.99
COVERAGE_SAMPLES = 10_000
J_MAX = 50
RCI_TOL = 1e-8
EXACT_VERTEX_LIMIT = 16
_STALL_STEPS = 3
_STALL_DELTA = 1e-4


class EmptyRoscError(ValueError):
    """One-step predecessor is empty: the family terminates."""


@dataclass(frozen=True)
class EquilibriumCell:
    index: int
    x_e: np.ndarray
    u_e: np.ndarray
    K: np.ndarray
    T0: Zonotope
    V: HPolytope


@dataclass(frozen=True)
class RoscFamily:
    """Nested one-step controllable sets for one cell.

    C[0] is the polytopic hull of the terminal set; C[j] projects Xi[j]
    (Xi[0] is None: the terminal level uses the feedback law, not a program).
    """

    cell: EquilibriumCell
    C: tuple
    Xi: tuple
    inner: tuple
    coverage: float
    stalled: bool = False

    @property
    def N(self):
        return len(self.C) - 1

    def level_of(self, x, tol: float = EPS_FEAS):
        """min j with x in C_j, or None when x escapes every level."""
        x = np.asarray(x, dtype=float).ravel()
        for j, c in enumerate(self.C):
            if (c.H @ x <= c.h + tol).all():
                return j
        return None


def voronoi_partition(X_eta: HPolytope, seeds) -> list:
    """Voronoi cells of X_eta: bisector half-spaces intersected with X_eta."""
    seeds = [np.asarray(s, dtype=float).ravel() for s in seeds]
    for i in range(len(seeds)):
        for j in range(i + 1, len(seeds)):
            if np.linalg.norm(seeds[i] - seeds[j]) < 1e-12:
                raise ValueError("duplicate Voronoi seeds")
    cells = []
    for l, xl in enumerate(seeds):
        rows, offs = [], []
        for j, xj in enumerate(seeds):
            if j == l:
                continue
            rows.append(2.0 * (xj - xl))
            offs.append(float(xj @ xj - xl @ xl))
        if rows:
            cell = intersect(X_eta, HPolytope(np.array(rows), np.array(offs)))
        else:
            cell = X_eta
        cells.append(prune_polytope(cell))
    return cells


def classify_voronoi(seeds, x) -> int:
    """Index of the nearest seed; ties resolved to the lowest index."""
    x = np.asarray(x, dtype=float).ravel()
    d = [float(np.linalg.norm(x - np.asarray(s, dtype=float))) for s in seeds]
    return int(np.argmin(d))


def tilde_h(Hc, hc, W: Zonotope) -> np.ndarray:
    """Per-row worst-case shrink of the target offsets by the disturbance.

    Exact for zonotopic W: h_r - H_r c_W - sum |H_r G_W|.
    """
    Hc = np.atleast_2d(np.asarray(Hc, dtype=float))
    hc = np.asarray(hc, dtype=float).ravel()
    return hc - Hc @ W.center - np.abs(Hc @ W.generators).sum(axis=1)


def _spectral_radius(M):
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def _max_vertex_radius(K, vertices, n):
    return max(_spectral_radius(v[:, :n] + v[:, n:] @ K) for v in vertices)


def _descend_gain(K0, vertices, n, margin=0.02, iters=200):
    """Numerical descent on the max closed-loop spectral radius over vertices."""
    K = K0.copy()
    best = _max_vertex_radius(K, vertices, n)
    step = 0.5
    for _ in range(iters):
        if best < 1.0 - margin:
            return K, best
        grad = np.zeros_like(K)
        eps = 1e-6
        for i in range(K.shape[0]):
            for j in range(K.shape[1]):
                Kp = K.copy()
                Kp[i, j] += eps
                grad[i, j] = (_max_vertex_radius(Kp, vertices, n) - best) / eps
        gn = np.linalg.norm(grad)
        if gn < 1e-12:
            break
        improved = False
        while step > 1e-8:
            Kc = K - step * grad / gn
            cand = _max_vertex_radius(Kc, vertices, n)
            if cand < best - 1e-12:
                K, best = Kc, cand
                step = min(step * 2.0, 1.0)
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return K, best


def synthesize_rci(M: MatrixZonotope, x_e, u_e, W: Zonotope, U: HPolytope,
                   X_eta: HPolytope, K=None, eq_tol: float = 0.2,
                   g_max: int | None = None, radius_floor=None,
                   decay: float = 0.6):
    """Terminal gain and robust control invariant set around (x_e, u_e).

    The gain must stabilize every vertex model; the invariant set is the
    fixed point of the closed-loop error recursion over the vertex models
    (equilibrium residuals folded into the disturbance), outer-boxed, and the
    invariance, domain, and input-authority contracts are verified explicitly.

    radius_floor widens the set so that the family recursion seeded from it
    (whose dynamics rows are tightened by the model uncertainty over the
    whole domain) starts from a nonempty one-step set.
    """
    x_e = np.asarray(x_e, dtype=float).ravel()
    u_e = np.asarray(u_e, dtype=float).ravel()
    n = x_e.size
    vertices = vertex_matrices(M, g_max)
    residuals = np.array([v[:, :n] @ x_e + v[:, n:] @ u_e - x_e for v in vertices])
    if np.abs(residuals).max(initial=0.0) > eq_tol:
        raise ValueError("(x_e, u_e) is not an approximate equilibrium of the model set")

    A_c, B_c = M.center[:, :n], M.center[:, n:]
    if K is None:
        # mild pole placement at `decay`: keeps the gain small enough that
        # the terminal law stays inside U on all of T0
        K0 = -np.linalg.pinv(B_c) @ (A_c - decay * np.eye(n))
        K, rho = _descend_gain(K0, vertices, n)
    else:
        K = np.atleast_2d(np.asarray(K, dtype=float))
        rho = _max_vertex_radius(K, vertices, n)
    if rho >= 1.0:
        raise ValueError(f"no stabilizing terminal gain found (max rho {rho:.3f})")

    # error recursion e+ = (A + B K) e + residual + w over vertex models
    cl = [v[:, :n] + v[:, n:] @ K for v in vertices]
    cl_c = sum(cl) / len(cl)
    dl = np.max(np.abs(np.array(cl) - cl_c), axis=0)  # entrywise vertex spread
    w_rad = (np.abs(W.generators).sum(axis=1)
             + np.abs(residuals).max(axis=0, initial=0.0).reshape(n)
             + np.abs(W.center))
    rad = np.zeros(n)
    for it in range(2000):
        nxt = np.abs(cl_c) @ rad + dl @ rad + w_rad
        if np.abs(nxt - rad).max() < RCI_TOL:
            rad = nxt
            break
        if nxt.max() > 1e6:
            raise ValueError("terminal set iteration diverges (gain too weak)")
        rad = nxt
    rad = rad * (1.0 + 1e-6) + 1e-12
    if radius_floor is not None:
        rad = np.maximum(rad, np.asarray(radius_floor, dtype=float))
    T0 = Zonotope.from_radius(x_e, rad)

    # invariance check, one-step image per vertex model
    hull = zonotope_to_hpolytope(T0)
    for v, r in zip(cl, residuals):
        img = Zonotope(v @ (T0.center - x_e) + x_e + r, v @ T0.generators)
        img = minkowski_sum(img, W)
        if not contains_set(hull, img, tol=1e-7):
            raise ValueError("terminal set invariance check failed")
    if not contains_set(X_eta, T0):
        raise ValueError("terminal set escapes the tracking domain")
    u_img = Zonotope(u_e, K @ T0.generators)
    if not contains_set(U, u_img):
        raise ValueError("terminal law exceeds the input constraints on T0")
    return K, T0


def rosc_step(target: HPolytope, M: MatrixZonotope, X: HPolytope, U: HPolytope,
              W: Zonotope, template=None, exact_vertex_limit: int = EXACT_VERTEX_LIMIT,
              g_max: int | None = None):
    """One-step controllable set of `target` in the augmented (x, u) space.

    Returns (Xi, C, inner): the pruned augmented polytope, its exact
    projection onto x, and a zonotopic inner approximation of Xi.

    The dynamics block intersects the per-vertex-model constraints when the
    vertex count is small; otherwise the equivalent single-row tightening
    over the X x U domain box is used (sound for every model in the set, and
    exact when the model set is a singleton).
    """
    n = X.dim
    m = U.dim
    Hc, hc = np.asarray(target.H), np.asarray(target.h)
    hshr = tilde_h(Hc, hc, W)
    vertices = vertex_matrices(M, g_max)
    blocks_H, blocks_h = [], []
    blocks_H.append(np.hstack([X.H, np.zeros((X.nrows, m))]))
    blocks_h.append(np.asarray(X.h))
    blocks_H.append(np.hstack([np.zeros((U.nrows, n)), U.H]))
    blocks_h.append(np.asarray(U.h))
    if len(vertices) <= exact_vertex_limit:
        for v in vertices:
            blocks_H.append(np.hstack([Hc @ v[:, :n], Hc @ v[:, n:]]))
            blocks_h.append(hshr)
    else:
        zmax = _domain_absmax(X, U)
        AB_c = M.center
        tight = np.zeros(Hc.shape[0])
        if M.order:
            # sum_i max_z |H_r G_i z| over the domain box
            HG = np.abs(np.einsum("qn,inp->iqp", Hc, M.generators))
            tight = (HG @ zmax).sum(axis=0)
        blocks_H.append(np.hstack([Hc @ AB_c[:, :n], Hc @ AB_c[:, n:]]))
        blocks_h.append(hshr - tight)
    Xi_raw = HPolytope(np.vstack(blocks_H), np.concatenate(blocks_h))
    if is_empty(Xi_raw):
        raise EmptyRoscError("augmented one-step set is empty")
    Xi = prune_polytope(Xi_raw)
    C = project(Xi, list(range(n)))
    if is_empty(C):
        raise EmptyRoscError("projected one-step set is empty")
    if template is None:
        template = _augmented_template(M, n, m)
    inner = inner_zonotope(Xi, template=template)
    return Xi, C, inner


def _domain_absmax(X: HPolytope, U: HPolytope):
    from .sets import _poly_bbox

    lox, hix = _poly_bbox(X)
    lou, hiu = _poly_bbox(U)
    return np.concatenate([np.maximum(np.abs(lox), np.abs(hix)),
                           np.maximum(np.abs(lou), np.abs(hiu))])


def model_tightening_radius(M: MatrixZonotope, X: HPolytope, U: HPolytope,
                            W: Zonotope):
    """Per-state-dimension worst-case dynamics-row tightening over the domain.

    Used to size terminal sets so the family recursion starts nonempty:
    sum_i |G_i| zmax plus the disturbance radius.
    """
    zmax = _domain_absmax(X, U)
    w_rad = np.abs(W.generators).sum(axis=1) + np.abs(W.center)
    return M.entry_radius() @ zmax + w_rad


def _augmented_template(M: MatrixZonotope, n, m):
    """Axis directions plus input-compensated state directions.

    The compensated directions (e_i, -pinv(B) A e_i) run along the edges of
    the augmented set that axis-aligned templates miss.
    """
    A_c, B_c = M.center[:, :n], M.center[:, n:]
    Binv = np.linalg.pinv(B_c)
    dirs = [np.eye(n + m)]
    comp = np.zeros((n, n + m))
    comp[:, :n] = np.eye(n)
    comp[:, n:] = (-Binv @ A_c).T
    dirs.append(comp)
    return np.vstack(dirs)


def build_family(cell: EquilibriumCell, M: MatrixZonotope, X_eta: HPolytope,
                 U: HPolytope, W: Zonotope,
                 coverage_target: float = COVERAGE_TARGET,
                 j_max: int = J_MAX,
                 n_samples: int = COVERAGE_SAMPLES,
                 seed: int = 0,
                 coverage_points=None,
                 exact_vertex_limit: int = EXACT_VERTEX_LIMIT) -> RoscFamily:
    """Grow the cell's one-step controllable family until it covers the cell.

    Coverage is the sampled fraction of the Voronoi cell (or of the explicit
    coverage_points) lying in the union of levels. A stalled union stops the
    loop and is reported on the family rather than raised.
    """
    if coverage_points is None:
        pts = _sample_polytope(cell.V, n_samples, seed)
    else:
        pts = np.asarray(coverage_points, dtype=float)
    C0 = prune_polytope(zonotope_to_hpolytope(cell.T0))
    covered = _membership_mask(C0, pts)
    C_list = [C0]
    Xi_list = [None]
    inner_list = [None]
    coverage = float(covered.mean())
    stalled = False
    stall_count = 0
    template = None
    bbox = _level_bbox(C0)
    for _ in range(j_max):
        if coverage >= coverage_target:
            break
        try:
            Xi, C, inner = rosc_step(C_list[-1], M, X_eta, U, W,
                                     template=template,
                                     exact_vertex_limit=exact_vertex_limit)
        except EmptyRoscError:
            stalled = True
            break
        C_list.append(C)
        Xi_list.append(Xi)
        inner_list.append(inner)
        covered |= _membership_mask(C, pts)
        new_cov = float(covered.mean())
        new_bbox = _level_bbox(C)
        growing = (new_cov - coverage >= _STALL_DELTA
                   or (new_bbox - bbox).max() > 1e-6)
        bbox = np.maximum(bbox, new_bbox)
        if growing:
            stall_count = 0
        else:
            stall_count += 1
            if stall_count >= _STALL_STEPS:
                coverage = new_cov
                stalled = True
                break
        coverage = new_cov
    return RoscFamily(cell=cell, C=tuple(C_list), Xi=tuple(Xi_list),
                      inner=tuple(inner_list), coverage=coverage,
                      stalled=stalled and coverage < coverage_target)


def _level_bbox(p: HPolytope):
    """Signed bounding-box vector (hi, -lo): any increase means growth."""
    from .sets import _poly_bbox

    lo, hi = _poly_bbox(p)
    return np.concatenate([hi, -lo])


def _membership_mask(p: HPolytope, pts):
    return (pts @ p.H.T <= p.h + EPS_FEAS).all(axis=1)
