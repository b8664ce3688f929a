"""Data-driven model set construction.

Trajectory data is arranged into shifted data matrices; the set of all system
matrices [A, B] consistent with the data and the bounded process noise is a
matrix zonotope built from the noise concatenation and the right
pseudoinverse of the stacked state/input data.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .lp import is_feasible
from .sets import MatrixZonotope

RANK_TOL = 1e-10


@dataclass(frozen=True)
class TrajectoryBank:
    """Collected input-state trajectories plus the noise bound description.

    Each trajectory i carries inputs (m x N_i) and states (n x (N_i + 1)):
    one extra state sample for the one-step shift.
    """

    trajectories: tuple
    noise_center: np.ndarray
    noise_generators: tuple  # q vectors of length n

    def __post_init__(self):
        trajs = []
        for u, x in self.trajectories:
            u = np.atleast_2d(np.asarray(u, dtype=float))
            x = np.atleast_2d(np.asarray(x, dtype=float))
            if x.shape[1] != u.shape[1] + 1:
                raise ValueError("states must have exactly one more sample than inputs")
            if u.shape[1] < 1:
                raise ValueError("empty trajectory")
            trajs.append((u, x))
        if not trajs:
            raise ValueError("empty trajectory bank")
        n = trajs[0][1].shape[0]
        gens = tuple(np.asarray(g, dtype=float).ravel() for g in self.noise_generators)
        for g in gens:
            if g.size != n:
                raise ValueError("noise generator dimension mismatch")
        object.__setattr__(self, "trajectories", tuple(trajs))
        object.__setattr__(self, "noise_center",
                           np.asarray(self.noise_center, dtype=float).ravel())
        object.__setattr__(self, "noise_generators", gens)

    @property
    def n(self):
        return self.trajectories[0][1].shape[0]

    @property
    def m(self):
        return self.trajectories[0][0].shape[0]

    @property
    def total_samples(self):
        return sum(u.shape[1] for u, _ in self.trajectories)

    def to_json(self):
        return {
            "trajectories": [{"u": u.tolist(), "x": x.tolist()}
                             for u, x in self.trajectories],
            "noise": {"center": self.noise_center.tolist(),
                      "generators": [g.tolist() for g in self.noise_generators]},
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            trajectories=tuple((t["u"], t["x"]) for t in obj["trajectories"]),
            noise_center=np.array(obj["noise"]["center"]),
            noise_generators=tuple(np.array(g) for g in obj["noise"]["generators"]),
        )


@dataclass(frozen=True)
class DataMatrices:
    X_minus: np.ndarray
    U_minus: np.ndarray
    X_plus: np.ndarray

    @property
    def n(self):
        return self.X_minus.shape[0]

    @property
    def m(self):
        return self.U_minus.shape[0]

    @property
    def T(self):
        return self.X_minus.shape[1]


def assemble(bank: TrajectoryBank) -> DataMatrices:
    """Concatenate trajectories into X-, U-, and the one-step shift X+.

    The shift never crosses a trajectory boundary.
    """
    xm, um, xp = [], [], []
    for u, x in bank.trajectories:
        xm.append(x[:, :-1])
        xp.append(x[:, 1:])
        um.append(u)
    return DataMatrices(
        X_minus=np.hstack(xm), U_minus=np.hstack(um), X_plus=np.hstack(xp))


def check_rank(d: DataMatrices, tol: float = RANK_TOL) -> bool:
    """Full row rank of [X-; U-]: persistently exciting data."""
    stacked = np.vstack([d.X_minus, d.U_minus])
    if stacked.shape[1] < stacked.shape[0]:
        return False
    sv = np.linalg.svd(stacked, compute_uv=False)
    return bool(sv[-1] > tol * sv[0])


def noise_matrix_zonotope(bank: TrajectoryBank) -> MatrixZonotope:
    """Concatenation of per-step noise zonotopes into an n x T matrix zonotope.

    Generator (j + (i-1)T) places noise generator g_w^(i) in column j and
    zeros elsewhere.
    """
    n = bank.n
    T = bank.total_samples
    q = len(bank.noise_generators)
    center = np.tile(bank.noise_center[:, None], (1, T))
    gens = np.zeros((q * T, n, T))
    for i, g in enumerate(bank.noise_generators):
        for j in range(T):
            gens[j + i * T, :, j] = g
    return MatrixZonotope(center, gens)


def identify(d: DataMatrices, Mw: MatrixZonotope) -> MatrixZonotope:
    """Matrix zonotope of all [A, B] consistent with the data and noise.

    Center (X+ - C_w) D^dagger, generators G_i^w D^dagger with D = [X-; U-].
    The minus sign on the generators is dropped (the generator set is
    symmetric in beta), so tests must not compare generator signs.
    """
    if not check_rank(d):
        raise ValueError("data matrix [X-; U-] does not have full row rank")
    D = np.vstack([d.X_minus, d.U_minus])
    pinv = np.linalg.pinv(D, rcond=RANK_TOL)
    center = (d.X_plus - Mw.center) @ pinv
    gens = Mw.generators @ pinv if Mw.order else np.zeros((0,) + center.shape)
    return MatrixZonotope(center, gens)


def membership_check(M: MatrixZonotope, AB, tol: float = 1e-9) -> bool:
    """LP feasibility of C + sum_i beta_i G_i = AB with |beta_i| <= 1."""
    AB = np.atleast_2d(np.asarray(AB, dtype=float))
    if AB.shape != M.shape:
        raise ValueError(f"shape mismatch {AB.shape} vs {M.shape}")
    diff = (AB - M.center).ravel()
    if M.order == 0:
        return bool(np.abs(diff).max(initial=0.0) <= tol)
    A_eq = M.generators.reshape(M.order, -1).T  # (n*p, T)
    # quick screen: interval hull must contain AB entrywise
    if (np.abs(diff) > M.entry_radius().ravel() + tol).any():
        return False
    g = M.order
    rows = np.vstack([np.eye(g), -np.eye(g)])
    offs = np.ones(2 * g) + tol
    return is_feasible(rows, offs, A_eq, diff)


def reduce_matrix_zonotope(M: MatrixZonotope, g_max: int) -> MatrixZonotope:
    """Girard-style reduction: keep the largest generators, box the rest.

    The boxed remainder contributes one axis-aligned generator per nonzero
    entry, so the kept count is chosen to fit the g_max budget. The result is
    an outer approximation (every member of M is a member of the result).
    """
    if M.order <= g_max:
        return M
    n, p = M.shape
    flat = M.generators.reshape(M.order, -1)
    norms = np.linalg.norm(flat, axis=1)
    order = np.argsort(norms)[::-1]
    keep = max(0, g_max - n * p)
    kept = M.generators[order[:keep]]
    rest = M.generators[order[keep:]]
    radius = np.abs(rest).sum(axis=0)
    box_gens = []
    for a, b in itertools.product(range(n), range(p)):
        if radius[a, b] > 1e-15:
            gmat = np.zeros((n, p))
            gmat[a, b] = radius[a, b]
            box_gens.append(gmat)
    stack = list(kept) + box_gens
    gens = np.array(stack) if stack else np.zeros((0, n, p))
    return MatrixZonotope(M.center, gens)


def vertex_matrices(M: MatrixZonotope, g_max: int | None = None):
    """All sign-combination vertices C +/- sum G_i, order-reducing first if needed.

    Reduction only enlarges, so the vertices span an outer polytope of M.
    """
    n, p = M.shape
    if g_max is None:
        g_max = n * p
    red = reduce_matrix_zonotope(M, g_max) if M.order > g_max else M
    g = red.order
    if g == 0:
        return [red.center.copy()]
    if g > 24:
        raise ValueError(f"vertex enumeration with {g} generators is intractable")
    verts = []
    flat = red.generators.reshape(g, -1)
    for signs in itertools.product((-1.0, 1.0), repeat=g):
        verts.append(red.center + (np.asarray(signs) @ flat).reshape(n, p))
    return verts
