"""Forward reachability over the identified model set.

One-step reachable sets propagate a state (or a state zonotope) through every
matrix in the model set plus the disturbance bound; the recursive tube is
anchored at the last trusted measurement and extended one applied input at a
time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sets import MatrixZonotope, Zonotope, minkowski_sum, reduce_girard

TUBE_GEN_ORDER = 30
TUBE_HORIZON_CAP = 200


def rors_point(M: MatrixZonotope, x, u, W: Zonotope) -> Zonotope:
    """Outer one-step reachable set from a known state under input u."""
    x = np.asarray(x, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    if x.size + u.size != M.shape[1]:
        raise ValueError("state/input dimensions do not match the model set")
    v = np.concatenate([x, u])
    gens = (M.generators @ v).T if M.order else np.zeros((M.shape[0], 0))
    img = Zonotope(M.center @ v, gens)
    return minkowski_sum(img, W)


def rors_set(M: MatrixZonotope, X: Zonotope, u, W: Zonotope) -> Zonotope:
    """Outer one-step reachable set from a state zonotope under input u.

    Exact terms: center x center, center matrix x state generators, matrix
    generators x center. The matrix-generator x state-generator cross terms
    are over-bounded by an interval (axis-aligned) contribution.
    """
    u = np.asarray(u, dtype=float).ravel()
    n = X.dim
    if n + u.size != M.shape[1]:
        raise ValueError("state/input dimensions do not match the model set")
    vc = np.concatenate([X.center, u])
    A_c = M.center[:, :n]
    center = M.center @ vc
    parts = []
    if X.order:
        parts.append(A_c @ X.generators)
    if M.order:
        parts.append((M.generators @ vc).T)
    if M.order and X.order:
        # |G_i[:, :n] @ G_X| summed over generators i and state columns j
        cross = np.abs(M.generators[:, :, :n] @ X.generators).sum(axis=(0, 2))
        if cross.max(initial=0.0) > 1e-15:
            parts.append(np.diag(cross))
    gens = np.hstack(parts) if parts else np.zeros((n, 0))
    return minkowski_sum(Zonotope(center, gens), W)


@dataclass(frozen=True)
class ReachTube:
    """Forward tube anchored at a trusted measurement.

    sets[0] is the singleton anchor; sets[t+1] is the one-step reachable set
    of sets[t] under inputs_applied[t].
    """

    anchor_k: int
    sets: tuple
    inputs_applied: tuple

    @property
    def horizon(self):
        return len(self.sets) - 1

    @property
    def last(self) -> Zonotope:
        return self.sets[-1]


def reset_tube(x_trusted, k: int = 0) -> ReachTube:
    """Fresh tube anchored at the singleton {x_trusted}."""
    return ReachTube(anchor_k=k, sets=(Zonotope.singleton(x_trusted),),
                     inputs_applied=())


def extend_tube(tube: ReachTube, M: MatrixZonotope, u, W: Zonotope,
                order: int = TUBE_GEN_ORDER) -> ReachTube:
    """Append the one-step reachable set of the last tube section under u."""
    if tube.horizon >= TUBE_HORIZON_CAP:
        raise ValueError("tube horizon cap exceeded")
    u = np.asarray(u, dtype=float).ravel()
    nxt = rors_set(M, tube.last, u, W)
    nxt = reduce_girard(nxt, order)
    return ReachTube(anchor_k=tube.anchor_k,
                     sets=tube.sets + (nxt,),
                     inputs_applied=tube.inputs_applied + (u.copy(),))


def tube_to_json(tube: ReachTube):
    return {
        "anchor_k": tube.anchor_k,
        "sets": [z.to_json() for z in tube.sets],
        "inputs_applied": [u.tolist() for u in tube.inputs_applied],
    }
