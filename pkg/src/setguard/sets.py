"""Convex set kernel: zonotopes, H-polytopes, matrix zonotopes.

All set values are immutable after construction (backing arrays are marked
read-only) and every operation returns a new value, so sets are safe to share.
Membership and inclusion tests use the feasibility tolerance EPS_FEAS.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .lp import (
    LPInfeasibleError,
    LPUnboundedError,
    chebyshev_center,
    is_feasible,
    max_support,
    solve_lp,
)

EPS_FEAS = 1e-9

_PRUNE_SEED = 0x5E7B0B


def _freeze(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Zonotope:
    """{c + G beta : ||beta||_inf <= 1} with center c (n,) and generators G (n,g)."""

    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        c = _freeze(np.ravel(self.center))
        G = np.array(self.generators, dtype=float)
        if G.ndim == 1:
            G = G.reshape(len(c), -1)
        if G.size == 0:
            G = np.zeros((len(c), 0))
        if G.shape[0] != len(c):
            raise ValueError(f"generator rows {G.shape[0]} != dim {len(c)}")
        if not (np.isfinite(c).all() and np.isfinite(G).all()):
            raise ValueError("zonotope entries must be finite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", _freeze(G))

    @property
    def dim(self):
        return self.center.shape[0]

    @property
    def order(self):
        return self.generators.shape[1]

    @classmethod
    def box(cls, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return cls((lo + hi) / 2.0, np.diag((hi - lo) / 2.0))

    @classmethod
    def from_radius(cls, center, radius):
        return cls(center, np.diag(np.asarray(radius, dtype=float)))

    @classmethod
    def singleton(cls, point):
        point = np.asarray(point, dtype=float).ravel()
        return cls(point, np.zeros((point.size, 0)))

    def radius_vector(self):
        """Componentwise half-width of the bounding box."""
        return np.abs(self.generators).sum(axis=1)

    def bounding_box(self):
        r = self.radius_vector()
        return self.center - r, self.center + r

    def support(self, d):
        """max over the set of d'x (exact for zonotopes)."""
        d = np.asarray(d, dtype=float)
        return float(d @ self.center + np.abs(d @ self.generators).sum())

    def to_json(self):
        return {"type": "zonotope", "center": self.center.tolist(),
                "generators": self.generators.tolist()}

    @classmethod
    def from_json(cls, obj):
        return cls(np.array(obj["center"]), np.array(obj["generators"]))


@dataclass(frozen=True)
class HPolytope:
    """{x : H x <= h}. Rows are normalized to unit norm on construction."""

    H: np.ndarray
    h: np.ndarray
    normalize: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        H = np.atleast_2d(np.array(self.H, dtype=float))
        h = np.array(self.h, dtype=float).ravel()
        if H.shape[0] != h.shape[0]:
            raise ValueError("row count mismatch between H and h")
        if self.normalize and H.size:
            norms = np.linalg.norm(H, axis=1)
            ok = norms > 1e-14
            # zero rows with nonnegative offset are vacuous; with negative
            # offset they mark the canonical empty set and are kept as-is
            vac = ~ok & (h >= 0)
            keep = ok | ~vac
            Hn = H[keep].copy()
            hn = h[keep].copy()
            nz = np.linalg.norm(Hn, axis=1) > 1e-14
            Hn[nz] /= np.linalg.norm(Hn[nz], axis=1)[:, None]
            hn[nz] /= np.linalg.norm(H[keep][nz], axis=1)
            H, h = Hn, hn
        object.__setattr__(self, "H", _freeze(H))
        object.__setattr__(self, "h", _freeze(h))

    @property
    def dim(self):
        return self.H.shape[1]

    @property
    def nrows(self):
        return self.H.shape[0]

    @classmethod
    def box(cls, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        n = lo.size
        return cls(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([hi, -lo]))

    @classmethod
    def empty(cls, dim):
        return cls(np.zeros((1, dim)), np.array([-1.0]), normalize=False)

    def to_json(self):
        return {"type": "hpolytope", "H": self.H.tolist(), "h": self.h.tolist()}

    @classmethod
    def from_json(cls, obj):
        return cls(np.array(obj["H"]), np.array(obj["h"]), normalize=False)


@dataclass(frozen=True)
class MatrixZonotope:
    """{C + sum_i beta_i G_i : |beta_i| <= 1} over n x p matrices."""

    center: np.ndarray
    generators: np.ndarray  # (T, n, p)

    def __post_init__(self):
        C = _freeze(np.atleast_2d(np.array(self.center, dtype=float)))
        G = np.array(self.generators, dtype=float)
        if G.size == 0:
            G = np.zeros((0,) + C.shape)
        if G.ndim != 3 or G.shape[1:] != C.shape:
            raise ValueError("generators must be a stack of matrices shaped like the center")
        object.__setattr__(self, "center", C)
        object.__setattr__(self, "generators", _freeze(G))

    @property
    def shape(self):
        return self.center.shape

    @property
    def order(self):
        return self.generators.shape[0]

    def entry_radius(self):
        """Entrywise half-width of the interval hull."""
        if self.order == 0:
            return np.zeros_like(self.center)
        return np.abs(self.generators).sum(axis=0)

    def to_json(self):
        return {"type": "matrix_zonotope", "center": self.center.tolist(),
                "generators": self.generators.tolist()}

    @classmethod
    def from_json(cls, obj):
        return cls(np.array(obj["center"]), np.array(obj["generators"]))


# ---------------------------------------------------------------------------
# zonotope operations
# ---------------------------------------------------------------------------

def minkowski_sum(a: Zonotope, b: Zonotope) -> Zonotope:
    """Minkowski sum: centers add, generators concatenate."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch {a.dim} vs {b.dim}")
    return Zonotope(a.center + b.center, np.hstack([a.generators, b.generators]))


def linear_map(M, z: Zonotope) -> Zonotope:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] != z.dim:
        raise ValueError(f"matrix columns {M.shape[1]} != set dim {z.dim}")
    return Zonotope(M @ z.center, M @ z.generators)


def matzono_map(M: MatrixZonotope, v) -> Zonotope:
    """Image {Mv : M in the matrix zonotope} of a fixed vector, exact."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size != M.shape[1]:
        raise ValueError(f"vector length {v.size} != matrix columns {M.shape[1]}")
    gens = (M.generators @ v).T if M.order else np.zeros((M.shape[0], 0))
    return Zonotope(M.center @ v, gens)


def cartesian_product(a: Zonotope, b: Zonotope) -> Zonotope:
    c = np.concatenate([a.center, b.center])
    G = np.block([
        [a.generators, np.zeros((a.dim, b.order))],
        [np.zeros((b.dim, a.order)), b.generators],
    ])
    return Zonotope(c, G)


def reduce_girard(z: Zonotope, order: int) -> Zonotope:
    """Girard order reduction: box the smallest generators. Outer approximation."""
    g = z.order
    if g <= order:
        return z
    keep = max(order - z.dim, 0)
    G = z.generators
    score = np.abs(G).sum(axis=0) - np.abs(G).max(axis=0)
    idx = np.argsort(score)[::-1]
    kept = G[:, idx[:keep]]
    boxed = np.diag(np.abs(G[:, idx[keep:]]).sum(axis=1))
    return Zonotope(z.center, np.hstack([kept, boxed]))


def zonotope_vertices(z: Zonotope) -> np.ndarray:
    """Vertices of a zonotope: polygon walk for n=2, sign enumeration otherwise."""
    G = z.generators[:, np.abs(z.generators).sum(axis=0) > 1e-15]
    if G.shape[1] == 0:
        return z.center[None, :]
    if z.dim == 1:
        r = np.abs(G).sum()
        return np.array([[z.center[0] - r], [z.center[0] + r]])
    if z.dim == 2:
        return _polygon_vertices(z.center, G)
    if G.shape[1] > 20:
        raise ValueError("vertex enumeration limited to 20 generators above 2-D")
    signs = np.array(list(itertools.product([-1.0, 1.0], repeat=G.shape[1])))
    pts = z.center + signs @ G.T
    return _unique_rows(pts)


def _polygon_vertices(c, G):
    """Counterclockwise polygon of a 2-D zonotope via the sorted-angle walk."""
    G = G.copy()
    flip = (G[1] < 0) | ((G[1] == 0) & (G[0] < 0))
    G[:, flip] *= -1.0
    ang = np.arctan2(G[1], G[0])
    order = np.argsort(ang, kind="stable")
    G = G[:, order]
    start = c - G.sum(axis=1)
    pts = [start]
    p = start
    for i in range(G.shape[1]):
        p = p + 2 * G[:, i]
        pts.append(p)
    for i in range(G.shape[1]):
        p = p - 2 * G[:, i]
        pts.append(p)
    pts = np.array(pts[:-1])
    return _unique_rows(pts)


def _unique_rows(pts, decimals=9):
    _, idx = np.unique(np.round(pts, decimals), axis=0, return_index=True)
    return pts[np.sort(idx)]


def zonotope_to_hpolytope(z: Zonotope) -> HPolytope:
    """Exact H-representation, available for n <= 3 (facet normals from generators)."""
    n = z.dim
    G = z.generators[:, np.abs(z.generators).sum(axis=0) > 1e-15]
    if n == 1:
        r = np.abs(G).sum()
        return HPolytope(np.array([[1.0], [-1.0]]),
                         np.array([z.center[0] + r, -(z.center[0] - r)]))
    if n == 2:
        normals = np.column_stack([-G[1], G[0]]).T  # rotate each generator 90 deg
    elif n == 3:
        if G.shape[1] < 2:
            normals = np.eye(3)
        else:
            pairs = list(itertools.combinations(range(G.shape[1]), 2))
            normals = np.array([np.cross(G[:, i], G[:, j]) for i, j in pairs]).T
    else:
        raise ValueError("H-representation conversion supported for n <= 3")
    if normals.size == 0 or np.all(np.linalg.norm(normals, axis=0) < 1e-14):
        normals = np.eye(n)  # degenerate: fall back to the bounding box
    else:
        normals = normals[:, np.linalg.norm(normals, axis=0) > 1e-14]
        normals = normals / np.linalg.norm(normals, axis=0)
        if np.linalg.matrix_rank(np.asarray(G), tol=1e-12) < n:
            normals = np.hstack([normals, np.eye(n)])
    N = np.hstack([normals, -normals]).T
    N = _unique_rows(N, decimals=12)
    offs = N @ z.center + np.abs(N @ G).sum(axis=1)
    return HPolytope(N, offs)


# ---------------------------------------------------------------------------
# membership / inclusion
# ---------------------------------------------------------------------------

def contains_point(s, x, tol: float = EPS_FEAS) -> bool:
    """Exact membership test (inequality check for polytopes, LP for zonotopes)."""
    x = np.asarray(x, dtype=float).ravel()
    if isinstance(s, HPolytope):
        if x.size != s.dim:
            raise ValueError("dimension mismatch")
        if s.nrows == 0:
            return True
        return bool((s.H @ x <= s.h + tol).all())
    if isinstance(s, Zonotope):
        if x.size != s.dim:
            raise ValueError("dimension mismatch")
        d = x - s.center
        G = s.generators
        if G.shape[1] == 0:
            return bool(np.abs(d).max(initial=0.0) <= tol)
        # cheap necessary screens before the LP
        if (np.abs(d) > s.radius_vector() + tol).any():
            return False
        if s.dim <= 2:
            return contains_point(zonotope_to_hpolytope(s), x, tol)
        g = G.shape[1]
        rows = np.vstack([np.eye(g), -np.eye(g)])
        offs = np.ones(2 * g) + tol
        return is_feasible(rows, offs, G, d)
    raise TypeError(f"unsupported set type {type(s)!r}")


def contains_set(outer, inner: Zonotope, tol: float = EPS_FEAS) -> bool:
    """True iff the zonotope `inner` lies inside `outer` (support function test)."""
    if isinstance(outer, Zonotope):
        outer = zonotope_to_hpolytope(outer)
    if outer.dim != inner.dim:
        raise ValueError("dimension mismatch")
    if outer.nrows == 0:
        return True
    vals = outer.H @ inner.center + np.abs(outer.H @ inner.generators).sum(axis=1)
    return bool((vals <= outer.h + tol).all())


def is_empty(p: HPolytope) -> bool:
    if p.nrows == 0:
        return False
    zero = np.linalg.norm(p.H, axis=1) < 1e-14
    if (zero & (p.h < -EPS_FEAS)).any():
        return True
    return not is_feasible(p.H, p.h)


def is_bounded(p: HPolytope) -> bool:
    """Support-function finiteness in all +/- axis directions."""
    for i in range(p.dim):
        for sgn in (1.0, -1.0):
            d = np.zeros(p.dim)
            d[i] = sgn
            try:
                max_support(p.H, p.h, d)
            except LPUnboundedError:
                return False
            except LPInfeasibleError:
                return True
    return True


def intersect(a: HPolytope, b: HPolytope) -> HPolytope:
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    return HPolytope(np.vstack([a.H, b.H]), np.concatenate([a.h, b.h]), normalize=False)


# ---------------------------------------------------------------------------
# redundancy pruning
# ---------------------------------------------------------------------------

def prune_polytope(p: HPolytope, interior=None) -> HPolytope:
    """Drop rows implied by the others. The set is unchanged.

    Candidate facets are found by ray shooting from an interior point; the
    remaining rows are kept only if an LP shows they actually cut the
    candidate set.
    """
    q, n = p.H.shape
    if q <= n + 1:
        return p
    H, h = np.asarray(p.H), np.asarray(p.h)
    dup = _drop_duplicate_rows(H, h)
    H, h = H[dup], h[dup]
    q = H.shape[0]
    if interior is None:
        try:
            interior, rad = chebyshev_center(H, h)
        except LPInfeasibleError:
            return HPolytope.empty(n)
        if rad < 1e-9:
            interior = None
    keep_mask = np.zeros(q, dtype=bool)
    if interior is not None:
        rng = np.random.Generator(np.random.Philox(key=_PRUNE_SEED))
        dirs = rng.standard_normal((max(8 * q, 64), n))
        dirs = np.vstack([dirs, np.eye(n), -np.eye(n), H])
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        num = h - H @ interior  # >= 0 inside
        den = dirs @ H.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(den > 1e-12, num[None, :] / den, np.inf)
        hit = np.argmin(t, axis=1)
        finite = np.isfinite(t[np.arange(t.shape[0]), hit])
        keep_mask[np.unique(hit[finite])] = True
    kept = list(np.flatnonzero(keep_mask))
    if not kept:
        kept = [int(np.argmin(h - H @ interior))] if interior is not None else [0]
    for r in range(q):
        if keep_mask[r]:
            continue
        Hk, hk = H[kept], h[kept]
        try:
            val, _ = max_support(Hk, hk, H[r])
        except LPUnboundedError:
            val = np.inf
        except LPInfeasibleError:
            return HPolytope.empty(n)
        if val > h[r] + EPS_FEAS:
            kept.append(r)
    kept = sorted(kept)
    return HPolytope(H[kept], h[kept], normalize=False)


def _drop_duplicate_rows(H, h, decimals=12):
    """Keep exactly one row (the tightest offset) per duplicated normal."""
    Hr = np.round(H, decimals)
    order = np.lexsort(Hr.T[::-1])
    keep = np.ones(H.shape[0], dtype=bool)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and (Hr[order[j + 1]] == Hr[order[i]]).all():
            j += 1
        group = order[i:j + 1]
        if len(group) > 1:
            best = group[np.argmin(h[group])]
            keep[group] = False
            keep[best] = True
        i = j + 1
    return keep


# ---------------------------------------------------------------------------
# projection (Fourier-Motzkin with pruning)
# ---------------------------------------------------------------------------

def project(p: HPolytope, dims) -> HPolytope:
    """Exact orthogonal projection onto the coordinates in `dims`."""
    dims = list(dims)
    drop = [j for j in range(p.dim) if j not in dims]
    H, h = np.asarray(p.H), np.asarray(p.h)
    if is_empty(p):
        return HPolytope.empty(len(dims))
    for j in sorted(drop, reverse=True):
        H, h = _eliminate(H, h, j)
        if H.shape[0] > 3 * max(H.shape[1], 4):
            pr = prune_polytope(HPolytope(H, h, normalize=False))
            H, h = np.asarray(pr.H), np.asarray(pr.h)
    # reorder columns to match `dims`
    remaining = [j for j in range(p.dim) if j in dims]
    perm = [remaining.index(d) for d in dims]
    out = prune_polytope(HPolytope(H[:, perm], h))
    for i in range(out.dim):
        for sgn in (1.0, -1.0):
            d = np.zeros(out.dim)
            d[i] = sgn
            try:
                max_support(out.H, out.h, d)
            except LPUnboundedError:
                raise ValueError("projection is unbounded") from None
            except LPInfeasibleError:
                return HPolytope.empty(out.dim)
    return out


def _eliminate(H, h, j):
    """One Fourier-Motzkin elimination of column j."""
    col = H[:, j]
    pos = np.flatnonzero(col > 1e-12)
    neg = np.flatnonzero(col < -1e-12)
    zero = np.flatnonzero(np.abs(col) <= 1e-12)
    rows = [np.delete(H[zero], j, axis=1)]
    offs = [h[zero]]
    if pos.size and neg.size:
        Hp = H[pos] / col[pos][:, None]
        hp = h[pos] / col[pos]
        Hn = H[neg] / (-col[neg])[:, None]
        hn = h[neg] / (-col[neg])
        comb_H = Hp[:, None, :] + Hn[None, :, :]
        comb_h = hp[:, None] + hn[None, :]
        rows.append(np.delete(comb_H.reshape(-1, H.shape[1]), j, axis=1))
        offs.append(comb_h.ravel())
    H2 = np.vstack(rows)
    h2 = np.concatenate(offs)
    if H2.shape[0] == 0:
        return np.zeros((0, H.shape[1] - 1)), np.zeros(0)
    norms = np.linalg.norm(H2, axis=1)
    ok = norms > 1e-12
    trivial_ok = ~ok & (h2 >= -EPS_FEAS)
    if (~ok & ~trivial_ok).any():
        # 0 <= negative: empty set
        return np.zeros((1, H.shape[1] - 1)), np.array([-1.0])
    H2, h2 = H2[ok] / norms[ok][:, None], h2[ok] / norms[ok]
    keep = _drop_duplicate_rows(H2, h2)
    return H2[keep], h2[keep]


# ---------------------------------------------------------------------------
# vertex enumeration, distances, volume
# ---------------------------------------------------------------------------

def polytope_vertices(p: HPolytope) -> np.ndarray:
    """All vertices from n-subsets of facets; intended for n <= 4."""
    H, h = np.asarray(p.H), np.asarray(p.h)
    q, n = H.shape
    if n > 4:
        raise ValueError("vertex enumeration restricted to n <= 4")
    if q < n:
        raise ValueError("polytope is unbounded (too few rows)")
    verts = []
    for idx in itertools.combinations(range(q), n):
        sub = H[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        v = np.linalg.solve(sub, h[list(idx)])
        if (H @ v <= h + 1e-7).all():
            verts.append(v)
    if not verts:
        raise ValueError("no vertices found (empty or unbounded polytope)")
    return _unique_rows(np.array(verts), decimals=7)


def sup_distance(s, p) -> float:
    """max_{x in s} ||x - p||_2, exact via vertex enumeration."""
    p = np.asarray(p, dtype=float).ravel()
    if isinstance(s, Zonotope):
        try:
            verts = zonotope_vertices(s)
        except ValueError:
            lo, hi = s.bounding_box()
            return float(np.sqrt((np.maximum(np.abs(lo - p), np.abs(hi - p)) ** 2).sum()))
    elif isinstance(s, HPolytope):
        verts = polytope_vertices(s)
    else:
        raise TypeError(f"unsupported set type {type(s)!r}")
    return float(np.linalg.norm(verts - p, axis=1).max())


def sup_distance_bounds(s, p, n_samples: int = 2000, seed: int = 0):
    """(sampled lower bound, bounding-box upper bound) on sup distance."""
    p = np.asarray(p, dtype=float).ravel()
    if isinstance(s, Zonotope):
        lo, hi = s.bounding_box()
        rng = np.random.Generator(np.random.Philox(key=seed))
        beta = rng.uniform(-1, 1, size=(n_samples, s.order))
        pts = s.center + beta @ s.generators.T
    else:
        lo, hi = _poly_bbox(s)
        pts = _sample_polytope(s, n_samples, seed, (lo, hi))
    lower = float(np.linalg.norm(pts - p, axis=1).max(initial=0.0))
    upper = float(np.sqrt((np.maximum(np.abs(lo - p), np.abs(hi - p)) ** 2).sum()))
    return lower, upper


def _poly_bbox(p: HPolytope):
    lo = np.zeros(p.dim)
    hi = np.zeros(p.dim)
    for i in range(p.dim):
        d = np.zeros(p.dim)
        d[i] = 1.0
        hi[i], _ = max_support(p.H, p.h, d)
        v, _ = max_support(p.H, p.h, -d)
        lo[i] = -v
    return lo, hi


def _sample_polytope(p: HPolytope, n, seed, bbox=None):
    lo, hi = bbox if bbox is not None else _poly_bbox(p)
    rng = np.random.Generator(np.random.Philox(key=seed))
    out = []
    need = n
    H, h = np.asarray(p.H), np.asarray(p.h)
    for _ in range(200):
        cand = rng.uniform(lo, hi, size=(max(4 * need, 256), p.dim))
        ok = (cand @ H.T <= h + EPS_FEAS).all(axis=1)
        good = cand[ok]
        out.append(good[:need])
        need -= len(good[:need])
        if need <= 0:
            break
    if need > 0:
        raise ValueError("could not sample the polytope (near-degenerate?)")
    return np.vstack(out)


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    rel_stderr: float
    n_samples: int
    seed: int

    def __float__(self):
        return self.value


def volume_estimate(s, n_samples: int = 100_000, seed: int = 0) -> VolumeEstimate:
    """Monte Carlo volume: hit ratio over the bounding box times box volume.

    Deterministic for a fixed seed (counter-based Philox stream).
    """
    if isinstance(s, Zonotope):
        if s.dim <= 3:
            p = zonotope_to_hpolytope(s)
        else:
            raise ValueError("zonotope volume limited to n <= 3")
        lo, hi = s.bounding_box()
    else:
        p = s
        if is_empty(p):
            return VolumeEstimate(0.0, 0.0, n_samples, seed)
        if not is_bounded(p):
            raise ValueError("volume of an unbounded set")
        lo, hi = _poly_bbox(p)
    side = hi - lo
    if (side <= 1e-12).any():
        return VolumeEstimate(0.0, 0.0, n_samples, seed)
    box_vol = float(np.prod(side))
    rng = np.random.Generator(np.random.Philox(key=seed))
    H, h = np.asarray(p.H), np.asarray(p.h)
    hits = 0
    done = 0
    chunk = 200_000
    while done < n_samples:
        take = min(chunk, n_samples - done)
        pts = rng.uniform(lo, hi, size=(take, len(lo)))
        hits += int((pts @ H.T <= h + EPS_FEAS).all(axis=1).sum())
        done += take
    ratio = hits / n_samples
    vol = ratio * box_vol
    if 0 < ratio < 1:
        rel = float(np.sqrt(ratio * (1 - ratio) / n_samples) / ratio)
    else:
        rel = 0.0
    return VolumeEstimate(vol, rel, n_samples, seed)


def zonotope_volume_exact(z: Zonotope) -> float:
    """Exact zonotope volume: 2^n * sum over n-subsets |det G_S|. Test oracle."""
    n, g = z.dim, z.order
    if g < n:
        return 0.0
    total = 0.0
    for idx in itertools.combinations(range(g), n):
        total += abs(np.linalg.det(z.generators[:, idx]))
    return (2.0 ** n) * total


# ---------------------------------------------------------------------------
# inner zonotopic approximation
# ---------------------------------------------------------------------------

def inner_zonotope(p: HPolytope, template=None) -> Zonotope:
    """Largest templated zonotope inside p (two LPs).

    Containment of the candidate {c + sum_i s_i t_i b_i} is linear in the free
    center c and the nonnegative scales s_i through the support function on
    each facet. The first LP maximizes a single uniform scale (guaranteeing a
    full-rank result); the second grows the per-direction scales above that
    floor. The default template is axis-aligned directions plus the n longest
    edge directions of p (edges enumerated for n = 2).
    """
    H, h = np.asarray(p.H), np.asarray(p.h)
    q, n = H.shape
    if is_empty(p):
        raise ValueError("inner approximation of an empty polytope")
    if template is None:
        dirs = [np.eye(n)]
        if n == 2:
            try:
                edges = _longest_edge_dirs(p, k=n)
                if edges.size:
                    dirs.append(edges)
            except ValueError:
                pass
        template = np.vstack(dirs)
    T = np.asarray(template, dtype=float)
    T = T / np.linalg.norm(T, axis=1)[:, None]
    T = _unique_rows(np.where(T[:, [0]] < 0, -T, T), decimals=10)  # dedupe up to sign
    t = T.shape[0]
    absHT = np.abs(H @ T.T)
    # stage 1: vars (c, u), uniform scale u on every direction
    rows1 = np.block([[H, absHT.sum(axis=1, keepdims=True)],
                      [np.zeros((1, n)), -np.ones((1, 1))]])
    offs1 = np.concatenate([h, [0.0]])
    cost1 = np.zeros(n + 1)
    cost1[-1] = -1.0
    try:
        res1 = solve_lp(cost1, rows1, offs1)
    except LPInfeasibleError:
        raise ValueError("inner approximation of an empty polytope") from None
    floor = max(res1.x[-1], 0.0)
    # stage 2: vars (c, s); s_i >= floor, maximize total scale
    rows2 = np.block([[H, absHT], [np.zeros((t, n)), -np.eye(t)]])
    offs2 = np.concatenate([h, -floor * np.ones(t) + EPS_FEAS])
    cost2 = np.zeros(n + t)
    cost2[n:] = -1.0
    try:
        res2 = solve_lp(cost2, rows2, offs2)
        c = res2.x[:n]
        s = np.maximum(res2.x[n:], 0.0)
    except LPInfeasibleError:
        c = res1.x[:n]
        s = floor * np.ones(t)
    gens = (T * s[:, None]).T
    gens = gens[:, s > 1e-12]
    return Zonotope(c, gens)


def _longest_edge_dirs(p: HPolytope, k: int):
    verts = polytope_vertices(p)
    if len(verts) < 2:
        return np.zeros((0, p.dim))
    centroid = verts.mean(axis=0)
    ang = np.arctan2(verts[:, 1] - centroid[1], verts[:, 0] - centroid[0])
    order = np.argsort(ang)
    v = verts[order]
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.linalg.norm(edges, axis=1)
    pick = np.argsort(lengths)[::-1][:k]
    sel = edges[pick]
    sel = sel[np.linalg.norm(sel, axis=1) > 1e-12]
    return sel


__all__ = [
    "EPS_FEAS",
    "Zonotope",
    "HPolytope",
    "MatrixZonotope",
    "VolumeEstimate",
    "minkowski_sum",
    "linear_map",
    "matzono_map",
    "cartesian_product",
    "reduce_girard",
    "zonotope_vertices",
    "zonotope_to_hpolytope",
    "contains_point",
    "contains_set",
    "is_empty",
    "is_bounded",
    "intersect",
    "prune_polytope",
    "project",
    "polytope_vertices",
    "sup_distance",
    "sup_distance_bounds",
    "volume_estimate",
    "zonotope_volume_exact",
    "inner_zonotope",
    "solve_lp",
    "chebyshev_center",
    "LPInfeasibleError",
    "LPUnboundedError",
]
