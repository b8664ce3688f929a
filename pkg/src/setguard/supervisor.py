"""Controller-side anomaly detection and tracking supervision.

The detector flags a measurement that falls outside the one-step reachable
set predicted from the previous received state and the input the plant is
believed to have applied (a mirror of the plant-side dispatch logic supplies
that input, so consistency returns after emergency episodes). While flagged,
the supervisor runs the tracking law open loop on the forward tube and
invalidates the transmitted input the moment the predicted tube leaves the
safe domain or the tracking-loss index stops improving.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._rng import philox
from .ctrlsets import classify_voronoi
from .reach import (
    TUBE_HORIZON_CAP,
    ReachTube,
    extend_tube,
    reset_tube,
    rors_point,
    rors_set,
)
from .safety import PlantGuard, SafetyState
from .sets import (
    HPolytope,
    Zonotope,
    contains_point,
    contains_set,
    sup_distance,
    zonotope_to_hpolytope,
)

STOP_NONE = ""
STOP_TUBE_EXIT = "tube_exit"
STOP_INDEX_INCREASE = "index_increase"

DEFAULT_CLEAR_STREAK = 3
DEFAULT_J_SAMPLES = 2000
_J_SEED_STREAM = 0x4A


@dataclass(frozen=True)
class DetectorState:
    last_trusted_x: np.ndarray | None
    last_trusted_k: int
    d: int
    tau: int
    streak: int = 0
    clear_streak: int = DEFAULT_CLEAR_STREAK


@dataclass(frozen=True)
class IndexTable:
    """Offline tracking-loss indices between cells.

    I = alpha * I1 + beta * I2 elementwise; sorted_rows[r] lists the cell
    indices in ascending I(., r) order.
    """

    I1: np.ndarray
    I2: np.ndarray
    alpha: float
    beta: float

    @property
    def I(self):
        return self.alpha * self.I1 + self.beta * self.I2

    @property
    def sorted_rows(self):
        table = self.I
        return [tuple(int(i) for i in np.argsort(table[:, r], kind="stable"))
                for r in range(table.shape[1])]


@dataclass
class SupervisorState:
    tube: ReachTube | None = None
    J_prev: float | None = None
    stopped: bool = False
    r_cell: int | None = None
    stop_reason: str = STOP_NONE


def detect(x_recv, tube_1step: Zonotope) -> int:
    """1 iff the received measurement is inconsistent with every
    data-consistent model plus noise (outside the predicted one-step set)."""
    return 0 if contains_point(tube_1step, x_recv) else 1


def index_I1(cells, l_i: int, l_j: int) -> float:
    """Steady-state tracking-error proxy: farthest point of T0_i from x_e_j."""
    return sup_distance(cells[l_i].T0, cells[l_j].x_e)


def index_I2(cells, families_aux, l_i: int, l_j: int,
             n_points: int = 1000, seed: int = 0) -> int:
    """Recovery-steps proxy: smallest p with T0_i inside the first p+1 levels
    of cell j's auxiliary family (sampled); N_j + 1 as a sentinel when no
    level count achieves containment."""
    fam = families_aux[l_j]
    T0 = cells[l_i].T0
    rng = philox(seed, l_i, l_j)
    beta = rng.uniform(-1, 1, size=(n_points, T0.order))
    pts = T0.center + beta @ T0.generators.T
    remaining = np.ones(len(pts), dtype=bool)
    for p, c in enumerate(fam.C):
        inside = (pts[remaining] @ c.H.T <= c.h + 1e-9).all(axis=1)
        idx = np.flatnonzero(remaining)
        remaining[idx[inside]] = False
        if not remaining.any():
            return p
    return fam.N + 1


def build_index_table(cells, families_aux, alpha: float, beta: float,
                      n_points: int = 1000, seed: int = 0) -> IndexTable:
    L = len(cells)
    I1 = np.zeros((L, L))
    I2 = np.zeros((L, L))
    for i in range(L):
        for j in range(L):
            I1[i, j] = index_I1(cells, i, j)
            if beta > 0 and families_aux is not None:
                I2[i, j] = index_I2(cells, families_aux, i, j,
                                    n_points=n_points, seed=seed)
    return IndexTable(I1=I1, I2=I2, alpha=alpha, beta=beta)


def index_J(tube_next: Zonotope, seeds, I_col, n_samples: int = DEFAULT_J_SAMPLES,
            seed=0):
    """Volume-weighted tracking index of the predicted tube (Monte Carlo).

    Samples the tube uniformly (bounding-box rejection), classifies each
    sample into its Voronoi cell, and weights the per-cell index by the hit
    fractions. Returns (J, standard error). A degenerate tube classifies its
    center with weight one.
    """
    I_col = np.asarray(I_col, dtype=float)
    seeds_arr = np.asarray(seeds, dtype=float)
    rad = tube_next.radius_vector()
    if rad.max(initial=0.0) < 1e-12:
        cell = classify_voronoi(seeds_arr, tube_next.center)
        return float(I_col[cell]), 0.0
    poly = zonotope_to_hpolytope(tube_next)
    lo, hi = tube_next.bounding_box()
    rng = philox(*seed) if isinstance(seed, tuple) else philox(seed)
    H, h = np.asarray(poly.H), np.asarray(poly.h)
    hits = []
    for _ in range(200):
        cand = rng.uniform(lo, hi, size=(4 * n_samples, tube_next.dim))
        ok = (cand @ H.T <= h + 1e-12).all(axis=1)
        hits.append(cand[ok])
        if sum(len(x) for x in hits) >= n_samples:
            break
    pts = np.vstack(hits)[:n_samples]
    d2 = ((pts[:, None, :] - seeds_arr[None, :, :]) ** 2).sum(axis=2)
    cell_of = np.argmin(d2, axis=1)
    vals = I_col[cell_of]
    J = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return J, se


class ControllerSide:
    """Per-step controller-side loop: detector, mirror, tracking supervisor.

    mode 'proposed' runs the full supervisor; 'ec_only' invalidates the input
    for as long as the detector is flagged (the conservative baseline).
    """

    def __init__(self, M, W, X_eta: HPolytope, U: HPolytope, cells, families,
                 index_table: IndexTable, tracking_law, tau: int,
                 clear_streak: int = DEFAULT_CLEAR_STREAK,
                 mode: str = "proposed",
                 j_samples: int = DEFAULT_J_SAMPLES,
                 j_hysteresis_se: float = 1.0,
                 seed: int = 0):
        if mode not in ("proposed", "ec_only"):
            raise ValueError(f"unknown mode {mode!r}")
        self.M = M
        self.W = W
        self.X_eta = X_eta
        self.U = U
        self.cells = cells
        self.seeds = [c.x_e for c in cells]
        self.index_table = index_table
        self.eta = tracking_law
        self.mode = mode
        self.j_samples = j_samples
        self.j_hyst = j_hysteresis_se
        self.seed = seed
        self.u_inv = self._invalid_input(U)
        self.det = DetectorState(last_trusted_x=None, last_trusted_k=-1,
                                 d=0, tau=tau, clear_streak=clear_streak)
        self.sup = SupervisorState()
        self.mirror = PlantGuard(M, W, U, X_eta, cells, families)
        self.mirror_state = SafetyState()
        self._recv_buffer: list = []   # received measurements per step
        self._applied_buffer: list = []  # mirror-predicted applied inputs
        self.events: list = []
        self.tube_history: list = []   # per-step tube sections for plotting

    @staticmethod
    def _invalid_input(U: HPolytope):
        from .sets import _poly_bbox

        lo, hi = _poly_bbox(U)
        u = (lo + hi) / 2.0
        u[0] += hi[0] - lo[0]  # 2x the box radius along the first axis
        return u

    # ------------------------------------------------------------------

    def _consistent(self, k, x_recv):
        if k == 0 or not self._recv_buffer:
            return True
        x_prev = self._recv_buffer[-1]
        u_prev = self._applied_buffer[-1]
        pred = rors_point(self.M, x_prev, u_prev, self.W)
        return detect(x_recv, pred) == 0

    def _build_tube(self, k):
        anchor_idx = max(0, k - self.det.tau - 1)
        tube = reset_tube(self._recv_buffer[anchor_idx], k=anchor_idx)
        for t in range(anchor_idx, k):
            tube = extend_tube(tube, self.M, self._applied_buffer[t], self.W)
        return tube

    def step(self, k: int, x_recv, r_k):
        """Process the received measurement, return the transmitted input and
        a log record."""
        x_recv = np.asarray(x_recv, dtype=float).ravel()
        r_k = np.asarray(r_k, dtype=float).ravel()
        consistent = self._consistent(k, x_recv)
        det = self.det
        log = {"d": det.d, "J": np.nan, "stop_reason": STOP_NONE,
               "tube_reset": 0, "xhat": x_recv.copy()}

        if consistent:
            det = replace(det, streak=det.streak + 1)
        else:
            det = replace(det, streak=0)
            # a failed consistency test invalidates the mirror's cell latch
            self.mirror_state = replace(self.mirror_state, active_cell=None)

        if det.d == 0:
            if not consistent:
                det = replace(det, d=1)
                self.sup = SupervisorState(tube=self._build_tube(k))
                self.events.append((k, "detect"))
                self._snapshot_tube(k)
            else:
                det = replace(det, last_trusted_x=x_recv, last_trusted_k=k)
        else:
            if consistent and det.streak >= det.clear_streak:
                det = replace(det, d=0, last_trusted_x=x_recv, last_trusted_k=k)
                self.sup = SupervisorState()
                log["tube_reset"] = 1
                self.events.append((k, "clear"))
        self.det = det
        log["d"] = det.d

        if det.d == 0:
            u = self.eta(x_recv, r_k)
        elif self.mode == "ec_only":
            u = self.u_inv
        else:
            u, log = self._ts_step(k, x_recv, r_k, log)

        u_pred, self.mirror_state, _ = self.mirror.plant_side_step(
            u, x_recv, self.mirror_state)
        self._recv_buffer.append(x_recv.copy())
        self._applied_buffer.append(np.asarray(u_pred, dtype=float).ravel())
        return u, log

    def _snapshot_tube(self, k):
        tube = self.sup.tube
        if tube is None:
            return
        z = tube.last
        self.tube_history.append({
            "k": int(k), "anchor_k": int(tube.anchor_k),
            "center": z.center.tolist(), "generators": z.generators.tolist(),
        })

    def _ts_step(self, k, x_recv, r_k, log):
        """Open-loop tracking on the tube with the two stopping conditions
        (domain exit checked before index increase)."""
        sup = self.sup
        if sup.stopped or sup.tube is None:
            log["stop_reason"] = sup.stop_reason
            return self.u_inv, log
        if sup.tube.horizon >= TUBE_HORIZON_CAP:
            # cannot predict further: treat like a domain-exit stop
            sup.stopped = True
            sup.stop_reason = STOP_TUBE_EXIT
            log["stop_reason"] = STOP_TUBE_EXIT
            self.events.append((k, STOP_TUBE_EXIT))
            return self.u_inv, log
        xhat = sup.tube.last.center
        log["xhat"] = xhat.copy()
        u = self.eta(xhat, r_k)
        ahead = rors_set(self.M, sup.tube.last, u, self.W)
        if not contains_set(self.X_eta, ahead):
            sup.stopped = True
            sup.stop_reason = STOP_TUBE_EXIT
            log["stop_reason"] = STOP_TUBE_EXIT
            self.events.append((k, STOP_TUBE_EXIT))
            return self.u_inv, log
        l_r = classify_voronoi(self.seeds, r_k)
        sup.r_cell = l_r
        I_col = self.index_table.I[:, l_r]
        J_next, se = index_J(ahead, self.seeds, I_col,
                             n_samples=self.j_samples,
                             seed=(self.seed, _J_SEED_STREAM, k))
        log["J"] = J_next
        if sup.J_prev is not None and J_next > sup.J_prev + self.j_hyst * max(se, 1e-12):
            sup.stopped = True
            sup.stop_reason = STOP_INDEX_INCREASE
            log["stop_reason"] = STOP_INDEX_INCREASE
            self.events.append((k, STOP_INDEX_INCREASE))
            return self.u_inv, log
        sup.tube = extend_tube(sup.tube, self.M, u, self.W)
        sup.J_prev = J_next
        self._snapshot_tube(k + 1)
        return u, log


def supervisor_loop(controller: ControllerSide, measurements, references):
    """Drive the controller over a measurement/reference stream; returns the
    transmitted inputs and per-step logs."""
    outs, logs = [], []
    for k, (x, r) in enumerate(zip(measurements, references)):
        u, log = controller.step(k, x, r)
        outs.append(u)
        logs.append(log)
    return outs, logs
