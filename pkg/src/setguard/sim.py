"""Closed-loop scenario engine.

True plant, networked tracking controller, false-data injectors on both
channels, and the wiring of the plant-side guard with the controller-side
supervisor. Traces are deterministic for a fixed (config, seed) pair and
serialize to a fixed-schema CSV.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ._rng import philox
from .safety import PlantGuard, SafetyState
from .sets import HPolytope, Zonotope, contains_point, contains_set, is_bounded
from .supervisor import ControllerSide

_W_STREAM = 0x77


@dataclass(frozen=True)
class PlantConfig:
    """True plant description. A and B are used only to generate data and to
    simulate; the controller modules never see them."""

    A: np.ndarray
    B: np.ndarray
    W: Zonotope
    X: HPolytope
    U: HPolytope
    x0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", np.atleast_2d(np.asarray(self.A, dtype=float)))
        object.__setattr__(self, "B", np.atleast_2d(np.asarray(self.B, dtype=float)))
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).ravel())
        for name, p in (("X", self.X), ("U", self.U)):
            if not is_bounded(p):
                raise ValueError(f"constraint set {name} must be bounded")
        if not contains_point(self.X, self.x0):
            raise ValueError("x0 violates the state constraints")


@dataclass(frozen=True)
class AttackSpec:
    """Additive ramp on one channel: offset + slope * (k - k_ref) inside the
    window, zero outside."""

    channel: str  # "measurement" | "actuation"
    window: tuple  # (k_start, k_end) inclusive
    offset: np.ndarray
    slope: np.ndarray
    k_ref: int

    def __post_init__(self):
        if self.channel not in ("measurement", "actuation"):
            raise ValueError(f"unknown attack channel {self.channel!r}")
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float).ravel())
        object.__setattr__(self, "slope", np.asarray(self.slope, dtype=float).ravel())
        object.__setattr__(self, "window", (int(self.window[0]), int(self.window[1])))

    def signal(self, k: int):
        k0, k1 = self.window
        if k0 <= k <= k1:
            return self.offset + self.slope * (k - self.k_ref)
        return np.zeros_like(self.offset)


def validate_attacks(attacks):
    """Windows must not overlap per channel."""
    for ch in ("measurement", "actuation"):
        spans = sorted(a.window for a in attacks if a.channel == ch)
        for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
            if b0 <= a1:
                raise ValueError(f"overlapping {ch} attack windows")


def inject(attacks, channel: str, k: int, clean):
    """clean + attack signal at step k (zero outside every window)."""
    out = np.asarray(clean, dtype=float).ravel().copy()
    for a in attacks:
        if a.channel == channel:
            out = out + a.signal(k)
    return out


@dataclass(frozen=True)
class ReferenceSchedule:
    """Piecewise-constant waypoints: list of (k_start, r). r holds from its
    k_start until the next waypoint."""

    waypoints: tuple

    def __post_init__(self):
        wps = sorted(((int(k), np.asarray(r, dtype=float).ravel())
                      for k, r in self.waypoints), key=lambda t: t[0])
        if not wps:
            raise ValueError("empty reference schedule")
        object.__setattr__(self, "waypoints", tuple(wps))

    def at(self, k: int):
        r = self.waypoints[0][1]
        for k0, rw in self.waypoints:
            if k >= k0:
                r = rw
            else:
                break
        return r


class TrackingLaw:
    """Saturated state-feedback tracking law with equilibrium feedforward.

    Shipped with the plant per the given-controller assumption; gains are
    chosen offline so the (shrunk) tracking domain stays invariant under it.
    """

    def __init__(self, K_t, ff_gain, u_lo, u_hi):
        self.K_t = np.atleast_2d(np.asarray(K_t, dtype=float))
        self.ff_gain = np.atleast_2d(np.asarray(ff_gain, dtype=float))
        self.u_lo = np.asarray(u_lo, dtype=float).ravel()
        self.u_hi = np.asarray(u_hi, dtype=float).ravel()

    def u_ref(self, r):
        return self.ff_gain @ np.asarray(r, dtype=float).ravel()

    def __call__(self, x, r):
        x = np.asarray(x, dtype=float).ravel()
        r = np.asarray(r, dtype=float).ravel()
        u = self.K_t @ (x - r) + self.u_ref(r)
        return np.clip(u, self.u_lo, self.u_hi)


TRACE_FIELDS_SCALAR = ["k", "d", "f", "l_bar", "j_bar", "J", "stop_reason",
                       "verdict", "alarm", "tube_reset"]


@dataclass
class ScenarioTrace:
    """Per-step record of the closed loop; replayable bit-exactly.

    tubes carries the supervisor's forward-tube sections (center plus
    generator matrix per step) for external plotting; it is a side channel,
    not part of the CSV schema.
    """

    columns: list
    rows: list = field(default_factory=list)
    tubes: list = field(default_factory=list, compare=False)

    def append(self, row):
        self.rows.append(row)

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def vector_column(self, prefix):
        idx = [i for i, c in enumerate(self.columns) if c.startswith(prefix + "_")]
        return np.array([[r[i] for i in idx] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ScenarioTrace":
        rows = list(csv.reader(io.StringIO(text)))
        out = cls(columns=rows[0])
        for raw in rows[1:]:
            out.append([_parse(c, v) for c, v in zip(rows[0], raw)])
        return out


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _parse(col, v):
    if col in ("k", "d", "f", "alarm", "tube_reset"):
        return int(v)
    if col in ("stop_reason", "verdict"):
        return v
    if col in ("l_bar", "j_bar"):
        return "" if v == "" else int(v)
    return float(v)


def trace_columns(n: int, m: int):
    cols = ["k"]
    for name, size in (("x_true", n), ("x_recv", n), ("u_sent", m),
                       ("u_recv", m), ("u_applied", m), ("r", n), ("xhat", n)):
        cols += [f"{name}_{i}" for i in range(size)]
    cols += ["d", "f", "l_bar", "j_bar", "J", "stop_reason", "verdict",
             "alarm", "tube_reset"]
    return cols


def plant_step(plant: PlantConfig, x, u_applied, rng):
    """True dynamics with a disturbance drawn from W (seeded)."""
    beta = rng.uniform(-1.0, 1.0, plant.W.generators.shape[1])
    w = plant.W.center + plant.W.generators @ beta
    x = np.asarray(x, dtype=float).ravel()
    return plant.A @ x + plant.B @ np.asarray(u_applied, dtype=float).ravel() + w


@dataclass
class Scenario:
    """Everything a closed-loop run needs besides the synthesis bundle."""

    plant: PlantConfig
    tracking: TrackingLaw
    X_eta: HPolytope
    reference: ReferenceSchedule
    attacks: tuple
    horizon: int
    tau: int
    clear_streak: int = 3
    alpha: float = 1.0
    beta: float = 0.0
    j_samples: int = 2000

    def __post_init__(self):
        validate_attacks(self.attacks)
        if not is_bounded(self.X_eta):
            raise ValueError("tracking domain X_eta must be bounded")


def run_scenario(scenario: Scenario, bundle, seed: int, mode: str = "proposed",
                 attacks_enabled: bool = True) -> ScenarioTrace:
    """Deterministic closed-loop run.

    Per-step order: measurement channel -> controller (detector, supervisor)
    -> actuation channel -> plant-side verification and dispatch -> plant.
    mode 'ec_only' disables the tracking supervisor (any detection
    immediately invalidates the input); attacks_enabled False yields the
    attack-free baseline trace.
    """
    plant = scenario.plant
    n = plant.A.shape[0]
    m = plant.B.shape[1]
    attacks = scenario.attacks if attacks_enabled else ()
    controller = ControllerSide(
        M=bundle.M, W=bundle.W, X_eta=scenario.X_eta, U=plant.U,
        cells=bundle.cells, families=bundle.families,
        index_table=bundle.index_table, tracking_law=scenario.tracking,
        tau=scenario.tau, clear_streak=scenario.clear_streak,
        mode="ec_only" if mode == "ec_only" else "proposed",
        j_samples=scenario.j_samples, seed=seed)
    guard = PlantGuard(bundle.M, bundle.W, plant.U, scenario.X_eta,
                       bundle.cells, bundle.families)
    guard_state = SafetyState()
    rng_w = philox(seed, _W_STREAM)
    x = plant.x0.copy()
    trace = ScenarioTrace(columns=trace_columns(n, m))
    for k in range(scenario.horizon):
        r_k = scenario.reference.at(k)
        x_recv = inject(attacks, "measurement", k, x)
        u_sent, log = controller.step(k, x_recv, r_k)
        u_recv = inject(attacks, "actuation", k, u_sent)
        u_applied, guard_state, verdict = guard.plant_side_step(
            u_recv, x, guard_state)
        row = ([k] + list(x) + list(x_recv) + list(u_sent) + list(u_recv)
               + list(u_applied) + list(r_k) + list(log["xhat"])
               + [int(log["d"]), int(guard_state.f),
                  "" if guard_state.active_cell is None else int(guard_state.active_cell),
                  "" if guard_state.level is None else int(guard_state.level),
                  float(log["J"]), log["stop_reason"], verdict,
                  int(guard_state.alarm), int(log["tube_reset"])])
        trace.append(row)
        x = plant_step(plant, x, u_applied, rng_w)
    trace.tubes = list(controller.tube_history)
    return trace


def baseline_ec_only(scenario: Scenario, bundle, seed: int) -> ScenarioTrace:
    """Identical wiring with the tracking supervisor disabled."""
    return run_scenario(scenario, bundle, seed, mode="ec_only")


def metric_er(trace: ScenarioTrace) -> float:
    """Mean Euclidean tracking error over the horizon."""
    x = trace.vector_column("x_true")
    r = trace.vector_column("r")
    return float(np.linalg.norm(x - r, axis=1).mean())


def check_safety(trace: ScenarioTrace, plant: PlantConfig) -> dict:
    """Per-step safety audit of a finished trace.

    Checks x in X, applied u in U, and the one-step worst-case image
    (true dynamics plus the disturbance bound) inside X.
    """
    x = trace.vector_column("x_true")
    u = trace.vector_column("u_applied")
    state_ok = (x @ plant.X.H.T <= plant.X.h + 1e-9).all()
    input_ok = (u @ plant.U.H.T <= plant.U.h + 1e-9).all()
    image_ok = True
    for xk, uk in zip(x, u):
        img = Zonotope(plant.A @ xk + plant.B @ uk + plant.W.center,
                       plant.W.generators)
        if not contains_set(plant.X, img):
            image_ok = False
            break
    return {"state_ok": bool(state_ok), "input_ok": bool(input_ok),
            "image_ok": bool(image_ok)}
