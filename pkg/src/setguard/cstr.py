"""Continuous stirred-tank reactor case study.

Linearized two-state reactor (concentration, temperature) with cooling
temperature and inlet concentration as inputs, 1 s sampling. Provides the
shipped data-collection routine, the tracking law, and the three-attack
scenario used by the acceptance suite.
"""

from __future__ import annotations

import numpy as np

from .sets import HPolytope, Zonotope
from .sim import AttackSpec, PlantConfig, ReferenceSchedule, Scenario, TrackingLaw
from .sysid import TrajectoryBank

A = np.array([[0.9719, 0.0013],
              [0.0340, 0.8628]])
B = np.array([[-0.0839, 0.0232],
              [0.0761, 0.4144]])

X_LO = np.array([-10.0, -30.0])
X_HI = np.array([10.0, 30.0])
U_LO = np.array([-2.0, -10.0])
U_HI = np.array([2.0, 10.0])
W_RAD = np.array([0.001, 0.001])
X0 = np.array([0.01, -0.01])

# tracking domain: state box shrunk 10% per axis
ETA_SHRINK = 0.9

# equilibrium seeds for the five-cell partition; each has a feedforward
# input strictly inside U (checked in tests)
EQUILIBRIUM_SEEDS = (
    np.array([4.0, 15.0]),
    np.array([-2.0, 10.0]),
    np.array([0.0, 0.0]),
    np.array([2.0, -10.0]),
    np.array([-4.0, -20.0]),
)

TAU = 5
CLEAR_STREAK = 3
HORIZON = 500
ALPHA, BETA = 1.0, 0.0

DATA_TRAJECTORIES = 4
DATA_STEPS = 100
DATA_SEED = 20240808

# waypoint schedule: visits the five equilibrium neighborhoods. The
# attack-1 waypoint sits near the domain boundary so the open-loop tube
# eventually violates it; the attack-2/3 waypoints sit near cell boundaries
# (far from every equilibrium), where parking at the terminal set is costly
WAYPOINTS = (
    (0, (0.0, 0.0)),
    (25, (8.7, 18.0)),       # attack 1 lives here (cell 1)
    (125, (4.3, 15.3)),
    (160, (-1.6, 9.2)),
    (185, (-6.5, -7.0)),     # attack 2 lives here (cell 4 corner)
    (285, (-3.6, -18.6)),
    (360, (-5.5, -6.0)),     # attack 3 lives here (cell 3 corner)
    (445, (-1.5, 9.0)),
)

ATTACKS = (
    AttackSpec(channel="measurement", window=(60, 110),
               offset=np.zeros(2), slope=np.array([0.01, 0.01]), k_ref=59),
    AttackSpec(channel="measurement", window=(200, 220),
               offset=np.zeros(2), slope=np.array([0.08, 0.08]), k_ref=199),
    AttackSpec(channel="measurement", window=(240, 260),
               offset=np.zeros(2), slope=np.array([0.1, 0.1]), k_ref=239),
    AttackSpec(channel="measurement", window=(400, 420),
               offset=np.zeros(2), slope=np.array([0.1, 0.1]), k_ref=399),
)


def state_box() -> HPolytope:
    return HPolytope.box(X_LO, X_HI)


def input_box() -> HPolytope:
    return HPolytope.box(U_LO, U_HI)


def eta_domain() -> HPolytope:
    return HPolytope.box(ETA_SHRINK * X_LO, ETA_SHRINK * X_HI)


def disturbance() -> Zonotope:
    return Zonotope(np.zeros(2), np.diag(W_RAD))


def plant_config() -> PlantConfig:
    return PlantConfig(A=A, B=B, W=disturbance(), X=state_box(),
                       U=input_box(), x0=X0)


def feedforward_gain():
    """u_ref(r) = B^-1 (I - A) r: exact equilibrium input of the true model."""
    return np.linalg.solve(B, np.eye(2) - A)


def _dare(A_, B_, Q, R, iters=500, tol=1e-12):
    P = Q.copy()
    for _ in range(iters):
        BtPB = R + B_.T @ P @ B_
        K = np.linalg.solve(BtPB, B_.T @ P @ A_)
        Pn = Q + A_.T @ P @ A_ - A_.T @ P @ B_ @ K
        if np.abs(Pn - P).max() < tol:
            P = Pn
            break
        P = Pn
    K = np.linalg.solve(R + B_.T @ P @ B_, B_.T @ P @ A_)
    return -K


def tracking_gain(q=(2.0, 2.0), r=(0.5, 0.1)):
    """LQR gain for the shipped tracking law."""
    return _dare(A, B, np.diag(q), np.diag(r))


def tracking_law() -> TrackingLaw:
    return TrackingLaw(K_t=tracking_gain(), ff_gain=feedforward_gain(),
                       u_lo=U_LO, u_hi=U_HI)


def collect_bank(seed: int = DATA_SEED, n_traj: int = DATA_TRAJECTORIES,
                 n_steps: int = DATA_STEPS) -> TrajectoryBank:
    """Input-state trajectories under uniform random inputs in U."""
    rng = np.random.default_rng(seed)
    trajs = []
    for _ in range(n_traj):
        x = rng.uniform(-0.5, 0.5, 2)
        xs = [x]
        us = []
        for _ in range(n_steps):
            u = rng.uniform(U_LO, U_HI)
            w = rng.uniform(-W_RAD, W_RAD)
            x = A @ x + B @ u + w
            us.append(u)
            xs.append(x)
        trajs.append((np.array(us).T, np.array(xs).T))
    return TrajectoryBank(
        trajectories=tuple(trajs),
        noise_center=np.zeros(2),
        noise_generators=tuple(np.diag(W_RAD)[i] for i in range(2)),
    )


def scenario(horizon: int = HORIZON) -> Scenario:
    return Scenario(
        plant=plant_config(),
        tracking=tracking_law(),
        X_eta=eta_domain(),
        reference=ReferenceSchedule(waypoints=WAYPOINTS),
        attacks=ATTACKS,
        horizon=horizon,
        tau=TAU,
        clear_streak=CLEAR_STREAK,
        alpha=ALPHA,
        beta=BETA,
    )
