"""Acceptance suite: one test per shipped guarantee, run at stated tolerances.

Each test records a PASS/FAIL line that is printed in the terminal summary
(see conftest.py).
"""

import time

import numpy as np
import pytest

from setguard import ctrlsets, sysid
from setguard._rng import philox
from setguard.safety import SafetyState
from setguard.sets import (
    EPS_FEAS,
    HPolytope,
    MatrixZonotope,
    Zonotope,
    contains_point,
)
from setguard.reach import rors_point
from setguard.sim import check_safety, metric_er

from .conftest import record_acceptance

CSTR_A = np.array([[0.9719, 0.0013], [0.0340, 0.8628]])
CSTR_B = np.array([[-0.0839, 0.0232], [0.0761, 0.4144]])

N_SEEDS = 10


@pytest.fixture(scope="module")
def runs(cstr_assets):
    """Closed-loop traces for all modes and seeds, with per-run wall time."""
    out = {"no_attack": [], "proposed": [], "ec_only": []}
    per_seed_time = []
    for seed in range(N_SEEDS):
        t0 = time.monotonic()
        for mode in out:
            out[mode].append(cstr_assets.simulate(seed=seed, mode=mode))
        per_seed_time.append(time.monotonic() - t0)
    out["per_seed_time"] = per_seed_time
    return out


def test_criterion_1_identification_soundness():
    """The identified model set contains the true matrices on 100 random
    stable 2-state/2-input systems with box noise."""
    t0 = time.monotonic()
    rng = np.random.default_rng(97)
    hits = 0
    total = 0
    while total < 100:
        A = rng.uniform(-1, 1, (2, 2))
        rho = max(abs(np.linalg.eigvals(A)))
        if rho > 0.95:
            A *= 0.9 / rho
        B = rng.uniform(-1, 1, (2, 2))
        w_rad = 10.0 ** rng.uniform(-4, -2)
        trajs = []
        for _ in range(2):
            x = rng.uniform(-1, 1, 2)
            xs, us = [x], []
            for _ in range(12):
                u = rng.uniform(-1, 1, 2)
                x = A @ x + B @ u + rng.uniform(-w_rad, w_rad, 2)
                us.append(u)
                xs.append(x)
            trajs.append((np.array(us).T, np.array(xs).T))
        bank = sysid.TrajectoryBank(
            trajectories=tuple(trajs), noise_center=np.zeros(2),
            noise_generators=tuple(w_rad * np.eye(2)[i] for i in range(2)))
        d = sysid.assemble(bank)
        if not sysid.check_rank(d):
            continue
        total += 1
        M = sysid.identify(d, sysid.noise_matrix_zonotope(bank))
        hits += sysid.membership_check(M, np.hstack([A, B]))
    elapsed = time.monotonic() - t0
    ok = hits == total == 100 and elapsed < 30.0
    record_acceptance(1, f"identification soundness {hits}/100 in {elapsed:.1f}s", ok)
    assert ok


def test_criterion_2_reachability_soundness(cstr_assets):
    """One-step reachable sets contain 1000 sampled true transitions of the
    reactor."""
    M = cstr_assets.bundle.M
    W = cstr_assets.bundle.W
    rng = np.random.default_rng(11)
    hits = 0
    for _ in range(1000):
        x = rng.uniform([-9, -27], [9, 27])
        u = rng.uniform([-2, -10], [2, 10])
        w = rng.uniform(-0.001, 0.001, 2)
        out = rors_point(M, x, u, W)
        hits += contains_point(out, CSTR_A @ x + CSTR_B @ u + w, tol=EPS_FEAS)
    ok = hits == 1000
    record_acceptance(2, f"reachability soundness {hits}/1000", ok)
    assert ok


def test_criterion_3_rosc_contract(cstr_assets):
    """Every level admits inputs that land in the previous level for every
    vertex model and sampled disturbance."""
    t0 = time.monotonic()
    b = cstr_assets.bundle
    verts = cstr_assets.vertices
    rng = np.random.default_rng(5)
    w_samples = rng.uniform(-0.001, 0.001, (100, 2))
    checked = 0
    failed = 0
    for fam in b.families:
        for j in range(1, fam.N + 1):
            pts = cstr_assets.sample_polytope(fam.C[j], 500, seed=1000 + j)
            prev = fam.C[j - 1]
            wmax = (w_samples @ prev.H.T).max(axis=0)
            for x in pts:
                u = cstr_assets.guard.feasible_input(fam.Xi[j], x)
                if u is None:
                    failed += 1
                    continue
                for v in verts:
                    img = v[:, :2] @ x + v[:, 2:] @ u
                    if not (prev.H @ img + wmax <= prev.h + 1e-7).all():
                        failed += 1
                        break
                checked += 1
    elapsed = time.monotonic() - t0
    budget = cstr_assets.synth_seconds + elapsed
    ok = failed == 0 and budget < 300.0
    record_acceptance(
        3, f"ROSC contract {checked - failed}/{checked} levels pass, "
           f"synth+check {budget:.0f}s", ok)
    assert ok


def test_criterion_4_model_based_degeneration():
    """Singleton model set, no disturbance: the one-step set equals the
    brute-force grid predecessor."""
    A = np.array([[1.0, 0.5], [0.0, 0.8]])
    B = np.array([[0.3], [1.0]])
    AB = np.hstack([A, B])
    M = MatrixZonotope(AB, np.zeros((0, 2, 3)))
    X = HPolytope.box([-5, -5], [5, 5])
    U = HPolytope.box([-1.0], [1.0])
    target = HPolytope.box([-1, -1], [1, 1])
    _, C, _ = ctrlsets.rosc_step(target, M, X, U, Zonotope.singleton([0, 0]))

    gx = np.linspace(-5, 5, 200)
    xs = np.array(np.meshgrid(gx, gx)).reshape(2, -1).T
    Ht, ht = np.asarray(target.H), np.asarray(target.h)
    a = Ht @ A @ xs.T
    bcol = (Ht @ B).ravel()
    lo = np.full(xs.shape[0], -1.0)
    hi = np.full(xs.shape[0], 1.0)
    feas = np.ones(xs.shape[0], dtype=bool)
    for r in range(len(ht)):
        rhs = ht[r] - a[r]
        if bcol[r] > 1e-12:
            hi = np.minimum(hi, rhs / bcol[r])
        elif bcol[r] < -1e-12:
            lo = np.maximum(lo, rhs / bcol[r])
        else:
            feas &= rhs >= -EPS_FEAS
    oracle = feas & (lo <= hi + EPS_FEAS)
    got = (xs @ C.H.T <= C.h + EPS_FEAS).all(axis=1)
    margin = np.abs(xs @ C.H.T - C.h).min(axis=1)
    decisive = margin > 1e-6
    mismatches = int((got[decisive] != oracle[decisive]).sum())
    ok = mismatches == 0
    record_acceptance(4, f"model-based degeneration, {mismatches} grid "
                         f"mismatches on 200x200", ok)
    assert ok


def test_criterion_5_ec_finite_time_recovery(cstr_assets):
    """From 100 activation states the terminal set is reached within the
    initial level count, the level strictly decreasing, over 10 seeds."""
    b = cstr_assets.bundle
    guard = cstr_assets.guard
    episodes = 0
    violations = 0
    for cell_idx, fam in enumerate(b.families):
        pts = cstr_assets.sample_polytope(fam.cell.V, 60, seed=50 + cell_idx)
        pts = [x for x in pts if fam.level_of(x) is not None][:20]
        for x0 in pts:
            for seed in range(10):
                rng = philox(0xEC, cell_idx, seed)
                x = x0.copy()
                st = SafetyState(f=0, active_cell=cell_idx)
                j0 = fam.level_of(x)
                j_prev = j0
                reached = j0 == 0
                ok_run = True
                for steps in range(1, j0 + 1):
                    u, st = guard.ec_step(x, st)
                    x = CSTR_A @ x + CSTR_B @ u + rng.uniform(-0.001, 0.001, 2)
                    j = fam.level_of(x)
                    if j is None or j >= j_prev:  # must strictly decrease
                        ok_run = False
                        break
                    j_prev = j
                    if j == 0:
                        reached = True
                        break
                if not (ok_run and reached):
                    violations += 1
                episodes += 1
    ok = violations == 0 and episodes == 1000
    record_acceptance(5, f"EC recovery {episodes - violations}/{episodes} "
                         f"episodes within the level bound", ok)
    assert ok


def test_criterion_6_end_to_end_safety(runs, cstr_assets):
    """Three-attack scenario, 10 seeds, zero constraint violations."""
    bad = 0
    for tr in runs["proposed"]:
        audit = check_safety(tr, cstr_assets.scenario.plant)
        if not all(audit.values()):
            bad += 1
    ok = bad == 0
    record_acceptance(6, f"end-to-end safety on {N_SEEDS} seeds "
                         f"({bad} violating runs)", ok)
    assert ok


def test_criterion_7_tracking_error_ordering(runs):
    """no-attack < proposed < baseline on every seed; median ratios within
    the stated factors; runtime below two minutes per seed."""
    na = np.array([metric_er(t) for t in runs["no_attack"]])
    pr = np.array([metric_er(t) for t in runs["proposed"]])
    ec = np.array([metric_er(t) for t in runs["ec_only"]])
    ordering = bool(((na < pr) & (pr < ec)).all())
    med_ok = (np.median(pr) <= 2 * np.median(na)
              and np.median(ec) >= 2 * np.median(pr))
    runtime_ok = max(runs["per_seed_time"]) < 120.0
    ok = ordering and med_ok and runtime_ok
    record_acceptance(
        7, "tracking-error ordering "
           f"(medians {np.median(na):.3f} < {np.median(pr):.3f} < "
           f"{np.median(ec):.3f}; worst seed time "
           f"{max(runs['per_seed_time']):.1f}s)", ok)
    assert ok


def _attack1_signature(tr):
    stop = tr.column("stop_reason")
    f = np.array(tr.column("f"))
    d = np.array(tr.column("d"))
    exits = [k for k in range(60, 111) if stop[k] == "tube_exit"]
    if not exits:
        return False
    k_stop = exits[0]
    ec_engaged = (f[k_stop:k_stop + 3] == 0).any()
    recovered = (f[130:200] == 1).all() and (d[130:200] == 0).all()
    return bool(ec_engaged and recovered)


def _attack2_signature(tr):
    reset = np.array(tr.column("tube_reset"))
    f = np.array(tr.column("f"))
    return bool(reset[200:290].sum() >= 1 and (f[195:290] == 1).all())


def _attack3_signature(tr):
    f = np.array(tr.column("f"))
    J = np.array(tr.column("J"))
    d = np.array(tr.column("d"))
    if not (f[395:435] == 1).all():
        return False
    ks = [k for k in range(398, 430) if d[k] == 1 and np.isfinite(J[k])]
    vals = J[ks]
    return bool(len(vals) >= 3 and (np.diff(vals) <= 1e-9).all())


def test_criterion_8_supervisor_signatures(runs):
    """Attack-specific behavior signatures on at least 8 of 10 seeds."""
    sig1 = sum(_attack1_signature(t) for t in runs["proposed"])
    sig2 = sum(_attack2_signature(t) for t in runs["proposed"])
    sig3 = sum(_attack3_signature(t) for t in runs["proposed"])
    ok = min(sig1, sig2, sig3) >= 8
    record_acceptance(8, f"supervisor signatures (stop+EC {sig1}/10, "
                         f"reset-no-EC {sig2}/10, monotone-J {sig3}/10)", ok)
    assert ok


def test_criterion_9_detector_properties(runs):
    """Zero false alarms attack-free; detection within tau of each onset."""
    false_alarms = sum(sum(t.column("d")) for t in runs["no_attack"])
    delays_ok = 0
    for tr in runs["proposed"]:
        d = np.array(tr.column("d"))
        good = all((d[onset:onset + 6] == 1).any()
                   for onset in (60, 200, 240, 400))
        delays_ok += good
    ok = false_alarms == 0 and delays_ok == N_SEEDS
    record_acceptance(9, f"detector: {false_alarms} false alarms over "
                         f"{N_SEEDS}x500 clean steps, delay<=tau on "
                         f"{delays_ok}/{N_SEEDS} seeds", ok)
    assert ok


def test_criterion_10_determinism(cstr_assets):
    """Identical (config, seed) pairs produce byte-identical trace CSVs."""
    a = cstr_assets.simulate(seed=4, mode="proposed").to_csv()
    b = cstr_assets.simulate(seed=4, mode="proposed").to_csv()
    ok = a == b
    record_acceptance(10, "byte-identical traces for identical config+seed", ok)
    assert ok
