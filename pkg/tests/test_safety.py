import numpy as np

from setguard import safety
from setguard.safety import (
    VERDICT_SAFE,
    VERDICT_UNSAFE_INPUT,
    VERDICT_UNSAFE_REACH,
    SafetyState,
)
from setguard.sets import contains_point


def test_verify_rejects_out_of_range_input(cstr_assets):
    b = cstr_assets.bundle
    scn = cstr_assets.scenario
    v = safety.verify([5.0, 0.0], [0.0, 0.0], b.M, scn.plant.U, scn.X_eta, b.W)
    assert v == VERDICT_UNSAFE_INPUT


def test_verify_accepts_benign_input_deep_inside(cstr_assets):
    b = cstr_assets.bundle
    scn = cstr_assets.scenario
    v = safety.verify([0.0, 0.0], [0.0, 0.0], b.M, scn.plant.U, scn.X_eta, b.W)
    assert v == VERDICT_SAFE


def test_verify_flags_outward_push_near_boundary(cstr_assets):
    # near the domain boundary with the input shoving outward: the one-step
    # reachable set escapes the shrunk domain (the amplified-attack situation)
    b = cstr_assets.bundle
    scn = cstr_assets.scenario
    x = np.array([8.95, 26.5])
    u = np.array([-2.0, 10.0])  # pushes x2 up hard
    v = safety.verify(u, x, b.M, scn.plant.U, scn.X_eta, b.W)
    assert v == VERDICT_UNSAFE_REACH


def test_ec_step_terminal_branch(cstr_assets):
    guard = cstr_assets.guard
    cell = cstr_assets.bundle.cells[2]
    st = SafetyState(f=0, active_cell=2)
    u, st2 = guard.ec_step(cell.x_e, st)
    assert st2.f == 1
    assert st2.level == 0
    assert np.allclose(u, cell.u_e, atol=1e-9)


def test_ec_step_level_one_lands_in_terminal(cstr_assets):
    guard = cstr_assets.guard
    b = cstr_assets.bundle
    fam = b.families[2]
    pts = cstr_assets.sample_polytope(fam.C[1], 50, seed=11)
    hull0 = fam.C[0]
    rng = np.random.default_rng(3)
    for x in pts:
        st = SafetyState(f=0, active_cell=2)
        u, st2 = guard.ec_step(x, st)
        assert (b.U.H @ u <= b.U.h + 1e-7).all()
        for v in cstr_assets.vertices:
            for _ in range(5):
                w = rng.uniform(-0.001, 0.001, 2)
                nxt = v[:, :2] @ x + v[:, 2:] @ u + w
                assert contains_point(hull0, nxt, tol=1e-7)


def test_levels_strictly_decrease_under_ec(cstr_assets):
    guard = cstr_assets.guard
    b = cstr_assets.bundle
    scn = cstr_assets.scenario
    A, B = scn.plant.A, scn.plant.B
    fam = b.families[0]
    start = cstr_assets.sample_polytope(fam.C[min(5, fam.N)], 5, seed=21)
    rng = np.random.default_rng(7)
    for x in start:
        st = SafetyState(f=0, active_cell=0)
        j_prev = fam.level_of(x)
        for _ in range(fam.N + 2):
            u, st = guard.ec_step(x, st)
            x = A @ x + B @ u + rng.uniform(-0.001, 0.001, 2)
            j = fam.level_of(x)
            if st.f == 1:
                break
            assert j is not None and j_prev is not None
            assert j < j_prev
            j_prev = j
        assert st.f == 1


def test_plant_side_step_passthrough_when_safe(cstr_assets):
    guard = cstr_assets.guard
    st = SafetyState(f=1)
    u, st2, verdict = guard.plant_side_step([0.1, 0.2], [0.0, 0.0], st)
    assert verdict == VERDICT_SAFE
    assert np.allclose(u, [0.1, 0.2])
    assert st2.f == 1


def test_plant_side_step_latch_overrides_valid_input(cstr_assets):
    # f = 0 latches the emergency controller even for a valid-looking input
    guard = cstr_assets.guard
    fam = guard.families[2]
    x = cstr_assets.sample_polytope(fam.C[min(2, fam.N)], 1, seed=5)[0]
    st = SafetyState(f=0, active_cell=2, level=2)
    u, st2, verdict = guard.plant_side_step([0.0, 0.0], x, st)
    assert verdict == VERDICT_SAFE  # the received input itself was fine
    assert not np.allclose(u, [0.0, 0.0])  # but the EC output is applied
    assert st2.f in (0, 1)


def test_plant_side_step_invalid_input_activates_ec(cstr_assets):
    guard = cstr_assets.guard
    st = SafetyState(f=1)
    u, st2, verdict = guard.plant_side_step([4.0, 0.0], [0.0, 0.0], st)
    assert verdict == VERDICT_UNSAFE_INPUT
    assert (guard.U.H @ u <= guard.U.h + 1e-7).all()


def test_fallback_raises_alarm_outside_coverage(cstr_assets):
    guard = cstr_assets.guard
    # far corner of X (outside X_eta, hence outside every family level)
    st = SafetyState(f=0)
    u, st2 = guard.ec_step([9.9, 29.9], st)
    assert st2.alarm
    assert np.isfinite(u).all()


def test_feasible_input_matches_projection(cstr_assets):
    fam = cstr_assets.bundle.families[3]
    j = min(2, fam.N)
    inside = cstr_assets.sample_polytope(fam.C[j], 20, seed=9)
    for x in inside:
        assert cstr_assets.guard.feasible_input(fam.Xi[j], x) is not None
    # far outside the level: no feasible input
    assert cstr_assets.guard.feasible_input(fam.Xi[j], np.array([50.0, 50.0])) is None
