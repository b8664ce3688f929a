import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setguard import sets as S

EPS = S.EPS_FEAS


# ---------------------------------------------------------------------------
# Minkowski sum
# ---------------------------------------------------------------------------

def test_minkowski_sum_definition():
    a = S.Zonotope([0, 0], np.eye(2))
    b = S.Zonotope([1, 1], 0.5 * np.eye(2))
    out = S.minkowski_sum(a, b)
    assert np.allclose(out.center, [1, 1])
    assert np.allclose(out.generators, np.hstack([np.eye(2), 0.5 * np.eye(2)]))


def test_minkowski_sum_identity():
    a = S.Zonotope([2.0, -1.0], [[1, 0.5], [0, 1]])
    out = S.minkowski_sum(a, S.Zonotope.singleton([0, 0]))
    assert np.allclose(out.center, a.center)
    assert np.allclose(out.generators, a.generators)


def test_minkowski_sum_interval_oracle():
    # interval arithmetic: [-1e-3,1e-3] + [-1e-3,1e-3] = [-2e-3,2e-3] per axis
    w = S.Zonotope([0, 0], 0.001 * np.eye(2))
    out = S.minkowski_sum(w, w)
    assert np.allclose(out.radius_vector(), [0.002, 0.002])
    assert np.allclose(out.center, [0, 0])


def test_minkowski_sum_dim_mismatch():
    with pytest.raises(ValueError):
        S.minkowski_sum(S.Zonotope([0], [[1.0]]), S.Zonotope([0, 0], np.eye(2)))


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------

def test_contains_point_box():
    z = S.Zonotope.box([-1, -1], [1, 1])
    assert S.contains_point(z, [0, 0])
    assert not S.contains_point(z, [1 + 2 * EPS, 0])


def test_contains_point_diamond():
    # beta = (1, 1) solves c + G beta = [2, 0]
    z = S.Zonotope([0, 0], [[1, 1], [1, -1]])
    assert S.contains_point(z, [2, 0])
    assert not S.contains_point(z, [2.01, 0])


def test_contains_point_hpolytope():
    p = S.HPolytope.box([-1, -1], [1, 1])
    assert S.contains_point(p, [1, 1])
    assert not S.contains_point(p, [1.001, 0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_membership_of_generated_points(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    g = int(rng.integers(0, 6))
    z = S.Zonotope(rng.standard_normal(n), rng.standard_normal((n, g)))
    beta = rng.uniform(-1, 1, g)
    x = z.center + z.generators @ beta
    assert S.contains_point(z, x)


def test_contains_set_basics():
    outer = S.HPolytope.box([-1, -1], [1, 1])
    assert S.contains_set(outer, S.Zonotope.box([-0.5, -0.5], [0.5, 0.5]))
    assert not S.contains_set(outer, S.Zonotope.box([-1.001, -1.001], [1.001, 1.001]))
    # support function: 0.9 + 0.05 <= 1 on each facet
    assert S.contains_set(outer, S.Zonotope([0.9, 0], 0.05 * np.eye(2)))
    assert not S.contains_set(outer, S.Zonotope([0.96, 0], 0.05 * np.eye(2)))


def test_contains_set_zonotope_outer():
    outer = S.Zonotope.box([-1, -1], [1, 1])
    assert S.contains_set(outer, S.Zonotope.box([-0.9, -0.9], [0.9, 0.9]))
    assert not S.contains_set(outer, S.Zonotope.box([-1.1, 0], [1.1, 0.1]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_containment_transitivity_sampled(seed):
    rng = np.random.default_rng(seed)
    inner = S.Zonotope(rng.uniform(-0.2, 0.2, 2), 0.3 * rng.standard_normal((2, 3)))
    outer = S.HPolytope.box([-2, -2], [2, 2])
    if S.contains_set(outer, inner):
        beta = rng.uniform(-1, 1, inner.order)
        x = inner.center + inner.generators @ beta
        assert S.contains_point(outer, x)


# ---------------------------------------------------------------------------
# linear maps
# ---------------------------------------------------------------------------

def test_linear_map_identity_and_zero():
    z = S.Zonotope([1, 2], [[1, 0], [0, 2]])
    same = S.linear_map(np.eye(2), z)
    assert np.allclose(same.center, z.center)
    assert np.allclose(same.generators, z.generators)
    zero = S.linear_map(np.zeros((2, 2)), z)
    assert np.allclose(zero.center, 0)
    assert np.allclose(zero.generators, 0)


def test_linear_map_axis_scaling():
    z = S.Zonotope.box([-1, -1], [1, 1])
    out = S.linear_map(np.diag([0.5, 2.0]), z)
    assert np.allclose(out.radius_vector(), [0.5, 2.0])


def test_matzono_map_singleton():
    m = S.MatrixZonotope(np.array([[0.5, 1.0]]), np.zeros((0, 1, 2)))
    out = S.matzono_map(m, [2.0, 1.0])
    assert out.center[0] == pytest.approx(2.0)
    assert out.order == 0
    out0 = S.matzono_map(m, [0.0, 0.0])
    assert out0.center[0] == pytest.approx(0.0)


def test_matzono_map_generator():
    m = S.MatrixZonotope(np.array([[0.5, 1.0]]), np.array([[[0.1, 0.0]]]))
    out = S.matzono_map(m, [2.0, 1.0])
    assert out.center[0] == pytest.approx(2.0)
    assert np.allclose(out.generators, [[0.2]])


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

def test_project_box_identity():
    p = S.HPolytope(
        np.vstack([np.hstack([np.vstack([np.eye(2), -np.eye(2)]), np.zeros((4, 1))]),
                   [[0, 0, 1], [0, 0, -1]]]),
        np.ones(6))
    out = S.project(p, [0, 1])
    box = S.HPolytope.box([-1, -1], [1, 1])
    for x in ([1, 1], [-1, 1], [0.999, -0.999]):
        assert S.contains_point(out, x) == S.contains_point(box, x)
    assert not S.contains_point(out, [1.01, 0])


def test_project_hand_fourier_motzkin():
    # {x+u <= 1, -x-u <= 1, |u| <= 1} projected to x gives [-2, 2]
    p = S.HPolytope([[1, 1], [-1, -1], [0, 1], [0, -1]], [1, 1, 1, 1])
    out = S.project(p, [0])
    assert S.contains_point(out, [2.0])
    assert S.contains_point(out, [-2.0])
    assert not S.contains_point(out, [2.001])


def test_project_empty():
    p = S.HPolytope([[1.0, 0.0], [-1.0, 0.0]], [-1.0, -1.0])
    out = S.project(p, [0])
    assert S.is_empty(out)


def test_project_unbounded_raises():
    p = S.HPolytope([[0.0, 1.0], [0.0, -1.0]], [1.0, 1.0])
    with pytest.raises(ValueError):
        S.project(p, [0])


# ---------------------------------------------------------------------------
# inner zonotope
# ---------------------------------------------------------------------------

def test_inner_zonotope_box_exact():
    p = S.HPolytope.box([-1, -1], [1, 1])
    z = S.inner_zonotope(p)
    assert S.contains_set(p, z)
    assert S.zonotope_volume_exact(z) == pytest.approx(4.0, abs=1e-6)


def test_inner_zonotope_triangle():
    p = S.HPolytope([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    z = S.inner_zonotope(p)
    assert S.contains_set(p, z)
    assert S.zonotope_volume_exact(z) >= 0.25 * 0.5


def test_inner_zonotope_empty_raises():
    with pytest.raises(ValueError):
        S.inner_zonotope(S.HPolytope.empty(2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_inner_zonotope_always_contained(seed):
    rng = np.random.default_rng(seed)
    H = np.vstack([np.eye(2), -np.eye(2), rng.standard_normal((3, 2))])
    h = np.concatenate([np.ones(4), rng.uniform(0.3, 1.5, 3)])
    p = S.HPolytope(H, h)
    if S.is_empty(p):
        return
    z = S.inner_zonotope(p)
    assert S.contains_set(p, z, tol=1e-7)


# ---------------------------------------------------------------------------
# sup distance
# ---------------------------------------------------------------------------

def test_sup_distance_symmetric_box():
    z = S.Zonotope.box([-1, -1], [1, 1])
    assert S.sup_distance(z, [0, 0]) == pytest.approx(np.sqrt(2))


def test_sup_distance_singleton():
    z = S.Zonotope.singleton([3.0, 4.0])
    assert S.sup_distance(z, [0, 0]) == pytest.approx(5.0)


def test_sup_distance_corner_vertex():
    z = S.Zonotope.box([0, 0], [2, 2])
    assert S.sup_distance(z, [-1, 0]) == pytest.approx(np.sqrt(13))


def test_sup_distance_hpolytope():
    p = S.HPolytope.box([0, 0], [2, 2])
    assert S.sup_distance(p, [-1, 0]) == pytest.approx(np.sqrt(13))


def test_sup_distance_bounds_bracket_exact():
    z = S.Zonotope([1.0, -0.5], [[0.5, 0.2], [0.1, 0.7]])
    exact = S.sup_distance(z, [0, 0])
    lo, hi = S.sup_distance_bounds(z, [0, 0], n_samples=5000, seed=1)
    assert lo <= exact + 1e-9 <= hi + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sup_distance_dominates_samples(seed):
    rng = np.random.default_rng(seed)
    z = S.Zonotope(rng.standard_normal(2), rng.standard_normal((2, 4)))
    point = rng.standard_normal(2)
    d = S.sup_distance(z, point)
    beta = rng.uniform(-1, 1, (100, 4))
    pts = z.center + beta @ z.generators.T
    assert (np.linalg.norm(pts - point, axis=1) <= d + 1e-9).all()


# ---------------------------------------------------------------------------
# volume
# ---------------------------------------------------------------------------

def test_volume_box():
    v = S.volume_estimate(S.HPolytope.box([-1, -1], [1, 1]), 50_000, seed=1)
    assert v.value == pytest.approx(4.0, rel=0.02)


def test_volume_triangle_analytic_oracle():
    p = S.HPolytope([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    v = S.volume_estimate(p, 100_000, seed=2)
    assert v.value == pytest.approx(0.5, rel=0.05)


def test_volume_empty():
    v = S.volume_estimate(S.HPolytope.empty(2), 1000, seed=0)
    assert v.value == 0.0


def test_volume_deterministic_given_seed():
    p = S.HPolytope([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    a = S.volume_estimate(p, 20_000, seed=5)
    b = S.volume_estimate(p, 20_000, seed=5)
    assert a.value == b.value


def test_volume_matches_exact_zonotope_within_3_se():
    rng = np.random.default_rng(3)
    z = S.Zonotope(rng.standard_normal(2), rng.standard_normal((2, 3)))
    exact = S.zonotope_volume_exact(z)
    v = S.volume_estimate(z, 100_000, seed=4)
    se = v.rel_stderr * v.value if v.rel_stderr else 1e-6
    assert abs(v.value - exact) <= 3 * se + 1e-9


def test_volume_box_sides_within_3_se():
    z = S.Zonotope.box([0, -2], [3, 2])
    v = S.volume_estimate(z, 100_000, seed=6)
    assert v.value == pytest.approx(12.0, abs=1e-9)  # box == bounding box, no MC error


# ---------------------------------------------------------------------------
# pruning and projection preserve the set
# ---------------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_prune_preserves_membership(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    q = int(rng.integers(n + 2, 25))
    H = np.vstack([np.eye(n), -np.eye(n), rng.standard_normal((q, n))])
    h = np.concatenate([np.full(2 * n, 2.0), rng.uniform(0.1, 2.5, q)])
    # duplicated rows exercise the dedup path
    H = np.vstack([H, H[: n + 1]])
    h = np.concatenate([h, h[: n + 1]])
    p = S.HPolytope(H, h)
    pruned = S.prune_polytope(p)
    assert pruned.nrows <= p.nrows
    pts = rng.uniform(-2.5, 2.5, size=(300, n))
    before = (pts @ p.H.T <= p.h + 1e-9).all(axis=1)
    after = (pts @ pruned.H.T <= pruned.h + 1e-9).all(axis=1)
    margin_before = np.abs(pts @ p.H.T - p.h).min(axis=1)
    margin_after = np.abs(pts @ pruned.H.T - pruned.h).min(axis=1)
    decisive = (margin_before > 1e-7) & (margin_after > 1e-7)
    assert (before[decisive] == after[decisive]).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_project_matches_feasibility_oracle(seed):
    import scipy.optimize

    rng = np.random.default_rng(seed)
    q = int(rng.integers(3, 10))
    H = np.vstack([np.eye(3), -np.eye(3), rng.standard_normal((q, 3))])
    h = np.concatenate([np.full(6, 1.5), rng.uniform(0.2, 2.0, q)])
    p = S.HPolytope(H, h)
    if S.is_empty(p):
        return
    out = S.project(p, [0, 1])
    pts = rng.uniform(-2.0, 2.0, size=(40, 2))
    for x in pts:
        got = S.contains_point(out, x)
        # oracle: one-variable feasibility via an independent solver
        res = scipy.optimize.linprog(
            c=[0.0], A_ub=np.asarray(p.H)[:, 2:3],
            b_ub=np.asarray(p.h) - np.asarray(p.H)[:, :2] @ x,
            bounds=[(None, None)], method="highs")
        oracle = res.status == 0
        margin = np.abs(out.H @ x - out.h).min()
        if margin > 1e-6:
            assert got == oracle


# ---------------------------------------------------------------------------
# misc kernel machinery
# ---------------------------------------------------------------------------

def test_girard_reduction_outer():
    rng = np.random.default_rng(11)
    z = S.Zonotope(np.zeros(2), rng.standard_normal((2, 12)))
    red = S.reduce_girard(z, 5)
    assert red.order <= 5
    for _ in range(200):
        beta = rng.uniform(-1, 1, z.order)
        assert S.contains_point(red, z.center + z.generators @ beta, tol=1e-7)


def test_zonotope_hrep_roundtrip():
    rng = np.random.default_rng(12)
    z = S.Zonotope(rng.standard_normal(2), rng.standard_normal((2, 5)))
    p = S.zonotope_to_hpolytope(z)
    for _ in range(100):
        beta = rng.uniform(-1, 1, z.order)
        assert S.contains_point(p, z.center + z.generators @ beta, tol=1e-7)
    lo, hi = z.bounding_box()
    outside = hi + 0.05 * (hi - lo) + 0.01
    assert not S.contains_point(p, outside)


def test_solve_lp_noise_shrink_instance():
    # min over w in +/-0.001 box of (1 - [1,0] w) = 0.999
    from setguard.lp import solve_lp
    H = np.vstack([np.eye(2), -np.eye(2)])
    h = 0.001 * np.ones(4)
    res = solve_lp([1.0, 0.0], H, h)  # min [1,0]'w = -0.001
    assert 1.0 + res.value == pytest.approx(0.999)


def test_json_roundtrip():
    z = S.Zonotope([1, 2], [[1, 0], [0, 1]])
    z2 = S.Zonotope.from_json(z.to_json())
    assert np.allclose(z2.center, z.center)
    p = S.HPolytope.box([-1, -2], [3, 4])
    p2 = S.HPolytope.from_json(p.to_json())
    assert np.allclose(p2.H, p.H) and np.allclose(p2.h, p.h)
    m = S.MatrixZonotope(np.eye(2), np.zeros((1, 2, 2)))
    m2 = S.MatrixZonotope.from_json(m.to_json())
    assert np.allclose(m2.center, m.center)


def test_sets_immutable():
    z = S.Zonotope([0, 0], np.eye(2))
    with pytest.raises(ValueError):
        z.center[0] = 5.0
