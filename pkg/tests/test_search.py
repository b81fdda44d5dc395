import itertools
from fractions import Fraction as F
from math import comb

import numpy as np
import pytest

from _support import (
    brute_downward_hull,
    counterexample_forward,
    gdmmac_only_terms,
    model_from_tables,
    split_mac,
)
from skregion.channels import build_example1
from skregion.errors import ArgumentError, CostError, PreconditionError
from skregion.regions import (
    RateRegion,
    RateTerms,
    blocklengths,
    constraint_slack,
    inner_bound_polytope,
    rate_terms,
)
from skregion.search import (
    SearchConfig,
    compute_capacity_region_special_case,
    compute_inner_region,
    convex_hull_downward_closed,
    count_schemes,
    default_alpha_grid,
    enumerate_schemes,
    enumerate_special_case_schemes,
    simplex_grid,
    simplex_grid_size,
)

SMALL = dict(T1f=1, T2f=1, T1fb=2, T2fb=1, T1b=2, T2b=1)
QUARTERS = (F(0), F(1, 4), F(1, 2), F(3, 4), F(1))


def test_default_alpha_grid_is_rational_and_sorted():
    g = default_alpha_grid(10)
    assert g[0] == 0 and g[-1] == 1 and list(g) == sorted(set(g))
    assert all(a.denominator <= 10 for a in g)
    assert len(g) == 33


def test_binary_simplex_grid_at_half_step():
    assert {tuple(r) for r in simplex_grid(2, 2)} == {(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)}


@pytest.mark.parametrize("k,m", [(1, 4), (2, 4), (3, 2), (3, 5), (4, 3)])
def test_simplex_grid_size_by_counting(k, m):
    brute = sum(1 for c in itertools.product(range(m + 1), repeat=k) if sum(c) == m)
    g = simplex_grid(k, m)
    assert len(g) == brute == simplex_grid_size(k, m) == comb(m + k - 1, k - 1)
    np.testing.assert_allclose(g.sum(axis=1), 1.0)


def test_scheme_count_matches_closed_form_and_enumeration():
    m = build_example1()
    cfg = SearchConfig(cardinalities=SMALL, alpha_grid=(F(1, 3), F(1, 2)), grid_step=0.5)
    # X1f law, X2f law, two T1fb rows, (T1b,T2b) law, two X3b rows: seven binary simplices
    closed = 2 * 3 ** 7
    assert count_schemes(m, cfg) == closed
    assert sum(1 for _ in enumerate_schemes(m, cfg)) == closed


def test_singleton_cardinalities_give_one_scheme_per_alpha():
    m = build_example1()
    cards = dict(T1f=1, T2f=1, T1fb=1, T2fb=1, T1b=1, T2b=1)
    # fully singleton auxiliaries still leave the channel input laws to choose, so
    # use a one-point lattice input via a deterministic-input model
    fwd = np.ones((1, 1, 2, 2, 2)) / 8
    bwd = np.ones((1, 2, 2)) / 4
    tiny = model_from_tables(fwd, bwd)
    cfg = SearchConfig(cardinalities=cards, alpha_grid=QUARTERS, grid_step=0.5)
    assert count_schemes(tiny, cfg) == len(QUARTERS)
    assert [s.alpha for s in enumerate_schemes(tiny, cfg)] == [float(a) for a in QUARTERS]
    assert count_schemes(m, cfg) == len(QUARTERS) * 3 ** 3


def test_stream_is_deterministic():
    m = build_example1()
    cfg = SearchConfig(cardinalities=SMALL, alpha_grid=(F(1, 2),), random_restarts=4, seed=11)
    a = [s.to_json() for s in enumerate_schemes(m, cfg)]
    b = [s.to_json() for s in enumerate_schemes(m, cfg)]
    assert a == b
    c = [s.to_json() for s in enumerate_schemes(m, SearchConfig(cardinalities=SMALL, alpha_grid=(F(1, 2),),
                                                                   random_restarts=4, seed=12))]
    assert a[:-4] == c[:-4] and a[-4:] != c[-4:]


def test_cost_guard_names_the_cap():
    cfg = SearchConfig(grid_step=0.1, max_evaluations=1000)
    with pytest.raises(CostError, match="1000"):
        compute_inner_region(build_example1(), cfg)


@pytest.mark.parametrize("bad", [dict(grid_step=0.0), dict(grid_step=0.3), dict(random_restarts=-1),
                                 dict(alpha_grid=()), dict(alpha_grid=(F(3, 2),)), dict(refinement="x")])
def test_config_validation(bad):
    with pytest.raises(ArgumentError):
        SearchConfig(**bad)


def test_uncorrelated_system_has_trivial_region():
    fwd = np.full((2, 2, 2, 2, 2), 1 / 8)
    m = build_example1(p4=0.5)
    noise = model_from_tables(fwd, m.backward.table)
    cfg = SearchConfig(cardinalities=dict(T1f=2, T2f=2, T1fb=2, T2fb=1, T1b=2, T2b=1), alpha_grid=QUARTERS)
    est = compute_inner_region(noise, cfg)
    assert est.region.vertices == ((0.0, 0.0),)


def _provenance_ok(model, est):
    for (x, y), s in est.schemes_on_frontier:
        poly = inner_bound_polytope(rate_terms(model, s))
        assert min(abs(x - vx) + abs(y - vy) for vx, vy in poly.vertices) <= 1e-9
        assert constraint_slack(model, s, *blocklengths(s.alpha)).feasible


def test_provenance_and_feasibility_soundness():
    m = build_example1(p4=0.2)
    est = compute_inner_region(m, SearchConfig(cardinalities=SMALL, alpha_grid=QUARTERS, random_restarts=3))
    assert est.schemes_on_frontier
    _provenance_ok(m, est)
    assert est.diagnostics["evaluated"] == est.diagnostics["feasible"] + est.diagnostics["infeasible"]


def test_special_case_provenance():
    m = build_example1(p4=0.3)
    est = compute_capacity_region_special_case(m, SearchConfig(alpha_grid=QUARTERS))
    for (x, y), s in est.schemes_on_frontier:
        r = s.evaluate(m, "alpha-weighted")
        assert r.feasible
        assert min(abs(x - a) + abs(y - b) for a, b in ((r.r1_max, r.r2_max), (r.r1_max, 0.0), (0.0, r.r2_max))) <= 1e-9


def mac_only_region(model, lattice, alphas):
    """Union of MAC-only polytopes over the same lattice, from the brute-force evaluator."""
    grid = simplex_grid(2, lattice)
    pts = []
    for p1, p2 in itertools.product(grid, repeat=2):
        # T1f = T2f = 2: every lattice law and every lattice kernel
        for k1 in itertools.product(grid, repeat=2):
            for k2 in itertools.product(grid, repeat=2):
                r1f, r2f, r12f = gdmmac_only_terms(model, p1, p2, np.array(k1), np.array(k2), 1.0)
                for a in alphas:
                    a = float(a)
                    pts.extend(inner_bound_polytope(RateTerms(a * r1f, 0, 0, a * r2f, 0, 0, a * r12f)).vertices)
    return convex_hull_downward_closed(pts)


def test_backward_cancelled_search_equals_mac_only_region():
    m = split_mac()
    cards = dict(T1f=2, T2f=2, T1fb=1, T2fb=1, T1b=1, T2b=1)
    alphas = (F(1, 2), F(1))
    est = compute_inner_region(m, SearchConfig(cardinalities=cards, alpha_grid=alphas, grid_step=0.5))
    base = mac_only_region(m, 2, alphas)
    assert est.region.max_r1 > 0 and est.region.max_r2 > 0
    # the oracle's round-off can leave near-collinear extra vertices, so compare as sets
    for v in est.region.vertices:
        assert base.margin(v) >= -1e-12
    for v in base.vertices:
        assert est.region.margin(v) >= -1e-12


def test_nested_grids_give_nested_regions():
    m = build_example1(p4=0.2)
    coarse = compute_inner_region(m, SearchConfig(cardinalities=SMALL, alpha_grid=QUARTERS, grid_step=0.5,
                                                  random_restarts=2, seed=5))
    fine = compute_inner_region(m, SearchConfig(cardinalities=SMALL, alpha_grid=QUARTERS, grid_step=0.25,
                                                random_restarts=2, seed=5))
    for v in coarse.region.vertices:
        assert fine.region.contains(v, tol=1e-9)


@pytest.mark.parametrize("p4,axis", [(0.0, "r1"), (0.5, "r2")])
def test_special_case_endpoints(p4, axis):
    est = compute_capacity_region_special_case(build_example1(p4=p4), SearchConfig(grid_step=0.25))
    if axis == "r1":
        assert est.region.max_r2 == 0.0 and est.region.max_r1 > 0
        assert all(y == 0.0 for _, y in est.region.frontier)
    else:
        assert est.region.max_r1 <= 1e-6 and est.region.max_r2 > 0
        assert all(x <= 1e-6 for x, _ in est.region.frontier)


def test_paper_literal_mode_has_no_alpha_sweep():
    m = build_example1(p4=0.2)
    est = compute_capacity_region_special_case(m, SearchConfig(mode="paper-literal"))
    assert est.diagnostics["alphas"] == 1 and est.mode == "paper-literal"
    wtd = compute_capacity_region_special_case(m, SearchConfig())
    assert est.region.max_r1 >= wtd.region.max_r1 and est.region.max_r2 >= wtd.region.max_r2


def test_special_case_rejects_non_degraded_model():
    with pytest.raises(PreconditionError):
        compute_capacity_region_special_case(counterexample_forward(), SearchConfig())


@pytest.mark.parametrize("p4", [0.1, 0.3])
def test_inner_region_inside_special_case_region(p4):
    m = build_example1(p4=p4)
    inner = compute_inner_region(m, SearchConfig(cardinalities=SMALL, alpha_grid=QUARTERS, grid_step=0.5))
    outer = compute_capacity_region_special_case(m, SearchConfig(cardinalities={"T1fb": 2}, alpha_grid=QUARTERS,
                                                                 grid_step=0.5))
    for v in inner.region.vertices:
        assert outer.region.margin(v) >= -1e-9


def test_refinement_never_shrinks_region():
    m = build_example1(p4=0.2)
    base = SearchConfig(cardinalities=SMALL, alpha_grid=(F(1, 2), F(3, 4)), grid_step=0.5, random_restarts=2)
    plain = compute_inner_region(m, base)
    refined = compute_inner_region(m, SearchConfig(cardinalities=SMALL, alpha_grid=(F(1, 2), F(3, 4)), grid_step=0.5,
                                                   random_restarts=2, refinement="coordinate-ascent"))
    for v in plain.region.vertices:
        assert refined.region.contains(v)
    _provenance_ok(m, refined)


def test_thread_count_does_not_change_output(monkeypatch):
    m = build_example1(p4=0.2)
    cfg = SearchConfig(cardinalities=SMALL, alpha_grid=QUARTERS, random_restarts=3, seed=9)
    monkeypatch.setenv("SKREGION_THREADS", "1")
    a = compute_inner_region(m, cfg).dumps()
    monkeypatch.setenv("SKREGION_THREADS", "3")
    assert compute_inner_region(m, cfg).dumps() == a


def test_special_case_stream_matches_count():
    m = build_example1()
    cfg = SearchConfig(cardinalities={"T1fb": 2}, alpha_grid=(F(1, 2),), grid_step=0.5)
    assert sum(1 for _ in enumerate_special_case_schemes(m, cfg)) == count_schemes(m, cfg, "special-case") == 3 ** 5


# ---------------------------------------------------------------------------
# hull

def test_hull_simplex_and_domination():
    r = convex_hull_downward_closed([(1, 0), (0, 1)])
    assert r.frontier == ((0.0, 1.0), (1.0, 0.0))
    r = convex_hull_downward_closed([(0.5, 0.5), (0.2, 0.2)])
    assert r.frontier == ((0.0, 0.5), (0.5, 0.5), (0.5, 0.0))
    assert convex_hull_downward_closed([]).vertices == ((0.0, 0.0),)


def test_hull_matches_brute_force_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 25))
        pts = [tuple(p) for p in rng.random((n, 2)).round(int(rng.integers(1, 4)))]
        region = convex_hull_downward_closed(pts)
        assert set(region.vertices) == brute_downward_hull(pts)
        for p in pts:
            assert region.contains(p)


def test_frontier_is_a_staircase():
    rng = np.random.default_rng(1)
    for _ in range(20):
        f = convex_hull_downward_closed(rng.random((10, 2))).frontier
        xs, ys = [p[0] for p in f], [p[1] for p in f]
        assert xs == sorted(xs) and ys == sorted(ys, reverse=True)
        assert f[0][0] == 0.0 and f[-1][1] == 0.0


def test_region_rejects_negative_points():
    with pytest.raises(ValueError):
        RateRegion.from_points([(-0.1, 0.2)])
