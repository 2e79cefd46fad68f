import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from avmac.capacity import (CostConstrained, ExplicitList, Mode, Pentagon, RateRegion,
                            convex_hull, cost_constrained, deterministic_region, dispatch_case,
                            divided_randomness_region, info_gradient, info_value,
                            is_convex_polygon, min_info_over_states, pentagon,
                            random_code_region, single_user_minmax, single_user_minmax_grid)
from avmac.channel import (ChannelSpec, ConstraintSpec, CostModel, InputEnsemble, StateLaw,
                           mutual_informations)
from avmac.examples import (adder_channel, binary_entropy, bsmac_channel, bsmac_corner,
                            erasure_adder_channel)
from avmac.symmetrizability import SymmetryKind, check_symmetrizable, thresholds

from conftest import random_channel

UNIFORM = InputEnsemble.product([0.5, 0.5], [0.5, 0.5])
TERMS = ("I1", "I2", "Isum")


def noisy_pair_channel():
    """Y = (X1, X2) seen through a bit-flip channel whose crossover depends on the state."""
    W = np.zeros((2, 2, 2, 4))
    for a, b, s in itertools.product(range(2), range(2), range(2)):
        eps = (0.02, 0.15)[s]
        for y1, y2 in itertools.product(range(2), range(2)):
            W[a, b, s, 2 * y1 + y2] = ((1 - eps) if y1 == a else eps) * ((1 - eps) if y2 == b else eps)
    return ChannelSpec(W, "noisy-pair"), CostModel([0, 1], [0, 1], [0, 1])


def state_free(spec_small):
    """Lift a state-free MAC V(y|x1,x2) to two states that ignore s."""
    return ChannelSpec(np.repeat(spec_small[:, :, None, :], 2, axis=2))


def grid_min(spec, ens, which, lam, step=0.001):
    best = np.inf
    for t in np.arange(0, lam + step / 2, step):
        best = min(best, info_value(spec, ens, which, np.array([1 - t, t])))
    return best


# -- state minimization ---------------------------------------------------------------

def test_single_state_channel_gives_plain_information():
    rng = np.random.default_rng(1)
    spec = random_channel(rng, (2, 3, 1, 3))
    ens = InputEnsemble.product([0.3, 0.7], [0.2, 0.3, 0.5])
    F = CostConstrained(0.0, [0.0])
    want = mutual_informations(spec, ens, StateLaw.unconditional([1.0]))
    for w, v in zip(TERMS, want):
        r = min_info_over_states(spec, ens, F, w)
        assert r.value == pytest.approx(v, abs=1e-12)
        assert np.allclose(r.law.rows, 1.0)


def test_bsmac_uniform_inputs_minimizer():
    b = bsmac_channel(1, 1, 0.1)
    r = min_info_over_states(b.spec, UNIFORM, cost_constrained(b.costs, 0.1), "I1")
    assert r.value == pytest.approx(1 - binary_entropy(0.1), abs=1e-5)
    q = r.law.rows[0]
    # S1 ~ Bernoulli(0.1) and S2 = 0
    assert q[2] + q[3] == pytest.approx(0.1, abs=1e-3) and q[1] + q[3] == pytest.approx(0.0, abs=1e-3)


@given(st.integers(0, 10_000), st.sampled_from(TERMS))
def test_min_info_matches_grid(seed, which):
    rng = np.random.default_rng(seed)
    spec = random_channel(rng)
    ens = InputEnsemble.product(rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2)))
    r = min_info_over_states(spec, ens, CostConstrained(0.4, [0.0, 1.0]), which)
    g = grid_min(spec, ens, which, 0.4)
    assert r.value <= g + 1e-9
    assert r.value == pytest.approx(g, abs=1e-4)


@given(st.integers(0, 10_000), st.sampled_from(TERMS))
def test_first_order_optimality_certificate(seed, which):
    rng = np.random.default_rng(seed)
    spec = random_channel(rng, (2, 2, 3, 3))
    ens = InputEnsemble.product(rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2)))
    F = CostConstrained(0.5, [0.0, 1.0, 2.0])
    r = min_info_over_states(spec, ens, F, which)
    q = r.law.rows[0]
    g = info_gradient(spec, ens, which, q)
    assert min((v - q) @ g for v in F.vertices()) >= -1e-5


def test_explicit_list_enumeration():
    b = bsmac_channel()
    laws = [np.array([1, 0, 0, 0.]), np.array([0.8, 0, 0.2, 0]), np.array([0.5, 0.5, 0, 0])]
    r = min_info_over_states(b.spec, UNIFORM, ExplicitList(laws), "I1")
    assert r.value == pytest.approx(1 - binary_entropy(0.2), abs=1e-12)
    ens = InputEnsemble([0.5, 0.5], [[0.5, 0.5], [1.0, 0.0]], [[0.5, 0.5], [0.5, 0.5]])
    r = min_info_over_states(b.spec, ens, ExplicitList(laws), "Isum", per_u=True)
    assert r.law.conditioned and r.law.rows.shape == (2, 4)
    with pytest.raises(ValueError):
        ExplicitList([])


def test_per_u_budgets_are_ordered_and_decompose():
    rng = np.random.default_rng(7)
    spec = random_channel(rng, (2, 2, 3, 2))
    ens = InputEnsemble([0.4, 0.6], rng.dirichlet(np.ones(2), 2), rng.dirichlet(np.ones(2), 2))
    F = CostConstrained(0.5, [0.0, 1.0, 2.0])
    for w in TERMS:
        shared = min_info_over_states(spec, ens, F, w).value
        per_u_each = min_info_over_states(spec, ens, F, w, per_u=True, budget="per_u").value
        per_u_avg = min_info_over_states(spec, ens, F, w, per_u=True, budget="average").value
        assert per_u_avg <= per_u_each + 1e-6 and per_u_each <= shared + 1e-6
        parts = sum(pu * min_info_over_states(
            spec, InputEnsemble([1.0], ens.px1_given_u[u:u + 1], ens.px2_given_u[u:u + 1]), F, w).value
            for u, pu in enumerate(ens.pu))
        assert per_u_each == pytest.approx(parts, abs=2e-6)


def test_invalid_arguments():
    b = bsmac_channel()
    F = cost_constrained(b.costs, 0.1)
    with pytest.raises(ValueError):
        min_info_over_states(b.spec, UNIFORM, F, "I3")
    with pytest.raises(ValueError):
        min_info_over_states(b.spec, UNIFORM, F, "I1", per_u=True, budget="weird")
    with pytest.raises(ValueError):
        CostConstrained(0.1, [0.5, 1.0])


# -- pentagons -------------------------------------------------------------------------

def test_bsmac_pentagons():
    b = bsmac_channel(1, 1, 0.1)
    p = pentagon(b.spec, b.costs, UNIFORM, b.constraints)
    c = 1 - binary_entropy(0.1)
    assert p.as_tuple()[:2] == pytest.approx((c, c), abs=1e-5)
    # the jammer must split its budget between the two independent links, so the
    # sum bound 2 - 2 h(lambda / 2) is slack against R1 + R2 <= 2 c
    assert p.sum_max == pytest.approx(2 - 2 * binary_entropy(0.05), abs=1e-5)
    assert p.sum_max >= 2 * c
    p = pentagon(b.spec, b.costs, UNIFORM, ConstraintSpec(1, 1, 0.5))
    # both links can be made BSC(1/2) one at a time, so the pentagon is the origin
    assert (p.a, p.b) == pytest.approx((0, 0), abs=1e-6)
    assert p.sum_max == pytest.approx(2 - 2 * binary_entropy(0.25), abs=1e-5)
    with pytest.raises(ValueError):
        pentagon(b.spec, b.costs, UNIFORM, ConstraintSpec(0.2, 1, 0.1))


def test_single_state_pentagon_is_classical():
    rng = np.random.default_rng(4)
    small = random_channel(rng, (2, 2, 1, 3))
    ens = InputEnsemble.product([0.35, 0.65], [0.6, 0.4])
    costs = CostModel([0, 1], [0, 1], [0])
    want = mutual_informations(small, ens, StateLaw.unconditional([1.0]))
    for mode in Mode:
        assert pentagon(small, costs, ens, ConstraintSpec(1, 1, 0), mode).as_tuple() \
            == pytest.approx(want, abs=1e-12)


def test_pentagon_geometry():
    p = Pentagon(0.6, 0.5, 0.8)
    assert p.vertices() == [(0, 0), (0.6, 0), (0.6, 0.2), (0.3, 0.5), (0, 0.5)] or \
        np.allclose(p.vertices(), [(0, 0), (0.6, 0), (0.6, 0.2), (0.3, 0.5), (0, 0.5)])
    assert p.support(1, 1) == pytest.approx(0.8)
    assert p.contains(0.3, 0.5) and not p.contains(0.5, 0.5)
    assert p.r2_at(0.7) == -np.inf and p.r2_at(0.6) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        Pentagon(-1, 0, 0)


def test_convex_hull_and_convexity():
    pts = [(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5), (0.2, 0.9)]
    hull = convex_hull(pts)
    assert set(hull) == {(0, 0), (1, 0), (1, 1), (0, 1)}
    assert is_convex_polygon(hull)
    assert not is_convex_polygon([(0, 0), (1, 0), (0.2, 0.2), (0, 1)])


# -- regions --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def bsmac_regions():
    b = bsmac_channel(1, 1, 0.1)
    r = random_code_region(b.spec, b.costs, b.constraints)
    d = divided_randomness_region(b.spec, b.costs, b.constraints)
    det = deterministic_region(b.spec, b.costs, b.constraints)
    return r, d, det


def test_bsmac_random_region_rectangle(bsmac_regions):
    r, d, det = bsmac_regions
    c = bsmac_corner(1, 0.1)
    assert r.boundary[0] == pytest.approx((c, 0.0), abs=1e-9)
    assert r.max_r1 == pytest.approx(c, abs=1e-5) and r.max_r2 == pytest.approx(c, abs=1e-5)
    assert r.max_sum == pytest.approx(2 * c, abs=1e-5)
    assert r.is_convex() and r.contains(c - 1e-4, c - 1e-4)
    assert all(x >= 0 and y >= 0 for x, y in r.boundary)


def test_bsmac_divided_and_deterministic_coincide(bsmac_regions):
    r, d, det = bsmac_regions
    assert det.case_label == "A" and not det.undetermined
    for t in np.linspace(0, np.pi / 2, 33):
        w = (np.cos(t), np.sin(t))
        assert abs(d.support(*w) - r.support(*w)) < 1e-3
        assert abs(det.support(*w) - r.support(*w)) < 1e-3
        assert det.support(*w) <= d.support(*w) + 1e-6 <= r.support(*w) + 2e-6


def test_bsmac_case_b_and_d():
    b = bsmac_channel(0.05, 1, 0.1)
    det = deterministic_region(b.spec, b.costs, b.constraints)
    assert det.case_label == "B"
    assert det.max_r1 == 0.0 and det.max_r2 == pytest.approx(1 - binary_entropy(0.1), abs=5e-3)
    b = bsmac_channel(0.05, 0.08, 0.1)
    det = deterministic_region(b.spec, b.costs, b.constraints)
    assert det.case_label == "D" and det.boundary == [(0.0, 0.0)]


def test_case_b_minmax_against_grid():
    b = bsmac_channel(0.05, 1, 0.1)
    ens = [InputEnsemble.product([0.95, 0.05], [1 - t, t]) for t in (0.25, 0.5)]
    val, q, lower, ok = single_user_minmax(b.spec, b.costs, b.constraints, 2, ens)
    grid = single_user_minmax_grid(b.spec, b.costs, b.constraints, 2, ens, step=0.01)
    assert ok and lower <= val + 1e-12
    assert val <= grid + 1e-9 and val == pytest.approx(grid, abs=5e-3)


def test_erasure_lambda_one_is_case_d_and_below_is_case_a():
    b = erasure_adder_channel(2, 1.0)
    det = deterministic_region(b.spec, b.costs, b.constraints)
    assert det.case_label == "D" and det.max_r1 == 0 and det.max_r2 == 0
    b = erasure_adder_channel(2, 0.3)
    det = deterministic_region(b.spec, b.costs, b.constraints)
    d = divided_randomness_region(b.spec, b.costs, b.constraints)
    assert det.case_label == "A" and not det.flags
    assert len(det.pentagons) == len(d.pentagons)  # unrestricted ensemble set


def test_undetermined_boundary_case():
    b = adder_channel(3)
    det = deterministic_region(b.spec, b.costs, ConstraintSpec(1, 1, 1.0))  # L1* = 1 = lambda
    assert det.undetermined and det.boundary == []
    th = thresholds(b.spec, b.costs, ConstraintSpec(1, 1, 1.0))
    assert dispatch_case(th, 1.0)[1]


def test_nonsymmetrizable_deterministic_equals_divided():
    spec, costs = noisy_pair_channel()
    assert all(check_symmetrizable(spec, k) is None for k in SymmetryKind)
    cons = ConstraintSpec(1, 1, 0.5)
    d = divided_randomness_region(spec, costs, cons)
    det = deterministic_region(spec, costs, cons)
    r = random_code_region(spec, costs, cons)
    assert det.case_label == "A"
    assert det.boundary == d.boundary
    for r1, r2 in d.boundary:
        assert r.contains(r1, r2, 1e-6)


def test_state_free_channel_divided_equals_random_equals_classical():
    rng = np.random.default_rng(11)
    small = rng.dirichlet(np.ones(3), size=(2, 2))
    spec = state_free(small)
    costs = CostModel([0, 1], [0, 1], [0, 1])
    cons = ConstraintSpec(1, 1, 1.0)
    r = random_code_region(spec, costs, cons)
    d = divided_randomness_region(spec, costs, cons)
    base = ChannelSpec(small[:, :, None, :])
    for p in r.pentagons[:20]:
        want = mutual_informations(base, p.ensemble, StateLaw.unconditional([1.0]))
        assert p.as_tuple() == pytest.approx(want, abs=1e-9)
    for t in np.linspace(0, np.pi / 2, 17):
        w = (np.cos(t), np.sin(t))
        assert d.support(*w) == pytest.approx(r.support(*w), abs=1e-9)


def test_monotone_in_lambda_and_gamma():
    b = bsmac_channel()
    supports = []
    for lam in (0.05, 0.1, 0.2):
        reg = random_code_region(b.spec, b.costs, ConstraintSpec(0.3, 1, lam))
        supports.append([reg.support(np.cos(t), np.sin(t)) for t in np.linspace(0, np.pi / 2, 9)])
    assert all(np.all(np.array(a) >= np.array(c) - 1e-6) for a, c in zip(supports, supports[1:]))
    supports = []
    for g in (0.05, 0.2, 0.5):
        reg = random_code_region(b.spec, b.costs, ConstraintSpec(g, 1, 0.1))
        supports.append([reg.support(np.cos(t), np.sin(t)) for t in np.linspace(0, np.pi / 2, 9)])
    assert all(np.all(np.array(c) >= np.array(a) - 1e-6) for a, c in zip(supports, supports[1:]))


def test_region_export_dict():
    reg = RateRegion(Mode.RANDOM, [(1.0, 0.0), (0.0, 1.0), (0.0, 0.0)], [Pentagon(1, 1, 1)])
    d = reg.to_dict()
    assert d["mode"] == "random" and d["boundary"][0] == [1.0, 0.0]
