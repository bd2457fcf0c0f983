import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import measures
from oracles import dev_bruteforce, dis_bruteforce, hausdorff_bruteforce, max_coupling_mass_lp, prohorov_lp
from isolip.coupling import (
    CouplingError,
    PairSet,
    Plan,
    compose_subtransport,
    dev_succ,
    dis_delta_plan,
    dis_delta_set,
    generic_max_mass_within,
    hausdorff_l1,
    is_staircase,
    max_mass_within,
    plan_support_dev,
    prohorov,
    quantile_coupling,
    strassen_plan,
)
from isolip.measure import AtomicMeasure

U01 = AtomicMeasure.uniform([0, 1])
D0, D1 = AtomicMeasure.dirac(0), AtomicMeasure.dirac(1)

points = st.tuples(st.floats(-5, 5, allow_nan=False), st.floats(-5, 5, allow_nan=False))
pair_sets = st.lists(points, min_size=1, max_size=12)


def identity_plan(mu):
    return Plan(mu.atoms, mu.atoms, np.diag(mu.weights))


class TestPairSetFunctionals:
    def test_dev_examples(self):
        assert dev_succ(PairSet.of([(0, 0)])) == 0
        assert dev_succ(PairSet.of([(0, 0), (1, 1)])) == 0
        assert dev_succ(PairSet.of([(0, 0), (0, 1)])) == 1

    def test_dis_examples(self):
        assert dis_delta_set(PairSet.of([(0, 0)])) == 0
        assert dis_delta_set(PairSet.of([(0, 0.5)])) == 0.5
        assert dis_delta_set(PairSet.of([(0, 1), (2, 2)])) == 1

    def test_hausdorff_examples(self):
        S = PairSet.of([(0, 0), (1, 1)])
        assert hausdorff_l1(S, S) == 0
        assert hausdorff_l1(PairSet.of([(0, 0)]), PairSet.of([(1, 0)])) == 1
        assert hausdorff_l1(S, PairSet.of([(0, 0)])) == 2

    def test_empty_rejected(self):
        with pytest.raises(CouplingError):
            dev_succ(np.zeros((0, 2)))

    @given(pair_sets)
    def test_dev_matches_bruteforce(self, S):
        assert dev_succ(PairSet.of(S)) == pytest.approx(dev_bruteforce(S), abs=1e-12)

    @given(pair_sets)
    def test_dev_nonnegative(self, S):
        assert dev_succ(PairSet.of(S)) >= 0

    @given(pair_sets, pair_sets)
    def test_hausdorff_matches_bruteforce(self, S, T):
        assert hausdorff_l1(PairSet.of(S), PairSet.of(T)) == pytest.approx(hausdorff_bruteforce(S, T), abs=1e-12)

    @given(pair_sets)
    def test_dis_matches_bruteforce(self, S):
        assert dis_delta_set(PairSet.of(S)) == pytest.approx(dis_bruteforce(S), abs=1e-12)


class TestPlan:
    def test_dis_delta_plan_examples(self):
        assert dis_delta_plan(identity_plan(D0)) == 0
        assert dis_delta_plan(Plan([0], [1], [[1.0]])) == 1
        assert dis_delta_plan(Plan([0, 1], [0], [[0.5], [0.5]])) == 0.5

    def test_marginal_checks(self):
        pi = quantile_coupling(U01, AtomicMeasure.uniform([0, 1, 2, 3]))
        assert pi.is_transport(U01, AtomicMeasure.uniform([0, 1, 2, 3]))
        sub = pi.restrict(pi.support_cells()[:2])
        assert sub.is_subtransport(U01, AtomicMeasure.uniform([0, 1, 2, 3]))
        assert not sub.is_transport(U01, AtomicMeasure.uniform([0, 1, 2, 3]))

    def test_completion_is_transport(self):
        mu, nu = AtomicMeasure.uniform([0, 1, 2]), AtomicMeasure.uniform([0, 5])
        sub = Plan(mu.atoms, nu.atoms, [[1 / 3, 0], [0, 0], [0, 1 / 6]])
        full = sub.completed(mu, nu)
        assert full.is_transport(mu, nu)
        assert np.all(full.mass >= sub.mass - 1e-15)

    def test_json_roundtrip_dense_and_sparse(self):
        pi = quantile_coupling(U01, AtomicMeasure.uniform([0, 1, 2, 3]))
        back = Plan.from_dict(pi.as_dict())
        assert np.array_equal(back.mass, pi.mass)
        big = AtomicMeasure.uniform(range(600))
        q = quantile_coupling(big, big)
        data = q.as_dict()
        assert "triplets" in data
        assert np.array_equal(Plan.from_dict(data).mass, q.mass)


class TestProhorov:
    def test_examples(self):
        assert prohorov(U01, U01) == 0
        assert prohorov(D0, D1) == 1
        assert prohorov(U01, D0) == 0.5

    @given(measures(), measures())
    def test_matches_lp_oracle(self, mu, nu):
        assert prohorov(mu, nu) == pytest.approx(prohorov_lp(mu, nu), abs=1e-9)

    @given(measures(), measures())
    def test_symmetric(self, mu, nu):
        assert prohorov(mu, nu) == pytest.approx(prohorov(nu, mu), abs=1e-9)

    @given(measures(), measures(), measures())
    def test_triangle(self, a, b, c):
        assert prohorov(a, c) <= prohorov(a, b) + prohorov(b, c) + 1e-9

    @given(measures(max_atoms=6), measures(max_atoms=6), st.floats(0, 4))
    def test_interval_flow_matches_general_flow(self, mu, nu, c):
        assert max_mass_within(mu, nu, c)[0] == pytest.approx(generic_max_mass_within(mu, nu, c), abs=1e-12)

    @given(measures(), measures(), st.floats(0, 4))
    def test_flow_matches_lp(self, mu, nu, c):
        allowed = np.abs(mu.atoms[:, None] - nu.atoms[None, :]) <= c + 1e-12
        assert max_mass_within(mu, nu, c)[0] == pytest.approx(max_coupling_mass_lp(mu, nu, allowed), abs=1e-9)

    @given(measures(), measures())
    def test_strassen_plan_attains(self, mu, nu):
        plan, c = strassen_plan(mu, nu)
        p = prohorov(mu, nu)
        assert plan.is_transport(mu, nu)
        far = np.abs(plan.row_atoms[:, None] - plan.col_atoms[None, :]) > c + 1e-12
        assert c <= p + 1e-12 and plan.mass[far].sum() <= p + 1e-9
        assert dis_delta_plan(plan) <= p + 1e-9


class TestQuantileCoupling:
    def test_examples(self):
        nu = AtomicMeasure.uniform([0, 2, 7])
        assert np.allclose(quantile_coupling(D0, nu).mass, [nu.weights])
        q = quantile_coupling(U01, AtomicMeasure.uniform([10, 11]))
        assert np.allclose(q.mass, [[0.5, 0], [0, 0.5]])
        q = quantile_coupling(U01, AtomicMeasure.uniform([0, 1, 2, 3]))
        assert np.allclose(q.mass, [[0.25, 0.25, 0, 0], [0, 0, 0.25, 0.25]])

    @given(measures(max_atoms=7), measures(max_atoms=7))
    def test_marginals_and_staircase(self, mu, nu):
        q = quantile_coupling(mu, nu)
        assert np.allclose(q.row_sums(), mu.weights, atol=1e-12)
        assert np.allclose(q.col_sums(), nu.weights, atol=1e-12)
        assert is_staircase(q)


class TestCompose:
    def test_identity(self):
        mu = AtomicMeasure.uniform([0, 1, 3])
        assert np.allclose(compose_subtransport(identity_plan(mu), identity_plan(mu)).mass, np.diag(mu.weights))

    def test_example(self):
        a = quantile_coupling(U01, U01)
        b = quantile_coupling(U01, AtomicMeasure.uniform([5, 6]))
        got = compose_subtransport(a, b)
        assert np.allclose(got.mass, [[0.5, 0], [0, 0.5]]) and list(got.col_atoms) == [5, 6]

    def test_mismatched_middle(self):
        with pytest.raises(CouplingError):
            compose_subtransport(quantile_coupling(U01, U01), quantile_coupling(D1, U01))

    def test_mass_bound_example(self):
        mu = AtomicMeasure.uniform(range(10))
        full = identity_plan(mu)
        p1 = full.restrict([(i, i) for i in range(9)])
        p2 = full.restrict([(i, i) for i in range(1, 10)])
        assert p1.total == pytest.approx(0.9) and compose_subtransport(p1, p2).total >= 0.8 - 1e-12

    @given(measures(), measures(), measures(), st.data())
    def test_mass_and_dev_bounds(self, m1, m2, m3, data):
        q1, q2 = quantile_coupling(m1, m2), quantile_coupling(m2, m3)
        c1 = data.draw(st.lists(st.sampled_from(q1.support_cells()), min_size=1, unique=True))
        c2 = data.draw(st.lists(st.sampled_from(q2.support_cells()), min_size=1, unique=True))
        p1, p2 = q1.restrict(c1), q2.restrict(c2)
        glued = compose_subtransport(p1, p2)
        assert glued.is_subtransport(m1, m3)
        assert glued.total >= p1.total + p2.total - 1 - 1e-10
        if glued.support_cells():
            assert plan_support_dev(glued) <= plan_support_dev(p1) + plan_support_dev(p2) + 1e-10
