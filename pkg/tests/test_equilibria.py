import math

import numpy as np
import pytest

from lglab import (
    ModelParams,
    NoHopf,
    NonHyperbolicPresent,
    NotAnEquilibrium,
    classify,
    count_interior_equilibria,
    cubic_coefficients,
    find_interior_equilibria,
    hopf_point,
    index_sum_check,
    jacobian,
    trivial_equilibria,
    vector_field,
)
from lglab import equilibria as eqmod

from conftest import random_params

THREE = ModelParams(a=0.5, b=0.1, k1=0.08, k2=0.2, m=0.0025)
HOPF_NEG = ModelParams(a=1.1, b=0.2, k1=0.08, k2=0.01, m=0.0025)


def grid_root_count(p, n_grid=1_000_001):
    """Sign-change count of the interior cubic on a dense grid (oracle)."""
    c = cubic_coefficients(p)
    X = np.linspace(0.0, 1.0 - p.m, n_grid)
    R = ((X + c.alpha2) * X + c.alpha1) * X + c.alpha0
    return int(np.count_nonzero(R[:-1] * R[1:] < 0.0))


class TestCubic:
    def test_frozen_coefficients(self):
        c = cubic_coefficients(THREE)
        assert c.alpha2 == pytest.approx(-0.415, abs=1e-15)
        assert c.alpha1 == pytest.approx(0.01790625, abs=1e-15)
        assert c.alpha0 == pytest.approx(-0.0001995, abs=1e-15)

    def test_count_three(self):
        rep = count_interior_equilibria(THREE)
        assert rep.n_predicted == 3
        assert rep.branch == "m_pos_case_a"
        assert rep.tong_product is not None and rep.tong_product < 0

    def test_count_matches_grid(self, rng):
        for _ in range(200):
            p = random_params(rng)
            assert count_interior_equilibria(p).n_predicted == grid_root_count(p)

    def test_count_range_by_m(self, rng):
        for _ in range(200):
            p = random_params(rng)
            n = count_interior_equilibria(p).n_predicted
            if p.m > 0:
                assert n in (1, 2, 3)
            else:
                assert n in (0, 1, 2)

    def test_double_root_counted_once(self):
        # tune k2 so the cubic is tangent to zero at a critical point

        def make(k2):
            return ModelParams(a=0.5, b=0.1, k1=0.08, k2=k2, m=0.0025)

        def product(k2):
            return count_interior_equilibria(make(k2)).tong_product

        lo, hi = 0.18, 0.2
        assert product(lo) > 0 > product(hi)
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if product(mid) > 0:
                lo = mid
            else:
                hi = mid
        # straddling the tangency the count drops from 3 to 1, and the
        # located roots always agree with the prediction; at an exact
        # tangency the double root carries multiplicity 2
        seen = set()
        for k2 in (lo, hi):
            p = make(k2)
            n = count_interior_equilibria(p).n_predicted
            eqs = find_interior_equilibria(p)
            assert sum(e.multiplicity for e in eqs) >= len(eqs)
            assert len(eqs) == n
            seen.add(n)
        assert seen in ({1, 3}, {1, 2}, {2, 3}, {2})


class TestFind:
    def test_three_located(self):
        eqs = find_interior_equilibria(THREE)
        assert len(eqs) == 3
        c = cubic_coefficients(THREE)
        for e in eqs:
            assert e.y == pytest.approx(THREE.k2 + (e.x - THREE.m), abs=1e-14)
            assert abs(c.value(e.x - THREE.m)) < 1e-14
            v = vector_field(THREE, (e.x, e.y))
            assert math.hypot(*v) < 1e-12

    def test_count_equals_found(self, rng):
        for _ in range(300):
            p = random_params(rng)
            eqs = find_interior_equilibria(p)
            assert len(eqs) == count_interior_equilibria(p).n_predicted


class TestClassify:
    def test_rejects_non_equilibrium(self):
        with pytest.raises(NotAnEquilibrium):
            classify(THREE, eqmod.Equilibrium(0.5, 0.5))

    def test_taxonomy_matches_eigenvalues(self, rng):
        checked = 0
        for _ in range(400):
            p = random_params(rng)
            for e in find_interior_equilibria(p):
                e = classify(p, e)
                if not e.hyperbolic:
                    continue
                ev = np.linalg.eigvals(jacobian(p, (e.x, e.y)))
                re = np.real(ev)
                if e.taxonomy == "Saddle":
                    assert re.min() < 0 < re.max()
                elif e.taxonomy.startswith("Stable"):
                    assert re.max() < 0
                elif e.taxonomy.startswith("Unstable"):
                    assert re.min() > 0
                if e.taxonomy.endswith("Focus"):
                    assert abs(np.imag(ev[0])) > 0
                checked += 1
        assert checked > 200

    def test_trivial_equilibria_cases(self):
        e0, e1, e2 = trivial_equilibria(THREE)
        assert (e0.taxonomy, e1.taxonomy, e2.taxonomy) == (
            "UnstableNode", "Saddle", "Saddle")
        # m = 0 with strong predation: the predator-only point attracts
        p = ModelParams(a=1.0, b=0.5, k1=0.2, k2=0.5, m=0.0)
        assert trivial_equilibria(p)[2].taxonomy == "StableNode"
        # boundary a*k2 = k1, split on 1 - k1 - a
        pb = ModelParams(a=0.4, b=0.5, k1=0.2, k2=0.5, m=0.0)
        assert trivial_equilibria(pb)[2].taxonomy == "TopologicalSaddle"
        pb2 = ModelParams(a=0.9, b=0.5, k1=0.45, k2=0.5, m=0.0)
        assert trivial_equilibria(pb2)[2].taxonomy == "AttractingTopologicalNode"


class TestIndex:
    def test_three_equilibria_sum(self):
        eqs = [classify(THREE, e) for e in find_interior_equilibria(THREE)]
        rep = index_sum_check(THREE, eqs)
        assert rep.total == 1 and rep.passed

    def test_random_draws_sum(self, rng):
        for _ in range(300):
            p = random_params(rng)
            eqs = [classify(p, e) for e in find_interior_equilibria(p)]
            try:
                rep = index_sum_check(p, eqs)
            except NonHyperbolicPresent:
                continue
            assert rep.passed, (p.to_dict(), rep)

    def test_non_hyperbolic_refused(self):
        e = eqmod.Equilibrium(0.5, 0.5, taxonomy="LinearCenter", index=1,
                              hyperbolic=False)
        with pytest.raises(NonHyperbolicPresent):
            index_sum_check(THREE, [e])


class TestHopf:
    def test_s_vanishes_at_b0(self):
        (e,) = find_interior_equilibria(HOPF_NEG)
        hd = hopf_point(HOPF_NEG, e)
        pb = HOPF_NEG.with_b(hd.b0)
        (e0,) = (classify(pb, q) for q in find_interior_equilibria(pb))
        assert abs(e0.s) < 1e-12
        assert e0.p_det > 0

    def test_crossing_speed(self):
        (e,) = find_interior_equilibria(HOPF_NEG)
        hd = hopf_point(HOPF_NEG, e)
        d = 1e-6

        def s_at(b):
            pb = HOPF_NEG.with_b(b)
            (q,) = (classify(pb, q) for q in find_interior_equilibria(pb))
            return q.s

        assert (s_at(hd.b0 + d) - s_at(hd.b0 - d)) / (2 * d) == pytest.approx(
            1.0, abs=1e-6)

    def test_no_hopf_when_trace_cannot_vanish(self):
        p = ModelParams(a=0.5, b=0.1, k1=0.08, k2=0.1, m=0.002)
        (e,) = find_interior_equilibria(p)
        with pytest.raises(NoHopf):
            hopf_point(p, e)

    def test_lambda_negative_reference_set(self):
        (e,) = find_interior_equilibria(HOPF_NEG)
        hd = hopf_point(HOPF_NEG, e)
        assert hd.lam < 0
        assert not hd.subcritical
