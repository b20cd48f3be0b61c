import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh

from helpers import random_connected_subset, random_graph
from pcrit import (EigenConfig, ExhaustionSpec, OperatorParams, PreconditionError, SubsetSpec, apply_H,
                   barta_bounds, build_family, check_domain_monotonicity, check_maximum_principle,
                   principal_eigenvalue)
from pcrit.eigen import linear_dirichlet_matrix, rayleigh_quotient

seeds = st.integers(0, 2**32 - 1)
exponents = st.sampled_from((1.3, 1.5, 2.0, 2.5, 3.0, 4.0))


def z_sites(r, sites, c=0.0):
    g, _ = build_family(ExhaustionSpec("z", [r], potential=c), 0)
    return g, SubsetSpec(g, [g.coords.index(s) for s in sites])


class TestExamples:
    @pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
    def test_single_vertex(self, p):
        rng = np.random.default_rng(0)
        g = random_graph(rng, 8, c=rng.normal(size=8))
        for x in range(8):
            rep = principal_eigenvalue(OperatorParams(g, p), SubsetSpec(g, [x]))
            assert rep.lambda0 == pytest.approx((g.deg[x] + g.c[x]) / g.m[x], rel=1e-14)

    def test_two_sites_p2(self):
        g, K = z_sites(3, [1, 2])
        rep = principal_eigenvalue(OperatorParams(g, 2.0), K)
        assert rep.lambda0 == pytest.approx(1.0, abs=1e-12)
        phi = rep.eigenfunction[K.interior]
        assert phi[0] == pytest.approx(phi[1], rel=1e-10)

    @pytest.mark.parametrize("p", (1.5, 3.0))
    def test_two_sites_angle_grid(self, p):
        g, K = z_sites(3, [1, 2])
        P = OperatorParams(g, p)
        t = np.linspace(1e-6, np.pi / 2 - 1e-6, 20001)
        best = np.inf
        for a in t:
            phi = np.zeros(g.n)
            phi[K.interior] = np.cos(a), np.sin(a)
            best = min(best, rayleigh_quotient(P, phi))
        lam = principal_eigenvalue(P, K).lambda0
        assert lam <= best + 1e-12 and lam == pytest.approx(best, abs=1e-7)

    def test_p2_matches_eigh(self):
        rng = np.random.default_rng(1)
        g = random_graph(rng, 20, c=rng.normal(size=20))
        K = random_connected_subset(rng, g, 12)
        P = OperatorParams(g, 2.0)
        A, m = linear_dirichlet_matrix(P, K)
        exact = eigh(A.toarray() if hasattr(A, "toarray") else A, np.diag(m), eigvals_only=True)[0]
        assert principal_eigenvalue(P, K).lambda0 == pytest.approx(exact, abs=1e-10)

    def test_empty_rejected(self):
        g, _ = z_sites(1, [0])
        with pytest.raises(PreconditionError):
            principal_eigenvalue(OperatorParams(g, 2), SubsetSpec(g, []))


class TestMonotonicity:
    def test_site_inside_three_sites(self):
        g, small = z_sites(3, [0])
        _, big = z_sites(3, [-1, 0, 1])
        cert = check_domain_monotonicity(OperatorParams(g, 2.0), small, big)
        assert cert.passed
        assert cert.details["lambda0_K"] == pytest.approx(2.0)
        assert cert.details["lambda0_K_tilde"] == pytest.approx(2 - np.sqrt(2), abs=1e-12)

    def test_equal_sets_rejected(self):
        g, K = z_sites(3, [0, 1])
        with pytest.raises(PreconditionError):
            check_domain_monotonicity(OperatorParams(g, 2.0), K, K)

    @settings(max_examples=15, deadline=None)
    @given(seeds, exponents)
    def test_random_nested(self, seed, p):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 14, c=rng.normal(0, 0.5, 14))
        big = random_connected_subset(rng, g, 9)
        small = random_connected_subset(rng, g, 5, start=int(big.interior[0]), within=big.interior)
        if len(small) == len(big):
            return
        cert = check_domain_monotonicity(OperatorParams(g, p), small, big, EigenConfig(restarts=0))
        assert cert.gap > 0


class TestMaximumPrinciple:
    @pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
    def test_positive_regime(self, p):
        g, K = z_sites(4, [-2, -1, 0, 1, 2], c=-0.1)
        cert = check_maximum_principle(OperatorParams(g, p), K, trials=6)
        assert cert.details["regime"] == "lambda0>0" and cert.passed

    def test_nonpositive_regime_counterexample(self):
        g, K = z_sites(4, [-1, 0, 1], c=-2.0)
        cert = check_maximum_principle(OperatorParams(g, 2.0), K)
        assert cert.details["regime"] == "lambda0<=0" and cert.passed
        assert cert.details["negative_on_K"] and cert.details["supersolution"]


class TestInvariants:
    @settings(max_examples=20, deadline=None)
    @given(seeds, exponents)
    def test_residual_positivity_and_rayleigh_bound(self, seed, p):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 12, c=rng.normal(size=12))
        K = random_connected_subset(rng, g, 7)
        P = OperatorParams(g, p)
        rep = principal_eigenvalue(P, K, EigenConfig(restarts=2, seed=seed % 1000))
        assert rep.positive
        phi = rep.eigenfunction
        idx = K.interior
        r = apply_H(P, phi)[idx] - rep.lambda0 * np.abs(phi[idx]) ** (p - 1)
        assert np.max(np.abs(r)) <= max(1e-9, 10 * rep.precision_floor)
        assert rep.restarts_agreement <= 1e-8 * (1 + abs(rep.lambda0))
        for _ in range(50):
            trial = np.zeros(g.n)
            trial[idx] = rng.normal(size=idx.size)
            assert rayleigh_quotient(P, trial) >= rep.lambda0 - 1e-9 * (1 + abs(rep.lambda0))

    @pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
    def test_barta_consistency(self, p):
        rng = np.random.default_rng(2)
        g = random_graph(rng, 12, c=rng.normal(size=12))
        K = random_connected_subset(rng, g, 8)
        P = OperatorParams(g, p)
        lam = principal_eigenvalue(P, K, EigenConfig(restarts=0)).lambda0
        for _ in range(100):
            lo, hi = barta_bounds(P, rng.uniform(0.1, 2, g.n), K)
            assert lo - 1e-10 <= lam <= hi + 1e-10

    def test_disconnected_takes_minimum(self):
        g, K = z_sites(4, [-3, -2, 1, 2, 3])
        P = OperatorParams(g, 2.5)
        rep = principal_eigenvalue(P, K)
        assert len(rep.components) == 2
        lams = [c["lambda0"] for c in rep.components]
        assert rep.lambda0 == min(lams)
        with pytest.raises(PreconditionError):
            principal_eigenvalue(P, K, per_component=False)

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        g = random_graph(rng, 10, c=rng.normal(size=10))
        K = random_connected_subset(rng, g, 6)
        P = OperatorParams(g, 1.7)
        a = principal_eigenvalue(P, K, EigenConfig(seed=5))
        b = principal_eigenvalue(P, K, EigenConfig(seed=5))
        assert a.lambda0 == b.lambda0 and np.array_equal(a.eigenfunction, b.eigenfunction)
