import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_graph
from pcrit import (ExhaustionSpec, OperatorParams, PreconditionError, SubsetSpec, WeightedGraph, apply_H,
                   apply_L, build_family, energy, gateaux_residual, greens_formula_residual, hardy_weight,
                   is_harmonic, is_subharmonic, is_superharmonic, local_green, phi_p)
from pcrit.operators import bracket, verify_hardy

PS = (1.2, 1.5, 2.0, 2.5, 3.0, 4.0)
seeds = st.integers(0, 2**32 - 1)
exponents = st.sampled_from(PS)


def z_host(r=1, c=0.0):
    return build_family(ExhaustionSpec("z", [r], potential=c), 0)


class TestPhiP:
    def test_examples(self):
        assert phi_p(-2.0, 3) == -4.0
        assert phi_p(4.0, 1.5) == 2.0
        assert phi_p(0.0, 1.5) == 0.0

    def test_zero_for_all_p(self):
        for p in (1.01, 1.5, 2, 7):
            assert phi_p(0.0, p) == 0.0

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(1.05, 6))
    def test_odd_increasing_and_pairing(self, a, b, p):
        assert phi_p(-a, p) == -phi_p(a, p)
        if a < b:
            assert phi_p(a, p) <= phi_p(b, p)
        assert np.isclose(phi_p(a, p) * a, abs(a) ** p, rtol=1e-12, atol=0)


class TestApplyH:
    def test_tent_example(self):
        g, _ = z_host()
        f = np.zeros(g.n)
        f[0] = 2.0
        assert apply_H(OperatorParams(g, 3), f, at=0) == 8.0

    def test_constant_is_harmonic_without_potential(self):
        g, K = build_family(ExhaustionSpec("tree", [2]), 0)
        for p in PS:
            assert np.all(apply_H(OperatorParams(g, p), np.full(g.n, 3.7)) == 0)

    def test_L_ignores_potential(self):
        rng = np.random.default_rng(0)
        g = random_graph(rng, 8, c=rng.normal(size=8))
        f = rng.normal(size=8)
        P = OperatorParams(g, 2.5)
        Q = OperatorParams(g.with_potential(0.0), 2.5)
        assert np.allclose(apply_L(P, f), apply_H(Q, f), rtol=0, atol=0)

    def test_star_admits_no_positive_harmonic_function(self):
        # leaves harmonic given the centre value forces Hu(centre) > 0 when c = 1
        for p in (1.5, 2.0, 3.0):
            g, K = build_family(ExhaustionSpec("star", [6], potential=1.0), 0)
            P = OperatorParams(g, p)
            u = np.zeros(g.n)
            u[0] = 1.0
            # phi_p(u - 1) + phi_p(u) = 0 at each leaf gives u = 1/2
            u[1:] = 0.5
            Hu = apply_H(P, u)
            assert np.allclose(Hu[1:], 0, atol=1e-15)
            assert Hu[0] > 0.5
            assert np.isclose(bracket(P, Hu, u), energy(P, u))

    def test_rejects_wrong_shape(self):
        g, _ = z_host()
        with pytest.raises(ValueError):
            apply_H(OperatorParams(g, 2), np.zeros(2))

    def test_p_must_exceed_one(self):
        g, _ = z_host()
        for bad in (1.0, 0.5, np.nan):
            with pytest.raises(ValueError):
                OperatorParams(g, bad)


class TestEnergy:
    def test_indicator(self):
        rng = np.random.default_rng(1)
        g = random_graph(rng, 10, c=rng.normal(size=10))
        for x in range(10):
            f = np.zeros(10)
            f[x] = 1
            assert np.isclose(energy(OperatorParams(g, 2.7), f), g.deg[x] + g.c[x])

    @pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
    @pytest.mark.parametrize("n", (1, 3, 7))
    def test_tent_on_z(self, p, n):
        g, _ = z_host(n)
        coords = np.array(g.coords)
        tent = np.maximum(0, 1 - np.abs(coords) / (n + 1))
        assert np.isclose(energy(OperatorParams(g, p), tent), 2 * (n + 1) ** (1 - p), rtol=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(seeds, exponents, st.floats(0, 10))
    def test_homogeneity(self, seed, p, lam):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 9, c=rng.normal(size=9))
        P = OperatorParams(g, p)
        f = rng.normal(size=9)
        assert np.isclose(energy(P, lam * f), lam ** p * energy(P, f), rtol=1e-12, atol=1e-300)
        assert np.allclose(apply_H(P, lam * f), phi_p(lam, p) * apply_H(P, f), rtol=1e-12, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seeds, exponents)
    def test_reverse_triangle(self, seed, p):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 12, c=rng.normal(size=12))
        P = OperatorParams(g, p)
        f = rng.normal(size=12)
        assert energy(P, np.abs(f)) <= energy(P, f) + 1e-12 * (1 + abs(energy(P, f)))


class TestIdentities:
    def test_zero_test_function(self):
        rng = np.random.default_rng(2)
        g = random_graph(rng, 10)
        K = SubsetSpec(g, range(5))
        assert greens_formula_residual(OperatorParams(g, 2.5), K, rng.normal(size=10), np.zeros(10)) == 0

    @settings(max_examples=40, deadline=None)
    @given(seeds, exponents)
    def test_greens_formula(self, seed, p):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 20, c=rng.normal(size=20))
        K = SubsetSpec(g, np.flatnonzero(rng.random(20) < 0.5))
        res, scale = greens_formula_residual(OperatorParams(g, p), K, rng.normal(size=20), rng.normal(size=20),
                                             return_scale=True)
        assert res <= 1e-10 * (1 + scale)

    @pytest.mark.parametrize("p", PS)
    def test_energy_is_bracket_on_compact_support(self, p):
        rng = np.random.default_rng(3)
        g = random_graph(rng, 15, c=rng.normal(size=15))
        K = SubsetSpec(g, range(8))
        phi = np.zeros(15)
        phi[:8] = rng.normal(size=8)
        P = OperatorParams(g, p)
        assert np.isclose(energy(P, phi), bracket(P, apply_H(P, phi), phi, K), rtol=1e-12)

    def test_gateaux_zero_direction(self):
        rng = np.random.default_rng(4)
        g = random_graph(rng, 10)
        assert gateaux_residual(OperatorParams(g, 3), rng.normal(size=10), np.zeros(10)) == 0

    def test_gateaux_p3(self):
        rng = np.random.default_rng(5)
        g = random_graph(rng, 10, c=rng.normal(size=10))
        P = OperatorParams(g, 3.0)
        assert gateaux_residual(P, rng.normal(size=10), rng.normal(size=10), 1e-5, relative=True) <= 1e-6

    def test_gateaux_p2_exact(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            g = random_graph(rng, 10, c=rng.normal(size=10))
            P = OperatorParams(g, 2.0)
            assert gateaux_residual(P, rng.normal(size=10), rng.normal(size=10), 1e-3, relative=True) <= 1e-9

    def test_gateaux_rejects_step(self):
        g, _ = z_host()
        with pytest.raises(ValueError):
            gateaux_residual(OperatorParams(g, 2), np.zeros(g.n), np.zeros(g.n), step=0)


class TestHarmonicityAndHardy:
    def test_constant_one(self):
        g, K = z_host(3)
        P = OperatorParams(g, 2.5)
        assert np.all(hardy_weight(P, np.ones(g.n), K) == 0)
        assert is_harmonic(P, np.ones(g.n), K).passed

    def test_nonnegative_potential_gives_c_over_m(self):
        rng = np.random.default_rng(7)
        g = random_graph(rng, 8, c=rng.uniform(0, 2, 8))
        K = SubsetSpec(g, range(8))
        w = hardy_weight(OperatorParams(g, 1.7), np.ones(8), K)
        assert np.allclose(w, g.c / g.m)
        assert is_superharmonic(OperatorParams(g, 1.7), np.ones(8), K).passed

    def test_negative_potential_fails_exactly_there(self):
        c = np.array([0.5, -0.2, 0.0, -1.0, 0.3])
        g = WeightedGraph(5, [(i, i + 1) for i in range(4)], np.ones(4), 1.0, c)
        cert = is_superharmonic(OperatorParams(g, 2), np.ones(5), SubsetSpec(g, range(5)))
        assert not cert.passed and cert.details["failing_vertices"] == [1, 3]
        assert is_subharmonic(OperatorParams(g, 2), -np.ones(5), SubsetSpec(g, range(5))).passed is False

    @pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
    def test_green_function_weight(self, p):
        g, K = z_host(3)
        P = OperatorParams(g, p)
        G = local_green(P, 0, K).green
        V = SubsetSpec(g, K.interior)
        Hg = apply_H(P, G)
        assert np.allclose(Hg[K.interior], np.eye(g.n)[0][K.interior], atol=1e-9)
        w = hardy_weight(P, G, V, tol=1e-9)
        expected = np.zeros(g.n)
        expected[0] = 1 / G[0] ** (p - 1)
        assert np.allclose(w, expected, atol=1e-8)
        assert verify_hardy(P, w, V, trials=1000, seed=1).passed

    def test_rejects_nonpositive(self):
        g, K = z_host(1)
        u = np.ones(g.n)
        u[0] = 0
        with pytest.raises(PreconditionError, match="strictly positive"):
            hardy_weight(OperatorParams(g, 2), u, K)

    def test_rejects_subharmonic(self):
        g, K = z_host(1, c=-0.5)
        with pytest.raises(PreconditionError, match="superharmonic"):
            hardy_weight(OperatorParams(g, 2), np.ones(g.n), K)

    @settings(max_examples=30, deadline=None)
    @given(seeds, exponents)
    def test_weight_nonnegative_when_superharmonic(self, seed, p):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 10, c=rng.uniform(0, 1, 10))
        K = SubsetSpec(g, range(10))
        u = rng.uniform(0.5, 1.5, 10)
        P = OperatorParams(g, p)
        if is_superharmonic(P, u, K, tol=0).passed:
            assert np.all(hardy_weight(P, u, K, tol=0) >= 0)
