import numpy as np
import pytest

from pcrit import (CoercivityError, EigenConfig, ExhaustionSpec, OperatorParams, PotentialConfig,
                   PreconditionError, Refusal, SubsetSpec, apply_H, build_family, capacity, capacity_sequence,
                   classify, green_function, ground_state, lambda_upper_from_capacity, local_green,
                   superharmonic_witness)

FAST = PotentialConfig(cross_check=False, eigen=EigenConfig(restarts=0))
TREE = ExhaustionSpec("tree", [6, 8, 10, 12, 14], {"degree": 3})


class TestCapacity:
    @pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
    @pytest.mark.parametrize("r", (0, 1, 3, 7))
    def test_z_segments(self, p, r):
        g, K = build_family(ExhaustionSpec("z", [r]), 0)
        cap, u = capacity(OperatorParams(g, p), 0, K)
        assert cap == pytest.approx(2 / (r + 1) ** (p - 1), rel=1e-9)
        coords = np.abs(np.array(g.coords))
        assert np.allclose(u, np.maximum(0, 1 - coords / (r + 1)), atol=1e-9)

    def test_single_vertex_with_potential(self):
        g, _ = build_family(ExhaustionSpec("star", [4], potential=0.5), 0)
        cap, _ = capacity(OperatorParams(g, 2.5), 0, SubsetSpec(g, [0]))
        assert cap == pytest.approx(g.deg[0] + 0.5)

    def test_anchor_outside(self):
        g, K = build_family(ExhaustionSpec("z", [1]), 0)
        with pytest.raises(PreconditionError):
            capacity(OperatorParams(g, 2), 0, SubsetSpec(g, [1]))

    def test_noncoercive(self):
        g, K = build_family(ExhaustionSpec("cycle", [3], {"length": 4}), 0)
        with pytest.raises(CoercivityError):
            capacity(OperatorParams(g, 2), 0, K)

    @pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
    def test_sequence_monotone_and_stationary(self, p):
        rep = capacity_sequence(p, ExhaustionSpec("z", [1, 3, 7, 15]), cfg=FAST)
        assert rep.monotone
        assert max(rep.stationarity) <= 1e-8
        assert rep.fit_exponent == pytest.approx(1 - p, abs=0.05)

    def test_cross_check_at_neighbour(self):
        rep = capacity_sequence(2.0, ExhaustionSpec("z", [1, 3, 7, 15, 31]))
        assert rep.cross_check["vertex"] != 0 and rep.limit_estimate == pytest.approx(0, abs=1e-6)
        assert rep.cross_check["limit_estimate"] == pytest.approx(0, abs=1e-6)

    def test_tree_flattens(self):
        rep = capacity_sequence(2.0, TREE, cfg=FAST)
        assert rep.flattened and rep.limit_estimate == pytest.approx(1.5, rel=1e-4)


class TestGreen:
    @pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
    def test_single_vertex(self, p):
        g, _ = build_family(ExhaustionSpec("z", [1]), 0)
        rep = local_green(OperatorParams(g, p), 0, SubsetSpec(g, [0]))
        assert rep.green[0] == pytest.approx(0.5 ** (1 / (p - 1)), rel=1e-12)

    def test_local_green_solves(self):
        g, K = build_family(ExhaustionSpec("z", [3]), 0)
        rep = local_green(OperatorParams(g, 3.0), 0, K)
        target = np.zeros(g.n)
        target[0] = 1
        assert np.allclose(apply_H(OperatorParams(g, 3.0), rep.green)[K.interior], target[K.interior], atol=1e-9)
        assert rep.positive and rep.energy_defect <= 1e-9

    def test_tree(self):
        rep = green_function(2.0, TREE, cfg=FAST)
        assert rep.residual <= 1e-8 and rep.energy_defect <= 1e-7
        assert rep.positive and rep.monotone and rep.nonconstant
        G0, _ = build_family(TREE, 0)
        depth = np.array([len(c) for c in G0.coords])
        # the radial Green's function of the 3-regular tree at p = 2 is (2/3) 2^-depth
        assert np.allclose(rep.green_limit, (2 / 3) * 0.5 ** depth, atol=1e-6)

    def test_z_refused(self):
        with pytest.raises(Refusal) as err:
            green_function(2.0, ExhaustionSpec("z", [1, 3, 7, 15]), cfg=FAST)
        assert err.value.evidence.limit_estimate <= 1e-6

    def test_short_schedule_refused(self):
        with pytest.raises(Refusal, match="flattened"):
            green_function(2.0, ExhaustionSpec("z", [1, 3, 7]), cfg=FAST)


class TestWitness:
    def test_nonnegative_potential(self):
        rep = superharmonic_witness(2.0, ExhaustionSpec("z", [1, 3, 7], potential=0.1), cfg=FAST)
        assert rep.success and rep.harmonic_claimed
        assert all(c["positive"] and c["superharmonic"] for c in rep.checks)

    def test_star_not_claimed_harmonic(self):
        rep = superharmonic_witness(2.0, ExhaustionSpec("star", [3, 5], potential=1.0), cfg=FAST)
        assert rep.success and not rep.harmonic_claimed

    @pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
    def test_tree_small_negative_potential(self, p):
        rep = superharmonic_witness(p, ExhaustionSpec("tree", [1, 2, 3], {"degree": 3}, potential=-0.02),
                                    cfg=FAST)
        assert rep.success
        assert all(C > 0 for C in rep.C)

    def test_tree_large_negative_potential(self):
        rep = superharmonic_witness(2.0, ExhaustionSpec("tree", [1, 2, 3], {"degree": 3}, potential=-1.0),
                                    cfg=FAST)
        assert not rep.success and rep.negative_energy < 0


class TestGroundState:
    @pytest.mark.parametrize("p", (1.5, 2.0, 3.0))
    def test_z_constant(self, p):
        rep = ground_state(p, ExhaustionSpec("z", [1, 3, 7, 15, 31]), cfg=FAST)
        assert rep.passed
        assert np.allclose(rep.ground_state[rep.window], 1.0, atol=1e-6)

    def test_z_with_heavy_edge(self):
        heavy = ExhaustionSpec("z", [3, 7, 15, 31, 63, 127],
                               edge_weight=lambda a, b: 2.0 if {a, b} == {0, 1} else 1.0)
        rep = ground_state(2.0, heavy, cfg=FAST)
        assert rep.passed
        assert np.allclose(rep.ground_state[rep.window], 1.0, atol=1e-6)

    def test_subcritical_refused(self):
        with pytest.raises(Refusal):
            ground_state(2.0, TREE, cfg=FAST)


class TestClassify:
    def test_z_critical(self):
        assert classify(2.0, ExhaustionSpec("z", [1, 3, 7, 15]), cfg=FAST).classification == "critical-evidence"

    def test_tree_subcritical(self):
        assert classify(2.0, TREE, cfg=FAST).classification == "subcritical"

    def test_indicator_witness(self):
        v = classify(2.0, ExhaustionSpec("z", [1, 2], potential=lambda d: -3.0 if d == 0 else 0.0), cfg=FAST)
        assert v.classification == "supercritical" and v.evidence["witness"] == "indicator"

    def test_eigenfunction_witness(self):
        v = classify(2.0, ExhaustionSpec("z", [1, 3, 7], potential=-0.2), cfg=FAST)
        assert v.classification == "supercritical" and v.evidence["witness"] == "eigenfunction"
        assert v.evidence["energy"] < 0

    def test_short_schedule_inconclusive(self):
        assert classify(2.0, ExhaustionSpec("tree", [1, 2], {"degree": 3}), cfg=FAST).classification \
            == "inconclusive"


class TestLambdaBound:
    def test_z_tends_to_zero(self):
        rep = lambda_upper_from_capacity(2.0, ExhaustionSpec("z", [1, 3, 7, 15, 31]), FAST)
        assert rep.consistent and rep.bound == pytest.approx(0, abs=1e-6)

    def test_single_truncation(self):
        rep = lambda_upper_from_capacity(2.5, ExhaustionSpec("z", [0]), FAST, vertices=[0])
        assert rep.consistent and rep.bound == pytest.approx(2.0)

    def test_tree_above_bottom_of_spectrum(self):
        rep = lambda_upper_from_capacity(2.0, TREE, FAST)
        assert rep.consistent
        assert rep.bound >= 3 - 2 * np.sqrt(2)
