import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from helpers import random_graph
from pcrit import (ExhaustionSpec, GraphValidationError, SubsetSpec, WeightedGraph, build_family,
                   connected_components, validate, vertex_boundary)


def path(n):
    return WeightedGraph(n, [(i, i + 1) for i in range(n - 1)], np.ones(n - 1))


def star(leaves):
    return WeightedGraph(leaves + 1, [(0, k) for k in range(1, leaves + 1)], np.ones(leaves))


class TestBuildFamily:
    def test_z_radius_one(self):
        g, K = build_family(ExhaustionSpec("z", [1]), 0)
        assert sorted(g.coords[i] for i in K.interior) == [-1, 0, 1]
        assert sorted(g.coords[i] for i in K.boundary) == [-2, 2]
        assert g.num_edges == 4

    def test_star_three_leaves(self):
        g, K = build_family(ExhaustionSpec("star", [3], potential=1.0), 0)
        assert len(K) == 4
        assert np.all(g.c == 1.0)
        assert all(g.weight(0, k) == 1.0 for k in range(1, 4))

    def test_tree_radius_two(self):
        g, K = build_family(ExhaustionSpec("tree", [2], {"degree": 3}), 0)
        assert len(K) == 10
        assert len(K.boundary) == 12

    def test_radius_zero_is_root(self):
        g, K = build_family(ExhaustionSpec("lattice", [0], {"dim": 2}), 0)
        assert K.interior.tolist() == [0]
        assert len(K.boundary) == 4

    def test_cycle_wraps(self):
        g, K = build_family(ExhaustionSpec("cycle", [5], {"length": 6}), 0)
        assert g.n == 6 and g.num_edges == 6
        assert K.boundary.size == 0

    @pytest.mark.parametrize("family,params", [("z", {}), ("tree", {"degree": 3}), ("lattice", {"dim": 2}),
                                               ("star", {}), ("cycle", {"length": 9})])
    def test_nesting_is_exact(self, family, params):
        spec = ExhaustionSpec(family, [1, 2, 3], params, edge_weight=lambda a, b: 1.0 + abs(hash((a, b))) % 3 / 10)
        prev = None
        for n in range(3):
            g, K = build_family(spec, n)
            if prev is not None:
                pg, pK = prev
                ball = pK.interior
                assert g.coords[: pg.n] == pg.coords
                A, B = g.adjacency[ball][:, ball].toarray(), pg.adjacency[ball][:, ball].toarray()
                assert np.array_equal(A, B)
                assert set(ball.tolist()) <= set(K.interior.tolist())
            prev = (g, K)

    def test_root_in_first_truncation(self):
        g, K = build_family(ExhaustionSpec("tree", [1, 3], {"degree": 4}), 0)
        assert 0 in K

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown family"):
            ExhaustionSpec("moebius", [1])

    def test_non_increasing_radii(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            ExhaustionSpec("z", [3, 3])

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            build_family(ExhaustionSpec("z", [1]), 1)

    def test_aliases(self):
        assert ExhaustionSpec("path-segment-of-Z", [1]).family == "z"
        assert ExhaustionSpec("d-regular-tree-ball", [1]).family == "tree"


class TestBoundaryAndComponents:
    def test_path_boundary(self):
        assert vertex_boundary(path(5), [2]).tolist() == [1, 3]

    def test_full_set_has_empty_boundary(self):
        assert vertex_boundary(path(5), range(5)).size == 0

    def test_star_boundary(self):
        assert vertex_boundary(star(5), [1, 2]).tolist() == [0]

    def test_empty_set(self):
        assert vertex_boundary(path(3), []).size == 0
        assert connected_components(path(3), []) == []

    def test_path_components(self):
        comps = connected_components(path(5), [0, 1, 3, 4])
        assert [c.tolist() for c in comps] == [[0, 1], [3, 4]]

    def test_connected_single_block(self):
        assert len(connected_components(path(5), [1, 2, 3])) == 1

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 25))
    def test_boundary_properties(self, seed, n):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, n)
        K = np.flatnonzero(rng.random(n) < 0.5)
        bd = vertex_boundary(g, K)
        assert not set(bd.tolist()) & set(K.tolist())
        for y in bd:
            assert set(g.neighbors(y).tolist()) & set(K.tolist())
        outside = set(range(n)) - set(K.tolist()) - set(bd.tolist())
        for y in outside:
            assert not set(g.neighbors(y).tolist()) & set(K.tolist())

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 25))
    def test_components_idempotent_and_relabel_invariant(self, seed, n):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, n, extra=0)
        K = np.flatnonzero(rng.random(n) < 0.6)
        comps = connected_components(g, K)
        assert (sorted(np.concatenate(comps).tolist()) if comps else []) == sorted(K.tolist())
        for c in comps:
            assert [b.tolist() for b in connected_components(g, c)] == [c.tolist()]
        perm = rng.permutation(n)
        h = WeightedGraph(n, np.column_stack([perm[g.eu], perm[g.ev]]), g.eb)
        relabelled = connected_components(h, perm[K])
        assert sorted(sorted(perm[c].tolist()) for c in comps) == sorted(b.tolist() for b in relabelled)


class TestValidate:
    def test_symmetric_two_path(self):
        assert validate(path(2)) == []

    def test_zero_measure(self):
        B = sparse.diags([np.ones(4), np.ones(4)], [1, -1], shape=(5, 5))
        m = np.ones(5)
        m[3] = 0
        v = validate(B, m)
        assert [x["kind"] for x in v] == ["nonpositive measure"] and v[0]["vertex"] == 3

    def test_asymmetric_entry(self):
        B = np.array([[0, 1.0], [2.0, 0]])
        v = validate(B)
        assert [x["kind"] for x in v] == ["asymmetric edge"]

    def test_isolated_vertex_and_disconnected(self):
        B = np.zeros((3, 3))
        B[0, 1] = B[1, 0] = 1
        kinds = {x["kind"] for x in validate(B)}
        assert kinds == {"isolated vertex", "disconnected host"}

    def test_diagonal_entry(self):
        B = np.array([[1.0, 1.0], [1.0, 0]])
        assert "diagonal entry" in {x["kind"] for x in validate(B)}

    def test_constructor_rejects(self):
        with pytest.raises(GraphValidationError) as err:
            WeightedGraph(2, [(0, 1)], [-1.0])
        assert err.value.violations[0]["kind"] == "nonpositive weight"

    def test_from_matrix_rejects_asymmetric(self):
        with pytest.raises(GraphValidationError):
            WeightedGraph.from_matrix(np.array([[0, 1.0], [2.0, 0]]))


class TestWeightedGraph:
    def test_degree_cached_and_readonly(self):
        g = star(3)
        assert g.deg.tolist() == [3, 1, 1, 1]
        with pytest.raises(ValueError):
            g.deg[0] = 1

    def test_with_potential_copies(self):
        g = path(3)
        h = g.with_potential([1, 2, 3])
        assert g.c.tolist() == [0, 0, 0] and h.c.tolist() == [1, 2, 3]

    def test_subset_spec(self):
        g = path(5)
        K = SubsetSpec(g, [3, 1, 1])
        assert K.interior.tolist() == [1, 3] and not K.is_connected
        assert K.boundary.tolist() == [0, 2, 4]
        with pytest.raises(ValueError):
            SubsetSpec(g, [7])
