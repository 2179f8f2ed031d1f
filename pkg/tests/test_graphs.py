import json

import numpy as np
import pytest

from byzmesh.graphs import (
    GraphError,
    MixingMatrix,
    Topology,
    chi_squared,
    equal_neighbor_weights,
    from_json_doc,
    gen_erdos_renyi,
    gen_octopus,
    gen_two_castle,
    ios_virtual_matrix,
    metropolis_weights,
    spectral_gap,
    to_json_doc,
)
from byzmesh.rng import DOMAIN_GRAPH, stream


def path3():
    adj = np.zeros((3, 3), dtype=bool)
    adj[0, 1] = adj[1, 0] = adj[1, 2] = adj[2, 1] = True
    return Topology(n_honest=3, n_byzantine=0, adjacency=adj)


class TestErdosRenyi:
    def test_p1_complete(self):
        t = gen_erdos_renyi(4, 0, 1.0, seed=3)
        assert all(t.degree(n) == 3 for n in range(4))

    def test_paper_scale(self):
        t = gen_erdos_renyi(10, 2, 0.7, seed=1)
        assert t.n_honest == 10 and t.n_byzantine == 2
        assert list(t.byzantine_ids) == [10, 11]

    def test_seed_replay_oracle(self):
        # Documented draw order: pairs (i, j), i < j, lexicographic, one
        # uniform each; edge iff draw < p.
        t = gen_erdos_renyi(3, 0, 0.5, seed=42)
        rng = stream(42, DOMAIN_GRAPH)
        expected = set()
        for i in range(3):
            for j in range(i + 1, 3):
                if rng.uniform() < 0.5:
                    expected.add((i, j))
        assert set(t.edges()) == expected

    def test_p0_empty(self):
        assert gen_erdos_renyi(5, 0, 0.0, seed=0).edges() == []

    def test_bad_p(self):
        with pytest.raises(GraphError):
            gen_erdos_renyi(4, 0, 1.5, seed=0)


class TestTwoCastle:
    def test_section_structure(self):
        # 0-indexed version of the published neighbor sets: worker i of
        # castle A sees its castle plus all of B except its partner.
        t = gen_two_castle(3, 0)
        assert set(t.neighbors(0)) == {1, 2, 4, 5}
        assert set(t.neighbors(1)) == {0, 2, 3, 5}
        assert set(t.neighbors(2)) == {0, 1, 3, 4}
        assert set(t.neighbors(3)) == {4, 5, 1, 2}
        assert set(t.neighbors(4)) == {3, 5, 0, 2}
        assert set(t.neighbors(5)) == {3, 4, 0, 1}

    def test_small_castle_degrees(self):
        t = gen_two_castle(2, 0)
        assert all(t.degree(n) == 2 for n in range(4))

    def test_paper_scale_with_byzantine(self):
        t = gen_two_castle(5, 1)
        assert t.n_honest == 10 and t.n_byzantine == 2
        assert set(t.neighbors(10)) == set(range(5))  # byz A covers castle A
        assert set(t.neighbors(11)) == set(range(5, 10))


class TestOctopus:
    def test_no_legs_is_clique(self):
        t = gen_octopus(4)
        assert all(t.degree(n) == 3 for n in range(4))

    def test_leg_tips(self):
        t = gen_octopus(3, n_legs=3, leg_length=1)
        assert t.n_honest == 6
        for tip in (3, 4, 5):
            assert t.degree(tip) == 1

    def test_paper_scale(self):
        t = gen_octopus(6, n_legs=4, leg_length=1, byz_placement=[0, 4])
        assert t.n_honest == 10 and t.n_byzantine == 2

    def test_placement_out_of_range(self):
        with pytest.raises(GraphError):
            gen_octopus(3, byz_placement=[7])


class TestMetropolis:
    def test_complete_graph_uniform(self):
        t = gen_erdos_renyi(5, 0, 1.0, seed=0)
        w = metropolis_weights(t)
        assert np.allclose(w.weights, 0.2, atol=1e-15)

    def test_path3_formula(self):
        w = metropolis_weights(path3()).weights
        assert w[0, 1] == pytest.approx(1 / 3, abs=1e-15)
        assert w[1, 2] == pytest.approx(1 / 3, abs=1e-15)
        assert w[0, 0] == pytest.approx(2 / 3, abs=1e-15)
        assert w[1, 1] == pytest.approx(1 / 3, abs=1e-15)

    @pytest.mark.parametrize("topo", [
        gen_two_castle(3, 0),
        gen_two_castle(5, 1),
        gen_octopus(6, 2, 2, [0]),
        gen_erdos_renyi(8, 2, 0.6, seed=5),
        gen_erdos_renyi(12, 3, 0.8, seed=9),
    ])
    def test_symmetric_doubly_stochastic(self, topo):
        w = metropolis_weights(topo)
        assert w.is_symmetric(1e-12)
        assert np.abs(w.weights.sum(axis=1) - 1).max() <= 1e-12
        assert np.abs(w.weights.sum(axis=0) - 1).max() <= 1e-12

    def test_equal_weights_not_doubly_stochastic_on_path(self):
        w = equal_neighbor_weights(path3())
        assert not w.is_doubly_stochastic(1e-6)


class TestSpectralGap:
    def test_uniform_complete(self):
        n = 6
        assert spectral_gap(np.full((n, n), 1 / n)) == pytest.approx(1.0, abs=1e-10)

    def test_disconnected_blocks(self):
        w = np.zeros((4, 4))
        w[:2, :2] = 0.5
        w[2:, 2:] = 0.5
        assert spectral_gap(w) == pytest.approx(0.0, abs=1e-10)

    def _dense_oracle(self, w):
        n = w.shape[0]
        m = (np.eye(n) - np.full((n, n), 1 / n)) @ w
        return 1.0 - np.linalg.eigvalsh(m.T @ m).max()

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(0)
        for n in range(2, 21, 3):
            raw = rng.uniform(0.1, 1.0, (n, n))
            # Sinkhorn a few rounds toward doubly stochastic
            for _ in range(60):
                raw /= raw.sum(axis=1, keepdims=True)
                raw /= raw.sum(axis=0, keepdims=True)
            raw /= raw.sum(axis=1, keepdims=True)
            assert spectral_gap(raw) == pytest.approx(self._dense_oracle(raw), abs=1e-8)


class TestChiSquared:
    def test_doubly_stochastic_zero(self):
        w = metropolis_weights(gen_two_castle(3, 0))
        assert chi_squared(w) == pytest.approx(0.0, abs=1e-24)

    def test_hand_value(self):
        assert chi_squared(np.array([[1.0, 0.0], [0.5, 0.5]])) == pytest.approx(0.25, abs=1e-15)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(4)
        w = rng.uniform(0.0, 1.0, (5, 5))
        w /= w.sum(axis=1, keepdims=True)
        perm = rng.permutation(5)
        assert chi_squared(w[np.ix_(perm, perm)]) == pytest.approx(chi_squared(w), rel=1e-12)


class TestIosVirtualMatrix:
    def test_no_byzantine_is_restriction(self):
        t = gen_two_castle(3, 0)
        w = metropolis_weights(t)
        v = ios_virtual_matrix(w, t)
        assert np.array_equal(v.weights, w.weights)

    def test_two_castle_doubly_stochastic(self):
        t = gen_two_castle(5, 1)
        v = ios_virtual_matrix(metropolis_weights(t), t)
        assert np.abs(v.weights.sum(axis=0) - 1).max() <= 1e-12
        assert np.abs(v.weights.sum(axis=1) - 1).max() <= 1e-12

    def test_diagonal_folding_formula(self):
        # 2 honest + 1 byz triangle; worker 0: w'_00=0.3, byz weight 0.2.
        adj = ~np.eye(3, dtype=bool)
        t = Topology(n_honest=2, n_byzantine=1, adjacency=adj)
        wp = MixingMatrix(np.array([[0.3, 0.5, 0.2], [0.5, 0.3, 0.2], [0.2, 0.2, 0.6]]))
        v = ios_virtual_matrix(wp, t)
        assert v.weights[0, 0] == pytest.approx(0.5, abs=1e-15)

    def test_random_topologies_doubly_stochastic(self):
        for i in range(20):
            t = gen_erdos_renyi(6 + i % 5, 1 + i % 3, 0.7, seed=50 + i)
            v = ios_virtual_matrix(metropolis_weights(t), t)
            assert np.abs(v.weights.sum(axis=0) - 1).max() <= 1e-12

    def test_rejects_asymmetric(self):
        adj = ~np.eye(2, dtype=bool)
        t = Topology(n_honest=1, n_byzantine=1, adjacency=adj)
        with pytest.raises(GraphError):
            ios_virtual_matrix(MixingMatrix(np.array([[0.7, 0.3], [0.6, 0.4]])), t)


class TestSerialization:
    def test_round_trip(self):
        t = gen_two_castle(3, 1)
        w = metropolis_weights(t)
        doc = to_json_doc(t, w)
        t2, w2 = from_json_doc(doc)
        assert t2.n_honest == t.n_honest and t2.n_byzantine == t.n_byzantine
        assert np.array_equal(t2.adjacency, t.adjacency)
        assert np.array_equal(w2.weights, w.weights)

    def test_byte_stable(self):
        t = gen_erdos_renyi(6, 1, 0.5, seed=2)
        assert to_json_doc(t) == to_json_doc(t)
        edges = json.loads(to_json_doc(t))["edges"]
        assert edges == sorted(edges)


class TestTopologyValidation:
    def test_rejects_self_link(self):
        adj = np.eye(2, dtype=bool)
        with pytest.raises(GraphError):
            Topology(n_honest=2, n_byzantine=0, adjacency=adj)

    def test_rejects_asymmetric(self):
        adj = np.zeros((2, 2), dtype=bool)
        adj[0, 1] = True
        with pytest.raises(GraphError):
            Topology(n_honest=2, n_byzantine=0, adjacency=adj)

    def test_mixing_rejects_bad_rows(self):
        with pytest.raises(GraphError):
            MixingMatrix(np.array([[0.5, 0.4], [0.5, 0.5]]))
