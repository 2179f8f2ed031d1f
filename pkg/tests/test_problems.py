import struct

import numpy as np
import pytest

from byzmesh.problems import (
    ProblemError,
    QuadraticProblem,
    SoftmaxProblem,
    estimate_variations,
    load_idx,
    partition,
    synthetic_clusters,
)
from byzmesh.rng import DOMAIN_SAMPLING, stream

rng = np.random.default_rng(77)


def small_softmax(n_workers=2, classes=3, features=4, per_class=10, l2=0.01, seed=0):
    feats, labels = synthetic_clusters(classes, features, per_class, spread=0.5, seed=seed)
    shards = partition(feats, labels, n_workers, mode="iid", seed=seed)
    return SoftmaxProblem(shards=tuple(shards), n_classes=classes, l2=l2)


class TestQuadratic:
    def test_zero_noise_at_target(self):
        p = QuadraticProblem(targets=np.array([[1.0, 2.0]]))
        g = p.stochastic_grad(0, np.array([1.0, 2.0]), rng)
        assert np.array_equal(g, np.zeros(2))

    def test_formula(self):
        p = QuadraticProblem(targets=np.array([[1.0, 2.0]]))
        g = p.stochastic_grad(0, np.zeros(2), rng)
        assert np.array_equal(g, [-1.0, -2.0])

    def test_noise_norm_chi_square(self):
        # E||noise||^2 = D sigma^2; 1e5 draws land within 3%.
        d, sigma = 4, 0.7
        p = QuadraticProblem(targets=np.zeros((1, d)), noise_std=sigma)
        x = np.zeros(d)
        r = stream(3, DOMAIN_SAMPLING, 0)
        n = 100_000
        acc = 0.0
        for _ in range(n):
            g = p.stochastic_grad(0, x, r)
            acc += float(g @ g)
        assert acc / n == pytest.approx(d * sigma**2, rel=0.03)

    def test_optimum_gradient_zero(self):
        targets = rng.standard_normal((5, 3))
        p = QuadraticProblem(targets=targets)
        assert np.allclose(p.global_grad(p.optimum()), 0.0, atol=1e-15)

    def test_closed_form_variations(self):
        targets = rng.standard_normal((4, 3))
        p = QuadraticProblem(targets=targets, noise_std=0.5)
        gaps = ((targets.mean(axis=0) - targets) ** 2).sum(axis=1)
        assert p.delta_out_sq() == pytest.approx(gaps.max(), rel=1e-12)
        assert p.delta_in_sq() == pytest.approx(3 * 0.25, rel=1e-12)

    def test_scale_doubles_gradient(self):
        p = QuadraticProblem(targets=np.array([[1.0]]), scale=2.0)
        assert p.local_grad(0, np.array([3.0]))[0] == 4.0
        assert p.smoothness == 2.0


class TestSoftmaxGradient:
    def test_finite_differences(self):
        p = small_softmax()
        x = 0.1 * rng.standard_normal(p.dim)
        feats, labels = p.shards[0]
        g = p._grad_on(x, feats, labels)
        eps = 1e-6
        worst = 0.0
        for k in range(p.dim):
            e = np.zeros(p.dim)
            e[k] = eps
            num = (p._loss_on(x + e, feats, labels) - p._loss_on(x - e, feats, labels)) / (2 * eps)
            worst = max(worst, abs(num - g[k]) / max(abs(num), 1e-8))
        assert worst <= 1e-5

    def test_zero_model_uniform_probs(self):
        p = small_softmax()
        w = p._unflatten(np.zeros(p.dim))
        probs = p._probs(w, p.shards[0][0])
        assert np.allclose(probs, 1.0 / p.n_classes, atol=1e-15)

    def test_regularizer_gradient(self):
        p1 = small_softmax(l2=0.01)
        p0 = small_softmax(l2=0.0)
        x = rng.standard_normal(p1.dim)
        diff = p1.local_grad(0, x) - p0.local_grad(0, x)
        assert np.allclose(diff, 0.01 * x, atol=1e-12)

    def test_batch_sampling_with_replacement(self):
        p = small_softmax(per_class=2)
        r = stream(1, DOMAIN_SAMPLING, 1)
        g = p.stochastic_grad(0, np.zeros(p.dim), r, batch=64)
        assert g.shape == (p.dim,)

    def test_rejects_empty_batch(self):
        p = small_softmax()
        with pytest.raises(ProblemError):
            p.stochastic_grad(0, np.zeros(p.dim), rng, batch=0)

    def test_accuracy_tie_breaks_to_lowest_class(self):
        feats = np.array([[1.0, 0.0]])
        labels = np.array([0])
        p = SoftmaxProblem(shards=((feats, labels),), n_classes=3, eval_data=(feats, labels))
        assert p.accuracy(np.zeros(p.dim)) == 1.0  # all logits equal -> class 0


class TestPartition:
    def test_iid_even_split(self):
        feats = np.arange(20, dtype=float).reshape(20, 1)
        labels = np.repeat([0, 1], 10)
        shards = partition(feats, labels, 2, mode="iid", seed=0)
        for x, y in shards:
            assert (y == 0).sum() == 5 and (y == 1).sum() == 5

    def test_label_separated_purity(self):
        feats, labels = synthetic_clusters(10, 4, 12, spread=0.3, seed=1)
        shards = partition(feats, labels, 10, mode="label_separated", seed=1)
        for n, (x, y) in enumerate(shards):
            assert set(np.unique(y)) == {n}

    def test_sizes_sum_to_total(self):
        feats, labels = synthetic_clusters(3, 2, 11, spread=0.3, seed=4)
        shards = partition(feats, labels, 4, mode="iid", seed=2)
        assert sum(len(y) for _, y in shards) == len(labels)

    def test_unknown_mode(self):
        with pytest.raises(ProblemError):
            partition(np.zeros((2, 1)), np.zeros(2, dtype=int), 2, mode="dirichlet")


class TestIdx:
    def build(self, dims, payload):
        header = struct.pack(f">BBBB{len(dims)}I", 0, 0, 0x08, len(dims), *dims)
        return header + bytes(payload)

    def test_round_trip(self, tmp_path):
        payload = list(range(8))
        path = tmp_path / "cube"
        path.write_bytes(self.build((2, 2, 2), payload))
        raw = load_idx(path, rescale=False)
        assert raw.shape == (2, 2, 2)
        assert raw.ravel().tolist() == payload

    def test_rescale(self, tmp_path):
        path = tmp_path / "gray"
        path.write_bytes(self.build((2,), [0, 255]))
        assert load_idx(path).tolist() == [0.0, 1.0]

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "short"
        path.write_bytes(self.build((4,), [1, 2]))
        with pytest.raises(ProblemError, match="payload"):
            load_idx(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad"
        path.write_bytes(b"\x01\x00\x08\x01" + struct.pack(">I", 1) + b"\x00")
        with pytest.raises(ProblemError, match="magic"):
            load_idx(path)

    def test_unsupported_type_code(self, tmp_path):
        path = tmp_path / "floats"
        path.write_bytes(b"\x00\x00\x0d\x01" + struct.pack(">I", 1) + b"\x00\x00\x00\x00")
        with pytest.raises(ProblemError, match="type code"):
            load_idx(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "stub"
        path.write_bytes(b"\x00\x00")
        with pytest.raises(ProblemError):
            load_idx(path)


class TestEstimateVariations:
    def test_noiseless_quadratic(self):
        p = QuadraticProblem(targets=rng.standard_normal((3, 2)))
        est = estimate_variations(p, [np.zeros(2)], samples=10, rng=rng)
        assert est.delta_in_sq == 0.0
        assert est.delta_out_sq == pytest.approx(p.delta_out_sq(), rel=1e-12)

    def test_outer_variation_x_independent(self):
        p = QuadraticProblem(targets=rng.standard_normal((4, 3)))
        probes = [rng.standard_normal(3) for _ in range(3)]
        est = estimate_variations(p, probes, samples=1, rng=rng)
        assert est.delta_out_sq == pytest.approx(p.delta_out_sq(), rel=1e-12)

    def test_identical_shards_zero_outer(self):
        feats = rng.standard_normal((6, 3))
        labels = np.array([0, 1, 2, 0, 1, 2])
        p = SoftmaxProblem(shards=((feats, labels), (feats, labels)), n_classes=3)
        est = estimate_variations(p, [np.zeros(p.dim)], samples=2, rng=rng)
        assert est.delta_out_sq == pytest.approx(0.0, abs=1e-24)

    def test_inner_variation_three_percent(self):
        d, sigma = 3, 0.4
        p = QuadraticProblem(targets=np.zeros((2, d)), noise_std=sigma)
        r = stream(9, DOMAIN_SAMPLING, 2)
        est = estimate_variations(p, [np.zeros(d)], samples=50_000, rng=r)
        assert est.delta_in_sq == pytest.approx(d * sigma**2, rel=0.03)
