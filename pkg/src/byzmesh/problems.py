"""Local cost functions, stochastic gradient oracles, and data plumbing.

Two problem families: a quadratic consensus problem with closed-form
optimum (used by every bound check) and softmax regression over
labelled feature vectors (synthetic clusters or MNIST via IDX files).
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import DOMAIN_PARTITION, stream


class ProblemError(ValueError):
    pass


# ----------------------------- quadratic ------------------------------ #


@dataclass(frozen=True)
class QuadraticProblem:
    """f_n(x) = (scale/2) ||x - z_n||^2 plus optional Gaussian gradient
    noise of per-coordinate std ``noise_std`` (the inner variation).

    The global optimum is the mean of the targets, which makes this the
    workhorse for verifying consensus and convergence bounds: L = scale,
    and both variation constants have closed forms.
    """

    targets: np.ndarray = field(repr=False)
    noise_std: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        z = np.ascontiguousarray(np.atleast_2d(np.asarray(self.targets, dtype=np.float64)))
        object.__setattr__(self, "targets", z)
        if self.noise_std < 0:
            raise ProblemError("noise_std must be >= 0")
        if self.scale <= 0:
            raise ProblemError("scale must be > 0")

    @property
    def n_workers(self) -> int:
        return self.targets.shape[0]

    @property
    def dim(self) -> int:
        return self.targets.shape[1]

    @property
    def smoothness(self) -> float:
        return self.scale

    def optimum(self) -> np.ndarray:
        return self.targets.mean(axis=0)

    def f_star(self) -> float:
        return self.loss(self.optimum())

    def loss(self, x: np.ndarray) -> float:
        d = x[None, :] - self.targets
        return 0.5 * self.scale * float((d * d).sum()) / self.n_workers

    def local_grad(self, n: int, x: np.ndarray) -> np.ndarray:
        return self.scale * (x - self.targets[n])

    def global_grad(self, x: np.ndarray) -> np.ndarray:
        return self.scale * (x - self.optimum())

    def stochastic_grad(self, n: int, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        g = self.local_grad(n, x)
        if self.noise_std > 0:
            g = g + self.noise_std * rng.standard_normal(self.dim)
        return g

    def delta_in_sq(self) -> float:
        """E ||noise||^2 = D * noise_std^2, exact."""
        return self.dim * self.noise_std**2

    def delta_out_sq(self) -> float:
        """max_n ||grad f_n - grad f||^2 = scale^2 max_n ||zbar - z_n||^2."""
        d = self.optimum()[None, :] - self.targets
        return self.scale**2 * float((d * d).sum(axis=1).max())

    def accuracy(self, x: np.ndarray) -> float | None:
        return None


# ------------------------------ softmax ------------------------------- #


def _augment(features: np.ndarray) -> np.ndarray:
    ones = np.ones((features.shape[0], 1))
    return np.hstack([features, ones])


@dataclass(frozen=True)
class SoftmaxProblem:
    """Softmax regression with squared-l2 regularization.

    The model is a flat vector of length C * (F + 1): per-class weight
    rows with a bias appended as a constant-1 feature.  The regularizer
    contributes ``l2 * x`` to every gradient (i.e. the (l2/2)||x||^2
    penalty).  Per-worker shards back the stochastic oracle; evaluation
    data is optional and only used for accuracy.
    """

    shards: tuple[tuple[np.ndarray, np.ndarray], ...]
    n_classes: int
    l2: float = 0.01
    eval_data: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.n_classes < 2:
            raise ProblemError("need at least two classes")
        shards = []
        feat_dim = None
        for x, y in self.shards:
            x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
            y = np.asarray(y, dtype=np.int64)
            if x.shape[0] == 0:
                raise ProblemError("every worker needs at least one sample")
            if x.shape[0] != y.shape[0]:
                raise ProblemError("feature/label count mismatch")
            if (y < 0).any() or (y >= self.n_classes).any():
                raise ProblemError("label outside 0..C-1")
            if feat_dim is None:
                feat_dim = x.shape[1]
            elif x.shape[1] != feat_dim:
                raise ProblemError("inconsistent feature dimension across shards")
            shards.append((_augment(x), y))
        object.__setattr__(self, "shards", tuple(shards))
        object.__setattr__(self, "_feat_dim", feat_dim)

    @property
    def n_workers(self) -> int:
        return len(self.shards)

    @property
    def n_features(self) -> int:
        return self._feat_dim

    @property
    def dim(self) -> int:
        return self.n_classes * (self._feat_dim + 1)

    def _unflatten(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(self.n_classes, self._feat_dim + 1)

    def _probs(self, w: np.ndarray, feats: np.ndarray) -> np.ndarray:
        logits = feats @ w.T
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        return e / e.sum(axis=1, keepdims=True)

    def _grad_on(self, x: np.ndarray, feats: np.ndarray, labels: np.ndarray) -> np.ndarray:
        w = self._unflatten(x)
        probs = self._probs(w, feats)
        probs[np.arange(len(labels)), labels] -= 1.0
        grad = (probs.T @ feats) / len(labels)
        return grad.ravel() + self.l2 * x

    def _loss_on(self, x: np.ndarray, feats: np.ndarray, labels: np.ndarray) -> float:
        w = self._unflatten(x)
        logits = feats @ w.T
        logits -= logits.max(axis=1, keepdims=True)
        logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        ce = -float(logp[np.arange(len(labels)), labels].mean())
        return ce + 0.5 * self.l2 * float(x @ x)

    def stochastic_grad(
        self, n: int, x: np.ndarray, rng: np.random.Generator, batch: int = 32
    ) -> np.ndarray:
        """Mini-batch gradient, sampling with replacement from shard n."""
        if batch < 1:
            raise ProblemError("batch must be >= 1")
        feats, labels = self.shards[n]
        idx = rng.integers(feats.shape[0], size=batch)
        return self._grad_on(x, feats[idx], labels[idx])

    def local_grad(self, n: int, x: np.ndarray) -> np.ndarray:
        feats, labels = self.shards[n]
        return self._grad_on(x, feats, labels)

    def global_grad(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim)
        for n in range(self.n_workers):
            out += self.local_grad(n, x)
        return out / self.n_workers

    def loss(self, x: np.ndarray) -> float:
        return sum(self._loss_on(x, f, y) for f, y in self.shards) / self.n_workers

    def accuracy(self, x: np.ndarray) -> float | None:
        """Fraction correct on the evaluation split (argmax over logits,
        ties to the lowest class index)."""
        if self.eval_data is None:
            return None
        feats, labels = self.eval_data
        w = self._unflatten(x)
        logits = _augment(feats) @ w.T
        pred = logits.argmax(axis=1)
        return float((pred == labels).mean())


# --------------------------- data generation --------------------------- #


def synthetic_clusters(
    n_classes: int,
    n_features: int,
    samples_per_class: int,
    spread: float,
    seed: int,
    fold: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian blobs, one unit-norm random center per class.

    The centers depend only on ``seed``; ``fold`` selects an independent
    noise draw around the same centers (fold 0 for training data, other
    folds for held-out evaluation sets of the same task)."""
    center_rng = stream(seed, DOMAIN_PARTITION, 0, 0)
    centers = center_rng.standard_normal((n_classes, n_features))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    noise_rng = stream(seed, DOMAIN_PARTITION, 0, 1 + fold)
    feats, labels = [], []
    for c in range(n_classes):
        feats.append(centers[c] + spread * noise_rng.standard_normal((samples_per_class, n_features)))
        labels.append(np.full(samples_per_class, c, dtype=np.int64))
    return np.vstack(feats), np.concatenate(labels)


def partition(
    features: np.ndarray,
    labels: np.ndarray,
    n_honest: int,
    mode: str = "iid",
    seed: int = 0,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a labelled dataset into per-honest-worker shards.

    iid: per class, shuffle then deal round-robin so every worker sees
    every class evenly.  label_separated: worker n receives (its share
    of) class n mod C, making shards label-pure.
    """
    labels = np.asarray(labels)
    classes = np.unique(labels)
    rng = stream(seed, DOMAIN_PARTITION, 1)
    per_worker: list[list[int]] = [[] for _ in range(n_honest)]
    if mode == "iid":
        for c in classes:
            idx = np.flatnonzero(labels == c)
            idx = idx[rng.permutation(len(idx))]
            for pos, sample in enumerate(idx):
                per_worker[pos % n_honest].append(int(sample))
    elif mode == "label_separated":
        n_classes = len(classes)
        for c_pos, c in enumerate(classes):
            takers = [n for n in range(n_honest) if n % n_classes == c_pos]
            if not takers:
                continue
            idx = np.flatnonzero(labels == c)
            idx = idx[rng.permutation(len(idx))]
            for pos, sample in enumerate(idx):
                per_worker[takers[pos % len(takers)]].append(int(sample))
    else:
        raise ProblemError(f"unknown partition mode {mode!r}")
    shards = []
    for n, idx in enumerate(per_worker):
        if not idx:
            raise ProblemError(f"worker {n} received no samples")
        sel = np.array(sorted(idx))
        shards.append((features[sel], labels[sel]))
    return shards


# ------------------------------ IDX files ------------------------------ #


def load_idx(path: str | Path, rescale: bool = True) -> np.ndarray:
    """Parse a big-endian IDX file (the MNIST distribution format).

    Layout: two zero magic bytes, a type code (only 0x08, unsigned
    byte, is supported), a dimension count, that many big-endian uint32
    dimension sizes, then the raw payload.  With ``rescale`` the values
    map to floats in [0, 1]; otherwise the raw uint8 array is returned.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 4:
        raise ProblemError(f"{path}: truncated header")
    zero1, zero2, dtype_code, ndim = struct.unpack(">BBBB", raw[:4])
    if zero1 != 0 or zero2 != 0:
        raise ProblemError(f"{path}: bad magic bytes {zero1:#x} {zero2:#x}")
    if dtype_code != 0x08:
        raise ProblemError(f"{path}: unsupported type code {dtype_code:#x}")
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise ProblemError(f"{path}: truncated dimension table")
    dims = struct.unpack(f">{ndim}I", raw[4:header_end])
    count = int(np.prod(dims)) if dims else 0
    payload = raw[header_end:]
    if len(payload) != count:
        raise ProblemError(f"{path}: payload has {len(payload)} bytes, header promises {count}")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(dims)
    if rescale:
        return data.astype(np.float64) / 255.0
    return data.copy()


MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def mnist_dir() -> Path | None:
    """Default MNIST location: $BYZMESH_DATA_DIR, if set."""
    env = os.environ.get("BYZMESH_DATA_DIR")
    return Path(env) if env else None


def load_mnist(data_dir: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(train_x, train_y, test_x, test_y); images flattened row-major to
    784 floats in [0, 1]."""
    data_dir = Path(data_dir)
    arrays = {}
    for key, name in MNIST_FILES.items():
        path = data_dir / name
        if not path.exists():
            raise ProblemError(f"MNIST file missing: {path}")
        arrays[key] = load_idx(path, rescale="images" in key)
    tr_x = arrays["train_images"].reshape(len(arrays["train_images"]), -1)
    te_x = arrays["test_images"].reshape(len(arrays["test_images"]), -1)
    return tr_x, arrays["train_labels"].astype(np.int64), te_x, arrays["test_labels"].astype(np.int64)


# ------------------------- variation estimates ------------------------- #


@dataclass(frozen=True)
class VariationEstimate:
    delta_in_sq: float
    delta_out_sq: float

    def __post_init__(self):
        if self.delta_in_sq < 0 or self.delta_out_sq < 0:
            raise ProblemError("variations cannot be negative")


def estimate_variations(
    problem,
    probe_points: list[np.ndarray],
    samples: int,
    rng: np.random.Generator,
    batch: int = 32,
) -> VariationEstimate:
    """Empirical inner/outer variation over probe points.

    Inner: max over probes and workers of the mean squared deviation of
    stochastic from full local gradients.  Outer: max over probes and
    workers of the squared local-vs-global gradient gap.
    """
    din = 0.0
    dout = 0.0
    takes_batch = isinstance(problem, SoftmaxProblem)
    for x in probe_points:
        gbar = problem.global_grad(x)
        for n in range(problem.n_workers):
            gn = problem.local_grad(n, x)
            gap = gn - gbar
            dout = max(dout, float(gap @ gap))
            acc = 0.0
            for _ in range(samples):
                if takes_batch:
                    g = problem.stochastic_grad(n, x, rng, batch=batch)
                else:
                    g = problem.stochastic_grad(n, x, rng)
                d = g - gn
                acc += float(d @ d)
            din = max(din, acc / samples)
    return VariationEstimate(delta_in_sq=din, delta_out_sq=dout)
