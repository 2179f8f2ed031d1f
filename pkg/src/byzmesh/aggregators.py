"""Robust aggregation rules.

Every rule is a pure function of one worker's view: its own model, the
messages received from neighbors (honest or Byzantine, indistinguishable
to the worker), and optionally its mixing-matrix row.  The generic form
blends a base aggregator's output with the worker's own model through a
self-trust weight r in [0, 1).

Tie-breaking everywhere (Krum's argmin, the iterative-discard argmax)
resolves toward the lowest worker id, which keeps runs bitwise
reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import kernels

WEIGHT_SUM_TOL = 1e-12


class AggregationError(ValueError):
    pass


# ------------------------------ inputs ------------------------------- #


@dataclass(frozen=True)
class AggregationInput:
    """One worker's aggregation view, stored stacked for the kernels.

    ``ids`` lists the worker itself plus all neighbors in ascending id
    order (Byzantine ids trail by convention); ``models[i]`` is the
    message from ``ids[i]`` with the worker's own model at
    ``self_pos``.  ``weights`` aligns with ``ids`` when supplied.
    """

    ids: np.ndarray = field(repr=False)
    models: np.ndarray = field(repr=False)
    self_pos: int
    weights: np.ndarray | None = field(default=None, repr=False)
    step_size: float | None = None

    @classmethod
    def from_messages(
        cls,
        own_id: int,
        own_model: np.ndarray,
        neighbor_messages: Mapping[int, np.ndarray],
        weights: Mapping[int, float] | None = None,
        step_size: float | None = None,
    ) -> "AggregationInput":
        own_model = np.asarray(own_model, dtype=np.float64)
        if own_id in neighbor_messages:
            raise AggregationError("own id listed among neighbors")
        ids = np.array(sorted([own_id, *neighbor_messages]), dtype=np.int64)
        dim = own_model.shape[0]
        models = np.empty((len(ids), dim))
        for pos, m in enumerate(ids):
            vec = own_model if m == own_id else np.asarray(neighbor_messages[m], dtype=np.float64)
            if vec.shape != (dim,):
                raise AggregationError(f"message from {m} has shape {vec.shape}, expected ({dim},)")
            models[pos] = vec
        self_pos = int(np.searchsorted(ids, own_id))
        w_vec = None
        if weights is not None:
            missing = set(ids.tolist()) - set(weights)
            if missing:
                raise AggregationError(f"weights missing for ids {sorted(missing)}")
            w_vec = np.array([weights[m] for m in ids], dtype=np.float64)
        return cls(ids=ids, models=models, self_pos=self_pos, weights=w_vec, step_size=step_size)

    def __post_init__(self):
        models = np.ascontiguousarray(self.models, dtype=np.float64)
        object.__setattr__(self, "models", models)
        if self.weights is not None:
            w = np.ascontiguousarray(self.weights, dtype=np.float64)
            if (w < 0).any():
                raise AggregationError("weights must be nonnegative")
            if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
                raise AggregationError(f"weights sum to {w.sum()!r}, expected 1")
            object.__setattr__(self, "weights", w)

    @property
    def own_id(self) -> int:
        return int(self.ids[self.self_pos])

    @property
    def own_model(self) -> np.ndarray:
        return self.models[self.self_pos]

    @property
    def n_neighbors(self) -> int:
        return len(self.ids) - 1

    def neighbor_models(self) -> np.ndarray:
        return np.delete(self.models, self.self_pos, axis=0)

    def require_weights(self) -> np.ndarray:
        if self.weights is None:
            raise AggregationError("this rule needs the worker's mixing-matrix row")
        return self.weights


# --------------------------- base aggregators -------------------------- #


def generic_combine(base_out: np.ndarray, own: np.ndarray, r_n: float) -> np.ndarray:
    """(1 - r_n) * base_out + r_n * own, with exact fixed points:
    coordinates where base_out equals own pass through unchanged."""
    if not 0.0 <= r_n < 1.0:
        raise AggregationError(f"self-trust r={r_n} outside [0, 1)")
    base_out = np.asarray(base_out, dtype=np.float64)
    own = np.asarray(own, dtype=np.float64)
    if base_out.shape != own.shape:
        raise AggregationError("dimension mismatch in generic combine")
    if r_n == 0.0:
        return base_out.copy()
    return np.where(base_out == own, own, (1.0 - r_n) * base_out + r_n * own)


def _stack(inputs: Iterable[np.ndarray]) -> np.ndarray:
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(list(inputs), dtype=np.float64)))
    if x.shape[0] < 1:
        raise AggregationError("need at least one input vector")
    return x


def coo_med(inputs: Iterable[np.ndarray]) -> np.ndarray:
    """Coordinate-wise median; even counts average the two central values."""
    return kernels.coomed(_stack(inputs))


def _geomed_objective(point: np.ndarray, x: np.ndarray) -> float:
    return float(np.linalg.norm(x - point, axis=1).sum())


def geo_med(inputs: Iterable[np.ndarray], tol: float = 1e-10, max_iter: int = 1000) -> np.ndarray:
    """Geometric median by Weiszfeld iteration.

    Input points that satisfy the anchor optimality condition (the pull
    of all other points does not exceed the point's multiplicity) are
    returned exactly; this matters when a majority of inputs coincide.
    Otherwise iterate from the coordinate-wise mean with 1e-12 smoothing
    in the denominators until the iterate moves less than ``tol``.
    """
    x = _stack(inputs)
    s = x.shape[0]
    if s == 1:
        return x[0].copy()

    # Anchor check: exact-duplicate groups, lowest index first.
    seen: list[int] = []
    for i in range(s):
        if any(np.array_equal(x[i], x[j]) for j in seen):
            continue
        seen.append(i)
        same = np.array([np.array_equal(x[k], x[i]) for k in range(s)])
        others = x[~same]
        if others.shape[0] == 0:
            return x[i].copy()
        diffs = others - x[i]
        pull = (diffs / np.linalg.norm(diffs, axis=1, keepdims=True)).sum(axis=0)
        if np.linalg.norm(pull) <= same.sum():
            return x[i].copy()

    y = x.mean(axis=0)
    eps = 1e-12
    for _ in range(max_iter):
        dist = np.maximum(np.linalg.norm(x - y, axis=1), eps)
        inv = 1.0 / dist
        y_new = (x * inv[:, None]).sum(axis=0) / inv.sum()
        if np.linalg.norm(y_new - y) < tol:
            y = y_new
            break
        y = y_new
    # Contract: never worse than the best input point.
    best = min(range(s), key=lambda i: _geomed_objective(x[i], x))
    if _geomed_objective(y, x) > _geomed_objective(x[best], x):
        return x[best].copy()
    return y


def krum(inputs: Iterable[np.ndarray], q: int) -> np.ndarray:
    """Krum selection: the input with minimal summed squared distance to
    its S-q-2 nearest other inputs; ties go to the lowest index."""
    x = _stack(inputs)
    s = x.shape[0]
    if s < q + 3:
        raise AggregationError(f"krum needs at least q+3={q + 3} inputs, got {s}")
    return x[kernels.krum_select(x, q)].copy()


def tri_mean(neighbor_inputs: Iterable[np.ndarray], q: int) -> np.ndarray:
    """Per coordinate, drop the q largest and q smallest, average the rest."""
    x = _stack(neighbor_inputs)
    if x.shape[0] <= 2 * q:
        raise AggregationError(f"trimmed mean needs more than 2q={2 * q} inputs, got {x.shape[0]}")
    return kernels.trimean(x, q)


def faba(inputs: Iterable[np.ndarray], q: int, self_index: int = 0) -> np.ndarray:
    """q rounds of discarding the non-self input farthest from the plain
    mean of the survivors, then the mean of what remains.

    Shares the iterative-discard kernel with ios (uniform weights), so
    the two coincide bitwise whenever the mixing row is uniform.
    """
    x = _stack(inputs)
    s = x.shape[0]
    if q >= s - 1 or q < 0:
        raise AggregationError(f"faba q={q} must satisfy 0 <= q < {s - 1}")
    if not 0 <= self_index < s:
        raise AggregationError("self_index out of range")
    w = np.full(s, 1.0 / s)
    return kernels.ios_aggregate(w, x, self_index, q)


def clip(v: np.ndarray, tau: float) -> np.ndarray:
    """min(1, tau/||v||) * v; the zero vector passes through."""
    if tau <= 0:
        raise AggregationError(f"clipping radius tau={tau} must be positive")
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm <= tau:
        return v.copy()
    return (tau / norm) * v


def scc(inp: AggregationInput, tau_n: float) -> np.ndarray:
    """Self-centered clipping: sum_m w'_nm (x_n + CLIP(x~_mn - x_n, tau)),
    the self term contributing x_n unchanged."""
    w = inp.require_weights()
    return _clipped_sum(inp, w, tau_n)


def cc(inp: AggregationInput, tau_n: float) -> np.ndarray:
    """Centered clipping with uniform weights 1/(N_n+B_n+1) in place of
    the mixing row.  On incomplete graphs this loses the doubly
    stochastic virtual matrix that scc retains."""
    s = len(inp.ids)
    w = np.full(s, 1.0 / s)
    return _clipped_sum(inp, w, tau_n)


def _clipped_sum(inp: AggregationInput, w: np.ndarray, tau: float) -> np.ndarray:
    own = inp.own_model
    out = own.copy()
    for pos in range(len(inp.ids)):
        if pos == inp.self_pos:
            continue
        out += w[pos] * clip(inp.models[pos] - own, tau)
    return out


def drsa(inp: AggregationInput, c_r: float, alpha_k: float | None = None) -> np.ndarray:
    """x_n + alpha_k * C_R * sum_m sign(x~_mn - x_n), elementwise sign
    with sign(0) = 0."""
    if alpha_k is None:
        alpha_k = inp.step_size
    if alpha_k is None:
        raise AggregationError("drsa needs the current step size")
    if alpha_k * c_r <= 0:
        raise AggregationError(f"drsa requires alpha*C_R > 0, got {alpha_k * c_r}")
    own = inp.own_model
    signs = np.sign(inp.neighbor_models() - own).sum(axis=0)
    return own + (alpha_k * c_r) * signs


def ios(inp: AggregationInput, q_n: int) -> np.ndarray:
    """Iterative outlier scissor.

    Starting from the full trusted set (all neighbors plus self), each
    of the q_n rounds recomputes the weight-normalized average of the
    trusted models and discards the non-self member farthest from it
    (ties toward the lowest id).  Returns the normalized weighted
    average of the final trusted set.  The own model is never discarded.
    """
    w = inp.require_weights()
    if not 0 <= q_n < inp.n_neighbors:
        raise AggregationError(f"ios q_n={q_n} must satisfy 0 <= q_n < {inp.n_neighbors}")
    return kernels.ios_aggregate(w, inp.models, inp.self_pos, q_n)


def cumulative_weight(weights: Mapping[int, float], group: Iterable[int]) -> float:
    """Sum of a worker's weights over a trusted set of ids."""
    total = 0.0
    for m in group:
        if m not in weights:
            raise AggregationError(f"id {m} not in weight map")
        total += weights[m]
    return total


def ios_weight_cap(weights: Mapping[int, float], own_id: int, q_n: int) -> float:
    """W'_n(U_max): the sum of the q_n largest neighbor weights.

    Drives both the q <= B_n sanity condition (< 1/3) and the
    contraction bound 12 W / (1 - 3 W)."""
    neigh = sorted((w for m, w in weights.items() if m != own_id), reverse=True)
    return float(sum(neigh[:q_n]))


def ios_contraction_bound(weight_cap: float) -> float:
    """12 W / (1 - 3 W) for W = W'_n(U_max) < 1/3."""
    if weight_cap >= 1.0 / 3.0:
        raise AggregationError(f"contraction bound needs W'_n(U_max) < 1/3, got {weight_cap}")
    return 12.0 * weight_cap / (1.0 - 3.0 * weight_cap)


# ------------------------------ dispatch ------------------------------ #

KINDS = (
    "weimean",
    "coomed",
    "geomed",
    "krum",
    "trimean",
    "faba",
    "cc",
    "scc",
    "drsa",
    "ios",
    "nocomm",
    "oracle",
)

_ALIASES = {
    "mean": "weimean",
    "median": "coomed",
    "none": "nocomm",
}

# Parameters each kind accepts ("r" = self-trust override where the
# generic form applies).
_PARAMS: dict[str, set[str]] = {
    "weimean": set(),
    "coomed": {"r"},
    "geomed": {"r", "tol", "maxiter"},
    "krum": {"q", "r"},
    "trimean": {"q", "r"},
    "faba": {"q"},
    "cc": {"tau"},
    "scc": {"tau"},
    "drsa": {"cr"},
    "ios": {"q"},
    "nocomm": set(),
    "oracle": {"row"},
}

_INT_PARAMS = {"q", "maxiter"}


@dataclass(frozen=True)
class AggregatorSpec:
    """A rule selection plus its parameters, e.g. ios with q=2."""

    kind: str
    params: tuple[tuple[str, object], ...] = ()

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind.lower())
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise AggregationError(f"unknown aggregator kind {self.kind!r}")
        params = tuple(sorted((str(k), v) for k, v in dict(self.params).items()))
        bad = {k for k, _ in params} - _PARAMS[kind]
        if bad:
            raise AggregationError(f"{kind} does not accept params {sorted(bad)}")
        object.__setattr__(self, "params", params)

    @classmethod
    def make(cls, kind: str, **params) -> "AggregatorSpec":
        return cls(kind=kind, params=tuple(params.items()))

    def get(self, key: str, default=None):
        return dict(self.params).get(key, default)

    def with_params(self, **extra) -> "AggregatorSpec":
        merged = dict(self.params)
        merged.update(extra)
        return AggregatorSpec.make(self.kind, **merged)

    def label(self) -> str:
        if not self.params:
            return self.kind
        inner = ",".join(f"{k}={v}" for k, v in self.params if k != "row")
        return f"{self.kind}:{inner}" if inner else self.kind


def parse_aggregator(text: str) -> AggregatorSpec:
    """Parse config strings like "ios:q=2", "scc:tau=0.3", "coomed"."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            key = key.strip().lower()
            if not sep:
                raise AggregationError(f"malformed parameter {item!r} in {text!r}")
            try:
                params[key] = int(value) if key in _INT_PARAMS else float(value)
            except ValueError as exc:
                raise AggregationError(f"bad value for {key!r} in {text!r}") from exc
    return AggregatorSpec.make(kind, **params)


def _required(spec: AggregatorSpec, key: str):
    value = spec.get(key)
    if value is None:
        raise AggregationError(f"{spec.kind} requires parameter {key!r}")
    return value


def aggregate(spec: AggregatorSpec, inp: AggregationInput) -> np.ndarray:
    """Apply the selected rule to one worker's aggregation view."""
    kind = spec.kind
    own = inp.own_model
    if kind == "nocomm":
        return own.copy()
    if kind == "weimean":
        return kernels.weighted_sum(inp.require_weights(), inp.models)
    if kind == "coomed":
        base = coo_med(inp.models)
        return generic_combine(base, own, float(spec.get("r", 0.0)))
    if kind == "geomed":
        base = geo_med(
            inp.models, tol=float(spec.get("tol", 1e-10)), max_iter=int(spec.get("maxiter", 1000))
        )
        return generic_combine(base, own, float(spec.get("r", 0.0)))
    if kind == "krum":
        base = krum(inp.models, int(_required(spec, "q")))
        return generic_combine(base, own, float(spec.get("r", 0.0)))
    if kind == "trimean":
        q = int(_required(spec, "q"))
        base = tri_mean(inp.neighbor_models(), q)
        default_r = 1.0 / (inp.n_neighbors - 2 * q + 1)
        return generic_combine(base, own, float(spec.get("r", default_r)))
    if kind == "faba":
        return faba(inp.models, int(_required(spec, "q")), self_index=inp.self_pos)
    if kind == "ios":
        return ios(inp, int(_required(spec, "q")))
    if kind == "cc":
        return cc(inp, float(_required(spec, "tau")))
    if kind == "scc":
        return scc(inp, float(_required(spec, "tau")))
    if kind == "drsa":
        return drsa(inp, float(_required(spec, "cr")))
    if kind == "oracle":
        row = dict(_required(spec, "row"))
        ids = [m for m in inp.ids.tolist() if m in row]
        if abs(sum(row[m] for m in ids) - 1.0) > 1e-9:
            raise AggregationError("oracle row must sum to 1 over available ids")
        w = np.array([row[m] for m in ids], dtype=np.float64)
        x = np.ascontiguousarray(inp.models[[int(np.searchsorted(inp.ids, m)) for m in ids]])
        return kernels.weighted_sum(w, x)
    raise AggregationError(f"unknown aggregator kind {kind!r}")
