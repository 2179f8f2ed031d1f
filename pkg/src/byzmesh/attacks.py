"""Byzantine message generators.

Each attack produces the message one Byzantine worker sends to one
honest target at one step, as a deterministic function of the target's
post-gradient neighborhood view and a per-(step, attacker, target)
random stream.  Attackers are omniscient over the honest models but
follow no cost function of their own.
"""
from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import kernels


class AttackError(ValueError):
    pass


KINDS = ("none", "gaussian", "signflip", "isolation", "dup", "alie")

_PARAMS: dict[str, set[str]] = {
    "none": set(),
    "gaussian": {"var"},
    "signflip": set(),
    "isolation": set(),
    "dup": set(),
    "alie": {"z"},
}


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        kind = self.kind.lower()
        if kind == "sampleduplicate":
            kind = "dup"
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise AttackError(f"unknown attack kind {self.kind!r}")
        params = tuple(sorted((str(k), float(v)) for k, v in dict(self.params).items()))
        bad = {k for k, _ in params} - _PARAMS[kind]
        if bad:
            raise AttackError(f"{kind} does not accept params {sorted(bad)}")
        object.__setattr__(self, "params", params)

    @classmethod
    def make(cls, kind: str, **params) -> "AttackSpec":
        return cls(kind=kind, params=tuple(params.items()))

    def get(self, key: str, default: float) -> float:
        return dict(self.params).get(key, default)

    def label(self) -> str:
        if not self.params:
            return self.kind
        return self.kind + ":" + ",".join(f"{k}={v:g}" for k, v in self.params)


def parse_attack(text: str) -> AttackSpec:
    """Parse config strings: "gaussian:var=1", "signflip", "alie:z=1.0"."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise AttackError(f"malformed parameter {item!r} in {text!r}")
            try:
                params[key.strip().lower()] = float(value)
            except ValueError as exc:
                raise AttackError(f"bad value for {key!r} in {text!r}") from exc
    return AttackSpec.make(kind, **params)


@dataclass
class AttackContext:
    """The view an attacker has of one honest target worker.

    ``honest_models`` maps the target's honest neighbor ids to their
    post-gradient models; ``own_model`` is the target's own post-gradient
    model.  ``weights`` is the target's mixing-matrix row (needed by the
    mean-seeking attacks), ``byz_ids`` the Byzantine neighbors of the
    target, and ``rng`` the per-(step, attacker, target) stream.
    """

    target_id: int
    own_model: np.ndarray
    honest_models: dict[int, np.ndarray]
    byz_ids: tuple[int, ...] = ()
    weights: Mapping[int, float] | None = None
    rng: np.random.Generator | None = None
    _stacked: np.ndarray | None = field(default=None, repr=False)

    def honest_ids(self) -> list[int]:
        return sorted(self.honest_models)

    def stacked_honest(self) -> np.ndarray:
        if self._stacked is None:
            self._stacked = np.ascontiguousarray(
                [self.honest_models[m] for m in self.honest_ids()], dtype=np.float64
            )
        return self._stacked

    def require_weights(self) -> Mapping[int, float]:
        if self.weights is None:
            raise AttackError("this attack needs the target's weight row")
        return self.weights

    def require_rng(self) -> np.random.Generator:
        if self.rng is None:
            raise AttackError("this attack needs a random stream")
        return self.rng


def honest_weighted_mean(ctx: AttackContext) -> np.ndarray:
    """Normalized weighted mean over the target's honest neighbors only
    (the target's own model is excluded)."""
    ids = ctx.honest_ids()
    if not ids:
        raise AttackError(f"target {ctx.target_id} has no honest neighbors")
    w = ctx.require_weights()
    wts = np.array([w[m] for m in ids], dtype=np.float64)
    total = wts.sum()
    if total <= 0:
        raise AttackError("honest neighbor weights sum to zero")
    return kernels.weighted_sum(wts / total, ctx.stacked_honest())


def gaussian_attack(ctx: AttackContext, var: float = 1.0) -> np.ndarray:
    """Gaussian noise of the given per-coordinate variance around the
    honest weighted mean."""
    mean = honest_weighted_mean(ctx)
    if var == 0.0:
        return mean
    return mean + np.sqrt(var) * ctx.require_rng().standard_normal(mean.shape[0])


def sign_flip_attack(ctx: AttackContext) -> np.ndarray:
    return -honest_weighted_mean(ctx)


def sample_duplicate_attack(ctx: AttackContext) -> np.ndarray:
    """Uniform draw among the honest neighbor models."""
    ids = ctx.honest_ids()
    if not ids:
        raise AttackError(f"target {ctx.target_id} has no honest neighbors")
    pick = int(ctx.require_rng().integers(len(ids)))
    return ctx.honest_models[ids[pick]].copy()


def alie_attack(ctx: AttackContext, z: float = 1.0) -> np.ndarray:
    """Per-coordinate mean minus z standard deviations (population std)
    of the honest neighbor models: small, hard-to-filter drift."""
    x = ctx.stacked_honest()
    if x.shape[0] == 0:
        raise AttackError(f"target {ctx.target_id} has no honest neighbors")
    return x.mean(axis=0) - z * x.std(axis=0)


def _scalar_resolve(
    w: np.ndarray, col, byz_mask, target_d: float, t0: float, wb: float
) -> float:
    """Exact per-coordinate solve against a scalar mirror of the
    weighted-sum kernel (same accumulation order, same float ops)."""
    terms = list(zip(w.tolist(), byz_mask, col))

    def f(tc: float) -> float:
        acc = 0.0
        for wi, is_byz, v in terms:
            acc += wi * (tc if is_byz else v)
        return acc - target_d

    t = t0
    r = f(t)
    for _ in range(4):
        if r == 0.0:
            return t
        step = t - r / wb
        if step == t:
            break
        t = step
        r = f(t)
    if r == 0.0:
        return t
    best_t, best_r = t, abs(r)
    direction = -math.inf if r > 0 else math.inf
    start_positive = r > 0
    overshoot = 0
    for _ in range(4096):
        t = math.nextafter(t, direction)
        r = f(t)
        if r == 0.0:
            return t
        if abs(r) < best_r:
            best_t, best_r = t, abs(r)
        if (r > 0) != start_positive:
            # Crossed the target; pad a few steps in case the staircase
            # wobbles, then give up: no representable t is exact.
            overshoot += 1
            if overshoot > 4:
                break
    return best_t


def isolation_attack(ctx: AttackContext) -> np.ndarray:
    """Message t making the target's weighted-mean aggregate reproduce
    its own model exactly, so communication is nullified.

    All Byzantine neighbors of the target send the same t.  The linear
    solve alone leaves the aggregate a few ulps off, so t is refined
    per coordinate against a replay of the weighted-sum kernel until
    the aggregate equals the target's model bit for bit.  (An exact t
    exists whenever the required correction magnitude is commensurate
    with the target's own scale; otherwise the best value, within an
    ulp, is used.)
    """
    w_map = ctx.require_weights()
    if not ctx.byz_ids:
        raise AttackError("isolation needs at least one Byzantine neighbor")
    byz = sorted(ctx.byz_ids)
    ids = sorted([ctx.target_id, *ctx.honest_models, *byz])
    w = np.array([w_map[m] for m in ids], dtype=np.float64)
    wb = float(sum(w_map[b] for b in byz))
    if wb <= 0:
        raise AttackError("isolation needs positive Byzantine weight mass")
    target = ctx.own_model
    dim = target.shape[0]
    x = np.empty((len(ids), dim))
    byz_pos = []
    for pos, m in enumerate(ids):
        if m == ctx.target_id:
            x[pos] = target
        elif m in ctx.honest_models:
            x[pos] = ctx.honest_models[m]
        else:
            byz_pos.append(pos)
    x = np.ascontiguousarray(x)
    byz_mask = [pos in byz_pos for pos in range(len(ids))]

    # Linear solve: with Byzantine rows zeroed the kernel returns the
    # honest partial sum, so t0 = (x_n - partial) / wb.
    for pos in byz_pos:
        x[pos] = 0.0
    partial = kernels.weighted_sum(w, x)
    t = (target - partial) / wb

    # Vectorized Newton pass settles almost every coordinate ...
    for _ in range(5):
        for pos in byz_pos:
            x[pos] = t
        resid = kernels.weighted_sum(w, x) - target
        if not resid.any():
            return t
        step = np.where(resid != 0.0, t - resid / wb, t)
        stalled = (step == t) & (resid != 0.0)
        if stalled.any():
            step = np.where(
                stalled, np.nextafter(t, np.where(resid > 0, -np.inf, np.inf)), step
            )
        t = step

    # ... and the stragglers get an exact scalar walk.
    for pos in byz_pos:
        x[pos] = t
    resid = kernels.weighted_sum(w, x) - target
    for d in np.flatnonzero(resid != 0.0):
        t[d] = _scalar_resolve(w, x[:, d].tolist(), byz_mask, float(target[d]), float(t[d]), wb)
    return t


def make_message(spec: AttackSpec, ctx: AttackContext) -> np.ndarray:
    """Produce one Byzantine message for the given attack and context."""
    kind = spec.kind
    if kind == "none":
        # Benign placeholder: a consensus-neutral message at the honest
        # weighted mean, so "no attack" runs keep the full topology.
        return honest_weighted_mean(ctx)
    if kind == "gaussian":
        return gaussian_attack(ctx, var=spec.get("var", 1.0))
    if kind == "signflip":
        return sign_flip_attack(ctx)
    if kind == "isolation":
        return isolation_attack(ctx)
    if kind == "dup":
        return sample_duplicate_attack(ctx)
    if kind == "alie":
        return alie_attack(ctx, z=spec.get("z", 1.0))
    raise AttackError(f"unknown attack kind {kind!r}")
