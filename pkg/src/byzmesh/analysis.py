"""Empirical verification of the virtual-mixing-matrix theory.

Monte-Carlo estimation of contraction constants, one-sided checks of
the consensus and convergence bounds, the weighted fixed point of
row-stochastic averaging, and the asymptotic error decomposition.
Reports serialize to JSON with every constant echoed.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from . import kernels
from .aggregators import (
    AggregationInput,
    AggregatorSpec,
    aggregate,
    ios_contraction_bound,
    ios_weight_cap,
)
from .graphs import MixingMatrix, Topology
from .rng import DOMAIN_ANALYSIS, stream

DEGENERATE_SPREAD = 1e-12


class AnalysisError(RuntimeError):
    pass


def _jsonable(obj):
    """Recursively strip numpy scalar/array types for json.dumps."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


# --------------------------- contraction ------------------------------ #


@dataclass(frozen=True)
class ContractionReport:
    rho_hat: float
    sample_count: int
    worst_case_instance: dict | None
    theoretical_bound: float | None = None

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), sort_keys=True)

    @property
    def within_bound(self) -> bool | None:
        if self.theoretical_bound is None:
            return None
        return self.rho_hat <= self.theoretical_bound * (1 + 1e-9)


def ios_weight_caps(
    wprime: MixingMatrix, topology: Topology, q: Mapping[int, int] | int | None = None
) -> dict[int, float]:
    """Per honest worker, the cumulative weight of its q_n heaviest
    neighbors (q_n defaults to its true Byzantine neighbor count)."""
    caps = {}
    for n in topology.honest_ids:
        if isinstance(q, Mapping):
            q_n = q[n]
        elif q is None:
            q_n = len(topology.byzantine_neighbors(n))
        else:
            q_n = int(q)
        row = {int(m): float(wprime.weights[n, m]) for m in (*topology.neighbors(n), n)}
        caps[n] = ios_weight_cap(row, n, q_n)
    return caps


def ios_bound(wprime: MixingMatrix, topology: Topology, q=None) -> float:
    """max_n 12 W'_n(U_max) / (1 - 3 W'_n(U_max)); requires every cap < 1/3."""
    caps = ios_weight_caps(wprime, topology, q)
    return max(ios_contraction_bound(c) for c in caps.values())


def estimate_contraction(
    rules: AggregatorSpec | Mapping[int, AggregatorSpec],
    wprime: MixingMatrix,
    topology: Topology,
    w_virtual: MixingMatrix,
    n_samples: int,
    seed: int,
    adversary: str = "random",
    dim: int = 4,
    theoretical_bound: float | None = None,
) -> ContractionReport:
    """Max observed ratio ||A_n(...) - xbar_n|| / max_m ||x_m - xbar_n||.

    Honest models are standard Gaussian draws; Byzantine messages are
    fresh Gaussians ("random") or outliers at +-1e6 times the honest
    spread around the virtual mean ("worst_scaled").  xbar_n follows the
    supplied virtual mixing matrix; the max in the denominator runs over
    the honest closed neighborhood.  Samples where the honest models
    essentially coincide are skipped.

    The special kind "oracle" evaluates the exact virtual weighted
    average itself (its worker rows are filled from ``w_virtual``), which
    pins the ratio at zero and validates the harness.
    """
    if adversary not in ("random", "worst_scaled"):
        raise AnalysisError(f"unknown adversary {adversary!r}")
    t = topology
    n_honest, n_byz = t.n_honest, t.n_byzantine
    rng = stream(seed, DOMAIN_ANALYSIS, 0 if adversary == "random" else 1)

    models = rng.standard_normal((n_samples, n_honest, dim))
    if n_byz:
        noise = rng.standard_normal((n_samples, n_byz, dim))
        signs = np.where(rng.uniform(size=(n_samples, n_byz, 1)) < 0.5, -1.0, 1.0)

    rho_hat = 0.0
    worst: dict | None = None
    used = 0
    for n in t.honest_ids:
        all_ids = np.array(sorted((n, *t.neighbors(n))), dtype=np.int64)
        honest_ids = np.array([m for m in all_ids if m < n_honest], dtype=np.int64)
        byz_ids = np.array([m for m in all_ids if m >= n_honest], dtype=np.int64)
        spec = rules[n] if isinstance(rules, Mapping) else rules
        if spec.kind == "oracle" and spec.get("row") is None:
            row = tuple((int(m), float(w_virtual.weights[n, m])) for m in honest_ids)
            spec = spec.with_params(row=row)
        if spec.kind in ("ios", "faba", "krum", "trimean") and spec.get("q") is None:
            spec = spec.with_params(q=len(byz_ids))
        w_vec = wprime.weights[n, all_ids].copy()
        w_virt = np.ascontiguousarray(w_virtual.weights[n, honest_ids])
        self_pos = int(np.searchsorted(all_ids, n))
        h_pos = np.searchsorted(all_ids, honest_ids)
        b_pos = np.searchsorted(all_ids, byz_ids)

        # Vectorized across samples: virtual means, neighborhood spreads,
        # and Byzantine message batches for this worker.
        xh_all = models[:, honest_ids, :]
        xbar_all = np.einsum("sjd,j->sd", xh_all, w_virt)
        dev = xh_all - xbar_all[:, None, :]
        den_all = np.sqrt((dev * dev).sum(axis=2)).max(axis=1)
        if len(byz_ids):
            raw = noise[:, byz_ids - n_honest, :]
            if adversary == "random":
                byz_msgs = raw
            else:
                unit = raw / np.maximum(np.linalg.norm(raw, axis=2, keepdims=True), 1e-300)
                byz_msgs = (
                    xbar_all[:, None, :]
                    + signs[:, byz_ids - n_honest] * 1e6 * den_all[:, None, None] * unit
                )

        stacked = np.zeros((len(all_ids), dim))
        inp = AggregationInput(ids=all_ids, models=stacked, self_pos=self_pos, weights=w_vec)
        buffer = inp.models  # reused across samples (validated once)
        for s in range(n_samples):
            den = float(den_all[s])
            if den < DEGENERATE_SPREAD:
                continue
            buffer[h_pos] = xh_all[s]
            if len(byz_ids):
                buffer[b_pos] = byz_msgs[s]
            out = aggregate(spec, inp)
            if spec.kind == "oracle":
                # Same kernel path as the oracle itself: exact zero.
                xbar = kernels.weighted_sum(w_virt, np.ascontiguousarray(xh_all[s]))
            else:
                xbar = xbar_all[s]
            diff = out - xbar
            ratio = float(np.sqrt(diff @ diff)) / den
            used += 1
            if ratio > rho_hat:
                rho_hat = ratio
                worst = {
                    "worker": int(n),
                    "sample": int(s),
                    "ids": all_ids.tolist(),
                    "models": buffer.tolist(),
                    "weights": w_vec.tolist(),
                    "virtual_weights": w_virt.tolist(),
                    "xbar": np.asarray(xbar).tolist(),
                    "output": out.tolist(),
                    "ratio": ratio,
                }
    return ContractionReport(
        rho_hat=rho_hat,
        sample_count=used,
        worst_case_instance=worst,
        theoretical_bound=theoretical_bound,
    )


# ----------------------------- bound checks ---------------------------- #


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    constants: dict
    satisfied: bool
    applicable: bool = True
    note: str = ""

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), sort_keys=True)


def consensus_constants(lam: float, rho: float, n_honest: int, smoothness: float) -> dict:
    """rho*, omega, Delta, and the admissible step ceiling."""
    rho_star = lam / (8.0 * np.sqrt(n_honest))
    omega = lam - 8.0 * rho * np.sqrt(n_honest)
    out = {"rho_star": rho_star, "omega": omega}
    if omega > 0:
        out["Delta"] = 12.0 * (1.0 - omega) / omega**3
        out["alpha_max"] = np.sqrt((2.0 - omega) * omega**2 / (6.0 - 2.0 * omega)) / (
            3.0 * smoothness
        )
    return out


def check_consensus_bound(
    h_traces: np.ndarray,
    lam: float,
    rho: float,
    alpha: float,
    delta_in_sq: float,
    delta_out_sq: float,
    n_honest: int,
    smoothness: float = 1.0,
) -> BoundReport:
    """max_k E[H^k] <= alpha^2 Delta (din^2 + dout^2), expectations by
    seed-averaging rows of ``h_traces``.

    Outside its preconditions (rho >= rho*, or an inadmissible constant
    step) the report is marked not-applicable rather than failed.
    """
    h = np.atleast_2d(np.asarray(h_traces, dtype=np.float64))
    consts = consensus_constants(lam, rho, n_honest, smoothness)
    consts.update(
        {
            "lambda": lam,
            "rho": rho,
            "alpha": alpha,
            "delta_in_sq": delta_in_sq,
            "delta_out_sq": delta_out_sq,
            "N": n_honest,
            "L": smoothness,
            "seeds": h.shape[0],
        }
    )
    lhs = float(h.mean(axis=0).max())
    if rho >= consts["rho_star"]:
        return BoundReport(
            lhs=lhs, rhs=np.nan, constants=consts, satisfied=False, applicable=False,
            note="rho >= rho* = lambda / (8 sqrt(N)); theorem does not apply",
        )
    if alpha > consts["alpha_max"] * (1 + 1e-12):
        return BoundReport(
            lhs=lhs, rhs=np.nan, constants=consts, satisfied=False, applicable=False,
            note=f"step size {alpha} exceeds admissible {consts['alpha_max']}",
        )
    rhs = alpha**2 * consts["Delta"] * (delta_in_sq + delta_out_sq)
    return BoundReport(
        lhs=lhs, rhs=float(rhs), constants=consts, satisfied=lhs <= rhs * (1 + 1e-9)
    )


def check_convergence_bound(
    grad_sq_traces: np.ndarray,
    h_traces: np.ndarray,
    f0: float,
    f_star: float,
    alpha: float,
    rho: float,
    chi_sq: float,
    delta_in_sq: float,
    delta_out_sq: float,
    n_honest: int,
    smoothness: float = 1.0,
) -> BoundReport:
    """One-sided check of the convergence bound under a constant step.

    lhs: time average over k = 1..K of the seed-averaged squared
    gradient norm at the honest mean.  rhs: the initialization term
    2(f0 - f*)/(alpha K), the gradient-noise term 2 alpha din^2 L / N,
    the disagreement term (36(rho^2 N + chi^2) + 3 alpha^2 L^2) /
    (alpha^2 K) times the measured accumulated E[H^k], and the floor
    96 (rho^2 N + chi^2)(din^2 + dout^2).  Traces must include step 0.
    """
    g = np.atleast_2d(np.asarray(grad_sq_traces, dtype=np.float64))
    h = np.atleast_2d(np.asarray(h_traces, dtype=np.float64))
    if g.shape != h.shape or g.shape[1] < 2:
        raise AnalysisError("need aligned traces with at least one step")
    big_k = g.shape[1] - 1
    lhs = float(g.mean(axis=0)[1:].mean())
    sum_h = float(h.mean(axis=0)[1:].sum())
    est_mix = rho**2 * n_honest + chi_sq
    rhs = (
        2.0 * (f0 - f_star) / (alpha * big_k)
        + 2.0 * alpha * delta_in_sq * smoothness / n_honest
        + (36.0 * est_mix + 3.0 * alpha**2 * smoothness**2) / (alpha**2 * big_k) * sum_h
        + 96.0 * est_mix * (delta_in_sq + delta_out_sq)
    )
    alpha_max = 1.0 / (2.0 * np.sqrt(3.0) * smoothness)
    constants = {
        "K": big_k,
        "f0": f0,
        "f_star": f_star,
        "alpha": alpha,
        "alpha_max": alpha_max,
        "rho": rho,
        "chi_sq": chi_sq,
        "delta_in_sq": delta_in_sq,
        "delta_out_sq": delta_out_sq,
        "N": n_honest,
        "L": smoothness,
        "sum_EH": sum_h,
        "seeds": g.shape[0],
    }
    applicable = alpha <= alpha_max * (1 + 1e-12)
    return BoundReport(
        lhs=lhs,
        rhs=float(rhs),
        constants=constants,
        satisfied=lhs <= rhs * (1 + 1e-9),
        applicable=applicable,
        note="" if applicable else f"step size {alpha} exceeds 1/(2 sqrt(3) L)",
    )


# ----------------------------- fixed point ----------------------------- #


@dataclass(frozen=True)
class WeightedFixedPoint:
    y_inf: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    iterations: int = 0


def fixed_point_weighted(
    w: MixingMatrix | np.ndarray,
    targets: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> WeightedFixedPoint:
    """Left eigenvector p (p^T W = p^T, 1^T p = 1) by power iteration
    and the induced fixed point y_inf = sum_n p_n z_n.

    Requires a strongly connected mixing graph so the eigenvector is
    unique; non-convergence raises."""
    mat = w.weights if isinstance(w, MixingMatrix) else np.asarray(w, dtype=np.float64)
    n = mat.shape[0]
    z = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if z.shape[0] != n:
        raise AnalysisError("one target per honest worker required")
    p = np.full(n, 1.0 / n)
    for it in range(max_iter):
        p_new = mat.T @ p
        p_new /= p_new.sum()
        if np.abs(p_new - p).max() <= tol:
            return WeightedFixedPoint(y_inf=p_new @ z, p=p_new, iterations=it + 1)
        p = p_new
    raise AnalysisError(f"left-eigenvector iteration did not converge in {max_iter} steps")


# ----------------------------- error budget ---------------------------- #


@dataclass(frozen=True)
class ErrorBudget:
    """The three contributions to the asymptotic learning error and
    their combination (rho^2 N + chi^2)((din^2/N) sum_EH + din^2 + dout^2)."""

    estimation: float
    mixing: float
    consensus: float
    combined: float

    def to_json(self) -> str:
        return json.dumps(_jsonable(asdict(self)), sort_keys=True)


def asymptotic_error_budget(
    rho: float,
    chi_sq: float,
    sum_h: float,
    delta_in_sq: float,
    delta_out_sq: float,
    n_honest: int,
) -> ErrorBudget:
    estimation = rho**2 * n_honest
    mixing = chi_sq
    combined = (estimation + mixing) * (
        delta_in_sq / n_honest * sum_h + delta_in_sq + delta_out_sq
    )
    return ErrorBudget(
        estimation=float(estimation),
        mixing=float(mixing),
        consensus=float(sum_h),
        combined=float(combined),
    )
