"""Byzantine-resilient decentralized SGD.

One step is a barrier: every honest worker takes its gradient step,
then Byzantine messages for every edge are generated against those
post-gradient models, then every honest worker aggregates.  All
randomness flows through per-(step, worker) hashed streams, so a run is
a pure function of its config and two runs with the same config produce
bitwise-identical traces.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .aggregators import AggregationError, AggregationInput, AggregatorSpec, aggregate
from .attacks import AttackContext, AttackSpec, make_message
from .graphs import MixingMatrix, Topology, gen_two_castle, metropolis_weights
from .problems import QuadraticProblem, SoftmaxProblem
from .rng import DOMAIN_ATTACK, DOMAIN_GRADIENT, stream


class TrainerError(RuntimeError):
    pass


# ----------------------------- schedules ------------------------------ #


@dataclass(frozen=True)
class StepSchedule:
    """Constant alpha, or the diminishing rule c / sqrt(k+1)."""

    kind: str  # "const" | "sqrt"
    value: float

    def __post_init__(self):
        if self.kind not in ("const", "sqrt"):
            raise TrainerError(f"unknown schedule kind {self.kind!r}")
        if self.value < 0:
            raise TrainerError("step size must be >= 0")

    def alpha(self, k: int) -> float:
        if self.kind == "const":
            return self.value
        return self.value / np.sqrt(k + 1.0)

    def label(self) -> str:
        return f"{self.kind}:{self.value:g}"


def parse_schedule(text: str) -> StepSchedule:
    kind, _, value = text.partition(":")
    try:
        return StepSchedule(kind=kind.strip(), value=float(value))
    except ValueError as exc:
        raise TrainerError(f"bad schedule {text!r}") from exc


# ------------------------------- config -------------------------------- #


@dataclass(frozen=True)
class RunConfig:
    topology: Topology
    mixing: MixingMatrix
    aggregator: AggregatorSpec | Mapping[int, AggregatorSpec]
    attack: AttackSpec
    problem: QuadraticProblem | SoftmaxProblem
    schedule: StepSchedule
    steps: int
    batch: int = 32
    x0: np.ndarray | None = None
    seed: int = 0
    metrics_every: int = 1

    def initial_model(self) -> np.ndarray:
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=np.float64)
            if x0.shape != (self.problem.dim,):
                raise TrainerError(f"x0 shape {x0.shape} != ({self.problem.dim},)")
            return x0.copy()
        return np.zeros(self.problem.dim)

    def worker_specs(self) -> dict[int, AggregatorSpec]:
        """Per-worker aggregator specs with q defaults resolved.

        ios/faba/krum/trimean default their q to the worker's true
        Byzantine neighbor count when not set explicitly.
        """
        t = self.topology
        specs = {}
        for n in t.honest_ids:
            spec = self.aggregator[n] if isinstance(self.aggregator, Mapping) else self.aggregator
            if spec.kind in ("ios", "faba", "krum", "trimean") and spec.get("q") is None:
                spec = spec.with_params(q=len(t.byzantine_neighbors(n)))
            specs[n] = spec
        return specs

    def validate(self) -> dict[int, AggregatorSpec]:
        """Surface aggregator/attack configuration errors before step 0."""
        t, w = self.topology, self.mixing
        if self.steps < 0:
            raise TrainerError("steps must be >= 0")
        if self.problem.n_workers != t.n_honest:
            raise TrainerError(
                f"problem has {self.problem.n_workers} workers, topology {t.n_honest}"
            )
        if w.size != t.size:
            raise TrainerError("mixing matrix size does not match topology")
        off_graph = w.weights[(~t.adjacency) & ~np.eye(t.size, dtype=bool)]
        if off_graph.size and np.abs(off_graph).max() > 0:
            raise TrainerError("mixing matrix has weight on a missing edge")
        specs = self.worker_specs()
        for n in t.honest_ids:
            spec = specs[n]
            deg = t.degree(n)
            s = deg + 1
            q = spec.get("q")
            try:
                if spec.kind == "ios" and not 0 <= q < deg:
                    raise AggregationError(f"ios q={q} infeasible for degree {deg}")
                if spec.kind == "faba" and not 0 <= q < s - 1:
                    raise AggregationError(f"faba q={q} infeasible for degree {deg}")
                if spec.kind == "krum" and s < q + 3:
                    raise AggregationError(f"krum q={q} needs >= {q + 3} inputs, worker sees {s}")
                if spec.kind == "trimean" and deg <= 2 * q:
                    raise AggregationError(f"trimean q={q} infeasible for degree {deg}")
            except AggregationError as exc:
                raise TrainerError(f"worker {n}: {exc}") from exc
        if self.attack.kind == "isolation":
            for n in t.honest_ids:
                byz = t.byzantine_neighbors(n)
                if len(byz) and w.weights[n, byz].sum() <= 0:
                    raise TrainerError(f"worker {n}: isolation needs Byzantine weight mass")
        return specs


@dataclass(frozen=True)
class MetricsRecord:
    step: int
    disagreement: float
    grad_norm_sq: float
    loss: float
    accuracy: float | None = None


@dataclass(frozen=True)
class RunResult:
    records: tuple[MetricsRecord, ...]
    final_models: np.ndarray = field(repr=False)
    wall_time: float = 0.0

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    def steps(self) -> np.ndarray:
        return np.array([r.step for r in self.records], dtype=np.int64)


def disagreement(x: np.ndarray) -> float:
    """H = (1/N) sum_n ||x_n - xbar||^2 over stacked honest models.

    Identical models give exactly 0 (the general path would leave an
    ulp-sized echo from rounding the row mean)."""
    x = np.atleast_2d(x)
    if (x == x[0]).all():
        return 0.0
    d = x - x.mean(axis=0)
    return float((d * d).sum()) / x.shape[0]


# --------------------------------- run --------------------------------- #


def _gradient(problem, n: int, x: np.ndarray, rng, batch: int) -> np.ndarray:
    if isinstance(problem, SoftmaxProblem):
        return problem.stochastic_grad(n, x, rng, batch=batch)
    return problem.stochastic_grad(n, x, rng)


def _record(problem, k: int, x: np.ndarray) -> MetricsRecord:
    xbar = x.mean(axis=0)
    g = problem.global_grad(xbar)
    return MetricsRecord(
        step=k,
        disagreement=disagreement(x),
        grad_norm_sq=float(g @ g),
        loss=problem.loss(xbar),
        accuracy=problem.accuracy(xbar),
    )


def run(cfg: RunConfig) -> RunResult:
    """Execute a full run and return its metric trace and final models."""
    specs = cfg.validate()
    t, wmat = cfg.topology, cfg.mixing
    n_honest = t.n_honest
    problem = cfg.problem
    weight_rows = {
        n: {int(m): float(wmat.weights[n, m]) for m in (*t.neighbors(n), n)}
        for n in t.honest_ids
    }
    honest_neigh = {n: [int(m) for m in t.honest_neighbors(n)] for n in t.honest_ids}
    byz_neigh = {n: [int(b) for b in t.byzantine_neighbors(n)] for n in t.honest_ids}

    started = time.perf_counter()
    x = np.tile(cfg.initial_model(), (n_honest, 1))
    records = [_record(problem, 0, x)]
    for k in range(cfg.steps):
        alpha = cfg.schedule.alpha(k)
        half = np.empty_like(x)
        for n in range(n_honest):
            g = _gradient(problem, n, x[n], stream(cfg.seed, DOMAIN_GRADIENT, k, n), cfg.batch)
            half[n] = x[n] - alpha * g

        new_x = np.empty_like(x)
        for n in range(n_honest):
            messages: dict[int, np.ndarray] = {m: half[m] for m in honest_neigh[n]}
            if byz_neigh[n]:
                ctx = AttackContext(
                    target_id=n,
                    own_model=half[n],
                    honest_models={m: half[m] for m in honest_neigh[n]},
                    byz_ids=tuple(byz_neigh[n]),
                    weights=weight_rows[n],
                )
                for b in byz_neigh[n]:
                    ctx.rng = stream(cfg.seed, DOMAIN_ATTACK, k, b, n)
                    messages[b] = make_message(cfg.attack, ctx)
            inp = AggregationInput.from_messages(
                own_id=n,
                own_model=half[n],
                neighbor_messages=messages,
                weights=weight_rows[n],
                step_size=alpha,
            )
            new_x[n] = aggregate(specs[n], inp)
        x = new_x
        if not np.isfinite(x).all():
            raise TrainerError(f"non-finite model at step {k}")
        if (k + 1) % cfg.metrics_every == 0 or k + 1 == cfg.steps:
            records.append(_record(problem, k + 1, x))
    return RunResult(
        records=tuple(records),
        final_models=x,
        wall_time=time.perf_counter() - started,
    )


# --------------------------- two-castle probe --------------------------- #


@dataclass(frozen=True)
class StationarityReport:
    stationary: bool
    final_models: np.ndarray = field(repr=False)
    h_trace: tuple[float, ...]
    steps: int


def two_castle_fixture(
    z1: float,
    z2: float,
    rule: AggregatorSpec,
    r_n: float | None = None,
    steps: int = 100,
    step_size: float = 0.0,
) -> StationarityReport:
    """The 6-worker disagreement counterexample.

    Models start split by castle (z1 vs z2), local costs are
    (x - z_castle)^2, and the given rule aggregates each step.  At the
    split state every gradient vanishes, so the dynamics isolate the
    aggregation rule; ``step_size`` keeps the gradient term in play for
    rules that move the state.  Reports whether all six models stayed
    bitwise at their initial values through every step.
    """
    t = gen_two_castle(3, 0)
    wmat = metropolis_weights(t)
    if r_n is not None and rule.kind in ("coomed", "geomed", "krum"):
        rule = rule.with_params(r=r_n)
    if rule.kind in ("krum", "trimean") and rule.get("q") is None:
        rule = rule.with_params(q=1)
    targets = np.array([[z1]] * 3 + [[z2]] * 3)
    problem = QuadraticProblem(targets=targets, noise_std=0.0, scale=2.0)
    weight_rows = {
        n: {int(m): float(wmat.weights[n, m]) for m in (*t.neighbors(n), n)}
        for n in t.honest_ids
    }
    x = targets.copy()
    initial = x.copy()
    h_trace = [disagreement(x)]
    stationary = True
    for k in range(steps):
        half = x - step_size * problem.scale * (x - targets)
        new_x = np.empty_like(x)
        for n in t.honest_ids:
            inp = AggregationInput.from_messages(
                own_id=n,
                own_model=half[n],
                neighbor_messages={int(m): half[m] for m in t.neighbors(n)},
                weights=weight_rows[n],
                step_size=step_size,
            )
            new_x[n] = aggregate(rule, inp)
        x = new_x
        h_trace.append(disagreement(x))
        if not np.array_equal(x, initial):
            stationary = False
    return StationarityReport(
        stationary=stationary, final_models=x, h_trace=tuple(h_trace), steps=steps
    )


# ------------------------------ trace I/O ------------------------------ #

TRACE_COLUMNS = ("step", "H", "grad_norm_sq", "loss", "accuracy")


def _fmt(v: float | None) -> str:
    return "" if v is None else format(v, ".17g")


def write_trace(result: RunResult, path: str | Path) -> None:
    """Fixed-schema CSV: step,H,grad_norm_sq,loss,accuracy with 17
    significant digits so traces diff cleanly across machines."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    lines = [",".join(TRACE_COLUMNS)]
    for r in result.records:
        lines.append(
            ",".join(
                [str(r.step), _fmt(r.disagreement), _fmt(r.grad_norm_sq), _fmt(r.loss), _fmt(r.accuracy)]
            )
        )
    tmp.write_text("\n".join(lines) + "\n")
    tmp.replace(path)


def read_trace(path: str | Path) -> dict[str, np.ndarray]:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    if tuple(header) != TRACE_COLUMNS:
        raise TrainerError(f"{path}: unexpected columns {header}")
    cols: dict[str, list[float]] = {c: [] for c in header}
    for line in lines[1:]:
        for c, cell in zip(header, line.split(",")):
            cols[c].append(float(cell) if cell else np.nan)
    return {c: np.asarray(v) for c, v in cols.items()}


def write_summary(
    path: str | Path,
    cfg_echo: dict,
    result: RunResult,
) -> None:
    """JSON run summary: config echo, final metrics, wall time."""
    last = result.records[-1]
    doc = {
        "config": cfg_echo,
        "final": {
            "step": last.step,
            "H": last.disagreement,
            "grad_norm_sq": last.grad_norm_sq,
            "loss": last.loss,
            "accuracy": last.accuracy,
        },
        "wall_time_s": result.wall_time,
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)


__all__ = [
    "MetricsRecord",
    "RunConfig",
    "RunResult",
    "StationarityReport",
    "StepSchedule",
    "TrainerError",
    "disagreement",
    "parse_schedule",
    "read_trace",
    "run",
    "two_castle_fixture",
    "write_summary",
    "write_trace",
    "TRACE_COLUMNS",
]
