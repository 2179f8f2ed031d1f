"""Named verification suites behind `byzmesh check`.

Each suite builds its documented default configurations, runs the
relevant analysis, writes a JSON report, and reports pass/fail.  These
are the same checks the acceptance tests pin down, packaged for the
command line.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .aggregators import AggregatorSpec
from .analysis import (
    _jsonable,
    check_consensus_bound,
    check_convergence_bound,
    estimate_contraction,
    fixed_point_weighted,
    ios_bound,
)
from .attacks import AttackSpec
from .graphs import (
    MixingMatrix,
    chi_squared,
    gen_erdos_renyi,
    gen_two_castle,
    ios_virtual_matrix,
    metropolis_weights,
    spectral_gap,
)
from .problems import QuadraticProblem
from .rng import DOMAIN_PARTITION, stream
from .trainer import RunConfig, StepSchedule, run, two_castle_fixture

SUITES = ("contraction", "consensus", "convergence", "fixed_point", "counterexamples")


def _quadratic(n: int, dim: int = 6, spread: float = 0.25, noise: float = 0.0, seed: int = 0):
    rng = stream(seed, DOMAIN_PARTITION, 3)
    targets = 1.5 + spread * (2.0 * rng.uniform(size=(n, dim)) - 1.0)
    return QuadraticProblem(targets=targets, noise_std=noise)


def _connected_er(n: int, b: int, p: float, start_seed: int):
    """First Erdos-Renyi draw whose honest virtual graph is connected."""
    seed = start_seed
    while True:
        t = gen_erdos_renyi(n, b, p, seed)
        w = metropolis_weights(t)
        wv = ios_virtual_matrix(w, t)
        if spectral_gap(wv) > 0 and all(t.degree(m) >= 1 for m in range(t.size)):
            return t, w, wv, seed
        seed += 1


def check_contraction_suite(
    n_topologies: int = 5,
    n_samples: int = 2000,
    rules: AggregatorSpec | Mapping[int, AggregatorSpec] | None = None,
) -> dict:
    """IOS with q_n = B_n stays under its contraction bound; the exact
    weighted-average oracle scores exactly zero."""
    rules = rules if rules is not None else AggregatorSpec.make("ios")
    topo_reports = []
    ok = True
    for i in range(n_topologies):
        t, w, wv, seed = _connected_er(10 + i, 1 + i % 3, 0.7, 100 + 17 * i)
        bound = ios_bound(w, t)
        worst_rho = 0.0
        for adversary in ("random", "worst_scaled"):
            rep = estimate_contraction(
                rules, w, t, wv, n_samples=n_samples // 2, seed=seed, adversary=adversary,
                theoretical_bound=bound,
            )
            worst_rho = max(worst_rho, rep.rho_hat)
        oracle = estimate_contraction(
            AggregatorSpec.make("oracle"), w, t, wv, n_samples=50, seed=seed, adversary="random"
        )
        passed = worst_rho <= bound * (1 + 1e-9) and oracle.rho_hat == 0.0
        ok &= passed
        topo_reports.append(
            {
                "seed": seed,
                "n_honest": t.n_honest,
                "n_byzantine": t.n_byzantine,
                "rho_hat": worst_rho,
                "bound": bound,
                "oracle_rho": oracle.rho_hat,
                "passed": passed,
            }
        )
    return {"suite": "contraction", "passed": ok, "topologies": topo_reports}


def check_consensus_suite(n_seeds: int = 20, steps: int = 400) -> dict:
    """rho = 0 (weighted mean, no Byzantine workers): seed-averaged H^k
    must stay under alpha^2 Delta (din^2 + dout^2)."""
    t, w, wv, seed = _connected_er(10, 0, 0.7, 300)
    lam = spectral_gap(wv)
    problem = _quadratic(t.n_honest, noise=0.05)
    alpha = min(0.05, np.sqrt((2 - lam) * lam**2 / (6 - 2 * lam)) / 3.0)
    h = []
    for s in range(n_seeds):
        cfg = RunConfig(
            topology=t, mixing=w, aggregator=AggregatorSpec.make("weimean"),
            attack=AttackSpec.make("none"), problem=problem,
            schedule=StepSchedule("const", alpha), steps=steps, seed=1000 + s,
        )
        h.append(run(cfg).column("disagreement"))
    report = check_consensus_bound(
        np.array(h), lam=lam, rho=0.0, alpha=alpha,
        delta_in_sq=problem.delta_in_sq(), delta_out_sq=problem.delta_out_sq(),
        n_honest=t.n_honest, smoothness=problem.smoothness,
    )
    return {
        "suite": "consensus",
        "passed": bool(report.satisfied and report.applicable),
        "report": json.loads(report.to_json()),
    }


def check_convergence_suite(n_configs: int = 3, steps: int = 400) -> dict:
    """Deterministic quadratic, IOS under sign-flipping: the measured
    time-averaged gradient norm stays under the convergence bound with
    the contraction constant taken from the IOS bound."""
    reports = []
    ok = True
    for i in range(n_configs):
        t, w, wv, seed = _connected_er(10 + 2 * i, 1 + i % 2, 0.8, 500 + 31 * i)
        problem = _quadratic(t.n_honest, noise=0.0, seed=i)
        alpha = 0.1
        cfg = RunConfig(
            topology=t, mixing=w, aggregator=AggregatorSpec.make("ios"),
            attack=AttackSpec.make("signflip"), problem=problem,
            schedule=StepSchedule("const", alpha), steps=steps, seed=7 + i,
        )
        res = run(cfg)
        x0 = cfg.initial_model()
        rep = check_convergence_bound(
            res.column("grad_norm_sq")[None, :],
            res.column("disagreement")[None, :],
            f0=problem.loss(x0),
            f_star=problem.f_star(),
            alpha=alpha,
            rho=ios_bound(w, t),
            chi_sq=chi_squared(wv),
            delta_in_sq=0.0,
            delta_out_sq=problem.delta_out_sq(),
            n_honest=t.n_honest,
            smoothness=problem.smoothness,
        )
        ok &= rep.satisfied and rep.applicable
        reports.append(json.loads(rep.to_json()))
    return {"suite": "convergence", "passed": ok, "reports": reports}


def check_fixed_point_suite(steps: int = 10_000) -> dict:
    """Row-stochastic W = [[1,0],[.5,.5]] drives the p-weighted iterate
    to z_1; any doubly stochastic W drives it to the target mean."""
    results = []
    ok = True

    w_ns = np.array([[1.0, 0.0], [0.5, 0.5]])
    targets = np.array([[1.3, 1.7], [1.9, 1.1]])
    fp = fixed_point_weighted(w_ns, targets)
    final = _oracle_quadratic_run(w_ns, targets, steps)
    y = fp.p @ final
    err_ns = float(np.abs(y - fp.y_inf).max())
    ok &= bool(np.allclose(fp.p, [1.0, 0.0], atol=1e-10)) and err_ns < 1e-4
    results.append({"case": "row_stochastic", "p": fp.p.tolist(), "error": err_ns})

    t = gen_two_castle(3, 0)
    wm = metropolis_weights(t)
    rng = stream(0, DOMAIN_PARTITION, 4)
    targets6 = 1.5 + 0.25 * (2 * rng.uniform(size=(6, 3)) - 1)
    fp6 = fixed_point_weighted(wm.weights[:6, :6], targets6)
    final6 = _oracle_quadratic_run(wm.weights[:6, :6], targets6, steps)
    err_ds = float(np.abs(fp6.p @ final6 - targets6.mean(axis=0)).max())
    ok &= err_ds < 1e-4
    results.append({"case": "doubly_stochastic", "error": err_ds})
    return {"suite": "fixed_point", "passed": ok, "cases": results}


def _oracle_quadratic_run(w_honest: np.ndarray, targets: np.ndarray, steps: int) -> np.ndarray:
    """Trainer run with per-worker oracle rules realizing ``w_honest``."""
    n = w_honest.shape[0]
    size = n
    adj = np.ones((size, size), dtype=bool)
    np.fill_diagonal(adj, False)
    from .graphs import Topology

    t = Topology(n_honest=n, n_byzantine=0, adjacency=adj)
    full = np.full((size, size), 1.0 / size)
    rules = {
        m: AggregatorSpec.make(
            "oracle", row=tuple((int(j), float(w_honest[m, j])) for j in range(n) if w_honest[m, j] > 0 or j == m)
        )
        for m in range(n)
    }
    cfg = RunConfig(
        topology=t,
        mixing=MixingMatrix(full),
        aggregator=rules,
        attack=AttackSpec.make("none"),
        problem=QuadraticProblem(targets=targets),
        schedule=StepSchedule("sqrt", 0.9),
        steps=steps,
        x0=1.5 * np.ones(targets.shape[1]),
        seed=5,
        metrics_every=max(steps // 4, 1),
    )
    return run(cfg).final_models


def check_counterexamples_suite() -> dict:
    """Two-castle stationarity for the median-family rules, weighted-mean
    consensus on the same graph, and isolation == no-communication."""
    ok = True
    cases = []
    for rule in ("coomed", "geomed", "krum"):
        for r_n in (0.0, 0.3, 0.9):
            rep = two_castle_fixture(0.0, 1.0, AggregatorSpec.make(rule), r_n=r_n, steps=100, step_size=0.1)
            ok &= rep.stationary
            cases.append({"rule": rule, "r": r_n, "stationary": rep.stationary})
    wm = two_castle_fixture(0.0, 1.0, AggregatorSpec.make("weimean"), steps=200, step_size=0.0)
    h = np.array(wm.h_trace)
    consensus_ok = bool(h[-1] < 1e-10)
    ok &= consensus_ok
    cases.append({"rule": "weimean", "final_H": float(h[-1]), "consensus": consensus_ok})

    iso_ok = _isolation_equivalence()
    ok &= iso_ok
    cases.append({"rule": "weimean+isolation", "bitwise_nocomm": iso_ok})
    return {"suite": "counterexamples", "passed": ok, "cases": cases}


def _isolation_equivalence(steps: int = 500) -> bool:
    t = gen_erdos_renyi(5, 1, 1.0, seed=0)
    w = metropolis_weights(t)
    problem = _quadratic(5, dim=6, spread=0.25, noise=0.02, seed=2)
    common = dict(
        topology=t, mixing=w, problem=problem, steps=steps, batch=1,
        schedule=StepSchedule("const", 0.1), x0=1.5 * np.ones(6), seed=42, metrics_every=100,
    )
    iso = run(RunConfig(aggregator=AggregatorSpec.make("weimean"), attack=AttackSpec.make("isolation"), **common))
    noc = run(RunConfig(aggregator=AggregatorSpec.make("nocomm"), attack=AttackSpec.make("none"), **common))
    return bool(np.array_equal(iso.final_models, noc.final_models))


def run_checks(suite: str, out_dir: str | Path = "reports", **kwargs) -> dict:
    runner = {
        "contraction": check_contraction_suite,
        "consensus": check_consensus_suite,
        "convergence": check_convergence_suite,
        "fixed_point": check_fixed_point_suite,
        "counterexamples": check_counterexamples_suite,
    }.get(suite)
    if runner is None:
        raise ValueError(f"unknown suite {suite!r}; choices: {', '.join(SUITES)}")
    report = _jsonable(runner(**kwargs))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{suite}.json"
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    tmp.replace(path)
    return report
