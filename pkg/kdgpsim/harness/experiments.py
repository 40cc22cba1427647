# -*- coding: utf-8 -*-
"""Experiment runners.

Every runner fans its trials out with :func:`run_trials`; a trial owns the random
stream seeded with ``seed + trial`` and returns one :class:`TrialResult` per method.
"""
import contextlib
import logging
import time
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from kdgpsim.basis import approx_gram, build_basis_for_domain, phi_matrix, se_kernel
from kdgpsim.errors import ConfigurationError
from kdgpsim.field import FieldGrid, GridSpec, advance, export_grid_csv, measure, sample_gp_field
from kdgpsim.gp_core import SensorReading, blr_batch_posterior, classic_gp_predict, kgp_init, se_gram
from kdgpsim.harness.io import summarize, write_kernel_table, write_results_csv, write_summary_json
from kdgpsim.harness.metrics import consensus_iterations, rmse_field, rmse_matrix
from kdgpsim.harness.models import ExperimentKind, TrialResult
from kdgpsim.kdgp import (
    SensorNode,
    SharedMessage,
    assemble_measurement,
    kdgp_predict,
    kdgp_update,
    run_sensing_step,
)
from kdgpsim.madgp import (
    MadgpState,
    avg_consensus_step,
    default_gamma,
    madgp_local_update,
    madgp_weights,
    message_nbytes,
    run_average_consensus,
    with_consensus_values,
)
from kdgpsim.maxplus import dual_extrema_step
from kdgpsim.network import (
    LinkKind,
    comm_radius_for_degree,
    effective_links,
    exchange,
    export_edge_list,
    random_geometric_deployment,
    select_lossy_edges,
)

log = logging.getLogger(__name__)

MEASUREMENT_STREAM = 0
KDGP_LINK_STREAM = 1
MADGP_LINK_STREAM = 2


def run_trials(cfg, trial_fn):
    """Run ``trial_fn(cfg, trial)`` for every trial and flatten the results in trial order."""
    log.info("Running %d %s trial(s) on %d worker(s)", cfg.trials, cfg.kind.value, cfg.workers)
    batches = Parallel(n_jobs=cfg.workers)(delayed(trial_fn)(cfg, trial) for trial in range(cfg.trials))
    return [result for batch in batches for result in batch]


def _trial_rng(cfg, trial):
    return np.random.default_rng(cfg.seed + trial)


def _stream(cfg, trial, step, stream):
    # independent of how many draws other streams made
    return np.random.default_rng([cfg.seed + trial, step, stream])


@contextlib.contextmanager
def _timed(timers, method, enabled):
    if not enabled:
        yield
        return
    start = time.perf_counter()
    try:
        yield
    finally:
        timers[method] += 1000.0 * (time.perf_counter() - start)


def _deploy(cfg, rng):
    d_comm = cfg.d_comm
    if d_comm is None:
        d_comm = comm_radius_for_degree(cfg.R, cfg.domain, cfg.target_degree)
    graph = random_geometric_deployment(cfg.R, cfg.domain, d_comm, rng)
    lossy = None
    if cfg.link is not LinkKind.SYNC:
        lossy = select_lossy_edges(graph, cfg.lossy_fraction, rng)
    return graph, lossy


def _basis(cfg, E=None):
    return build_basis_for_domain(
        cfg.E if E is None else E,
        cfg.domain,
        cfg.hp,
        cfg.margin,
        spectral_form=cfg.spectral_form,
        selection=cfg.basis_selection,
    )


def _as_grid(spec, values, time=0.0):
    return FieldGrid(spec=spec, values=np.reshape(values, (spec.nx, spec.ny)), time=time)


def _network_rmse(spec, phi_grid, weights, reference):
    """Mean over sensors of the RMSE between each sensor's estimate and ``reference``."""
    return float(np.mean([rmse_field(_as_grid(spec, phi_grid @ w), reference) for w in weights]))


def _output_dir(cfg, *parts):
    path = Path(cfg.out).joinpath(*parts)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _export_snapshot(cfg, trial, name, grid):
    export_grid_csv(grid, _output_dir(cfg, "snapshots", f"trial{trial:03d}") / f"{name}.csv")


# consensus benchmark


def _bench_protocol(initial, patterns, step, centralized, matrix_of):
    current = list(initial)
    changes = []
    for links in patterns:
        inboxes = exchange(current, links)
        updated = [step(own, inbox) for own, inbox in zip(current, inboxes)]
        changes.append(max(rmse_matrix(matrix_of(a), matrix_of(b)) for a, b in zip(current, updated)))
        current = updated
    error = float(np.mean([rmse_matrix(matrix_of(c), centralized) for c in current]))
    return error, changes


def consensus_bench_trial(cfg, trial):
    """Dual-extrema against average consensus on one random topology."""
    rng = _trial_rng(cfg, trial)
    graph, lossy = _deploy(cfg, rng)
    R, rows = cfg.R, cfg.E + 1

    centralized = rng.uniform(-1.0, 1.0, size=(rows, R))
    messages = []
    for r in range(R):
        matrix = np.zeros((rows, R))
        matrix[:, r] = centralized[:, r]
        messages.append(matrix)

    links_rng = _stream(cfg, trial, 0, KDGP_LINK_STREAM)
    patterns = [
        effective_links(graph, cfg.link_model, t, links_rng, n_rows=rows, lossy=lossy)
        for t in range(cfg.T_max)
    ]
    gamma = cfg.gamma if cfg.gamma is not None else default_gamma(graph.max_degree)

    shared = [SharedMessage(sensor_id=r + 1, matrix=m) for r, m in enumerate(messages)]
    dual_error, dual_changes = _bench_protocol(
        shared, patterns, dual_extrema_step, centralized, lambda msg: msg.matrix
    )
    # average consensus converges to the mean; scaling by R targets the sum
    avg_error, avg_changes = _bench_protocol(
        [R * m for m in messages],
        patterns,
        lambda own, inbox: avg_consensus_step(own, inbox, gamma, graph.max_degree),
        centralized,
        lambda value: value,
    )

    nbytes = len(shared[0].to_bytes())
    results = []
    for method, error, changes in (
        ("dual_extrema", dual_error, dual_changes),
        ("average_consensus", avg_error, avg_changes),
    ):
        iterations = consensus_iterations(changes, cfg.consensus_tolerance, cfg.consensus_patience)
        results.append(
            TrialResult(
                trial=trial,
                method=method,
                R=R,
                E=cfg.E,
                rmse_centralized=error,
                consensus_iters_mean=float(iterations),
                msg_bytes=nbytes,
            )
        )
    if cfg.snapshots:
        export_edge_list(graph, _output_dir(cfg, "graphs") / f"trial{trial:03d}.edges")
    log.info("Bench trial %d: dual-extrema %.3g, average %.3g", trial, dual_error, avg_error)
    return results


# stationary field


def stationary_trial(cfg, trial):
    """K-DGP, MADGP and centralized references on one GP-sampled field."""
    rng = _trial_rng(cfg, trial)
    hp = cfg.hp
    spec = GridSpec(cfg.domain, *cfg.grid)
    basis = _basis(cfg)
    truth = sample_gp_field(hp, spec, rng, sampler=cfg.truth_sampler, basis=basis)
    graph, lossy = _deploy(cfg, rng)
    positions = [tuple(p) for p in graph.positions]
    phi_grid = phi_matrix(spec.points(), basis)
    gamma = cfg.gamma if cfg.gamma is not None else default_gamma(graph.max_degree)

    sensors = [SensorNode(r + 1, pos, kgp_init(basis)) for r, pos in enumerate(positions)]
    madgp_states = [MadgpState.empty(basis.E) for _ in positions]
    readings = []
    traces = defaultdict(list)
    iterations = defaultdict(list)
    timers = defaultdict(float)

    for k in range(1, cfg.K_max + 1):
        values = [measure(truth, pos, hp.sigma_n, rng) for pos in positions]
        readings.extend(
            SensorReading(sensor_id=r + 1, step=k, position=pos, value=y)
            for r, (pos, y) in enumerate(zip(positions, values))
        )

        with _timed(timers, "kdgp", cfg.record_timing):
            outcome = run_sensing_step(
                sensors,
                graph,
                cfg,
                truth,
                _stream(cfg, trial, k, KDGP_LINK_STREAM),
                basis,
                measurements=values,
                lossy=lossy,
            )
        sensors = [replace(node, state=state) for node, state in zip(sensors, outcome.states)]
        iterations["kdgp"].append(outcome.iterations_mean)

        with _timed(timers, "madgp", cfg.record_timing):
            madgp_states = [
                madgp_local_update(state, pos, y, basis)
                for state, pos, y in zip(madgp_states, positions, values)
            ]
            payloads, rounds = run_average_consensus(
                [state.stacked() for state in madgp_states],
                graph,
                cfg.link_model,
                cfg.T_max,
                gamma,
                _stream(cfg, trial, k, MADGP_LINK_STREAM),
                theta_th=cfg.theta_th,
                lossy=lossy,
            )
            madgp_states = with_consensus_values(madgp_states, payloads)
        iterations["madgp"].append(rounds)

        kdgp_weights = [node.state.m for node in sensors]
        madgp_mean_weights = [madgp_weights(s, cfg.R, k, basis, hp) for s in madgp_states]
        traces["kdgp"].append(_network_rmse(spec, phi_grid, kdgp_weights, truth))
        traces["madgp"].append(_network_rmse(spec, phi_grid, madgp_mean_weights, truth))

    with _timed(timers, "centralized_kgp", cfg.record_timing):
        central = blr_batch_posterior(readings, basis, hp)
    central_grid = _as_grid(spec, phi_grid @ central.m)

    estimates = {"kdgp": kdgp_weights, "madgp": madgp_mean_weights}
    nbytes = {
        "kdgp": len(outcome.messages[0].to_bytes()),
        "madgp": message_nbytes(madgp_states[0]),
    }
    results = []
    for method, weights in estimates.items():
        results.append(
            TrialResult(
                trial=trial,
                method=method,
                R=cfg.R,
                E=cfg.E,
                rmse_field=traces[method][-1],
                rmse_centralized=_network_rmse(spec, phi_grid, weights, central_grid),
                consensus_iters_mean=float(np.mean(iterations[method])),
                msg_bytes=nbytes[method],
                wall_ms=timers[method],
                rmse_trace=tuple(traces[method]),
            )
        )
    results.append(
        TrialResult(
            trial=trial,
            method="centralized_kgp",
            R=cfg.R,
            E=cfg.E,
            rmse_field=rmse_field(central_grid, truth),
            rmse_centralized=0.0,
            wall_ms=timers["centralized_kgp"],
        )
    )
    if cfg.centralized_gp:
        with _timed(timers, "centralized_gp", cfg.record_timing):
            mean, _ = classic_gp_predict(readings, spec.points(), hp)
        gp_grid = _as_grid(spec, mean)
        results.append(
            TrialResult(
                trial=trial,
                method="centralized_gp",
                R=cfg.R,
                E=cfg.E,
                rmse_field=rmse_field(gp_grid, truth),
                rmse_centralized=rmse_field(gp_grid, central_grid),
                wall_ms=timers["centralized_gp"],
            )
        )

    if cfg.snapshots:
        _export_snapshot(cfg, trial, "truth", truth)
        _export_snapshot(cfg, trial, "kdgp", _as_grid(spec, phi_grid @ kdgp_weights[0]))
        export_edge_list(graph, _output_dir(cfg, "graphs") / f"trial{trial:03d}.edges")
    log.info(
        "Stationary trial %d: K-DGP %.4g, MADGP %.4g",
        trial,
        traces["kdgp"][-1],
        traces["madgp"][-1],
    )
    return results


# dynamic field


def dynamic_trial(cfg, trial):
    """K-DGP on a convection-diffusion field, with and without the prediction step."""
    rng = _trial_rng(cfg, trial)
    hp = cfg.hp
    spec = GridSpec(cfg.domain, *cfg.grid)
    basis = _basis(cfg)
    truth = sample_gp_field(hp, spec, rng, sampler=cfg.truth_sampler, basis=basis)
    graph, lossy = _deploy(cfg, rng)
    positions = [tuple(p) for p in graph.positions]
    phi_grid = phi_matrix(spec.points(), basis)

    variants = {"kdgp_prediction": cfg}
    if cfg.compare_without_prediction:
        variants["kdgp_no_prediction"] = replace(cfg, flag_dynamic=False)
    sensors = {
        name: [SensorNode(r + 1, pos, kgp_init(basis)) for r, pos in enumerate(positions)]
        for name in variants
    }
    central = {name: kgp_init(basis) for name in variants}
    traces = defaultdict(list)
    central_traces = defaultdict(list)
    iterations = defaultdict(list)
    timers = defaultdict(float)
    nbytes = 0

    for k in range(1, cfg.K_max + 1):
        truth = advance(truth, cfg.step_duration, cfg.source_location)
        measure_rng = _stream(cfg, trial, k, MEASUREMENT_STREAM)
        values = [measure(truth, pos, hp.sigma_n, measure_rng) for pos in positions]
        pooled = assemble_measurement(positions, values, basis)

        for name, variant in variants.items():
            with _timed(timers, name, cfg.record_timing):
                # a fresh link stream per variant so both see the same deliveries
                outcome = run_sensing_step(
                    sensors[name],
                    graph,
                    variant,
                    truth,
                    _stream(cfg, trial, k, KDGP_LINK_STREAM),
                    basis,
                    measurements=values,
                    lossy=lossy,
                )
            sensors[name] = [
                replace(node, state=state) for node, state in zip(sensors[name], outcome.states)
            ]
            iterations[name].append(outcome.iterations_mean)
            nbytes = len(outcome.messages[0].to_bytes())

            state = central[name]
            if variant.flag_dynamic:
                state = kdgp_predict(state, variant.delta_k, hp)
            central[name] = kdgp_update(state, pooled, hp)

            weights = [node.state.m for node in sensors[name]]
            central_grid = _as_grid(spec, phi_grid @ central[name].m, truth.time)
            traces[name].append(_network_rmse(spec, phi_grid, weights, truth))
            central_traces[name].append(_network_rmse(spec, phi_grid, weights, central_grid))

        if cfg.snapshots:
            _export_snapshot(cfg, trial, f"truth_k{k:03d}", truth)
            estimate = phi_grid @ sensors["kdgp_prediction"][0].state.m
            _export_snapshot(cfg, trial, f"kdgp_k{k:03d}", _as_grid(spec, estimate, truth.time))

    results = [
        TrialResult(
            trial=trial,
            method=name,
            R=cfg.R,
            E=cfg.E,
            rmse_field=float(np.mean(traces[name])),
            rmse_centralized=float(np.mean(central_traces[name])),
            consensus_iters_mean=float(np.mean(iterations[name])),
            msg_bytes=nbytes,
            wall_ms=timers[name],
            rmse_trace=tuple(traces[name]),
        )
        for name in variants
    ]
    log.info(
        "Dynamic trial %d: %s",
        trial,
        ", ".join(f"{r.method} {r.rmse_field:.4g}" for r in results),
    )
    return results


# kernel approximation


def run_kernel_study(cfg):
    """Exact against reduced-rank kernel cross-sections for every E in ``cfg.e_list``.

    Returns the cross-section rows and the MSE of each approximation over a square
    grid of offsets from the domain centre.
    """
    hp = cfg.hp
    xmin, xmax, ymin, ymax = cfg.domain
    origin = np.array([0.5 * (xmin + xmax), 0.5 * (ymin + ymax)])
    reach = 5.0 * hp.length_scale
    distances = np.linspace(-reach, reach, cfg.kernel_points)
    line = origin + np.column_stack((distances, np.zeros_like(distances)))
    dx, dy = np.meshgrid(distances, distances, indexing="ij")
    offsets = origin + np.column_stack((dx.ravel(), dy.ravel()))

    exact_line = np.array([se_kernel(origin, x, hp) for x in line])
    exact_grid = se_gram(origin[None, :], offsets, hp)[0]
    rows = [
        {"method": "exact", "E": 0, "distance": float(d), "value": float(v)}
        for d, v in zip(distances, exact_line)
    ]
    mse = {}
    for E in cfg.e_list:
        if E == 0:
            approx_line = np.zeros_like(distances)
            approx_grid = np.zeros_like(exact_grid)
        else:
            basis = _basis(cfg, E)
            approx_line = approx_gram(origin[None, :], line, basis)[0]
            approx_grid = approx_gram(origin[None, :], offsets, basis)[0]
        rows.extend(
            {"method": "approx", "E": int(E), "distance": float(d), "value": float(v)}
            for d, v in zip(distances, approx_line)
        )
        mse[int(E)] = float(np.mean((approx_grid - exact_grid) ** 2))
        log.info("Kernel approximation E=%d: MSE %.4g", E, mse[int(E)])
    return rows, mse


def run_consensus_bench(cfg):
    """Per-trial dual-extrema and average-consensus results."""
    _require_kind(cfg, ExperimentKind.CONSENSUS_BENCH)
    return run_trials(cfg, consensus_bench_trial)


def run_stationary(cfg):
    """Per-trial K-DGP, MADGP and centralized results on stationary fields."""
    _require_kind(cfg, ExperimentKind.STATIONARY)
    return run_trials(cfg, stationary_trial)


def run_dynamic(cfg):
    """Per-trial K-DGP results with and without prediction on a dynamic field."""
    _require_kind(cfg, ExperimentKind.DYNAMIC)
    if not cfg.flag_dynamic:
        raise ConfigurationError("the dynamic experiment needs flag_dynamic=true")
    return run_trials(cfg, dynamic_trial)


def _require_kind(cfg, kind):
    if cfg.kind is not kind:
        raise ConfigurationError(f"expected a {kind.value} configuration, got {cfg.kind.value}")


def _paired_rate(results, first, second, better):
    by_trial = defaultdict(dict)
    for result in results:
        by_trial[result.trial][result.method] = result
    pairs = [(t[first], t[second]) for t in by_trial.values() if first in t and second in t]
    if not pairs:
        return None
    return sum(better(a, b) for a, b in pairs) / len(pairs)


def run_experiment(cfg):
    """Run the experiment ``cfg`` describes and write its result files under ``cfg.out``.

    Returns the summary written to ``summary.json``.
    """
    out = Path(cfg.out)
    summary = {"config": cfg.to_dict(), "kind": cfg.kind.value}
    if cfg.kind is ExperimentKind.KERNEL_APPROX:
        rows, mse = run_kernel_study(cfg)
        write_kernel_table(rows, out / "kernel_approx.csv")
        summary["mse"] = {str(E): value for E, value in mse.items()}
        write_summary_json(summary, out / "summary.json")
        return summary

    runner = {
        ExperimentKind.CONSENSUS_BENCH: run_consensus_bench,
        ExperimentKind.STATIONARY: run_stationary,
        ExperimentKind.DYNAMIC: run_dynamic,
    }[cfg.kind]
    results = runner(cfg)
    write_results_csv(results, out / "results.csv")
    summary["methods"] = summarize(results)
    if cfg.kind is ExperimentKind.CONSENSUS_BENCH:
        summary["dual_extrema_faster_rate"] = _paired_rate(
            results,
            "dual_extrema",
            "average_consensus",
            lambda a, b: a.consensus_iters_mean <= b.consensus_iters_mean,
        )
    elif cfg.kind is ExperimentKind.DYNAMIC:
        summary["prediction_better_rate"] = _paired_rate(
            results,
            "kdgp_prediction",
            "kdgp_no_prediction",
            lambda a, b: a.rmse_field < b.rmse_field,
        )
    write_summary_json(summary, out / "summary.json")
    return summary
