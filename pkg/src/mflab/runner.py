"""End-to-end orchestration: build, evolve, certify, and emit reports."""

from __future__ import annotations

import concurrent.futures
import time
import warnings
from pathlib import Path

import numpy as np

from .bounds import (
    BASE_TOLERANCE,
    MarginRecord,
    MarginReport,
    certify_theorems,
    check_derivative_inequality,
    consistency_report,
    envelope_inputs_from,
    fluctuation_report,
    merge_reports,
)
from .config import ExperimentConfig, config_as_dict, resolve_config
from .dynamics import PropagatorCache, TimeGrid, evolve_trajectory, hartree_step, lifted_hartree_step
from .errors import DegenerateKernelCompletion, MFLabError, UsageError
from .figures import render_mixture_figure, render_run_figures
from .linalg import kron_power, partial_trace, pure_state
from .metrics import fidelity, trace_distance
from .model import (
    TorusModel,
    build_hn,
    laplacian_ring,
    potential_bounded,
    potential_coulomb_like,
    potential_spiky,
    potential_zero,
)
from .purify import initial_alpha_bound_check, purify_n_body
from .report import (
    RunReport,
    write_margins_csv,
    write_plot_data,
    write_summary_json,
    write_trajectory_csv,
)
from .scenarios import (
    scenario_mixture_counterexample,
    scenario_near_product,
    scenario_product,
)

MARGINAL_DEFECT_TOL = 1e-9
OVERLAP_TOL = 1e-9
INITIAL_ALPHA_TOL = 1e-9
SYMMETRY_TOL = 1e-8
NORM_DRIFT_TOL = 1e-10
ENERGY_DRIFT_TOL = 1e-10


def build_model(config: ExperimentConfig) -> TorusModel:
    sites = config.sites
    h = laplacian_ring(sites) if config.h_preset == "laplacian" else np.zeros((sites, sites))
    if config.v_preset == "bounded":
        v = potential_bounded(sites)
    elif config.v_preset == "spiky":
        v = potential_spiky(sites, config.v_spike)
    elif config.v_preset == "coulomb-like":
        v = potential_coulomb_like(sites, config.v_lambda, config.v_delta)
    else:
        v = potential_zero(sites)
    return TorusModel(sites, h, v)


def build_scenario(config: ExperimentConfig):
    if config.scenario == "product":
        return scenario_product(config.seed, config.sites, config.n_particles,
                                config.rank)
    if config.scenario == "near-product":
        return scenario_near_product(config.seed, config.sites, config.n_particles,
                                     config.epsilon)
    sc = scenario_mixture_counterexample(config.sites, config.n_particles)
    return sc.gamma_n, sc.gamma_1


def _contract_records(pair, traj, f0, initial_margin) -> MarginReport:
    """Purification and conservation contracts as margin records at t = 0."""
    records = [
        MarginRecord("purification-marginal", 0.0, None, pair.marginal_defect, 0.0,
                     MARGINAL_DEFECT_TOL),
        MarginRecord("purification-overlap", 0.0, None, f0, pair.overlap_sq,
                     OVERLAP_TOL),
        MarginRecord("purification-symmetry", 0.0, None, pair.symmetry_defect, 0.0,
                     SYMMETRY_TOL),
        MarginRecord("initial-counting-bound", 0.0, None, -initial_margin, 0.0,
                     INITIAL_ALPHA_TOL),
        MarginRecord("norm-conservation", 0.0, None,
                     float(np.max(traj.norm_defects)), 0.0, NORM_DRIFT_TOL),
        MarginRecord("energy-conservation", 0.0, None,
                     float(np.max(np.abs(traj.energies - traj.energies[0]))), 0.0,
                     ENERGY_DRIFT_TOL),
    ]
    return MarginReport(records, BASE_TOLERANCE)


def run(config: ExperimentConfig | str) -> RunReport:
    """Deterministic end-to-end run; emits CSV/JSON/plot files into out_dir."""
    if isinstance(config, str):
        config = resolve_config(config)
    started = time.perf_counter()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plots_dir = out_dir / "plots"

    model = build_model(config)
    gamma_n, gamma_1 = build_scenario(config)
    caught: list[str] = []
    with warnings.catch_warnings(record=True) as caught_warnings:
        warnings.simplefilter("always", DegenerateKernelCompletion)
        pair = purify_n_body(gamma_n, gamma_1,
                             rng=np.random.default_rng(config.seed + 1))
        caught = [str(w.message) for w in caught_warnings
                  if issubclass(w.category, DegenerateKernelCompletion)]

    f0 = fidelity(gamma_n.matrix, kron_power(gamma_1.matrix, config.n_particles))
    grid = TimeGrid(config.t_final, config.dt, config.sample_stride)
    traj = evolve_trajectory(model, config.n_particles, pair.psi_tilde, pair.phi,
                             grid, k_values=config.k_values)
    inputs = envelope_inputs_from(traj, f0)

    initial_margin = initial_alpha_bound_check(pair, gamma_n, gamma_1)
    report = merge_reports(
        certify_theorems(traj, inputs, base_tol=config.tol, raise_on_violation=False),
        check_derivative_inequality(traj, inputs, raise_on_violation=False),
        fluctuation_report(model, traj, raise_on_violation=False),
        consistency_report(traj, raise_on_violation=False),
        _contract_records(pair, traj, f0, initial_margin),
    )

    files = {
        "trajectory": out_dir / "trajectory.csv",
        "margins": out_dir / "margins.csv",
        "summary": out_dir / "summary.json",
    }
    write_trajectory_csv(files["trajectory"], traj, inputs, report)
    write_margins_csv(files["margins"], report)
    dat_files = write_plot_data(plots_dir, traj, inputs, report)
    figure_files = render_run_figures(plots_dir, traj, inputs, report)

    elapsed = time.perf_counter() - started
    violations = report.violations()
    summary = {
        "config": config_as_dict(config),
        "passed": not violations,
        "runtime_seconds": elapsed,
        "initial_fidelity": f0,
        "alpha_initial": float(traj.alphas[0]),
        "alpha_final": float(traj.alphas[-1]),
        "lambda_max": float(np.max(traj.lambdas)),
        "purification": {
            "marginal_defect": pair.marginal_defect,
            "symmetry_defect": pair.symmetry_defect,
            "overlap_sq": pair.overlap_sq,
            "initial_counting_margin": initial_margin,
        },
        "min_margins": report.min_margins(),
        "violations": [
            {"inequality": r.inequality, "t": r.time, "k": r.k, "margin": r.margin}
            for r in violations
        ],
        "warnings": caught,
    }
    write_summary_json(files["summary"], summary)
    files.update({f"dat:{p.stem}": p for p in dat_files})
    files.update({f"fig:{p.stem}": p for p in figure_files})
    return RunReport(summary=summary, passed=not violations, out_dir=out_dir,
                     files=files)


def demo_mixture(sites: int = 4, n_particles: int = 3, t_final: float = 1.0,
                 dt: float = 1e-3, sample_stride: int = 10,
                 v_preset: str = "bounded", out_dir: str | Path = "mflab-out/mixture",
                 v_lambda: float = 1.0, v_delta: float = 0.5,
                 v_spike: float = 1.0) -> RunReport:
    """Equal mixture of two condensates: the mean-field flow of the marginal
    and the mixture of the two pure flows agree at t = 0 and then separate.

    Tracks the exact one-particle marginal against both candidate effective
    flows and records the separation gap.
    """
    config = ExperimentConfig(name="mixture-demo", sites=sites,
                              n_particles=n_particles, v_preset=v_preset,
                              scenario="mixture", dt=dt, t_final=t_final,
                              sample_stride=sample_stride, out_dir=str(out_dir),
                              v_lambda=v_lambda, v_delta=v_delta, v_spike=v_spike)
    started = time.perf_counter()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(config)
    sc = scenario_mixture_counterexample(sites, n_particles)

    initial_defect = 1.0 - fidelity(partial_trace(sc.gamma_n, [0]), sc.gamma_1)

    cache = PropagatorCache.from_hamiltonian(build_hn(model, n_particles))
    grid = TimeGrid(t_final, dt, sample_stride)
    times = grid.step_times()
    samples = grid.sample_indices()

    gamma = partial_trace(sc.gamma_n, [0])  # mean-field route start
    branch_a = pure_state(sc.branch_a, (sites, 1))
    branch_b = pure_state(sc.branch_b, (sites, 1))

    # exact N-body flow of the two orthogonal branches
    vec_a, vec_b = sc.branch_a, sc.branch_b
    for _ in range(n_particles - 1):
        vec_a = np.kron(vec_a, sc.branch_a)
        vec_b = np.kron(vec_b, sc.branch_b)
    nbody_a = pure_state(vec_a, (sites,) * n_particles)
    nbody_b = pure_state(vec_b, (sites,) * n_particles)

    from .dynamics import propagate_nbody
    from .linalg import reduced_density

    to_mixed, to_mixture, gap = [], [], []
    sample_times = times[samples]
    sample_set = set(samples)
    for i in range(grid.n_steps + 1):
        if i in sample_set:
            t = times[i]
            marg = 0.5 * (
                reduced_density(propagate_nbody(cache, nbody_a, t), [0]).matrix
                + reduced_density(propagate_nbody(cache, nbody_b, t), [0]).matrix
            )
            pure_mix = 0.5 * (
                np.outer(branch_a.amplitudes, branch_a.amplitudes.conj())
                + np.outer(branch_b.amplitudes, branch_b.amplitudes.conj())
            )
            to_mixed.append(trace_distance(marg, gamma.matrix))
            to_mixture.append(trace_distance(marg, pure_mix))
            gap.append(trace_distance(gamma.matrix, pure_mix))
        if i < grid.n_steps:
            gamma = hartree_step(model, gamma, dt)
            branch_a = lifted_hartree_step(model, branch_a, dt)
            branch_b = lifted_hartree_step(model, branch_b, dt)

    to_mixed, to_mixture, gap = (np.array(v) for v in (to_mixed, to_mixture, gap))
    max_gap = float(np.max(gap))
    passed = initial_defect <= 1e-12 and max_gap > 1e-9

    lines = ["# mflab mixture-demo v1",
             "t,marginal_vs_mean_field,marginal_vs_pure_mixture,flow_gap"]
    for row in zip(sample_times, to_mixed, to_mixture, gap):
        lines.append(",".join("%.17g" % x for x in row))
    curves_path = out / "mixture.csv"
    curves_path.write_text("\n".join(lines) + "\n")

    plots = out / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    dat_path = plots / "mixture.dat"
    dat_lines = ["# t marginal_vs_mean_field marginal_vs_pure_mixture flow_gap"]
    for row in zip(sample_times, to_mixed, to_mixture, gap):
        dat_lines.append(" ".join("%.17g" % x for x in row))
    dat_path.write_text("\n".join(dat_lines) + "\n")
    fig_path = render_mixture_figure(plots, sample_times, to_mixed, to_mixture, gap)

    summary = {
        "config": config_as_dict(config),
        "passed": passed,
        "runtime_seconds": time.perf_counter() - started,
        "initial_one_particle_defect": initial_defect,
        "max_flow_gap": max_gap,
        "t_at_max_gap": float(sample_times[int(np.argmax(gap))]),
        "final_marginal_vs_mean_field": float(to_mixed[-1]),
        "final_marginal_vs_pure_mixture": float(to_mixture[-1]),
    }
    summary_path = out / "summary.json"
    write_summary_json(summary_path, summary)
    files = {"curves": curves_path, "summary": summary_path,
             "dat:mixture": dat_path, "fig:mixture": fig_path}
    return RunReport(summary=summary, passed=passed, out_dir=out, files=files)


def _run_one(spec: str, out_root: str | None) -> tuple[str, bool, str]:
    try:
        config = resolve_config(spec)
        if out_root is not None:
            from .config import apply_overrides

            config = apply_overrides(config, out_dir=str(Path(out_root) / config.name))
        report = run(config)
        return spec, report.passed, f"min margins {report.summary['min_margins']}"
    except UsageError as exc:
        raise
    except MFLabError as exc:
        return spec, False, str(exc)


def sweep(specs: list[str], out_root: str | None = None,
          jobs: int | None = None) -> list[tuple[str, bool, str]]:
    """Run several configs concurrently; each run is single threaded."""
    if not specs:
        raise UsageError("sweep needs at least one config")
    results = []
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = {pool.submit(_run_one, spec, out_root): spec for spec in specs}
        for fut in concurrent.futures.as_completed(futures):
            results.append(fut.result())
    results.sort(key=lambda r: specs.index(r[0]))
    return results
