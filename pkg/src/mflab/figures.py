"""Matplotlib rendering of a run's traces, written next to the .dat files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bounds import EnvelopeInputs, MarginReport, alpha_envelope
from .dynamics import Trajectory


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_run_figures(plots_dir: Path, trajectory: Trajectory,
                       inputs: EnvelopeInputs, report: MarginReport) -> list[Path]:
    plots_dir.mkdir(parents=True, exist_ok=True)
    written = []
    t_steps = trajectory.step_times
    t_samp = trajectory.sample_times

    fig, ax = plt.subplots(figsize=(6, 4), layout="constrained")
    env = [alpha_envelope(inputs, i) for i in range(len(t_steps))]
    ax.plot(t_steps, trajectory.alphas, label="counting functional")
    ax.plot(t_steps, env, "--", label="Gronwall envelope")
    ax.set_xlabel("t")
    ax.set_yscale("log")
    ax.legend()
    written.append(_save(fig, plots_dir / "alpha.png"))

    fig, ax = plt.subplots(figsize=(6, 4), layout="constrained")
    ax.plot(t_steps, trajectory.lambdas, label="projected square bound")
    ax.plot(t_steps, inputs.lambda_integrals(), "--", label="running integral")
    ax.set_xlabel("t")
    ax.legend()
    written.append(_save(fig, plots_dir / "lambda.png"))

    cells = {}
    for r in report.records:
        cells.setdefault((r.inequality, r.k), []).append((r.time, r.lhs, r.rhs))
    for k in trajectory.k_values:
        fig, axes = plt.subplots(1, 2, figsize=(9, 4), layout="constrained")
        for ax, ineq, label in zip(axes, ("fidelity", "trace"),
                                   ("1 - F(marginal, product)", "trace distance")):
            rows = sorted(cells.get((ineq, k), []))
            if not rows:
                continue
            times, lhs, rhs = (np.array(col) for col in zip(*rows))
            ax.plot(times, lhs, label=label)
            ax.plot(times, rhs, "--", label="envelope")
            ax.set_xlabel("t")
            ax.set_yscale("log")
            ax.legend()
        fig.suptitle(f"k = {k} marginal closeness")
        written.append(_save(fig, plots_dir / f"closeness_k{k}.png"))

    fig, ax = plt.subplots(figsize=(6, 4), layout="constrained")
    ax.plot(t_samp, np.maximum(trajectory.consistency, 1e-18))
    ax.set_xlabel("t")
    ax.set_ylabel("two-route trace distance")
    ax.set_yscale("log")
    written.append(_save(fig, plots_dir / "consistency.png"))
    return written


def render_mixture_figure(plots_dir: Path, times: np.ndarray, to_mixed: np.ndarray,
                          to_mixture: np.ndarray, gap: np.ndarray) -> Path:
    plots_dir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4.5), layout="constrained")
    ax.plot(times, to_mixed, label="marginal vs mean-field flow")
    ax.plot(times, to_mixture, label="marginal vs mixture of pure flows")
    ax.plot(times, gap, "--", label="gap between the two flows")
    ax.set_xlabel("t")
    ax.set_ylabel("trace distance")
    ax.legend()
    return _save(fig, plots_dir / "mixture.png")
