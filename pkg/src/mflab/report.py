"""Flat-file outputs: trajectory CSV, per-cell margins CSV, JSON summary, and
whitespace-separated plot-data files.

The trajectory CSV column order is frozen and versioned in its header
comment; floats are written with repr-faithful %.17g so identical runs are
byte identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import EnvelopeInputs, MarginReport, alpha_envelope, fidelity_envelope, trace_envelope
from .dynamics import Trajectory

TRAJECTORY_SCHEMA_VERSION = 1


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def trajectory_columns(k_values) -> list[str]:
    cols = ["t", "alpha", "lambda", "int_lambda", "alpha_env", "alpha_margin",
            "norm_defect", "energy", "energy_drift", "consistency"]
    for k in k_values:
        cols += [
            f"fid_defect_k{k}", f"fid_env_k{k}", f"fid_margin_k{k}",
            f"trace_dist_k{k}", f"trace_env_k{k}", f"trace_margin_k{k}",
            f"counting_lhs_k{k}", f"counting_rhs_k{k}",
        ]
    return cols


def _theorem_cells(report: MarginReport) -> dict:
    cells = {}
    for r in report.records:
        cells[(r.inequality, round(r.time, 12), r.k)] = r
    return cells


def write_trajectory_csv(path: Path, trajectory: Trajectory, inputs: EnvelopeInputs,
                         report: MarginReport) -> None:
    """One row per sampled time; lhs/rhs cells are taken from the margin report."""
    k_values = trajectory.k_values
    integrals = inputs.lambda_integrals()
    cells = _theorem_cells(report)
    lines = [f"# mflab trajectory v{TRAJECTORY_SCHEMA_VERSION}"]
    cols = trajectory_columns(k_values)
    lines.append(",".join(cols))
    e0 = trajectory.energies[0] if len(trajectory.energies) else 0.0
    for pos, i in enumerate(trajectory.sample_indices):
        t = float(trajectory.step_times[i])
        key_t = round(t, 12)
        env = alpha_envelope(inputs, i)
        row = [
            t,
            trajectory.alphas[i],
            trajectory.lambdas[i],
            integrals[i],
            env,
            env - trajectory.alphas[i],
            trajectory.norm_defects[pos],
            trajectory.energies[pos],
            trajectory.energies[pos] - e0,
            trajectory.consistency[pos],
        ]
        for k in k_values:
            fid = cells.get(("fidelity", key_t, k))
            tr = cells.get(("trace", key_t, k))
            fid_lhs, fid_rhs = (fid.lhs, fid.rhs) if fid else (
                np.nan, fidelity_envelope(inputs, k, i))
            tr_lhs, tr_rhs = (tr.lhs, tr.rhs) if tr else (
                np.nan, trace_envelope(inputs, k, i))
            row += [
                fid_lhs, fid_rhs, fid_rhs - fid_lhs,
                tr_lhs, tr_rhs, tr_rhs - tr_lhs,
                1.0 - trajectory.counting_weights[k][pos],
                k * trajectory.alphas[i],
            ]
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def write_margins_csv(path: Path, report: MarginReport) -> None:
    lines = [f"# mflab margins v{TRAJECTORY_SCHEMA_VERSION}",
             "inequality,t,k,lhs,rhs,margin,tolerance,ok"]
    for r in report.records:
        lines.append(",".join([
            r.inequality,
            _fmt(r.time),
            "" if r.k is None else str(r.k),
            _fmt(r.lhs),
            _fmt(r.rhs),
            _fmt(r.margin),
            _fmt(r.tolerance),
            "1" if r.ok else "0",
        ]))
    path.write_text("\n".join(lines) + "\n")


def write_summary_json(path: Path, summary: dict) -> None:
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _write_dat(path: Path, header: str, columns: list[np.ndarray]) -> None:
    lines = [f"# {header}"]
    for row in zip(*columns):
        lines.append(" ".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def write_plot_data(plots_dir: Path, trajectory: Trajectory,
                    inputs: EnvelopeInputs, report: MarginReport) -> list[Path]:
    """Gnuplot-ready whitespace-separated traces, one file per quantity."""
    plots_dir.mkdir(parents=True, exist_ok=True)
    integrals = inputs.lambda_integrals()
    cells = _theorem_cells(report)
    written = []

    t_steps = trajectory.step_times
    alpha_env = np.array([alpha_envelope(inputs, i) for i in range(len(t_steps))])
    path = plots_dir / "alpha.dat"
    _write_dat(path, "t alpha envelope", [t_steps, trajectory.alphas, alpha_env])
    written.append(path)

    path = plots_dir / "lambda.dat"
    _write_dat(path, "t lambda int_lambda", [t_steps, trajectory.lambdas, integrals])
    written.append(path)

    t_samp = trajectory.sample_times
    for k in trajectory.k_values:
        for ineq, stem in (("fidelity", "fidelity"), ("trace", "trace")):
            lhs = np.array([cells[(ineq, round(float(t), 12), k)].lhs for t in t_samp])
            rhs = np.array([cells[(ineq, round(float(t), 12), k)].rhs for t in t_samp])
            path = plots_dir / f"{stem}_k{k}.dat"
            _write_dat(path, "t lhs envelope", [t_samp, lhs, rhs])
            written.append(path)

    path = plots_dir / "consistency.dat"
    _write_dat(path, "t trace_distance", [t_samp, trajectory.consistency])
    written.append(path)
    return written


@dataclass(frozen=True)
class RunReport:
    """Everything a finished run leaves behind."""

    summary: dict
    passed: bool
    out_dir: Path
    files: dict[str, Path]

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 2
