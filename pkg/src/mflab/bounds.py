"""Certification layer: Gronwall envelopes and executable inequality margins.

Every certified statement is reduced to a list of (time, k, lhs, rhs) cells
with an explicit tolerance; a violation beyond tolerance raises
CertificationFailure carrying the full report.  Corruption helpers are
provided so the test suite can prove that the certifiers are falsifiable.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory
from .errors import CertificationFailure, ShapeMismatch
from .linalg import PureState, kron, kron_power, op_norm
from .metrics import fidelity, trace_distance
from .model import TorusModel, fluctuation_diagonal, lambda_of

BASE_TOLERANCE = 1e-8
COUNTING_BOUND_TOL = 1e-10
CONSISTENCY_TOL = 1e-9
FLUCTUATION_TOL = 1e-10
DERIVATIVE_SLACK_PER_DT = 10.0


@dataclass(frozen=True)
class EnvelopeInputs:
    """Everything the closeness envelopes depend on.

    ``lambda_steps`` are the projected square bounds on the full step grid;
    the running integral uses the trapezoid rule on that grid.
    """

    step_times: np.ndarray
    lambda_steps: np.ndarray
    alpha0: float
    n_particles: int
    fidelity0: float
    k_values: tuple[int, ...]

    def __post_init__(self):
        if np.any(np.asarray(self.lambda_steps) < 0):
            raise ShapeMismatch("projected square bounds must be nonnegative")
        for val, name in ((self.alpha0, "alpha0"), (self.fidelity0, "fidelity0")):
            if not 0.0 <= val <= 1.0:
                raise ShapeMismatch(f"{name} = {val} outside [0, 1]")
        object.__setattr__(self, "step_times", np.asarray(self.step_times, dtype=float))
        object.__setattr__(self, "lambda_steps", np.asarray(self.lambda_steps, dtype=float))

    def lambda_integrals(self) -> np.ndarray:
        """Trapezoid running integral of the projected square bound."""
        t, lam = self.step_times, self.lambda_steps
        out = np.zeros(len(t))
        if len(t) > 1:
            out[1:] = np.cumsum(np.diff(t) * (lam[1:] + lam[:-1]) / 2.0)
        return out


def envelope_inputs_from(trajectory: Trajectory, fidelity0: float,
                         k_values: tuple[int, ...] | None = None) -> EnvelopeInputs:
    return EnvelopeInputs(
        step_times=trajectory.step_times,
        lambda_steps=trajectory.lambdas,
        alpha0=float(trajectory.alphas[0]),
        n_particles=trajectory.n_particles,
        fidelity0=float(fidelity0),
        k_values=k_values if k_values is not None else trajectory.k_values,
    )


def alpha_envelope(inputs: EnvelopeInputs, t_index: int) -> float:
    """Gronwall envelope exp(8 int Lambda) (alpha(0) + 1/N) for the counting functional."""
    integral = inputs.lambda_integrals()[t_index]
    return math.exp(8.0 * integral) * (inputs.alpha0 + 1.0 / inputs.n_particles)


def fidelity_envelope(inputs: EnvelopeInputs, k: int, t_index: int) -> float:
    """Envelope 2k exp(8 int Lambda) (1 - F0 + 1/N) for the k-marginal fidelity defect."""
    if k > inputs.n_particles:
        raise ShapeMismatch(f"k={k} exceeds N={inputs.n_particles}")
    integral = inputs.lambda_integrals()[t_index]
    defect = 1.0 - inputs.fidelity0 + 1.0 / inputs.n_particles
    return 2.0 * k * math.exp(8.0 * integral) * defect


def trace_envelope(inputs: EnvelopeInputs, k: int, t_index: int) -> float:
    """Envelope 2 sqrt(2k) exp(4 int Lambda) (1 - F0 + 1/N)^(1/2) for the trace distance."""
    if k > inputs.n_particles:
        raise ShapeMismatch(f"k={k} exceeds N={inputs.n_particles}")
    integral = inputs.lambda_integrals()[t_index]
    defect = 1.0 - inputs.fidelity0 + 1.0 / inputs.n_particles
    return 2.0 * math.sqrt(2.0 * k) * math.exp(4.0 * integral) * math.sqrt(defect)


@dataclass(frozen=True)
class MarginRecord:
    inequality: str
    time: float
    k: int | None
    lhs: float
    rhs: float
    tolerance: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def ok(self) -> bool:
        return self.margin >= -self.tolerance


@dataclass
class MarginReport:
    """Per-cell inequality margins plus summary minima."""

    records: list[MarginRecord]
    tolerance_used: float

    def violations(self) -> list[MarginRecord]:
        return [r for r in self.records if not r.ok]

    @property
    def passed(self) -> bool:
        return not self.violations()

    def min_margins(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for r in self.records:
            if not math.isfinite(r.margin):
                raise ShapeMismatch(f"non-finite margin in {r.inequality}")
            out[r.inequality] = min(out.get(r.inequality, math.inf), r.margin)
        return out

    def raise_on_violation(self):
        bad = self.violations()
        if bad:
            first = min(bad, key=lambda r: (r.time, r.inequality))
            raise CertificationFailure(
                f"{first.inequality} violated at t={first.time:.6g}"
                f"{'' if first.k is None else f', k={first.k}'}: "
                f"lhs={first.lhs:.6e} > rhs={first.rhs:.6e} + {first.tolerance:.1e}",
                report=self,
            )


def merge_reports(*reports: MarginReport) -> MarginReport:
    records = [r for rep in reports for r in rep.records]
    tol = max((rep.tolerance_used for rep in reports), default=BASE_TOLERANCE)
    return MarginReport(records, tol)


def certify_theorems(trajectory: Trajectory, inputs: EnvelopeInputs,
                     base_tol: float = BASE_TOLERANCE,
                     raise_on_violation: bool = True) -> MarginReport:
    """Check every sampled time against the three closeness envelopes.

    The per-cell tolerance is base_tol plus the quadrature slack
    8 ||Lambda||_inf dt rhs, accounting for the trapezoid approximation of
    the envelope integral.
    """
    integrals = inputs.lambda_integrals()
    lam_max = float(np.max(inputs.lambda_steps, initial=0.0))
    dt = trajectory.grid.dt
    records: list[MarginRecord] = []

    def slack(rhs):
        return base_tol + 8.0 * lam_max * dt * rhs

    # counting-functional envelope on the full step grid (cheap, strict superset
    # of the sampled times)
    for i, t in enumerate(trajectory.step_times):
        rhs = math.exp(8.0 * integrals[i]) * (inputs.alpha0 + 1.0 / inputs.n_particles)
        records.append(MarginRecord("counting-envelope", float(t), None,
                                    float(trajectory.alphas[i]), rhs, slack(rhs)))

    for k in inputs.k_values:
        for pos, i in enumerate(trajectory.sample_indices):
            t = float(trajectory.step_times[i])
            gamma_k = kron_power(trajectory.gamma_samples[pos], k)
            marginal = trajectory.marginals[k][pos]
            fid_lhs = 1.0 - fidelity(marginal, gamma_k)
            fid_rhs = fidelity_envelope(inputs, k, i)
            records.append(MarginRecord("fidelity", t, k, fid_lhs, fid_rhs,
                                        slack(fid_rhs)))
            tr_lhs = trace_distance(marginal, gamma_k)
            tr_rhs = trace_envelope(inputs, k, i)
            records.append(MarginRecord("trace", t, k, tr_lhs, tr_rhs, slack(tr_rhs)))

    report = MarginReport(records, base_tol)
    if raise_on_violation:
        report.raise_on_violation()
    return report


def check_derivative_inequality(trajectory: Trajectory, inputs: EnvelopeInputs,
                                raise_on_violation: bool = True) -> MarginReport:
    """Central-difference check of |d alpha/dt| <= 8 Lambda (alpha + 1/N).

    The discrete derivative carries an O(dt^2) truncation error, absorbed in
    the declared slack of 10 dt per interior sample.
    """
    dt = trajectory.grid.dt
    alphas, lambdas = trajectory.alphas, trajectory.lambdas
    slack = DERIVATIVE_SLACK_PER_DT * dt
    records = []
    for i in range(1, len(alphas) - 1):
        lhs = abs(alphas[i + 1] - alphas[i - 1]) / (2.0 * dt)
        rhs = 8.0 * lambdas[i] * (alphas[i] + 1.0 / inputs.n_particles)
        records.append(MarginRecord("derivative", float(trajectory.step_times[i]),
                                    None, float(lhs), float(rhs), slack))
    report = MarginReport(records, slack)
    if raise_on_violation:
        report.raise_on_violation()
    return report


def _projector_matrices(phi: PureState) -> tuple[np.ndarray, np.ndarray]:
    """p on slot 1 and slot 2 of the doubled lifted space, as dense matrices."""
    d = phi.shape.dim
    proj = np.outer(phi.amplitudes, phi.amplitudes.conj())
    eye = np.eye(d)
    return kron(proj, eye), kron(eye, proj)


def check_fluctuation_bounds(model: TorusModel, rho, phi: PureState,
                             lam: float | None = None) -> tuple[float, float]:
    """Cancellation and projected-norm checks for the fluctuation operator.

    Returns (cancel_defect, projected_norm_margin) where the first is
    ||p_2 D p_2||_op (zero because projecting the second particle replaces
    the pair potential by its mean-field average) and the second is
    Lambda - ||D p_1||_op (nonnegative because the projected square of D is
    bounded by Lambda^2).  ``lam`` overrides the recomputed bound, letting a
    caller certify against recorded values.
    """
    if len(phi.shape) != 2 or phi.shape.factors[0] != model.sites:
        raise ShapeMismatch("expected a (sites, aux) lifted one-particle state")
    aux_dim = phi.shape.factors[1]
    diag = fluctuation_diagonal(model, rho, aux_dim)
    p1, p2 = _projector_matrices(phi)
    cancel_defect = op_norm(p2 @ (diag[:, None] * p2))
    d_p1 = diag[:, None] * p1
    if lam is None:
        lam = lambda_of(model, rho)
    return float(cancel_defect), float(lam - op_norm(d_p1))


def fluctuation_report(model: TorusModel, trajectory: Trajectory,
                       raise_on_violation: bool = True) -> MarginReport:
    """Per-sample fluctuation checks against the recorded projected square bounds."""
    records = []
    for pos, i in enumerate(trajectory.sample_indices):
        t = float(trajectory.step_times[i])
        lam = float(trajectory.lambdas[i])
        cancel, margin = check_fluctuation_bounds(
            model, trajectory.rho_samples[pos], trajectory.phi_samples[pos], lam=lam
        )
        records.append(MarginRecord("fluctuation-cancellation", t, None,
                                    cancel, 0.0, FLUCTUATION_TOL))
        records.append(MarginRecord("fluctuation-projection", t, None,
                                    lam - margin, lam, FLUCTUATION_TOL))
    report = MarginReport(records, FLUCTUATION_TOL)
    if raise_on_violation:
        report.raise_on_violation()
    return report


def consistency_report(trajectory: Trajectory,
                       raise_on_violation: bool = True) -> MarginReport:
    """Counting k-marginal bound and two-route mean-field consistency."""
    records = []
    sampled_alpha = trajectory.sampled_alphas()
    for k, weights in trajectory.counting_weights.items():
        for pos, i in enumerate(trajectory.sample_indices):
            t = float(trajectory.step_times[i])
            lhs = 1.0 - float(weights[pos])
            rhs = k * float(sampled_alpha[pos])
            records.append(MarginRecord("counting-kmarginal", t, k, lhs, rhs,
                                        COUNTING_BOUND_TOL))
    for pos, i in enumerate(trajectory.sample_indices):
        t = float(trajectory.step_times[i])
        records.append(MarginRecord("mean-field-consistency", t, None,
                                    float(trajectory.consistency[pos]), 0.0,
                                    CONSISTENCY_TOL))
    report = MarginReport(records, CONSISTENCY_TOL)
    if raise_on_violation:
        report.raise_on_violation()
    return report


def with_scaled_alpha(trajectory: Trajectory, factor: float) -> Trajectory:
    """Corrupted copy with every counting-functional sample scaled; the
    certifiers must catch this."""
    return dataclasses.replace(trajectory, alphas=trajectory.alphas * factor)


def with_scaled_lambda(trajectory: Trajectory, factor: float) -> Trajectory:
    """Corrupted copy with every projected-square-bound sample scaled."""
    return dataclasses.replace(trajectory, lambdas=trajectory.lambdas * factor)
