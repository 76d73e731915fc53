"""Purification constructions and the excitation-counting machinery.

A mixed N-body state is represented by a pure state on a doubled space where
each particle carries a conjugate ("auxiliary") copy of its physical
dimension.  States live in the interleaved convention: the flat amplitude
vector has tensor factors (phys, aux, phys, aux, ...), so a particle and its
auxiliary copy move together under permutations.

The symmetric N-body purification pairs the square root of the N-body state
with the polar unitary of sqrt(Gamma) * sqrt(gamma^(x)N), computed exactly
from an SVD.  On the kernel of that operator the polar factor is completed by
group-averaging a random intertwiner over all particle permutations, so that
the completed unitary commutes with the permutation action whenever such a
completion exists.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateKernelCompletion,
    NotPermutationInvariant,
    NotPSD,
    ShapeMismatch,
)
from .linalg import (
    DensityMatrix,
    PureState,
    apply_permutation,
    conjugate_by_permutation,
    dagger,
    herm_eig,
    kron_power,
    matrix_sqrt_psd,
    op_norm,
    permute_lifted_state_tensor,
    pure_state,
    svd,
    trace_norm,
)
from .metrics import fidelity

RANK_EIGENVALUE_CUTOFF = 1e-14
SYMMETRY_DEFECT_WARN = 1e-8


@dataclass(frozen=True)
class PurifiedPair:
    """Symmetric N-body purification together with its one-particle reference.

    ``psi_tilde`` purifies the N-body state, ``phi`` the one-particle state;
    both use auxiliary dimension ``aux_dim`` per particle.  The recorded
    defects are measured, not assumed: ``marginal_defect`` is the trace-norm
    error of recovering the N-body state, ``symmetry_defect`` the worst
    2-norm deviation under simultaneous permutations, and ``overlap_sq`` the
    squared overlap |<psi_tilde, phi^(x)N>|^2.
    """

    psi_tilde: PureState
    phi: PureState
    aux_dim: int
    symmetry_defect: float
    marginal_defect: float
    overlap_sq: float
    n_particles: int


def purify_one_body(gamma: DensityMatrix) -> PureState:
    """Rank-compact purification of a one-particle density matrix.

    Returns sum_m sqrt(lambda_m) u_m (x) e_m over the eigenpairs with
    lambda_m > 1e-14; the auxiliary dimension equals the numerical rank.
    """
    w, u = herm_eig(gamma.matrix)
    if w[0] < -1e-10:
        raise NotPSD(f"min eigenvalue {w[0]:.3e}")
    order = np.argsort(w)[::-1]
    keep = [int(i) for i in order if w[i] > RANK_EIGENVALUE_CUTOFF]
    if not keep:
        raise NotPSD("state has no eigenvalue above the rank cutoff")
    amps = np.zeros((gamma.dim, len(keep)), dtype=np.complex128)
    for m, i in enumerate(keep):
        amps[:, m] = math.sqrt(w[i]) * u[:, i]
    return pure_state(amps.ravel(), (gamma.dim, len(keep)), normalize=True)


def vectorized_purification(gamma: DensityMatrix) -> PureState:
    """Conjugate-space purification |sqrt(gamma)>> with auxiliary dimension L.

    Equals the rank-compact purification up to an auxiliary unitary and a
    zero-padding of the auxiliary factor.
    """
    root = matrix_sqrt_psd(gamma.matrix)
    return pure_state(root.ravel(), (gamma.dim, gamma.dim), normalize=True)


def interleave_operator(k_mat: np.ndarray, sites: int, n_particles: int) -> np.ndarray:
    """Amplitudes of |K>> in the interleaved (phys, aux, ...) convention."""
    t = k_mat.reshape((sites,) * (2 * n_particles))
    axes = []
    for j in range(n_particles):
        axes += [j, n_particles + j]
    return np.ascontiguousarray(t.transpose(axes)).ravel()


def _infer_n_particles(nbody_dim: int, sites: int) -> int:
    n = round(math.log(nbody_dim) / math.log(sites))
    if sites**n != nbody_dim:
        raise ShapeMismatch(f"N-body dim {nbody_dim} is not a power of {sites}")
    return n


def permutation_invariance_defect(mat: np.ndarray, sites: int, n_particles: int) -> float:
    worst = 0.0
    for perm in itertools.permutations(range(n_particles)):
        rotated = conjugate_by_permutation(mat, sites, n_particles, perm)
        worst = max(worst, op_norm(rotated - mat))
    return worst


def symmetry_defect_of(psi: PureState, n_particles: int) -> float:
    """max over permutations of ||U_perm psi - psi||_2 (pairs move together)."""
    t = psi.tensor()
    worst = 0.0
    for perm in itertools.permutations(range(n_particles)):
        diff = permute_lifted_state_tensor(t, perm) - t
        worst = max(worst, float(np.linalg.norm(diff)))
    return worst


def _symmetric_completion(p_null: np.ndarray, q_null: np.ndarray, sites: int,
                          n_particles: int, rng: np.random.Generator) -> np.ndarray:
    """Unitary intertwiner ker(A) -> ker(A*) commuting with all permutations.

    Group-averages a trial map over the permutation action restricted to the
    two kernels, then takes the unitary polar factor.  Retries with fresh
    random trials when the average is numerically singular; if every attempt
    fails the last polar factor is returned and a DegenerateKernelCompletion
    warning is emitted (the caller records the measured symmetry defect).
    """
    k = q_null.shape[1]
    perms = list(itertools.permutations(range(n_particles)))
    reps_q = [dagger(q_null) @ apply_permutation(q_null, perm, sites) for perm in perms]
    reps_p = [dagger(p_null) @ apply_permutation(p_null, perm, sites) for perm in perms]
    best = None
    for attempt in range(8):
        if attempt == 0:
            trial = np.eye(k, dtype=np.complex128)
        else:
            trial = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        avg = np.zeros((k, k), dtype=np.complex128)
        for rp, rq in zip(reps_p, reps_q):
            avg += rp @ trial @ dagger(rq)
        avg /= len(perms)
        u, s, q = svd(avg)
        best = u @ dagger(q)
        if s.size and s[-1] > 1e-8 * max(s[0], 1e-300):
            return best
    warnings.warn(
        "kernel completion of the purification unitary could not be made "
        "symmetric; recording the measured defect",
        DegenerateKernelCompletion,
    )
    return best


def purify_n_body(gamma_n: DensityMatrix, gamma_1: DensityMatrix,
                  rng: np.random.Generator | None = None) -> PurifiedPair:
    """Symmetric purification of an N-body state matched to a one-particle state.

    Builds A = sqrt(Gamma) sqrt(gamma^(x)N), takes the exact polar unitary V
    of A (extended symmetrically on the kernel), and vectorizes
    K = sqrt(Gamma) V on the conjugate space.  The squared overlap with
    phi^(x)N then equals the squared fidelity F(Gamma, gamma^(x)N) up to
    the singular-value cutoff, and the auxiliary partial trace recovers
    Gamma exactly.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    sites = gamma_1.dim
    n = _infer_n_particles(gamma_n.dim, sites)
    perm_defect = permutation_invariance_defect(gamma_n.matrix, sites, n)
    if perm_defect > 1e-10:
        raise NotPermutationInvariant(f"exchange defect {perm_defect:.3e} > 1e-10")

    sqrt_gamma_n = matrix_sqrt_psd(gamma_n.matrix)
    sqrt_gamma_1 = matrix_sqrt_psd(gamma_1.matrix)
    a = sqrt_gamma_n @ kron_power(sqrt_gamma_1, n)

    p, s, q = svd(a)
    cutoff = 1e-12 * s[0] if s.size and s[0] > 0 else 0.0
    rank = int(np.sum(s > cutoff))
    v = p[:, :rank] @ dagger(q[:, :rank])
    if rank < gamma_n.dim:
        completion = _symmetric_completion(p[:, rank:], q[:, rank:], sites, n, rng)
        v = v + p[:, rank:] @ completion @ dagger(q[:, rank:])

    k_mat = sqrt_gamma_n @ v
    k_mat /= np.linalg.norm(k_mat)
    psi = pure_state(interleave_operator(k_mat, sites, n), (sites, sites) * n)
    phi = vectorized_purification(gamma_1)

    marginal_defect = trace_norm(k_mat @ dagger(k_mat) - gamma_n.matrix, hermitian=True)
    sym_defect = symmetry_defect_of(psi, n)
    if sym_defect > SYMMETRY_DEFECT_WARN:
        warnings.warn(
            f"purification symmetry defect {sym_defect:.3e} exceeds "
            f"{SYMMETRY_DEFECT_WARN}",
            DegenerateKernelCompletion,
        )
    phi_n = phi.amplitudes
    for _ in range(n - 1):
        phi_n = np.kron(phi_n, phi.amplitudes)
    overlap = abs(np.vdot(psi.amplitudes, phi_n)) ** 2

    return PurifiedPair(
        psi_tilde=psi,
        phi=phi,
        aux_dim=sites,
        symmetry_defect=float(sym_defect),
        marginal_defect=float(marginal_defect),
        overlap_sq=float(min(overlap, 1.0)),
        n_particles=n,
    )


def _particle_layout(psi: PureState, phi: PureState) -> int:
    """Number of particles; validates that psi is N lifted copies of phi's space."""
    if len(phi.shape) != 2:
        raise ShapeMismatch("reference state must have (phys, aux) factors")
    factors = psi.shape.factors
    if len(factors) % 2 != 0 or len(factors) < 2:
        raise ShapeMismatch("lifted N-body state needs 2N tensor factors")
    n = len(factors) // 2
    if factors != phi.shape.factors * n:
        raise ShapeMismatch(
            f"state factors {factors} are not {n} copies of {phi.shape.factors}"
        )
    return n


def _contract_slot(psi_t: np.ndarray, phi_t: np.ndarray, slot: int) -> np.ndarray:
    """<phi|_slot psi as a tensor over the remaining particles."""
    return np.tensordot(phi_t.conj(), psi_t, axes=([0, 1], [2 * slot, 2 * slot + 1]))


def slot_overlap(psi: PureState, phi: PureState, slot: int) -> float:
    """<psi, p_slot psi> = squared norm of the slot contraction against phi."""
    n = _particle_layout(psi, phi)
    if not 0 <= slot < n:
        raise ShapeMismatch(f"slot {slot} out of range for {n} particles")
    c = _contract_slot(psi.tensor(), phi.tensor(), slot)
    return float(np.linalg.norm(c) ** 2)


def apply_p(psi: PureState, phi: PureState, slot: int) -> np.ndarray:
    """Amplitudes of p_slot psi (not normalized); never materializes p_slot."""
    n = _particle_layout(psi, phi)
    if not 0 <= slot < n:
        raise ShapeMismatch(f"slot {slot} out of range for {n} particles")
    phi_t = phi.tensor()
    c = _contract_slot(psi.tensor(), phi_t, slot)
    out = np.multiply.outer(phi_t, c)
    out = np.moveaxis(out, (0, 1), (2 * slot, 2 * slot + 1))
    return out.ravel()


def alpha(psi: PureState, phi: PureState, n_particles: int) -> float:
    """Mean excited fraction 1 - (1/N) sum_j <psi, p_j psi>, clamped to [0, 1]."""
    n = _particle_layout(psi, phi)
    if n != n_particles:
        raise ShapeMismatch(f"state has {n} particles, caller claimed {n_particles}")
    psi_t, phi_t = psi.tensor(), phi.tensor()
    total = 0.0
    for j in range(n):
        c = _contract_slot(psi_t, phi_t, j)
        total += float(np.linalg.norm(c) ** 2)
    val = 1.0 - total / n
    if val < -1e-12:
        raise ShapeMismatch(f"counting functional {val} below -1e-12")
    return min(max(val, 0.0), 1.0)


def product_weight(psi: PureState, phi: PureState, k: int) -> float:
    """tr of the lifted k-marginal against the rank-one product projector.

    Computed as ||(<phi|_1 ... <phi|_k) psi||^2 by successive contractions.
    """
    n = _particle_layout(psi, phi)
    if not 1 <= k <= n:
        raise ShapeMismatch(f"k={k} out of range for {n} particles")
    t = psi.tensor()
    phi_t = phi.tensor()
    for _ in range(k):
        t = np.tensordot(phi_t.conj(), t, axes=([0, 1], [0, 1]))
    return float(np.linalg.norm(t) ** 2)


def counting_bound_margin(psi: PureState, phi: PureState, k: int) -> float:
    """k * alpha - (1 - tr(lifted k-marginal . P^(x)k)); nonnegative up to roundoff."""
    n = _particle_layout(psi, phi)
    lhs = 1.0 - product_weight(psi, phi, k)
    return k * alpha(psi, phi, n) - lhs


def initial_alpha_bound_check(pair: PurifiedPair, gamma_n: DensityMatrix,
                              gamma_1: DensityMatrix) -> float:
    """Margin of alpha(0) <= 1 - F(Gamma, gamma^(x)N) + 1/N."""
    f0 = fidelity(gamma_n.matrix, kron_power(gamma_1.matrix, pair.n_particles))
    alpha0 = alpha(pair.psi_tilde, pair.phi, pair.n_particles)
    return (1.0 - f0 + 1.0 / pair.n_particles) - alpha0


def rotate_aux(state: PureState, u: np.ndarray) -> PureState:
    """Apply the same auxiliary unitary on every particle's auxiliary factor.

    Gauge transformation: all physical marginals, overlaps with equally
    rotated references, and counting functionals are invariant.
    """
    factors = state.shape.factors
    t = state.tensor()
    for ax in range(1, len(factors), 2):
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [ax])), 0, ax)
    return pure_state(t.ravel(), factors)
