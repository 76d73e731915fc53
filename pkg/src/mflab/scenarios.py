"""Initial-data generators: random product data, perturbed product data, and
the two-branch mixture that separates the mean-field flow from the mixture of
pure flows.

All randomness flows through one seeded generator so a fixed seed reproduces
every scenario bit for bit.  Haar unitaries come from QR-orthonormalized
Gaussian matrices with the phase convention fixed by the R diagonal; spectra
are normalized exponentials.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .linalg import (
    DensityMatrix,
    conjugate_by_permutation,
    density_matrix,
    hermitize,
    kron_power,
)


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_density_matrix(rng: np.random.Generator, n: int,
                          rank: int | None = None) -> DensityMatrix:
    rank = n if rank is None else int(rank)
    if not 1 <= rank <= n:
        raise ShapeMismatch(f"rank {rank} out of range for dimension {n}")
    spectrum = rng.exponential(size=rank)
    spectrum = spectrum / spectrum.sum()
    w = np.zeros(n)
    w[:rank] = spectrum
    u = haar_unitary(rng, n)
    return density_matrix(hermitize((u * w) @ u.conj().T))


def symmetrize_density(mat: np.ndarray, sites: int, n_particles: int) -> np.ndarray:
    """Group average over simultaneous particle permutations."""
    perms = list(itertools.permutations(range(n_particles)))
    out = np.zeros_like(mat, dtype=np.complex128)
    for perm in perms:
        out += conjugate_by_permutation(mat, sites, n_particles, perm)
    return out / len(perms)


def scenario_product(seed: int, sites: int, n_particles: int,
                     rank: int | None = None) -> tuple[DensityMatrix, DensityMatrix]:
    """Random one-particle state of the given rank and its exact N-fold product."""
    rng = np.random.default_rng(seed)
    gamma1 = random_density_matrix(rng, sites, rank)
    gamma_n = density_matrix(kron_power(gamma1.matrix, n_particles),
                             (sites,) * n_particles)
    return gamma_n, gamma1


def scenario_near_product(seed: int, sites: int, n_particles: int,
                          epsilon: float) -> tuple[DensityMatrix, DensityMatrix]:
    """Product data mixed with a permutation-symmetrized random state.

    Gamma = (1 - eps) gamma^(x)N + eps * Sym(random); by concavity of the
    squared fidelity in its first argument, F(Gamma, gamma^(x)N) >= 1 - eps.
    """
    if not 0.0 <= epsilon < 1.0 + 1e-12:
        raise ShapeMismatch(f"epsilon {epsilon} outside [0, 1]")
    rng = np.random.default_rng(seed)
    gamma1 = random_density_matrix(rng, sites)
    noise = random_density_matrix(rng, sites**n_particles)
    sym = symmetrize_density(noise.matrix, sites, n_particles)
    mat = (1.0 - epsilon) * kron_power(gamma1.matrix, n_particles) + epsilon * sym
    gamma_n = density_matrix(hermitize(mat), (sites,) * n_particles)
    return gamma_n, gamma1


@dataclass(frozen=True)
class MixtureScenario:
    """Equal mixture of two orthogonal condensates sharing one marginal.

    The one-particle marginal of ``gamma_n`` equals ``gamma_1`` exactly, so
    the initial one-particle fidelity defect vanishes, yet the mean-field
    flow of ``gamma_1`` differs from the equal mixture of the two pure flows
    started from ``branch_a`` and ``branch_b`` whenever the interaction is
    nonlinear.
    """

    gamma_n: DensityMatrix
    gamma_1: DensityMatrix
    branch_a: np.ndarray
    branch_b: np.ndarray
    n_particles: int


def scenario_mixture_counterexample(sites: int, n_particles: int) -> MixtureScenario:
    if sites < 2:
        raise ShapeMismatch("mixture scenario needs at least 2 sites")
    phi_a = np.zeros(sites, dtype=np.complex128)
    phi_b = np.zeros(sites, dtype=np.complex128)
    phi_a[0] = 1.0
    phi_b[1] = 1.0
    branch_a = phi_a
    branch_b = phi_b
    proj = lambda v: np.outer(v, v.conj())
    gamma_1 = density_matrix(0.5 * proj(phi_a) + 0.5 * proj(phi_b))
    vec_a = branch_a.copy()
    vec_b = branch_b.copy()
    for _ in range(n_particles - 1):
        vec_a = np.kron(vec_a, branch_a)
        vec_b = np.kron(vec_b, branch_b)
    gamma_n = density_matrix(0.5 * proj(vec_a) + 0.5 * proj(vec_b),
                             (sites,) * n_particles)
    return MixtureScenario(gamma_n, gamma_1, branch_a, branch_b, n_particles)
