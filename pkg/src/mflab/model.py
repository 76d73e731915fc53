"""Discrete ring model: one-body operator, even pair potential, mean-field pieces.

The single-particle configuration space is the cyclic lattice Z_L with counting
measure, so every spatial integral is a plain sum and the essential supremum
over shift positions is a maximum over the L sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, SizeBudgetExceeded
from .linalg import (
    NBODY_DIM_BUDGET,
    DensityMatrix,
    PureState,
    as_complex_matrix,
    hermitize,
    kron,
)

# Pair interactions always carry the 1/(N-1) mean-field weight.
COUPLING_CONVENTION = "1/(N-1)"


def coupling(n_particles: int) -> float:
    if n_particles < 2:
        raise ShapeMismatch("pair coupling needs at least 2 particles")
    return 1.0 / (n_particles - 1)


@dataclass(frozen=True)
class TorusModel:
    """L lattice sites, Hermitian one-body operator h, even pair potential v."""

    sites: int
    h: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.sites < 2:
            raise ShapeMismatch("need at least 2 lattice sites")
        h = as_complex_matrix(self.h)
        if h.shape != (self.sites, self.sites):
            raise ShapeMismatch(f"h shape {h.shape} != ({self.sites}, {self.sites})")
        if np.max(np.abs(h - h.conj().T)) > 1e-12:
            raise ShapeMismatch("one-body operator must be Hermitian to 1e-12")
        v = np.asarray(self.v, dtype=np.float64).ravel()
        if v.size != self.sites:
            raise ShapeMismatch(f"potential length {v.size} != {self.sites}")
        if np.max(np.abs(v - v[(-np.arange(self.sites)) % self.sites])) > 1e-12:
            raise ShapeMismatch("pair potential must be even: v[k] == v[(L-k) % L]")
        h.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "v", v)


def laplacian_ring(sites: int) -> np.ndarray:
    """Periodic discrete Laplacian: 2 on the diagonal, -1 per circular bond."""
    h = 2.0 * np.eye(sites, dtype=np.complex128)
    for x in range(sites):
        h[x, (x + 1) % sites] -= 1.0
        h[x, (x - 1) % sites] -= 1.0
    return h


def potential_bounded(sites: int) -> np.ndarray:
    return np.cos(2 * np.pi * np.arange(sites) / sites)


def potential_spiky(sites: int, strength: float = 1.0) -> np.ndarray:
    v = np.zeros(sites)
    v[0] = strength
    return v


def potential_coulomb_like(sites: int, lam: float = 1.0, delta: float = 0.5) -> np.ndarray:
    """Regularized 1/distance profile with the circular lattice distance."""
    k = np.arange(sites)
    dist = np.minimum(k, sites - k)
    return lam / (dist + delta)


def potential_zero(sites: int) -> np.ndarray:
    return np.zeros(sites)


H_PRESETS = {"laplacian": laplacian_ring, "zero": lambda sites: np.zeros((sites, sites), dtype=np.complex128)}


def as_density_profile(rho) -> np.ndarray:
    r = np.asarray(rho, dtype=np.float64).ravel()
    if np.min(r) < -1e-12:
        raise ShapeMismatch(f"density profile has entry {np.min(r):.3e} < -1e-12")
    if abs(r.sum() - 1.0) > 1e-10:
        raise ShapeMismatch(f"density profile sums to {r.sum()!r}, not 1")
    return r


def density_of(gamma: DensityMatrix | np.ndarray) -> np.ndarray:
    """Spatial density rho[x] = gamma[x, x]."""
    m = gamma.matrix if isinstance(gamma, DensityMatrix) else as_complex_matrix(gamma)
    d = np.diagonal(m)
    if np.max(np.abs(d.imag)) > 1e-12:
        raise ShapeMismatch("diagonal of a density matrix must be real")
    return as_density_profile(d.real)


def density_of_lifted(phi: PureState) -> np.ndarray:
    """Spatial density of a lifted one-particle state: rho[x] = sum_m |phi[x, m]|^2."""
    if len(phi.shape) != 2:
        raise ShapeMismatch("lifted one-particle state must have (physical, auxiliary) factors")
    t = phi.tensor()
    return as_density_profile((np.abs(t) ** 2).sum(axis=1))


def _shift_table(sites: int) -> np.ndarray:
    k = np.arange(sites)
    return (k[:, None] - k[None, :]) % sites


def convolve(model: TorusModel, rho) -> np.ndarray:
    """Mean-field profile W[x] = sum_y v[(x - y) mod L] rho[y]."""
    rho = np.asarray(rho, dtype=np.float64)
    return model.v[_shift_table(model.sites)] @ rho


def build_mean_field_generator(model: TorusModel, rho) -> np.ndarray:
    """One-particle generator h + diag(v * rho)."""
    return model.h + np.diag(convolve(model, rho)).astype(np.complex128)


def build_hn(model: TorusModel, n_particles: int) -> np.ndarray:
    """Dense N-body Hamiltonian: one-body sum plus 1/(N-1)-weighted pair potential."""
    ell = model.sites
    dim = ell**n_particles
    if dim > NBODY_DIM_BUDGET:
        raise SizeBudgetExceeded(f"N-body dim {dim} > {NBODY_DIM_BUDGET}")
    h_n = np.zeros((dim, dim), dtype=np.complex128)
    eye = np.eye(ell, dtype=np.complex128)
    for j in range(n_particles):
        term = model.h if j == 0 else eye
        for i in range(1, n_particles):
            term = kron(term, model.h if i == j else eye)
        h_n += term
    grids = np.indices((ell,) * n_particles)
    diag = np.zeros(dim)
    for i in range(n_particles):
        for j in range(i + 1, n_particles):
            diag += model.v[(grids[i] - grids[j]) % ell].ravel()
    h_n += coupling(n_particles) * np.diag(diag)
    return hermitize(h_n)


def build_fluctuation_operator(model: TorusModel, rho, aux_dim: int) -> np.ndarray:
    """Two-particle fluctuation multiplier v(x1 - x2) - (v * rho)(x1).

    Acts as multiplication on the two physical variables and as the identity
    on both auxiliary factors; returned as a dense diagonal matrix on the
    doubled lifted space.
    """
    diag = fluctuation_diagonal(model, rho, aux_dim)
    return np.diag(diag).astype(np.complex128)


def fluctuation_diagonal(model: TorusModel, rho, aux_dim: int) -> np.ndarray:
    ell = model.sites
    dim = (ell * aux_dim) ** 2
    if dim > NBODY_DIM_BUDGET:
        raise SizeBudgetExceeded(f"fluctuation operator dim {dim} > {NBODY_DIM_BUDGET}")
    w = convolve(model, rho)
    d = model.v[_shift_table(ell)] - w[:, None]  # d[x1, x2] = v[(x1-x2) % L] - w[x1]
    # lifted axis order (x1, m1, x2, m2); the entry ignores both aux indices
    lifted = np.broadcast_to(
        d[:, None, :, None], (ell, aux_dim, ell, aux_dim)
    )
    return np.ascontiguousarray(lifted).ravel()


def lambda_of(model: TorusModel, rho) -> float:
    """Projected square bound on the fluctuation:

    Lambda^2 = max_y sum_x rho[x] (v[(x - y) mod L] - (v * rho)[x])^2.
    """
    rho = as_density_profile(rho)
    w = convolve(model, rho)
    dev = model.v[_shift_table(model.sites).T] - w[None, :]  # dev[y, x] = v[(x-y) % L] - w[x]
    lam_sq = float(np.max((dev * dev) @ rho))
    return math.sqrt(max(lam_sq, 0.0))


def hoelder_bound(v, rho, r: float) -> float:
    """Duality bound 2 ||v||_{2r} ||rho||_{r/(r-1)}^{1/2} on the projected square bound.

    Norms use the counting measure; r = 1 pairs with the sup norm of rho.
    """
    v = np.asarray(v, dtype=np.float64)
    rho = as_density_profile(rho)
    if r < 1:
        raise ShapeMismatch("need r >= 1")
    v_norm = float(np.sum(np.abs(v) ** (2 * r)) ** (1.0 / (2 * r)))
    if r == 1:
        rho_norm = float(np.max(rho))
    else:
        s = r / (r - 1.0)
        rho_norm = float(np.sum(rho**s) ** (1.0 / s))
    return 2.0 * v_norm * math.sqrt(rho_norm)
