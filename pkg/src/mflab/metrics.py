"""Quantum-information metrics: squared fidelity, trace distance, and the
monotonicity margins used as executable lemmas.

The fidelity convention is squared: F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1^2,
so F(rho, P) = tr(rho P) whenever P is a rank-one projection.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ShapeMismatch
from .linalg import (
    DensityMatrix,
    as_complex_matrix,
    hermitize,
    matrix_sqrt_psd,
    partial_trace_matrix,
    singular_values,
)


def _mat(a) -> np.ndarray:
    if isinstance(a, DensityMatrix):
        return a.matrix
    return as_complex_matrix(a)


def fidelity(rho, sigma) -> float:
    """Squared fidelity ||sqrt(rho) sqrt(sigma)||_1^2, clamped into [0, 1]."""
    r, s = _mat(rho), _mat(sigma)
    if r.shape != s.shape:
        raise ShapeMismatch(f"fidelity needs equal dims, got {r.shape} vs {s.shape}")
    root = singular_values(matrix_sqrt_psd(r) @ matrix_sqrt_psd(s)).sum()
    f = float(root * root)
    if f > 1.0 + 1e-10:
        raise ShapeMismatch(f"fidelity {f} exceeds 1 beyond tolerance; inputs not states?")
    return min(max(f, 0.0), 1.0)


def trace_distance(rho, sigma) -> float:
    """Trace norm ||rho - sigma||_1 via eigenvalues of the Hermitian difference."""
    r, s = _mat(rho), _mat(sigma)
    if r.shape != s.shape:
        raise ShapeMismatch(f"trace distance needs equal dims, got {r.shape} vs {s.shape}")
    return float(np.abs(np.linalg.eigvalsh(hermitize(r - s))).sum())


def fvdg_margin(rho, sigma) -> float:
    """sqrt(1 - F) - ||rho - sigma||_1 / 2; nonnegative for any pair of states."""
    f = fidelity(rho, sigma)
    return math.sqrt(max(1.0 - f, 0.0)) - 0.5 * trace_distance(rho, sigma)


def dpi_margin(rho: DensityMatrix, sigma: DensityMatrix, traced_factor: int = 1) -> float:
    """Fidelity gain under tracing out one factor of a shared 2-factor shape.

    Returns F(tr_B rho, tr_B sigma) - F(rho, sigma), which is nonnegative
    because the partial trace is completely positive and trace preserving.
    """
    if not isinstance(rho, DensityMatrix) or not isinstance(sigma, DensityMatrix):
        raise ShapeMismatch("dpi_margin expects DensityMatrix inputs carrying a shape")
    if rho.shape != sigma.shape or len(rho.shape) != 2:
        raise ShapeMismatch("dpi_margin needs a shared 2-factor shape")
    if traced_factor not in (0, 1):
        raise ShapeMismatch("traced_factor must be 0 or 1")
    keep = [1 - traced_factor]
    dims = rho.shape.factors
    r_red = partial_trace_matrix(rho.matrix, dims, keep)
    s_red = partial_trace_matrix(sigma.matrix, dims, keep)
    return fidelity(hermitize(r_red), hermitize(s_red)) - fidelity(rho, sigma)
