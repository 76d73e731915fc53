"""Randomized property suites behind the `check` subcommand.

Each suite draws a fixed number of random instances from one seeded
generator, evaluates an inequality margin or defect on each, and reports the
worst case against its tolerance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .bounds import check_fluctuation_bounds
from .errors import DegenerateKernelCompletion
from .linalg import covariance_check, density_matrix, kron_power, pure_state
from .metrics import dpi_margin, fidelity, fvdg_margin
from .model import TorusModel, density_of_lifted, hoelder_bound, lambda_of
from .purify import initial_alpha_bound_check, purify_n_body
from .scenarios import haar_unitary, random_density_matrix, symmetrize_density


@dataclass(frozen=True)
class SuiteResult:
    name: str
    count: int
    worst: float
    tolerance: float
    passed: bool
    direction: str  # "min" (margins stay above -tol) or "max" (defects stay below tol)


def _even_potential(rng, sites):
    v = rng.standard_normal(sites) * rng.exponential()
    return (v + v[(-np.arange(sites)) % sites]) / 2


def suite_fvdg(rng, count=200) -> SuiteResult:
    worst = np.inf
    for _ in range(count):
        n = int(rng.integers(2, 10))
        a = random_density_matrix(rng, n, rank=int(rng.integers(1, n + 1)))
        b = random_density_matrix(rng, n, rank=int(rng.integers(1, n + 1)))
        worst = min(worst, fvdg_margin(a, b))
    return SuiteResult("fuchs-van-de-graaf", count, worst, 1e-9, worst >= -1e-9, "min")


def suite_dpi(rng, count=200) -> SuiteResult:
    worst = np.inf
    for _ in range(count):
        a = density_matrix(random_density_matrix(rng, 9, rank=int(rng.integers(1, 10))).matrix, (3, 3))
        b = density_matrix(random_density_matrix(rng, 9, rank=int(rng.integers(1, 10))).matrix, (3, 3))
        worst = min(worst, dpi_margin(a, b, traced_factor=int(rng.integers(0, 2))))
    return SuiteResult("data-processing", count, worst, 1e-9, worst >= -1e-9, "min")


def suite_covariance(rng, count=50) -> SuiteResult:
    worst = 0.0
    for _ in range(count):
        t = density_matrix(random_density_matrix(rng, 9).matrix, (3, 3))
        u = haar_unitary(rng, 3)
        worst = max(worst, covariance_check(u, t))
    return SuiteResult("partial-trace-covariance", count, worst, 1e-10, worst <= 1e-10, "max")


def suite_hoelder(rng, count=100) -> SuiteResult:
    worst = np.inf
    for _ in range(count):
        sites = int(rng.integers(2, 9))
        v = _even_potential(rng, sites)
        rho = rng.dirichlet(np.full(sites, rng.uniform(0.2, 3.0)))
        model = TorusModel(sites, np.zeros((sites, sites)), v)
        lam = lambda_of(model, rho)
        for r in (1, 2, 8):
            worst = min(worst, hoelder_bound(v, rho, r) - lam)
    return SuiteResult("hoelder-duality", count, worst, 1e-10, worst >= -1e-10, "min")


def suite_fluctuation(rng, count=100) -> SuiteResult:
    worst_margin = np.inf
    worst_cancel = 0.0
    for _ in range(count):
        sites = int(rng.integers(2, 6))
        aux = int(rng.integers(1, 4))
        v = _even_potential(rng, sites)
        model = TorusModel(sites, np.zeros((sites, sites)), v)
        amps = rng.standard_normal(sites * aux) + 1j * rng.standard_normal(sites * aux)
        phi = pure_state(amps, (sites, aux), normalize=True)
        cancel, margin = check_fluctuation_bounds(model, density_of_lifted(phi), phi)
        worst_cancel = max(worst_cancel, cancel)
        worst_margin = min(worst_margin, margin)
    worst = max(worst_cancel, -worst_margin)
    return SuiteResult("fluctuation-bounds", count, worst, 1e-10, worst <= 1e-10, "max")


def suite_purification(rng, count=20) -> SuiteResult:
    """Worst normalized defect over the purification contracts."""
    worst = 0.0
    for _ in range(count):
        sites = int(rng.integers(2, 4))
        n = int(rng.integers(2, 4))
        gamma1 = random_density_matrix(rng, sites)
        noise = random_density_matrix(rng, sites**n)
        eps = rng.uniform(0.0, 0.5)
        mat = (1 - eps) * kron_power(gamma1.matrix, n) + eps * symmetrize_density(
            noise.matrix, sites, n
        )
        gamma_n = density_matrix((mat + mat.conj().T) / 2, (sites,) * n)
        with warnings.catch_warnings():
            warnings.simplefilter("error", DegenerateKernelCompletion)
            pair = purify_n_body(gamma_n, gamma1, rng=rng)
        f0 = fidelity(gamma_n.matrix, kron_power(gamma1.matrix, n))
        worst = max(worst, pair.marginal_defect / 1e-9)
        worst = max(worst, (f0 - 1e-9 - pair.overlap_sq) / 1e-9)
        worst = max(worst, pair.symmetry_defect / 1e-8)
        worst = max(worst, -initial_alpha_bound_check(pair, gamma_n, gamma1) / 1e-9)
    return SuiteResult("purification-contracts", count, worst, 1.0, worst <= 1.0, "max")


def run_property_suites(seed: int = 0) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    return [
        suite_fvdg(rng),
        suite_dpi(rng),
        suite_covariance(rng),
        suite_hoelder(rng),
        suite_fluctuation(rng),
        suite_purification(rng),
    ]
