import itertools

import numpy as np
import pytest

from mflab.errors import ShapeMismatch
from mflab.linalg import (
    density_matrix,
    kron,
    permutation_operator,
    pure_state,
    reduced_density,
)
from mflab.model import (
    TorusModel,
    build_fluctuation_operator,
    build_hn,
    build_mean_field_generator,
    convolve,
    density_of,
    density_of_lifted,
    hoelder_bound,
    lambda_of,
    laplacian_ring,
    potential_bounded,
    potential_coulomb_like,
    potential_spiky,
    potential_zero,
)

from test_linalg import random_density


def model_with(sites, v, h=None):
    h = laplacian_ring(sites) if h is None else h
    return TorusModel(sites, h, v)


SQUARE_WAVE = np.array([0.0, 1.0, 0.0, 1.0])  # even on Z_4


class TestModelValidation:
    def test_rejects_odd_potential(self):
        with pytest.raises(ShapeMismatch):
            model_with(4, np.array([0.0, 1.0, 0.0, -1.0]))

    def test_rejects_non_hermitian_h(self):
        h = laplacian_ring(3)
        h[0, 1] += 1e-6
        with pytest.raises(ShapeMismatch):
            model_with(3, potential_zero(3), h=h)

    def test_presets_are_even(self):
        for v in (potential_bounded(5), potential_spiky(5, 2.0), potential_coulomb_like(5)):
            model_with(5, v)  # validation inside


class TestDensity:
    def test_basis_state(self):
        gamma = density_matrix(np.diag([1.0, 0, 0, 0]))
        assert np.array_equal(density_of(gamma), [1, 0, 0, 0])

    def test_maximally_mixed(self):
        gamma = density_matrix(np.eye(4) / 4)
        assert np.allclose(density_of(gamma), 0.25)

    def test_trace_oracle(self):
        rng = np.random.default_rng(21)
        gamma = density_matrix(random_density(rng, 4, rank=2))
        assert abs(density_of(gamma).sum() - 1.0) <= 1e-12


class TestDensityLifted:
    def test_product_with_aux(self):
        xi = np.array([0.6, 0.8j])
        amps = np.kron([1, 0, 0, 0], xi)
        phi = pure_state(amps, (4, 2))
        assert np.allclose(density_of_lifted(phi), [1, 0, 0, 0])

    def test_uniform(self):
        phi = pure_state(np.full(8, 1 / np.sqrt(8)), (4, 2))
        assert np.allclose(density_of_lifted(phi), 0.25)

    def test_partial_trace_oracle(self):
        rng = np.random.default_rng(22)
        amps = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        phi = pure_state(amps, (4, 3), normalize=True)
        via_trace = density_of(reduced_density(phi, [0]))
        assert np.max(np.abs(density_of_lifted(phi) - via_trace)) <= 1e-12


class TestConvolve:
    def test_constant_potential(self):
        rng = np.random.default_rng(23)
        m = model_with(5, np.full(5, 0.7))
        rho = rng.dirichlet(np.ones(5))
        assert np.allclose(convolve(m, rho), 0.7, atol=1e-14)

    def test_delta_density(self):
        m = model_with(4, SQUARE_WAVE)
        assert np.allclose(convolve(m, [1, 0, 0, 0]), SQUARE_WAVE)

    def test_hand_sum(self):
        # L=4, v=(0,1,0,1), uniform rho: every entry is (0+1+0+1)/4 = 1/2
        m = model_with(4, SQUARE_WAVE)
        assert np.allclose(convolve(m, np.full(4, 0.25)), 0.5)


class TestBuildHN:
    def test_free_two_body(self):
        m = model_with(3, potential_zero(3))
        expected = kron(m.h, np.eye(3)) + kron(np.eye(3), m.h)
        assert np.max(np.abs(build_hn(m, 2) - expected)) <= 1e-14

    def test_pair_enumeration(self):
        # h = 0, N=2, L=2, v=(0, w): basis order (00, 01, 10, 11)
        w = 0.37
        m = model_with(2, np.array([0.0, w]), h=np.zeros((2, 2)))
        h2 = build_hn(m, 2)
        assert np.allclose(h2, np.diag([0.0, w, w, 0.0]))

    def test_permutation_invariance_n3(self):
        m = model_with(3, potential_coulomb_like(3))
        h3 = build_hn(m, 3)
        for perm in itertools.permutations(range(3)):
            u = permutation_operator(perm, 3)
            assert np.max(np.abs(u @ h3 @ u.conj().T - h3)) <= 1e-12

    def test_permutation_invariance_n4(self):
        m = model_with(2, potential_bounded(2))
        h4 = build_hn(m, 4)
        for perm in itertools.permutations(range(4)):
            u = permutation_operator(perm, 2)
            assert np.max(np.abs(u @ h4 @ u.conj().T - h4)) <= 1e-12

    def test_hermitian(self):
        m = model_with(4, potential_bounded(4))
        h3 = build_hn(m, 3)
        assert np.max(np.abs(h3 - h3.conj().T)) == 0.0


class TestMeanFieldGenerator:
    def test_zero_potential(self):
        m = model_with(4, potential_zero(4))
        assert np.array_equal(build_mean_field_generator(m, np.full(4, 0.25)), m.h)

    def test_delta_density_gives_potential(self):
        m = model_with(4, SQUARE_WAVE, h=np.zeros((4, 4)))
        g = build_mean_field_generator(m, [1, 0, 0, 0])
        assert np.allclose(g, np.diag(SQUARE_WAVE))

    def test_hermiticity(self):
        rng = np.random.default_rng(24)
        m = model_with(5, potential_coulomb_like(5, lam=2.0))
        rho = rng.dirichlet(np.ones(5))
        g = build_mean_field_generator(m, rho)
        assert np.max(np.abs(g - g.conj().T)) <= 1e-14


class TestFluctuationOperator:
    def test_zero_potential(self):
        m = model_with(4, potential_zero(4))
        assert np.max(np.abs(build_fluctuation_operator(m, np.full(4, 0.25), 2))) == 0.0

    def test_constant_potential(self):
        m = model_with(3, np.full(3, 1.3))
        rng = np.random.default_rng(25)
        rho = rng.dirichlet(np.ones(3))
        assert np.max(np.abs(build_fluctuation_operator(m, rho, 2))) <= 1e-14

    def test_square_wave_entries(self):
        m = model_with(4, SQUARE_WAVE)
        d = build_fluctuation_operator(m, np.full(4, 0.25), 1)
        entries = np.unique(np.round(np.diagonal(d).real, 12))
        assert np.array_equal(entries, [-0.5, 0.5])

    def test_aux_independence(self):
        m = model_with(3, potential_coulomb_like(3))
        rng = np.random.default_rng(26)
        rho = rng.dirichlet(np.ones(3))
        d = np.diagonal(build_fluctuation_operator(m, rho, 2)).real
        t = d.reshape(3, 2, 3, 2)
        for m1, m2 in itertools.product(range(2), repeat=2):
            assert np.array_equal(t[:, m1, :, m2], t[:, 0, :, 0])


class TestLambda:
    def test_constant_potential(self):
        rng = np.random.default_rng(27)
        m = model_with(5, np.full(5, 2.2))
        assert lambda_of(m, rng.dirichlet(np.ones(5))) <= 1e-12

    def test_delta_density(self):
        # rho concentrated at 0 and v[0] = 0: Lambda = max_k |v[k] - (v*rho)(0)|
        # with (v*rho)(0) = v[0] = 0, i.e. Lambda = max |v|.
        v = potential_coulomb_like(6, lam=1.0, delta=1.0)
        v = v - v[0]  # shift so v[0] = 0; still even
        m = model_with(6, v)
        rho = np.zeros(6)
        rho[0] = 1.0
        w = convolve(m, rho)
        direct = max(abs(v[(0 - y) % 6] - w[0]) for y in range(6))
        assert direct == pytest.approx(np.max(np.abs(v)), abs=1e-14)
        assert lambda_of(m, rho) == pytest.approx(np.max(np.abs(v)), abs=1e-12)

    def test_square_wave_hand_value(self):
        m = model_with(4, SQUARE_WAVE)
        assert lambda_of(m, np.full(4, 0.25)) == pytest.approx(0.5, abs=1e-14)

    def test_constant_shift_invariance(self):
        rng = np.random.default_rng(28)
        for _ in range(10):
            v = rng.standard_normal(5)
            v = (v + v[(-np.arange(5)) % 5]) / 2
            rho = rng.dirichlet(np.ones(5))
            lam = lambda_of(model_with(5, v), rho)
            lam_shifted = lambda_of(model_with(5, v + 3.7), rho)
            assert abs(lam - lam_shifted) <= 1e-12

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(29)
        v = rng.standard_normal(6)
        v = (v + v[(-np.arange(6)) % 6]) / 2
        rho = rng.dirichlet(np.ones(6))
        m = model_with(6, v)
        w = [sum(v[(x - y) % 6] * rho[y] for y in range(6)) for x in range(6)]
        lam_sq = max(
            sum(rho[x] * (v[(x - y) % 6] - w[x]) ** 2 for x in range(6)) for y in range(6)
        )
        assert lambda_of(m, rho) == pytest.approx(np.sqrt(lam_sq), abs=1e-12)


class TestHoelder:
    def test_hundred_random_pairs(self):
        rng = np.random.default_rng(30)
        for _ in range(100):
            sites = int(rng.integers(2, 9))
            v = rng.standard_normal(sites) * rng.exponential()
            v = (v + v[(-np.arange(sites)) % sites]) / 2
            rho = rng.dirichlet(np.full(sites, rng.uniform(0.2, 3.0)))
            lam = lambda_of(model_with(sites, v), rho)
            for r in (1, 2, 8):
                assert hoelder_bound(v, rho, r) - lam >= -1e-10
