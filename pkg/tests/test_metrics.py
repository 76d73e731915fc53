import numpy as np
import pytest

from mflab.errors import ShapeMismatch
from mflab.linalg import density_matrix, kron, kron_power
from mflab.metrics import dpi_margin, fidelity, fvdg_margin, trace_distance

from test_linalg import random_density, random_unitary

RHO_A = np.diag([0.7, 0.3])
RHO_B = np.diag([0.4, 0.6])
# commuting-case Bhattacharyya sum, hand evaluated
F_AB = (np.sqrt(0.7 * 0.4) + np.sqrt(0.3 * 0.6)) ** 2


class TestFidelity:
    def test_self_fidelity(self):
        rng = np.random.default_rng(31)
        rho = random_density(rng, 4)
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)

    def test_rank_one_projection(self):
        rng = np.random.default_rng(32)
        rho = random_density(rng, 5)
        u = random_unitary(rng, 5)[:, 0]
        p = np.outer(u, u.conj())
        assert fidelity(rho, p) == pytest.approx(float((u.conj() @ rho @ u).real), abs=1e-10)

    def test_commuting_hand_value(self):
        assert F_AB == pytest.approx(0.90900, abs=5e-6)
        assert fidelity(RHO_A, RHO_B) == pytest.approx(F_AB, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            a, b = random_density(rng, 4), random_density(rng, 4, rank=2)
            assert abs(fidelity(a, b) - fidelity(b, a)) <= 1e-10

    def test_one_iff_equal(self):
        rng = np.random.default_rng(34)
        a = random_density(rng, 3)
        b = random_density(rng, 3)
        assert fidelity(a, b) < 1.0 - 1e-6
        assert fidelity(a, a.copy()) == pytest.approx(1.0, abs=1e-10)

    def test_unitary_invariance(self):
        rng = np.random.default_rng(35)
        for _ in range(10):
            a, b = random_density(rng, 4), random_density(rng, 4)
            u = random_unitary(rng, 4)
            ua = u @ a @ u.conj().T
            ub = u @ b @ u.conj().T
            assert abs(fidelity(ua, ub) - fidelity(a, b)) <= 1e-10

    def test_multiplicative_on_products(self):
        rng = np.random.default_rng(36)
        for _ in range(10):
            a1, b1 = random_density(rng, 3), random_density(rng, 3)
            a2, b2 = random_density(rng, 2), random_density(rng, 2)
            lhs = fidelity(kron(a1, a2), kron(b1, b2))
            rhs = fidelity(a1, b1) * fidelity(a2, b2)
            assert abs(lhs - rhs) <= 1e-9

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            fidelity(np.eye(2) / 2, np.eye(3) / 3)


class TestTraceDistance:
    def test_identical(self):
        rng = np.random.default_rng(37)
        rho = random_density(rng, 4)
        assert trace_distance(rho, rho) == 0.0

    def test_orthogonal_pure(self):
        p = np.diag([1.0, 0.0])
        q = np.diag([0.0, 1.0])
        assert trace_distance(p, q) == pytest.approx(2.0, abs=1e-14)

    def test_hand_value(self):
        assert trace_distance(RHO_A, RHO_B) == pytest.approx(0.6, abs=1e-14)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(38)
        for _ in range(20):
            a, b, c = (random_density(rng, 4) for _ in range(3))
            assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-10


class TestFvdG:
    def test_equal_states(self):
        # sqrt(1 - F) amplifies roundoff near F = 1, so "zero" means ~sqrt(eps)
        rng = np.random.default_rng(39)
        rho = random_density(rng, 3)
        margin = fvdg_margin(rho, rho)
        assert -1e-9 <= margin <= 1e-6

    def test_hand_value(self):
        assert fvdg_margin(RHO_A, RHO_B) == pytest.approx(np.sqrt(1 - F_AB) - 0.3, abs=1e-12)
        assert fvdg_margin(RHO_A, RHO_B) == pytest.approx(0.00166, abs=5e-6)

    def test_200_random_pairs(self):
        rng = np.random.default_rng(40)
        for _ in range(200):
            n = int(rng.integers(2, 10))
            a = random_density(rng, n, rank=int(rng.integers(1, n + 1)))
            b = random_density(rng, n, rank=int(rng.integers(1, n + 1)))
            assert fvdg_margin(a, b) >= -1e-9


class TestDPI:
    def test_equal_states_zero(self):
        rng = np.random.default_rng(41)
        rho = density_matrix(random_density(rng, 9), (3, 3))
        assert dpi_margin(rho, rho) == pytest.approx(0.0, abs=1e-10)

    def test_product_states_shared_factor(self):
        # tracing out the shared factor collapses it: both fidelities agree
        rng = np.random.default_rng(42)
        tau = random_density(rng, 3)
        r1, s1 = random_density(rng, 3), random_density(rng, 3)
        rho = density_matrix(kron(r1, tau), (3, 3))
        sig = density_matrix(kron(s1, tau), (3, 3))
        margin = dpi_margin(rho, sig, traced_factor=1)
        assert margin >= -1e-9
        assert margin == pytest.approx(0.0, abs=1e-9)

    def test_bell_pair_margin_reaches_one(self):
        # orthogonal maximally entangled pure states share the same marginals
        plus = np.zeros(4)
        plus[[0, 3]] = 1 / np.sqrt(2)
        minus = np.zeros(4)
        minus[0], minus[3] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        rho = density_matrix(np.outer(plus, plus), (2, 2))
        sig = density_matrix(np.outer(minus, minus), (2, 2))
        f = fidelity(rho, sig)
        assert f == pytest.approx(0.0, abs=1e-12)
        assert dpi_margin(rho, sig) == pytest.approx(1.0 - f, abs=1e-10)

    def test_200_random_pairs(self):
        rng = np.random.default_rng(43)
        for _ in range(200):
            a = density_matrix(random_density(rng, 9, rank=int(rng.integers(1, 10))), (3, 3))
            b = density_matrix(random_density(rng, 9, rank=int(rng.integers(1, 10))), (3, 3))
            assert dpi_margin(a, b, traced_factor=int(rng.integers(0, 2))) >= -1e-9

    def test_kron_power_fidelity(self):
        rng = np.random.default_rng(44)
        a, b = random_density(rng, 2), random_density(rng, 2)
        assert fidelity(kron_power(a, 3), kron_power(b, 3)) == pytest.approx(
            fidelity(a, b) ** 3, abs=1e-9
        )
