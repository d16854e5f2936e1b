import itertools
import math

import numpy as np
import pytest
import scipy.linalg

from sigma2bvp import symfunc
from sigma2bvp.errors import InvalidArgumentError, InvalidMetricError


def brute_force_sigma(lam, k):
    # independent oracle: literal sum over k-subsets
    return sum(np.prod(c) for c in itertools.combinations(lam, k))


def closed_form_eigs_2x2(W):
    tr = W[0, 0] + W[1, 1]
    disc = math.sqrt((W[0, 0] - W[1, 1]) ** 2 + 4 * W[0, 1] ** 2)
    return np.array([(tr + disc) / 2, (tr - disc) / 2])


def closed_form_eigs_3x3(W):
    # trigonometric solution of the symmetric cubic characteristic equation
    q = np.trace(W) / 3.0
    B = W - q * np.eye(3)
    p2 = np.sum(B * B) / 6.0
    p = math.sqrt(p2) if p2 > 0 else 0.0
    if p == 0.0:
        return np.full(3, q)
    detB = np.linalg.det(B / p)
    r = max(-1.0, min(1.0, detB / 2.0))
    phi = math.acos(r) / 3.0
    eigs = [q + 2 * p * math.cos(phi + 2 * math.pi * k / 3) for k in range(3)]
    return np.sort(eigs)[::-1]


class TestElementarySymmetric:
    def test_documented_values(self):
        assert symfunc.elementary_symmetric([1.0, 2.0, 3.0], 2) == 11.0
        assert symfunc.elementary_symmetric([1.0, 1.0, 1.0], 2) == 3.0
        assert symfunc.elementary_symmetric([0.5, 0.5, 0.5], 2) == 0.75

    def test_order_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            symfunc.elementary_symmetric([1.0, 2.0], 0)
        with pytest.raises(InvalidArgumentError):
            symfunc.elementary_symmetric([1.0, 2.0], 3)

    def test_integer_exactness_against_brute_force(self):
        rng = np.random.default_rng(7)
        for n in (3, 4, 5, 6):
            for _ in range(25):
                lam = rng.integers(-9, 10, size=n).astype(float)
                for k in range(1, n + 1):
                    assert symfunc.elementary_symmetric(lam, k) == \
                        brute_force_sigma(lam, k)

    def test_batched(self):
        lam = np.array([[1.0, 2.0, 3.0], [1.0, 1.0, 1.0]])
        out = symfunc.elementary_symmetric(lam, 2)
        np.testing.assert_allclose(out, [11.0, 3.0])


class TestSpectrum:
    def test_documented_values(self):
        np.testing.assert_allclose(symfunc.spectrum(np.diag([5.0, 4.0])), [5, 4])
        rng = np.random.default_rng(3)
        a = rng.standard_normal((3, 3))
        g = a @ a.T + 0.5 * np.eye(3)
        np.testing.assert_allclose(symfunc.spectrum(2.0 * g, g), [2, 2, 2],
                                   atol=1e-12)
        np.testing.assert_allclose(
            symfunc.spectrum(np.diag([1.0, 2.0]), np.diag([1.0, 4.0])),
            [1.0, 0.5], atol=1e-14)

    def test_against_closed_forms(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            W2 = rng.standard_normal((2, 2))
            W2 = W2 + W2.T
            np.testing.assert_allclose(symfunc.spectrum(W2),
                                       closed_form_eigs_2x2(W2), atol=1e-12)
            W3 = rng.standard_normal((3, 3))
            W3 = W3 + W3.T
            np.testing.assert_allclose(symfunc.spectrum(W3),
                                       closed_form_eigs_3x3(W3), atol=1e-10)

    def test_generalized_against_scipy(self):
        rng = np.random.default_rng(5)
        for n in (3, 4, 6):
            W = rng.standard_normal((n, n))
            W = W + W.T
            a = rng.standard_normal((n, n))
            g = a @ a.T + 0.3 * np.eye(n)
            ours = symfunc.spectrum(W, g)
            ref = np.sort(scipy.linalg.eigh(W, g, eigvals_only=True))[::-1]
            np.testing.assert_allclose(ours, ref, atol=1e-10)

    def test_congruence_invariance(self):
        rng = np.random.default_rng(9)
        W = rng.standard_normal((4, 4))
        W = W + W.T
        a = rng.standard_normal((4, 4))
        g = a @ a.T + 0.4 * np.eye(4)
        S = rng.standard_normal((4, 4)) + 2 * np.eye(4)
        lam1 = symfunc.spectrum(W, g)
        lam2 = symfunc.spectrum(S.T @ W @ S, S.T @ g @ S)
        np.testing.assert_allclose(lam1, lam2, atol=1e-9)

    def test_non_spd_metric_raises(self):
        with pytest.raises(InvalidMetricError):
            symfunc.spectrum(np.eye(2), np.diag([1.0, -1.0]))


class TestSigma2FromTrace:
    def test_documented_values(self):
        assert abs(symfunc.sigma2_from_trace(np.diag([1.0, 2.0, 3.0])) - 11.0) < 1e-14
        assert abs(symfunc.sigma2_from_trace(np.eye(3)) - 3.0) < 1e-14

    def test_matches_eigenvalue_route(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            W = rng.standard_normal((4, 4)) * 2
            W = W + W.T
            a = rng.standard_normal((4, 4))
            g = a @ a.T + 0.3 * np.eye(4)
            lam = np.sort(scipy.linalg.eigh(W, g, eigvals_only=True))[::-1]
            expect = brute_force_sigma(lam, 2)
            got = symfunc.sigma2_from_trace(W, g)
            assert abs(got - expect) <= 1e-10 * (1 + np.sum(W * W))

    def test_invalid_metric(self):
        with pytest.raises(InvalidMetricError):
            symfunc.sigma2_from_trace(np.eye(3), -np.eye(3))


class TestConeMembership:
    def test_documented_values(self):
        d = symfunc.cone_membership([1.0, 1.0, -0.4], 2)
        assert d.member and abs(d.sigmas[1] - 0.2) < 1e-14
        d = symfunc.cone_membership([1.0, 1.0, -1.0], 2)
        assert not d.member and abs(d.sigmas[1] + 1.0) < 1e-14
        # a zero eigenvalue does not by itself exclude the cone
        d = symfunc.cone_membership([0.0, 1.0, 1.0], 2)
        assert d.member and d.margin == 1.0

    def test_member_iff_positive_margin(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            lam = rng.standard_normal(4) * 2
            d = symfunc.cone_membership(lam, 2)
            sig = [brute_force_sigma(lam, k) for k in (1, 2)]
            assert d.member == (min(sig) > 0)
            assert abs(d.margin - min(sig)) < 1e-12 * (1 + abs(min(sig)))


class TestSigma2Gradient:
    def test_documented_values(self):
        np.testing.assert_allclose(symfunc.sigma2_gradient(np.diag([1.0, 2.0, 3.0])),
                                   np.diag([5.0, 4.0, 3.0]))
        np.testing.assert_allclose(symfunc.sigma2_gradient(np.eye(3)), 2 * np.eye(3))

    def test_finite_difference_match(self):
        rng = np.random.default_rng(4)
        h = 1e-5
        for _ in range(20):
            lam = np.abs(rng.standard_normal(3)) + 0.3
            q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
            W = q @ np.diag(lam) @ q.T
            F = symfunc.sigma2_gradient(W)
            for i in range(3):
                for j in range(3):
                    E = np.zeros((3, 3))
                    E[j, i] = 1.0
                    _, sp = symfunc.sigma1_sigma2(W + h * E)
                    _, sm = symfunc.sigma1_sigma2(W - h * E)
                    fd = (sp - sm) / (2 * h)
                    assert abs(fd - F[i, j]) <= 1e-6 * (1 + abs(F[i, j]))

    def test_euler_identity_integers(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            W = rng.integers(-5, 6, size=(4, 4)).astype(float)
            W = W + W.T
            F = symfunc.sigma2_gradient(W)
            _, s2 = symfunc.sigma1_sigma2(W)
            assert np.einsum("ij,ji->", F, W) == 2.0 * s2

    def test_positive_definite_on_cone(self):
        rng = np.random.default_rng(8)
        count = 0
        while count < 200:
            lam = rng.standard_normal(4) + 0.8
            if min(brute_force_sigma(lam, 1), brute_force_sigma(lam, 2)) <= 0:
                continue
            q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
            W = q @ np.diag(lam) @ q.T
            F = symfunc.sigma2_gradient(W)
            assert symfunc.jacobi_eigenvalues(0.5 * (F + F.T))[-1] > 0
            count += 1

    def test_trace_identity(self):
        rng = np.random.default_rng(10)
        W = rng.standard_normal((64, 5, 5))
        W = W + np.swapaxes(W, -1, -2)
        F = symfunc.sigma2_gradient(W)
        s1 = np.trace(W, axis1=-2, axis2=-1)
        np.testing.assert_allclose(np.trace(F, axis1=-2, axis2=-1), 4 * s1,
                                   rtol=0, atol=1e-12 * (1 + np.abs(s1).max()))


class TestPartitionIdentities:
    def test_blocks(self):
        rng = np.random.default_rng(12)
        for n in (3, 4, 5):
            W = rng.standard_normal((n, n))
            W = W + W.T
            F = symfunc.sigma2_gradient(W)
            # normal column: F^n_alpha = -W^n_alpha holds entrywise
            np.testing.assert_array_equal(F[-1, :-1], -W[-1, :-1])
            # corner: F^n_n = sigma_1 of the tangential block
            assert abs(F[-1, -1] - np.trace(W[:-1, :-1])) < 1e-13 * (1 + abs(F[-1, -1]))
            # quotient identity through sigma_2(W) = f^2
            _, s2 = symfunc.sigma1_sigma2(W)
            _, s2top = symfunc.sigma1_sigma2(W[:-1, :-1])
            cross = float(W[:-1, -1] @ W[-1, :-1])
            lhs = F[-1, -1] * W[-1, -1]
            rhs = s2 - s2top + cross
            assert abs(lhs - rhs) < 1e-12 * (1 + abs(rhs))


class TestPtilde:
    def test_documented_values(self):
        F = np.diag([5.0, 4.0, 3.0])
        np.testing.assert_allclose(symfunc.ptilde(F, 1.0, 3), F)
        np.testing.assert_allclose(symfunc.ptilde(F, 0.0, 3),
                                   np.diag([17.0, 16.0, 15.0]))
        np.testing.assert_allclose(symfunc.ptilde(np.eye(4), -1.0, 4), 5 * np.eye(4))

    def test_semidefinite_augmentation(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            lam = np.abs(rng.standard_normal(4)) + 0.1
            q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
            F = q @ np.diag(lam) @ q.T
            P = symfunc.ptilde(F, 0.3, 4)
            diff_eigs = symfunc.jacobi_eigenvalues(P - F)
            assert diff_eigs[-1] >= -1e-12

    def test_dimension_error(self):
        with pytest.raises(InvalidArgumentError):
            symfunc.ptilde(np.eye(2), 0.5, 2)


class TestMaclaurin:
    def test_documented_values(self):
        assert symfunc.maclaurin_margin([1.0, 1.0]) == 0.0
        assert symfunc.maclaurin_margin([2.0, 0.0]) == 1.0

    def test_sampled_nonnegative(self):
        rng = np.random.default_rng(16)
        for m in (2, 3, 4, 5, 6):
            lam = rng.standard_normal((2000, m)) * 3
            assert symfunc.maclaurin_margin(lam).min() >= -1e-12


class TestConcavity:
    def test_midpoint(self):
        rng = np.random.default_rng(18)
        count = 0
        while count < 500:
            lam = rng.standard_normal((2, 5)) + 0.9
            s = [min(brute_force_sigma(l, 1), brute_force_sigma(l, 2)) for l in lam]
            if min(s) <= 0:
                continue
            qa, _ = np.linalg.qr(rng.standard_normal((5, 5)))
            qb, _ = np.linalg.qr(rng.standard_normal((5, 5)))
            A = qa @ np.diag(lam[0]) @ qa.T
            B = qb @ np.diag(lam[1]) @ qb.T
            _, s2a = symfunc.sigma1_sigma2(A)
            _, s2b = symfunc.sigma1_sigma2(B)
            _, s2m = symfunc.sigma1_sigma2(0.5 * (A + B))
            assert math.sqrt(s2m) >= 0.5 * (math.sqrt(s2a) + math.sqrt(s2b)) - 1e-10
            count += 1


def test_jacobi_batched_matches_numpy():
    rng = np.random.default_rng(20)
    A = rng.standard_normal((40, 6, 6))
    A = A + np.swapaxes(A, -1, -2)
    ours = symfunc.jacobi_eigenvalues(A)
    ref = np.sort(np.linalg.eigvalsh(A), axis=-1)[..., ::-1]
    np.testing.assert_allclose(ours, ref, atol=1e-10)


def test_jacobi_near_degenerate():
    base = np.diag([1.0, 1.0 + 1e-13, 1.0 - 1e-13])
    rng = np.random.default_rng(22)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    A = q @ base @ q.T
    lam = symfunc.jacobi_eigenvalues(A)
    np.testing.assert_allclose(lam, [1.0, 1.0, 1.0], atol=1e-12)
