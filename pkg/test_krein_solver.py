#!/usr/bin/env python3
"""
Unit tests for krein_solver.py

Kernels come from small admissible datasets on reduced grids.
"""

import csv
import os
import shutil
import tempfile
import unittest

import numpy as np

from char_functions import norming_from_two_spectra
from forward_solver import transformation_residual
from fourier_series import MatrixKernel, ScalarKernel, build_F, build_H, build_h
from krein_solver import (
    PositivityCertificate,
    TriangularKernel,
    K_from_R,
    KreinRows,
    apply_krein_operator,
    certify_positivity,
    dump_triangular_csv,
    glm_residual,
    hs_inner,
    krein_residual,
    off_form_residual,
    project_plus,
    reconstruct_Q,
    reconstruct_Q_from_diagonal,
    require_positive,
    riesz_lower_bound,
    row_increments,
    solve_krein,
    solve_krein_rows,
)
from spectral_data import NormingData, PositivityError, SolverError, SpectralData, relative_error


def sample_norming(N=4, scale=0.15, seed=2):
    rng = np.random.default_rng(seed)
    decay = np.repeat(1.0 / (1.0 + np.abs(np.arange(-N, N + 1))), 2)
    spectra = SpectralData.from_remainders(scale * rng.standard_normal(2 * (2 * N + 1)) * decay)
    return norming_from_two_spectra(spectra)


def kernels(data, m):
    """H on the m grid and on the 2m grid."""
    fine = build_H(build_h(data, 2 * m))
    return fine.coarsen(), fine


def zero_kernel(m):
    return MatrixKernel(np.zeros((2 * m + 1, 2, 2)))


class TestProjection(unittest.TestCase):
    """Test the lower-triangular projection and the HS inner product."""

    def setUp(self):
        rng = np.random.default_rng(0)
        self.T = rng.standard_normal((9, 9, 2, 2))
        self.S = rng.standard_normal((9, 9, 2, 2))

    def test_idempotent(self):
        once = project_plus(self.T)
        np.testing.assert_array_equal(project_plus(once.values).values, once.values)

    def test_upper_triangular_to_zero(self):
        upper = self.T.copy()
        upper[np.tril_indices(9)] = 0.0
        np.testing.assert_array_equal(project_plus(upper).values, 0.0)

    def test_self_adjoint(self):
        left = hs_inner(project_plus(self.T), self.S)
        right = hs_inner(self.T, project_plus(self.S))
        self.assertAlmostEqual(left, right, places=12)

    def test_inner_shape_mismatch(self):
        with self.assertRaises(ValueError):
            hs_inner(self.T, self.S[:5, :5])


class TestPositivity(unittest.TestCase):
    """Test the positivity certificate."""

    def test_zero_kernel(self):
        cert = certify_positivity(zero_kernel(16))
        self.assertAlmostEqual(cert.eps, 1.0, places=12)
        self.assertTrue(cert.passed)

    def test_unperturbed_data(self):
        H, _ = kernels(sample_norming(scale=0.0), 16)
        self.assertAlmostEqual(certify_positivity(H).eps, 1.0, places=12)

    def test_riesz_bound(self):
        data = sample_norming()
        H, _ = kernels(data, 64)
        eps = certify_positivity(H).eps
        # the window plus a stretch of the unperturbed tail
        n_tail = np.arange(data.N + 1, 4 * data.N)
        lambdas = np.concatenate((-np.pi * n_tail[::-1], data.lam, np.pi * n_tail))
        floor = min(float(np.min(data.alpha)), 1.0) * riesz_lower_bound(lambdas)
        self.assertGreater(eps, 0.0)
        self.assertGreaterEqual(eps, 0.9 * floor)

    def test_negative_kernel_fails(self):
        h = ScalarKernel(np.full(17, -2.0))
        cert = certify_positivity(build_H(h))
        self.assertFalse(cert.passed)
        with self.assertRaises(PositivityError):
            require_positive(cert)

    def test_non_finite(self):
        entries = np.zeros((33, 2, 2))
        entries[3, 0, 0] = np.nan
        with self.assertRaises(SolverError):
            certify_positivity(MatrixKernel(entries))

    def test_quadratic_form_bound(self):
        H, _ = kernels(sample_norming(), 32)
        eps = certify_positivity(H).eps
        rng = np.random.default_rng(4)
        for _ in range(5):
            Y = project_plus(rng.standard_normal((33, 33, 2, 2)))
            form = hs_inner(apply_krein_operator(Y, H), Y)
            self.assertGreaterEqual(form, eps * hs_inner(Y, Y) - 1e-6)

    def test_riesz_lattice(self):
        self.assertAlmostEqual(riesz_lower_bound(np.pi * np.arange(-5, 6)), 1.0, places=12)


class TestSolveKrein(unittest.TestCase):
    """Test the Nystrom solve of the Krein equation."""

    def test_zero_kernel(self):
        R = solve_krein(zero_kernel(16))
        np.testing.assert_array_equal(R.values, 0.0)

    def test_first_order(self):
        m = 32
        s = np.arange(m + 1) / m
        H = build_H(ScalarKernel(0.01 * np.exp(2j * s)))
        R = solve_krein(H)
        i = np.arange(m + 1)
        diff = np.subtract.outer(i, i)
        lower = diff >= 0
        gap = np.abs(R.values + H.at_index(diff))[lower]
        self.assertLess(np.max(gap), 2e-4)

    def test_residual(self):
        H, _ = kernels(sample_norming(), 32)
        R = solve_krein(H)
        self.assertLess(krein_residual(R, H), 1e-10)

    def test_upper_triangle_zero(self):
        H, _ = kernels(sample_norming(), 16)
        R = solve_krein(H)
        np.testing.assert_array_equal(R.values[np.triu_indices(17, k=1)], 0.0)

    def test_lipschitz_in_H(self):
        base = sample_norming()
        H0, _ = kernels(base, 32)
        R0 = solve_krein(H0)
        ratios = []
        for delta in (1e-2, 1e-3):
            alpha = base.alpha * (1.0 + delta * np.cos(base.n))
            H1, _ = kernels(type(base)(base.lam, alpha), 32)
            R1 = solve_krein(H1)
            dR = TriangularKernel(R1.values - R0.values).norm()
            dH = np.sqrt(np.sum((H1.entries - H0.entries) ** 2) / H0.entries.shape[0])
            ratios.append(dR / dH)
        self.assertLess(max(ratios) / min(ratios), 3.0)

    def test_row_increments_small(self):
        H, _ = kernels(sample_norming(), 64)
        inc = row_increments(solve_krein(H))
        self.assertEqual(inc.shape, (64,))
        self.assertLess(np.max(inc), 1.0 / np.sqrt(64))


class TestKreinRows(unittest.TestCase):
    """Test the rows x_i = i/m solved on the doubled grid."""

    def test_rows_match_full_solve(self):
        _, fine = kernels(sample_norming(), 32)
        rows = solve_krein_rows(fine)
        full = solve_krein(fine).values
        for i in range(rows.m + 1):
            np.testing.assert_allclose(rows.values[i, :2 * i + 1], full[2 * i, :2 * i + 1], atol=1e-13)

    def test_residual(self):
        _, fine = kernels(sample_norming(), 32)
        self.assertLess(krein_residual(solve_krein_rows(fine), fine), 1e-10)

    def test_residual_grid_mismatch(self):
        H, fine = kernels(sample_norming(), 16)
        with self.assertRaises(ValueError):
            krein_residual(solve_krein_rows(fine), H)

    def test_coarse_shape(self):
        _, fine = kernels(sample_norming(), 16)
        rows = solve_krein_rows(fine)
        self.assertEqual(rows.m, 16)
        self.assertEqual(rows.coarse().values.shape, (17, 17, 2, 2))
        np.testing.assert_array_equal(rows.coarse().values[:, 0], rows.values[:, 0])

    def test_upper_part_zero(self):
        rows = KreinRows(np.ones((5, 9, 2, 2)))
        self.assertTrue(np.all(rows.values[1, 3:] == 0.0))
        self.assertTrue(np.all(rows.values[4] == 1.0))

    def test_bad_shape(self):
        with self.assertRaises(ValueError):
            KreinRows(np.zeros((5, 5, 2, 2)))

    def test_odd_fine_grid(self):
        with self.assertRaises(ValueError):
            solve_krein_rows(MatrixKernel(np.zeros((7, 2, 2))))

    def test_unperturbed(self):
        _, fine = kernels(NormingData.unperturbed(4), 16)
        np.testing.assert_allclose(solve_krein_rows(fine).values, 0.0, atol=1e-12)


class TestReconstruction(unittest.TestCase):
    """Test recovery of Q and the GLM consistency check."""

    def test_zero_kernel(self):
        Q = reconstruct_Q(TriangularKernel.zeros(8))
        np.testing.assert_array_equal(Q.q1, 0.0)
        np.testing.assert_array_equal(Q.q3, 0.0)

    def test_off_form_small(self):
        H, _ = kernels(sample_norming(), 64)
        R = solve_krein(H)
        Q = reconstruct_Q(R)
        self.assertLessEqual(off_form_residual(R), 1e-3 * max(Q.l2_norm(), 1.0))

    def test_diagonal_formula_agrees(self):
        H, _ = kernels(sample_norming(), 128)
        R = solve_krein(H)
        Q = reconstruct_Q(R)
        self.assertLess(relative_error(reconstruct_Q_from_diagonal(R), Q), 0.05)

    def test_transformation_identity(self):
        _, fine = kernels(sample_norming(), 128)
        R = solve_krein_rows(fine).coarse()
        Q = reconstruct_Q(R)
        self.assertLess(transformation_residual(Q, R, np.linspace(0.5, 20.0, 10)), 1e-3)

    def test_K_zero(self):
        np.testing.assert_array_equal(K_from_R(TriangularKernel.zeros(8)).values, 0.0)

    def test_glm_zero(self):
        self.assertEqual(glm_residual(TriangularKernel.zeros(8), np.zeros((9, 9, 2, 2))), 0.0)

    def test_glm_residual(self):
        H, fine = kernels(sample_norming(), 128)
        F = build_F(fine)
        on_nodes = glm_residual(K_from_R(solve_krein_rows(fine)), F)
        interpolated = glm_residual(K_from_R(solve_krein(H)), F)
        self.assertLess(on_nodes, 1e-4)
        self.assertLess(on_nodes, interpolated)

    def test_glm_detects_corruption(self):
        H, fine = kernels(sample_norming(), 32)
        K = K_from_R(solve_krein(H)).values.copy()
        K[20, 10, 0, 0] += 1.0
        self.assertGreaterEqual(glm_residual(TriangularKernel(K), build_F(fine)), 0.5)

    def test_certificate_fields(self):
        cert = PositivityCertificate(eps=0.5, m=16, passed=True)
        require_positive(cert)


class TestDump(unittest.TestCase):
    """Test the triangular kernel CSV dump."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        if os.path.exists(self.temp_dir):
            shutil.rmtree(self.temp_dir)

    def test_rows(self):
        path = os.path.join(self.temp_dir, "R.csv")
        dump_triangular_csv(TriangularKernel.zeros(4), path)
        with open(path) as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["x", "t", "r11", "r12", "r21", "r22"])
        self.assertEqual(len(rows), 1 + 5 * 6 // 2)


if __name__ == '__main__':
    unittest.main()
