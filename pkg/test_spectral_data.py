#!/usr/bin/env python3
"""
Unit tests for spectral_data.py

Admissibility checks, the sequence algebra and the file formats.
"""

import json
import os
import shutil
import tempfile
import unittest

import numpy as np

from spectral_data import (
    AdmissibilityParams,
    AlgebraElement,
    DataIOError,
    NonInvertibleError,
    NormingData,
    PotentialAKNS,
    SpectralData,
    algebra_invert,
    algebra_lipschitz,
    algebra_multiply,
    algebra_norm,
    algebra_subtract,
    in_invertible_set,
    inverse_norm_bound,
    is_power_of_two,
    load_norming_json,
    load_potential_csv,
    load_spectral_json,
    norming_floor_check,
    norming_inverse_range,
    norming_to_algebra,
    relative_error,
    remainders,
    sample_invertible_pairs,
    save_norming_json,
    save_potential_csv,
    save_spectral_json,
    validate_spectral,
)


class TestAdmissibilityParams(unittest.TestCase):
    """Test parameter validation."""

    def test_defaults(self):
        params = AdmissibilityParams()
        self.assertEqual((params.h, params.r, params.h_prime, params.r_prime), (0.5, 1.0, 0.05, 10.0))

    def test_rejects_non_positive(self):
        with self.assertRaises(ValueError):
            AdmissibilityParams(h=0.0)
        with self.assertRaises(ValueError):
            AdmissibilityParams(r=-1.0)
        with self.assertRaises(ValueError):
            AdmissibilityParams(r_prime=float("inf"))


class TestSpectralData(unittest.TestCase):
    """Test window handling of two spectra."""

    def test_unperturbed_remainders_vanish(self):
        data = SpectralData.unperturbed(8)
        self.assertEqual(data.N, 8)
        np.testing.assert_allclose(remainders(data), 0.0, atol=1e-15)

    def test_from_remainders_round_trip(self):
        rho = np.linspace(-0.1, 0.1, 2 * 5)
        data = SpectralData.from_remainders(rho)
        np.testing.assert_allclose(remainders(data), rho, atol=1e-14)

    def test_rejects_even_window(self):
        with self.assertRaises(ValueError):
            SpectralData(np.arange(4.0), np.arange(4.0) + 0.5)

    def test_rejects_length_mismatch(self):
        with self.assertRaises(ValueError):
            SpectralData(np.arange(3.0), np.arange(5.0))


class TestValidateSpectral(unittest.TestCase):
    """Test membership in N(h, r)."""

    def setUp(self):
        self.params = AdmissibilityParams(h=0.5, r=1.0)

    def test_unperturbed_is_member(self):
        report = validate_spectral(SpectralData.unperturbed(8), self.params)
        self.assertTrue(report.is_member)
        self.assertAlmostEqual(report.min_gap, np.pi / 2)
        self.assertAlmostEqual(report.l2_norm, 0.0)

    def test_single_small_shift_is_member(self):
        data = SpectralData.unperturbed(8)
        lam = data.lam.copy()
        lam[8] += 0.3
        report = validate_spectral(SpectralData(lam, data.mu), self.params)
        self.assertTrue(report.is_member)
        self.assertAlmostEqual(report.l2_norm, 0.3)

    def test_interlacing_violation_reports_index(self):
        data = SpectralData.unperturbed(4)
        mu = data.mu.copy()
        # mu_2 pushed past lambda_3
        mu[4 + 2] = np.pi * 3 + 0.1
        report = validate_spectral(SpectralData(data.lam, mu), self.params)
        self.assertFalse(report.is_member)
        self.assertEqual(report.violation_index, 2)
        self.assertIn("interlacing", report.message)

    def test_monotonicity_violation(self):
        data = SpectralData.unperturbed(4)
        lam = data.lam.copy()
        lam[5] = lam[4] - 0.1
        report = validate_spectral(SpectralData(lam, data.mu), self.params)
        self.assertFalse(report.is_member)
        self.assertEqual(report.violation_index, 1)

    def test_separation_below_h(self):
        data = SpectralData.unperturbed(4)
        lam = data.lam.copy()
        lam[4] += 1.4
        report = validate_spectral(SpectralData(lam, data.mu), AdmissibilityParams(h=0.5, r=2.0))
        self.assertFalse(report.is_member)
        self.assertIn("separated", report.message)

    def test_norm_above_r(self):
        rho = np.full(2 * 9, 0.3)
        report = validate_spectral(SpectralData.from_remainders(rho), AdmissibilityParams(h=0.1, r=1.0))
        self.assertFalse(report.is_member)
        self.assertIn("exceeds", report.message)

    def test_tail_neighbour_checked(self):
        data = SpectralData.unperturbed(3)
        mu = data.mu.copy()
        # mu_N beyond the tail eigenvalue pi*(N+1)
        mu[-1] = np.pi * 4 + 0.1
        report = validate_spectral(SpectralData(data.lam, mu), self.params)
        self.assertFalse(report.is_member)

    def test_membership_monotone_in_parameters(self):
        # N(h, r) is contained in N(h2, r2) for h2 <= h and r2 >= r
        rng = np.random.default_rng(11)
        looser = [AdmissibilityParams(h=h2, r=r2) for h2 in (0.5, 0.3, 0.1) for r2 in (1.0, 1.5, 4.0)]
        members = 0
        for _ in range(50):
            rho = rng.standard_normal(2 * 9)
            rho *= rng.uniform(0.1, 1.5) / np.linalg.norm(rho)
            data = SpectralData.from_remainders(rho)
            if not validate_spectral(data, self.params).is_member:
                continue
            members += 1
            for params in looser:
                self.assertTrue(validate_spectral(data, params).is_member, msg=str(params))
        self.assertGreater(members, 10)


class TestNormingFloorCheck(unittest.TestCase):
    """Test membership in L(h, r) x A(h', r')."""

    def setUp(self):
        self.params = AdmissibilityParams()

    def test_unperturbed_is_member(self):
        report = norming_floor_check(NormingData.unperturbed(6), self.params)
        self.assertTrue(report.is_member)
        self.assertEqual(report.min_alpha, 1.0)

    def test_zero_alpha_rejected(self):
        data = NormingData.unperturbed(6)
        alpha = data.alpha.copy()
        alpha[6] = 0.0
        report = norming_floor_check(NormingData(data.lam, alpha), self.params)
        self.assertFalse(report.is_member)
        self.assertEqual(report.violation_index, 0)

    def test_alpha_below_floor(self):
        data = NormingData.unperturbed(6)
        alpha = data.alpha.copy()
        alpha[2] = 0.01
        report = norming_floor_check(NormingData(data.lam, alpha), self.params)
        self.assertFalse(report.is_member)
        self.assertEqual(report.violation_index, -4)
        self.assertAlmostEqual(report.min_alpha, 0.01)

    def test_beta_budget(self):
        data = NormingData.unperturbed(6)
        report = norming_floor_check(NormingData(data.lam, data.alpha + 4.0),
                                     AdmissibilityParams(r_prime=10.0))
        self.assertFalse(report.is_member)
        self.assertIn("beta", report.message)


class TestAlgebra(unittest.TestCase):
    """Test the unital sequence algebra."""

    def test_norm(self):
        e = AlgebraElement(2.0, np.array([3.0, 4.0]))
        self.assertAlmostEqual(algebra_norm(e), 7.0)

    def test_multiply_pointwise(self):
        e1 = AlgebraElement(1.0, np.array([0.5, -0.25]))
        e2 = AlgebraElement(2.0, np.array([0.1, 0.2]))
        product = algebra_multiply(e1, e2)
        np.testing.assert_allclose(product.values, e1.values * e2.values)

    def test_multiply_submultiplicative(self):
        rng = np.random.default_rng(1)
        e1 = AlgebraElement(1.3, rng.standard_normal(9))
        e2 = AlgebraElement(-0.7, rng.standard_normal(9))
        self.assertLessEqual(algebra_norm(algebra_multiply(e1, e2)),
                             algebra_norm(e1) * algebra_norm(e2) + 1e-12)

    def test_invert_unit(self):
        inv = algebra_invert(AlgebraElement(1.0, np.zeros(5)))
        self.assertEqual(inv.a, 1.0)
        np.testing.assert_allclose(inv.x, 0.0)

    def test_invert_gives_identity(self):
        e = AlgebraElement(1.0, np.array([0.5, -0.25, 0.1]))
        identity = algebra_multiply(e, algebra_invert(e))
        self.assertAlmostEqual(identity.a, 1.0)
        np.testing.assert_allclose(identity.x, 0.0, atol=1e-15)

    def test_invert_values(self):
        e = AlgebraElement(2.0, np.array([1.0, -1.0]))
        np.testing.assert_allclose(algebra_invert(e).values, [1 / 3.0, 1.0])

    def test_inverse_within_bound(self):
        e = AlgebraElement(1.0, np.array([0.5, -0.4, 0.3]))
        self.assertLessEqual(algebra_norm(algebra_invert(e)), inverse_norm_bound(e) + 1e-12)

    def test_non_invertible(self):
        with self.assertRaises(NonInvertibleError):
            algebra_invert(AlgebraElement(0.0, np.zeros(3)))
        with self.assertRaises(NonInvertibleError) as ctx:
            algebra_invert(AlgebraElement(1.0, np.array([0.0, -1.0])))
        self.assertEqual(ctx.exception.index, 1)

    def test_subtract(self):
        e1 = AlgebraElement(1.0, np.array([1.0, 2.0]))
        e2 = AlgebraElement(0.5, np.array([0.5, 0.5]))
        np.testing.assert_allclose(algebra_subtract(e1, e2).values, e1.values - e2.values)

    def test_norming_inverse_range(self):
        params = AdmissibilityParams(h_prime=0.1, r_prime=1.0)
        h2, r2 = norming_inverse_range(params)
        data = NormingData(np.pi * np.arange(-2, 3), np.array([0.2, 1.5, 1.0, 0.9, 1.3]))
        self.assertTrue(norming_floor_check(data, params).is_member)
        inv = algebra_invert(norming_to_algebra(data))
        self.assertGreaterEqual(np.min(inv.values.real), h2)
        self.assertLessEqual(np.linalg.norm(inv.x), r2)

    def test_double_inversion(self):
        rng = np.random.default_rng(5)
        for e, _ in sample_invertible_pairs(rng, 20, 33, 0.1):
            back = algebra_invert(algebra_invert(e))
            self.assertAlmostEqual(back.a, e.a, delta=1e-12)
            np.testing.assert_allclose(back.x, e.x, rtol=0, atol=1e-12)

    def test_multiply_back_random(self):
        # x_n in [-0.5, 2] keeps inf |1 + x_n| >= 0.5
        rng = np.random.default_rng(6)
        for _ in range(20):
            e = AlgebraElement(1.0, rng.uniform(-0.5, 2.0, 65))
            identity = algebra_multiply(e, algebra_invert(e))
            self.assertAlmostEqual(identity.a, 1.0, delta=1e-14)
            np.testing.assert_allclose(identity.x, 0.0, atol=1e-14)


class TestInvertibleSet(unittest.TestCase):
    """Test sampling from S_eps and the Lipschitz constant of inversion."""

    def test_membership(self):
        self.assertTrue(in_invertible_set(AlgebraElement(1.0, np.array([0.5, -0.8])), 0.1))
        self.assertFalse(in_invertible_set(AlgebraElement(0.05, np.zeros(3)), 0.1))
        self.assertFalse(in_invertible_set(AlgebraElement(1.0, np.array([-0.95])), 0.1))

    def test_samples_in_set(self):
        pairs = sample_invertible_pairs(np.random.default_rng(2), 30, 17, 0.1)
        self.assertEqual(len(pairs), 30)
        for e1, e2 in pairs:
            self.assertTrue(in_invertible_set(e1, 0.1))
            self.assertTrue(in_invertible_set(e2, 0.1))
            self.assertLessEqual(algebra_norm(algebra_subtract(e1, e2)), 0.1 + 1e-12)

    def test_lipschitz_finite_and_bounded(self):
        pairs = sample_invertible_pairs(np.random.default_rng(3), 100, 33, 0.1)
        L = algebra_lipschitz(pairs, 0.1)
        self.assertTrue(np.isfinite(L))
        self.assertGreater(L, 0.0)
        # e1^{-1} - e2^{-1} = e1^{-1} (e2 - e1) e2^{-1}
        bound = max(inverse_norm_bound(e1) * inverse_norm_bound(e2) for e1, e2 in pairs)
        self.assertLessEqual(L, bound * (1.0 + 1e-9))

    def test_lipschitz_identical_pair(self):
        e = AlgebraElement(1.0, np.array([0.2, 0.3]))
        self.assertEqual(algebra_lipschitz([(e, e)], 0.1), 0.0)

    def test_lipschitz_rejects_outside_set(self):
        inside = AlgebraElement(1.0, np.zeros(3))
        outside = AlgebraElement(1.0, np.array([0.0, -0.95, 0.0]))
        with self.assertRaises(ValueError):
            algebra_lipschitz([(inside, outside)], 0.1)


class TestPotential(unittest.TestCase):
    """Test grid potentials."""

    def test_constant_norm(self):
        Q = PotentialAKNS(np.full(33, 0.5), np.zeros(33))
        self.assertAlmostEqual(Q.l2_norm(), np.sqrt(2 * 0.25))

    def test_matrix_form(self):
        Q = PotentialAKNS(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
        np.testing.assert_allclose(Q.matrix()[1], [[4.0, 2.0], [2.0, -4.0]])

    def test_rejects_complex(self):
        with self.assertRaises(ValueError):
            PotentialAKNS(np.zeros(5, dtype=complex), np.zeros(5))

    def test_relative_error(self):
        Q = PotentialAKNS.from_functions(np.sin, np.cos, 16)
        self.assertEqual(relative_error(Q, Q), 0.0)
        self.assertAlmostEqual(relative_error(PotentialAKNS.zero(16), Q), 1.0)

    def test_power_of_two(self):
        self.assertTrue(is_power_of_two(256))
        self.assertFalse(is_power_of_two(96))
        self.assertFalse(is_power_of_two(0))


class TestFileFormats(unittest.TestCase):
    """Test JSON and CSV I/O."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        if os.path.exists(self.temp_dir):
            shutil.rmtree(self.temp_dir)

    def _path(self, name):
        return os.path.join(self.temp_dir, name)

    def test_spectral_json(self):
        data = SpectralData.from_remainders(np.linspace(-0.05, 0.05, 10))
        save_spectral_json(data, self._path("s.json"))
        loaded = load_spectral_json(self._path("s.json"))
        np.testing.assert_array_equal(loaded.lam, data.lam)
        np.testing.assert_array_equal(loaded.mu, data.mu)

    def test_norming_json(self):
        data = NormingData(np.pi * np.arange(-1, 2), np.array([0.9, 1.0, 1.1]))
        save_norming_json(data, self._path("a.json"))
        loaded = load_norming_json(self._path("a.json"))
        np.testing.assert_array_equal(loaded.alpha, data.alpha)

    def test_json_missing_key(self):
        with open(self._path("bad.json"), "w") as f:
            json.dump({"N": 1, "lambda": [0.0, 1.0, 2.0]}, f)
        with self.assertRaises(DataIOError):
            load_spectral_json(self._path("bad.json"))

    def test_json_length_mismatch(self):
        with open(self._path("bad.json"), "w") as f:
            json.dump({"N": 2, "lambda": [0.0, 1.0, 2.0], "mu": [0.5, 1.5, 2.5]}, f)
        with self.assertRaises(DataIOError):
            load_spectral_json(self._path("bad.json"))

    def test_malformed_json(self):
        with open(self._path("bad.json"), "w") as f:
            f.write("{not json")
        with self.assertRaises(DataIOError):
            load_spectral_json(self._path("bad.json"))

    def test_potential_csv_round_trip(self):
        Q = PotentialAKNS.from_functions(lambda x: np.sin(2 * np.pi * x), lambda x: 0.1 * x, 16)
        save_potential_csv(Q, self._path("q.csv"))
        loaded = load_potential_csv(self._path("q.csv"))
        np.testing.assert_array_equal(loaded.q1, Q.q1)
        np.testing.assert_array_equal(loaded.q3, Q.q3)

    def test_potential_csv_bad_line(self):
        Q = PotentialAKNS.zero(4)
        save_potential_csv(Q, self._path("q.csv"))
        with open(self._path("q.csv")) as f:
            lines = f.readlines()
        lines[3] = "0.5,abc,0.0\n"
        with open(self._path("q.csv"), "w") as f:
            f.writelines(lines)
        with self.assertRaises(DataIOError) as ctx:
            load_potential_csv(self._path("q.csv"))
        self.assertIn("line 4", str(ctx.exception))

    def test_potential_csv_bad_header(self):
        with open(self._path("q.csv"), "w") as f:
            f.write("a,b,c\n0,0,0\n1,0,0\n")
        with self.assertRaises(DataIOError):
            load_potential_csv(self._path("q.csv"))

    def test_potential_csv_grid_not_power_of_two(self):
        with open(self._path("q.csv"), "w") as f:
            f.write("x,q1,q3\n0,0,0\n0.333333333333,0,0\n0.666666666667,0,0\n1,0,0\n")
        with self.assertRaises(DataIOError):
            load_potential_csv(self._path("q.csv"))


if __name__ == '__main__':
    unittest.main()
