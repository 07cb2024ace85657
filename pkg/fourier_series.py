#!/usr/bin/env python3
"""
Fourier Series on [0, 1]

Periodic grid functions, circular convolution through the discrete Fourier
transform, the three series mappings g(f), Phi(f, g) and Psi(f, g), and the
kernels built from spectral data:

    h(s) = V.p. sum_n (alpha_n e^{2 i lambda_n s} - e^{2 pi i n s})
    H(s) = Re h(s) I + Im h(s) J,        J = i sigma2
    F(x, t) = 1/2 [H((x - t)/2) - H((x + t)/2) sigma3]

Conventions: f_hat(n) = int_0^1 f(t) e^{-2 pi i n t} dt, computed as
fft(values) / m; samples sit at s_j = j/m.
"""

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft
from scipy.integrate import trapezoid

from spectral_data import J_MATRIX, SIGMA3, NormingData, is_power_of_two

SERIES_TOL = 1e-12
SERIES_CAP = 60


@dataclass(frozen=True)
class GridFunction:
    """Samples of a period-1 function at s_j = j/m, j = 0..m-1."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 1 or not is_power_of_two(values.size):
            raise ValueError(f"grid functions need a power-of-two number of samples, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def s(self) -> np.ndarray:
        return np.arange(self.m) / self.m

    @classmethod
    def zeros(cls, m: int) -> "GridFunction":
        return cls(np.zeros(m, dtype=complex))

    @classmethod
    def from_modes(cls, coeffs, m: int, n_start: Optional[int] = None) -> "GridFunction":
        """
        Synthesize sum_n c_n e^{2 pi i n s} from coefficients on n = -K..K
        (or n = n_start.. when given).
        """
        coeffs = np.asarray(coeffs, dtype=complex)
        if n_start is None:
            n_start = -(coeffs.size // 2)
        n = n_start + np.arange(coeffs.size)
        if np.max(np.abs(n), initial=0) > m // 2 - 1:
            raise ValueError(f"spectral window |n| <= {np.max(np.abs(n))} exceeds grid bandwidth m/2 - 1 = {m // 2 - 1}")
        full = np.zeros(m, dtype=complex)
        full[n % m] = coeffs
        return synthesis(full)

    def norm(self) -> float:
        """L2(0, 1) norm, rectangle rule (equal to the l2 norm of coefficients)."""
        return float(np.sqrt(np.mean(np.abs(self.values) ** 2)))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.values - other.values)


def _check_same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.m != g.m:
        raise ValueError(f"grid resolution mismatch: {f.m} vs {g.m}")


def analysis(f: GridFunction) -> np.ndarray:
    """Fourier coefficients in FFT order (index n stored at n mod m)."""
    return sfft.fft(f.values) / f.m


def synthesis(coeffs: np.ndarray) -> GridFunction:
    return GridFunction(sfft.ifft(coeffs) * coeffs.size)


def band_indices(m: int) -> np.ndarray:
    """Mode numbers n of the FFT-ordered coefficients."""
    return np.round(sfft.fftfreq(m, d=1.0 / m)).astype(int)


def coefficient(f: GridFunction, n: int) -> complex:
    return complex(analysis(f)[n % f.m])


def conv(f: GridFunction, g: GridFunction) -> GridFunction:
    """(f*g)(x) = int_0^1 f(x - t) g(t) dt with period-1 extension."""
    _check_same_grid(f, g)
    return GridFunction(sfft.ifft(sfft.fft(f.values) * sfft.fft(g.values)) / f.m)


def conv_power(f: GridFunction, k: int) -> GridFunction:
    """k-fold convolution f^<k> (k = 0 gives the delta, i.e. all-ones coefficients)."""
    return synthesis(analysis(f) ** k)


def series_cutoff(norm: float, tol: float = SERIES_TOL, cap: int = SERIES_CAP) -> int:
    """
    Smallest k_max >= 1 with sum_{k > k_max} (2 norm)^k / k! < tol, capped.

    The tail is bounded by its first term times a geometric factor once
    k + 2 > 2 norm.
    """
    x = 2.0 * abs(norm)
    if x == 0.0:
        return 1
    term = x  # x^k / k! for k = 1
    for k in range(1, cap + 1):
        nxt = term * x / (k + 1)
        if k + 2 > x:
            tail = nxt / (1.0 - x / (k + 2))
            if tail < tol:
                return k
        term = nxt
    return cap


def _sup_bound(coeffs: np.ndarray) -> float:
    # sup |f^<k>| <= (sum |f_hat(n)|)^k
    return float(np.sum(np.abs(coeffs)))


def _closed(values: np.ndarray) -> np.ndarray:
    """Append the s = 1 sample of a periodic grid function."""
    return np.append(values, values[0])


def _exp_series(c: np.ndarray, weights: np.ndarray, k_max: int, start: int, closed: bool) -> np.ndarray:
    """
    sum_{k=start..k_max} (2 i s)^k / k! * synth(c^k * weights) on the grid.

    Summation runs in increasing k.
    """
    m = c.size
    s = np.arange(m + 1 if closed else m) / m
    out = np.zeros(s.size, dtype=complex)
    power = np.ones(m, dtype=complex) if start == 0 else c ** start
    factor = (2j * s) ** start / math.factorial(start)
    for k in range(start, k_max + 1):
        samples = sfft.ifft(power * weights) * m
        if closed:
            samples = _closed(samples)
        out += factor * samples
        power = power * c
        factor = factor * (2j * s) / (k + 1)
    return out


def map_g_of_f(f: GridFunction, k_max: Optional[int] = None) -> GridFunction:
    """
    g(f)(s) = V.p. sum_n (e^{2 i f_hat(n) s} - 1) e^{2 pi i n s}
            = sum_{k>=1} (2 i s)^k / k! f^<k>(s).

    Args:
        f: grid function
        k_max: series cutoff; chosen adaptively when None

    Returns:
        g(f) on the grid
    """
    c = analysis(f)
    if k_max is None:
        k_max = series_cutoff(_sup_bound(c))
    if k_max < 1:
        raise ValueError(f"k_max must be at least 1, got {k_max}")
    return GridFunction(_exp_series(c, np.ones(f.m), k_max, 1, closed=False))


def map_Phi(f: GridFunction, g: GridFunction, k_max: Optional[int] = None) -> GridFunction:
    """
    Phi(f, g) = V.p. sum_n g_hat(n) e^{2 (pi n + f_hat(n)) i s}
              = g + sum_{k>=1} (2 i s)^k / k! (f^<k> * g).
    """
    _check_same_grid(f, g)
    c = analysis(f)
    if k_max is None:
        k_max = series_cutoff(_sup_bound(c))
    if k_max < 1:
        raise ValueError(f"k_max must be at least 1, got {k_max}")
    return GridFunction(_exp_series(c, analysis(g), k_max, 0, closed=False))


def gauss_nodes(n_nodes: int):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    u, w = np.polynomial.legendre.leggauss(n_nodes)
    return 0.5 * (u + 1.0), 0.5 * w


def modulated_moments(g: Callable[[np.ndarray], np.ndarray], n: np.ndarray, k_max: int,
                      n_nodes: int) -> np.ndarray:
    """
    Fourier coefficients of M^k g, k = 0..k_max, at modes n:

        int_0^1 (i(1 - 2t))^k g(t) e^{-2 pi i n t} dt

    by Gauss-Legendre quadrature. Returns an array of shape (k_max+1, len(n)).
    """
    t, w = gauss_nodes(n_nodes)
    gt = np.asarray(g(t), dtype=complex)
    basis = (w[:, None] * np.exp(-2j * np.pi * np.outer(t, n)))
    mult = 1j * (1.0 - 2.0 * t)
    rows = np.empty((k_max + 1, t.size), dtype=complex)
    rows[0] = gt
    for k in range(1, k_max + 1):
        rows[k] = rows[k - 1] * mult
    return rows @ basis


def psi_coefficients(f_hat: np.ndarray, g: Callable[[np.ndarray], np.ndarray], n: np.ndarray,
                     k_max: Optional[int] = None, n_nodes: Optional[int] = None) -> np.ndarray:
    """
    Coefficients of Psi(f, g) at modes n, where f_hat[i] is the coefficient
    of f at mode n[i]:

        g_hat(n) + sum_{k>=1} f_hat(n)^k / k! (M^k g)^(n)
        = int_0^1 g(t) exp{i(1 - 2t) f_hat(n)} e^{-2 pi i n t} dt
    """
    f_hat = np.asarray(f_hat, dtype=complex)
    n = np.asarray(n)
    if k_max is None:
        k_max = series_cutoff(0.5 * float(np.max(np.abs(f_hat), initial=0.0)))
    if n_nodes is None:
        n_nodes = int(2 * np.max(np.abs(n), initial=0) + 2 * k_max + 64)
    moments = modulated_moments(g, n, k_max, n_nodes)
    out = moments[0].copy()
    factor = np.ones_like(f_hat)
    for k in range(1, k_max + 1):
        factor = factor * f_hat / k
        out += factor * moments[k]
    return out


def trig_interpolant(f: GridFunction) -> Callable[[np.ndarray], np.ndarray]:
    """Band-limited interpolant on |n| <= m/2 - 1 (the Nyquist mode is dropped)."""
    c = analysis(f)
    n = band_indices(f.m)
    keep = np.abs(n) <= f.m // 2 - 1
    c, n = c[keep], n[keep]

    def evaluate(t: np.ndarray) -> np.ndarray:
        return np.exp(2j * np.pi * np.outer(np.atleast_1d(t), n)) @ c

    return evaluate


def map_Psi(f: GridFunction, g: GridFunction, k_max: Optional[int] = None) -> GridFunction:
    """
    Psi(f, g) = sum_{k>=0} f^<k> * (M^k g) / k!,  M = multiplication by i(1 - 2t).

    The n-th coefficient equals int_0^1 g(t) exp{i(1-2t) f_hat(n)} e^{-2 pi i n t} dt;
    modes where f_hat vanishes keep g_hat(n).
    """
    _check_same_grid(f, g)
    c = analysis(f)
    n = band_indices(f.m)
    out = analysis(g).copy()
    active = (c != 0) & (np.abs(n) <= f.m // 2 - 1)
    if np.any(active):
        if k_max is None:
            k_max = series_cutoff(0.5 * float(np.max(np.abs(c))))
        if k_max < 1:
            raise ValueError(f"k_max must be at least 1, got {k_max}")
        out[active] = psi_coefficients(c[active], trig_interpolant(g), n[active], k_max,
                                       n_nodes=2 * f.m + 2 * k_max + 64)
    return synthesis(out)


# Kernels from spectral data


@dataclass(frozen=True)
class ScalarKernel:
    """
    h(s) sampled at s_j = j/m, j = 0..m (s = 1 included). Negative
    arguments use h(-s) = conj(h(s)).
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 1 or not is_power_of_two(values.size - 1):
            raise ValueError(f"scalar kernels need m+1 samples with m a power of two, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.size - 1

    @property
    def s(self) -> np.ndarray:
        return np.arange(self.m + 1) / self.m

    @property
    def h_plus(self) -> GridFunction:
        return GridFunction(self.values[:-1])

    def at_index(self, j) -> np.ndarray:
        """h(j/m) for integer j in [-m, m]."""
        j = np.asarray(j)
        vals = self.values[np.abs(j)]
        return np.where(j < 0, np.conj(vals), vals)

    def l2_norm_sq(self) -> float:
        """int_0^1 |h(s)|^2 ds by the trapezoid rule."""
        return float(trapezoid(np.abs(self.values) ** 2, self.s))


def _check_window(data: NormingData, m: int) -> None:
    if not is_power_of_two(m):
        raise ValueError(f"grid resolution must be a power of two, got {m}")
    if data.N > m // 2 - 1:
        raise ValueError(f"spectral window 2N+1 = {2 * data.N + 1} exceeds grid bandwidth for m = {m}")


def build_h(data: NormingData, m: int, k_max: Optional[int] = None) -> ScalarKernel:
    """
    Scalar kernel h = g(f_lambda) + Phi(f_lambda, g_alpha).

    f_lambda has coefficients rho_2n and g_alpha has coefficients beta_n on
    the window; both vanish beyond it.

    Args:
        data: eigenvalues and norming constants
        m: grid resolution (power of two)
        k_max: series cutoff; adaptive when None

    Returns:
        ScalarKernel on s = j/m, j = 0..m
    """
    _check_window(data, m)
    c = np.zeros(m, dtype=complex)
    b = np.zeros(m, dtype=complex)
    c[data.n % m] = data.rho_even
    b[data.n % m] = data.beta
    if k_max is None:
        k_max = series_cutoff(_sup_bound(c))
    values = _exp_series(c, np.ones(m), k_max, 1, closed=True)
    values += _exp_series(c, b, k_max, 0, closed=True)
    return ScalarKernel(values)


def h_direct(data: NormingData, s: np.ndarray) -> np.ndarray:
    """Symmetric partial sum of h over the window n = -N..N."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    phase = np.exp(2j * np.outer(s, data.lam)) * data.alpha - np.exp(2j * np.pi * np.outer(s, data.n))
    return phase.sum(axis=1)


@dataclass(frozen=True)
class MatrixKernel:
    """
    H(s) at s_j = j/m, j = -m..m, as an array of shape (2m+1, 2, 2);
    entry [j + m] holds H(j/m).
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 3 or entries.shape[1:] != (2, 2) or entries.shape[0] % 2 != 1:
            raise ValueError(f"matrix kernels need shape (2m+1, 2, 2), got {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def m(self) -> int:
        return (self.entries.shape[0] - 1) // 2

    @property
    def s(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1) / self.m

    def at_index(self, j) -> np.ndarray:
        return self.entries[np.asarray(j) + self.m]

    def entry(self, a: int, b: int) -> np.ndarray:
        return self.entries[:, a, b]

    def coarsen(self) -> "MatrixKernel":
        """Every other sample: the same kernel on the m/2 grid."""
        return MatrixKernel(self.entries[::2])

    def symmetry_defect(self) -> float:
        """max_s ||H(-s) - H(s)^T||."""
        return float(np.max(np.abs(self.entries[::-1] - np.transpose(self.entries, (0, 2, 1)))))


def build_H(h: ScalarKernel) -> MatrixKernel:
    """H(s) = Re h(s) I + Im h(s) J for s >= 0, and H(-s) = H(s)^T."""
    m = h.m
    j = np.arange(-m, m + 1)
    vals = h.at_index(j)
    entries = (vals.real[:, None, None] * np.eye(2) + vals.imag[:, None, None] * J_MATRIX)
    return MatrixKernel(entries)


def diagonalize_H(H: MatrixKernel) -> np.ndarray:
    """
    U* H(s) U with the eigenvectors of J (eigenvalues i, -i); returns
    (2m+1, 2, 2) complex samples equal to diag{h(s), h(-s)}.
    """
    U = np.array([[1.0, 1.0], [1.0j, -1.0j]]) / np.sqrt(2.0)
    return np.einsum("ij,sjk,kl->sil", U.conj().T, H.entries, U)


def hs_norm_sq(H: MatrixKernel) -> float:
    """||H||_{S2}^2 = int int tr H(x-y) H(x-y)^T dx dy (trapezoid on the m grid)."""
    m = H.m
    x = np.arange(m + 1) / m
    diff = np.subtract.outer(np.arange(m + 1), np.arange(m + 1))
    tr = np.sum(H.at_index(diff) ** 2, axis=(-2, -1))
    return float(trapezoid(trapezoid(tr, x, axis=1), x))


def build_F(H: MatrixKernel) -> np.ndarray:
    """
    F(x, t) = 1/2 [H((x - t)/2) - H((x + t)/2) sigma3] on the grid of
    resolution H.m / 2, so that the half arguments fall on samples of H.

    Returns:
        Array of shape (m'+1, m'+1, 2, 2) with m' = H.m // 2, index [i, j]
        holding F(i/m', j/m')
    """
    if H.m % 2:
        raise ValueError(f"build_F needs an even kernel resolution, got {H.m}")
    mf = H.m // 2
    i = np.arange(mf + 1)
    minus = H.at_index(np.subtract.outer(i, i))
    plus = H.at_index(np.add.outer(i, i))
    return 0.5 * (minus - plus @ SIGMA3)


def dump_kernel_csv(h: ScalarKernel, path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["s", "Re", "Im"])
        for s, v in zip(h.s, h.values):
            writer.writerow([repr(float(s)), repr(float(v.real)), repr(float(v.imag))])


def dump_matrix_kernel_csv(H: MatrixKernel, path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["s", "H11", "H12", "H21", "H22"])
        for s, e in zip(H.s, H.entries):
            writer.writerow([repr(float(s))] + [repr(float(v)) for v in e.ravel()])
