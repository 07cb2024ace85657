#!/usr/bin/env python3
"""
Characteristic Functions

The entire functions S(z) = s1(1, z) and C(z) = s2(1, z) as canonical
products over their zeros, the sequences

    gamma_n = (-1)^n S'(lambda_n),    delta_n = (-1)^n C(lambda_n),

and the norming constants alpha_n = 1 / (gamma_n delta_n). gamma and delta
are computed by two independent routes: products over the zeros, and the
integral representations S(z) = sin z + int r1(t) e^{iz(1-2t)} dt,
C(z) = cos z + int r2(t) e^{iz(1-2t)} dt whose densities are found from
the zeros by a Newton solve.
"""

import csv
import math
import warnings
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg as linalg

from fourier_series import (GridFunction, analysis, band_indices, modulated_moments,
                            psi_coefficients, series_cutoff, synthesis)
from spectral_data import (AdmissibilityError, NormingData, SolverError, SpectralData,
                           mode_indices)

SINE_TYPE = "sine_type"
COSINE_TYPE = "cosine_type"

NEWTON_MAX_ITER = 25
NEWTON_MAX_HALVINGS = 8
NEWTON_NORM_BUDGET = 2.0

TAIL_TERMS = 4096
TAIL_FIT_MIN_N = 4


@dataclass(frozen=True)
class AsymptoticTail:
    """
    Remainders beyond the window as c/nu + d/nu^2, one (c, d) per side,
    with nu = n (sine type) or n + 1/2 (cosine type).
    """

    plus: Tuple[float, float] = (0.0, 0.0)
    minus: Tuple[float, float] = (0.0, 0.0)

    def is_zero(self) -> bool:
        return not any(self.plus) and not any(self.minus)


@dataclass(frozen=True)
class CanonicalProduct:
    """
    Canonical product over zeros on the window n = -N..N. Beyond it the
    zeros are pi*n (sine type) or pi*(n + 1/2) (cosine type), shifted by
    the asymptotic tail when one is attached.
    """

    zeros: np.ndarray
    kind: str = SINE_TYPE
    tail: Optional[AsymptoticTail] = None

    def __post_init__(self):
        zeros = np.asarray(self.zeros, dtype=float)
        if self.kind not in (SINE_TYPE, COSINE_TYPE):
            raise ValueError(f"Unknown product kind: {self.kind}")
        if zeros.ndim != 1 or zeros.size % 2 != 1:
            raise ValueError(f"zeros must be a window of odd length, got shape {zeros.shape}")
        if np.any(np.diff(zeros) <= 0):
            raise ValueError("zeros must be strictly increasing")
        zeros.setflags(write=False)
        object.__setattr__(self, "zeros", zeros)
        if np.any(np.abs(self.remainders) >= np.pi):
            raise ValueError(f"zeros do not match the {self.kind} lattice (remainder of size >= pi)")

    @property
    def N(self) -> int:
        return (self.zeros.size - 1) // 2

    @property
    def lattice(self) -> np.ndarray:
        n = mode_indices(self.N)
        return np.pi * n if self.kind == SINE_TYPE else np.pi * (n + 0.5)

    @property
    def remainders(self) -> np.ndarray:
        return self.zeros - self.lattice

    @property
    def offset(self) -> float:
        return 0.0 if self.kind == SINE_TYPE else 0.5


@dataclass(frozen=True)
class GammaDelta:
    gamma: np.ndarray
    delta: np.ndarray

    @property
    def alpha(self) -> np.ndarray:
        return 1.0 / (self.gamma * self.delta)

    def is_positive(self) -> bool:
        return bool(np.all(self.gamma > 0) and np.all(self.delta > 0))


@dataclass(frozen=True)
class KernelDensity:
    """
    Band-limited density r(t) = scale * e^{i pi shift t} * sum_p c_p e^{2 pi i p t}
    on modes p = -N..N.
    """

    coeffs: np.ndarray
    shift: int = 0
    scale: complex = 1.0

    @property
    def modes(self) -> np.ndarray:
        return mode_indices((self.coeffs.size - 1) // 2)

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        series = np.exp(2j * np.pi * np.outer(t, self.modes)) @ self.coeffs
        return self.scale * np.exp(1j * np.pi * self.shift * t) * series

    def to_grid(self, m: int) -> GridFunction:
        return GridFunction(self(np.arange(m) / m))

    def norm(self) -> float:
        return abs(self.scale) * float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True)
class KernelPair:
    r1: KernelDensity
    r2: KernelDensity


# Product route


def _sign_log_sum(factors: np.ndarray, axis=None) -> Tuple[np.ndarray, np.ndarray]:
    return np.prod(np.sign(factors), axis=axis), np.sum(np.log(np.abs(factors)), axis=axis)


def fit_tail(p: CanonicalProduct) -> AsymptoticTail:
    """
    Least-squares fit of rho ~ c/nu + d/nu^2 over the outer half of each
    side of the window. Windows with N < TAIL_FIT_MIN_N get the zero tail.
    """
    N = p.N
    if N < TAIL_FIT_MIN_N:
        return AsymptoticTail()
    n = mode_indices(N)
    nu = n + p.offset
    rho = p.remainders

    def side(mask):
        v = nu[mask]
        design = np.stack((1.0 / v, 1.0 / v ** 2), axis=1)
        coef, *_ = linalg.lstsq(design, rho[mask])
        return float(coef[0]), float(coef[1])

    edge = (N + 1) // 2
    return AsymptoticTail(side(n >= edge), side(n <= -edge))


def with_fitted_tail(p: CanonicalProduct) -> CanonicalProduct:
    return replace(p, tail=fit_tail(p))


def _tail_log(p: CanonicalProduct, z, skip: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sign and log magnitude of prod_{|k|>N} (zeta_k - z) / (pi nu_k - z) over
    the modelled zeros zeta_k: TAIL_TERMS factors per side, then the
    leading-order sum of the rest. `skip` leaves out lattice index k.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    sign = np.ones(z.size)
    log_mag = np.zeros(z.size)
    if p.tail is None or p.tail.is_zero():
        return sign, log_mag
    steps = np.arange(1, TAIL_TERMS + 1)
    for (c, d), k in ((p.tail.plus, p.N + steps), (p.tail.minus, -p.N - steps)):
        nu = k + p.offset
        rho = c / nu + d / nu ** 2
        factors = 1.0 + rho[None, :] / (np.pi * nu[None, :] - z[:, None])
        if skip is not None:
            factors[:, k == skip] = 1.0
        s, l = _sign_log_sum(factors, axis=1)
        # log(1 + rho/(pi nu - z)) ~ (c/pi)/nu^2 + ((d + c z/pi)/pi)/nu^3 past the last factor
        far = abs(nu[-1]) + 0.5
        rest = (c / np.pi) / far + ((d + c * z / np.pi) / np.pi) * np.sign(nu[-1]) / (2.0 * far ** 2)
        sign = sign * s
        log_mag = log_mag + l + rest
    return sign, log_mag


def _eval_scalar(p: CanonicalProduct, z: float) -> float:
    if np.any(p.zeros == z):
        return 0.0
    lattice = p.lattice
    N = p.N
    if p.kind == SINE_TYPE:
        k = int(np.round(z / np.pi))
        # sin z / (pi k - z) without the removable singularity
        near = -((-1) ** (k % 2)) * np.sinc((z - np.pi * k) / np.pi)
        full = np.sin(z)
    else:
        k = int(np.round(z / np.pi - 0.5))
        near = ((-1) ** (k % 2)) * np.sinc((z - np.pi * (k + 0.5)) / np.pi)
        full = np.cos(z)

    ratio = (p.zeros - z) / np.where(lattice == z, 1.0, lattice - z)
    skip = None
    if -N <= k <= N:
        idx = k + N
        ratio = np.delete(ratio, idx)
        prefactor = near * (p.zeros[idx] - z)
    elif p.tail is not None and abs(k) <= N + TAIL_TERMS:
        nu = k + p.offset
        c, d = p.tail.plus if k > 0 else p.tail.minus
        prefactor = near * (np.pi * nu + c / nu + d / nu ** 2 - z)
        skip = k
    else:
        prefactor = full
    sign, log_mag = _sign_log_sum(ratio)
    if p.tail is not None:
        t_sign, t_log = _tail_log(p, z, skip)
        sign, log_mag = sign * t_sign[0], log_mag + t_log[0]
    return float(prefactor * sign * np.exp(log_mag))


def eval_product(p: CanonicalProduct, z):
    """
    Evaluate S (sine type) or C (cosine type) at real z.

    With zero remainders beyond the window the infinite V.p. product
    collapses to

        S(z) = sin z * prod_{|n|<=N} (lambda_n - z) / (pi n - z)

    (cos z and pi(n + 1/2) for C). The product runs in log space; the
    lattice factor nearest to z is combined with sin z (cos z) in closed
    form. Exactly 0 is returned at a stored zero.

    An attached tail multiplies in prod_{|k|>N} (zeta_k - z) / (pi nu_k - z)
    over the modelled zeros.
    """
    if np.ndim(z) == 0:
        return _eval_scalar(p, float(z))
    return np.array([_eval_scalar(p, float(v)) for v in np.ravel(z)]).reshape(np.shape(z))


def sdot_at_zeros(p: CanonicalProduct) -> np.ndarray:
    """
    gamma_n = (-1)^n S'(lambda_n) = prod_{k != n} (1 + a_{k,n}),
    a_{k,n} = (rho_2k - rho_2n) / (pi (k - n)).

    Beyond the window a_{k,n} = -c/(k - n) with c = rho_2n/pi, and the full
    V.p. product of those factors is sin(pi c)/(pi c). An attached tail contributes the
    extra factor prod_{|k|>N} (zeta_k - lambda_n) / (pi k - lambda_n).

    Raises:
        AdmissibilityError: if some 1 + a_{k,n} <= 0 (separation violated)
    """
    if p.kind != SINE_TYPE:
        raise ValueError("sdot_at_zeros needs a sine-type product")
    rho = p.remainders
    N = p.N
    n = mode_indices(N)
    diff = np.subtract.outer(n, n).T  # [row n, col k] = k - n
    offdiag = diff != 0
    safe = np.where(offdiag, diff, 1)
    c = rho / np.pi
    a = np.where(offdiag, (rho[None, :] - rho[:, None]) / (np.pi * safe), 0.0)
    tail = np.where(offdiag, 1.0 - c[:, None] / safe, 1.0)

    bad = np.argwhere(1.0 + a <= 0)
    if bad.size:
        row, col = bad[0]
        raise AdmissibilityError(f"separation violated between lambda_{n[row]} and lambda_{n[col]}",
                                 int(n[row]))
    tail_sign, tail_log = _sign_log_sum(tail, axis=1)
    gamma = np.sinc(c) * tail_sign * np.exp(np.sum(np.log1p(a), axis=1) - tail_log)
    if p.tail is not None:
        t_sign, t_log = _tail_log(p, p.zeros)
        gamma = gamma * t_sign * np.exp(t_log)
    if np.any(gamma <= 0):
        idx = int(np.flatnonzero(gamma <= 0)[0])
        raise AdmissibilityError(f"(-1)^n S'(lambda_n) is not positive at n = {n[idx]}", int(n[idx]))
    return gamma


def c_at_zeros(pC: CanonicalProduct, lam: np.ndarray) -> np.ndarray:
    """
    delta_n = (-1)^n C(lambda_n) = prod_k (mu_k - lambda_n) / (pi (k + 1/2 - n)).

    Beyond the window the factors are 1 - c/(k - n + 1/2), c = rho_2n/pi,
    whose full V.p. product is cos(rho_2n), times the tail factor at
    lambda_n when the product carries one.

    Raises:
        AdmissibilityError: if lambda and mu do not interlace
    """
    if pC.kind != COSINE_TYPE:
        raise ValueError("c_at_zeros needs a cosine-type product")
    lam = np.asarray(lam, dtype=float)
    if lam.shape != pC.zeros.shape:
        raise ValueError(f"lambda and mu windows differ: {lam.size} vs {pC.zeros.size}")
    N = pC.N
    n = mode_indices(N)
    rho_even = lam - np.pi * n
    rho_odd = pC.remainders
    half = np.subtract.outer(n, n).T + 0.5  # [row n, col k] = k - n + 1/2
    b = (rho_odd[None, :] - rho_even[:, None]) / (np.pi * half)
    tail = 1.0 - (rho_even / np.pi)[:, None] / half

    bad = np.argwhere(1.0 + b <= 0)
    if bad.size:
        row, col = bad[0]
        raise AdmissibilityError(f"interlacing violated between lambda_{n[row]} and mu_{n[col]}",
                                 int(n[row]))
    tail_sign, tail_log = _sign_log_sum(tail, axis=1)
    delta = np.cos(rho_even) * tail_sign * np.exp(np.sum(np.log1p(b), axis=1) - tail_log)
    if pC.tail is not None:
        t_sign, t_log = _tail_log(pC, lam)
        delta = delta * t_sign * np.exp(t_log)
    if np.any(delta <= 0):
        idx = int(np.flatnonzero(delta <= 0)[0])
        raise AdmissibilityError(f"(-1)^n C(lambda_n) is not positive at n = {n[idx]}", int(n[idx]))
    return delta


def gamma_delta_via_products(data: SpectralData, tail: bool = False) -> GammaDelta:
    """gamma and delta from the two spectra; `tail` attaches a fitted asymptotic tail to both products."""
    pS = CanonicalProduct(data.lam, SINE_TYPE)
    pC = CanonicalProduct(data.mu, COSINE_TYPE)
    if tail:
        pS, pC = with_fitted_tail(pS), with_fitted_tail(pC)
    return GammaDelta(sdot_at_zeros(pS), c_at_zeros(pC, data.lam))


def norming_from_two_spectra(data: SpectralData, tail: bool = False) -> NormingData:
    """alpha_n = 1 / (S'(lambda_n) C(lambda_n)) by the product route."""
    try:
        gd = gamma_delta_via_products(data, tail)
    except ValueError as e:
        raise AdmissibilityError(str(e))
    return NormingData(data.lam, gd.alpha)


def log_bound_constant(h: float) -> float:
    """K(h) = max over x >= -1 + 2h/pi of |(log(1 + x) - x) / x^2|."""
    x0 = -1.0 + 2.0 * h / np.pi
    xs = np.concatenate(([x0], np.linspace(x0, max(10.0, abs(x0) + 10.0), 20001)))
    xs = xs[np.abs(xs) > 1e-6]
    vals = np.abs((np.log1p(xs) - xs) / xs ** 2)
    # the limit at x = 0 is 1/2
    return float(max(np.max(vals), 0.5))


def phi_psi_bound(h: float, r: float) -> float:
    """Uniform bound (sqrt(3) r + 4 K pi^2 r^2) / 3 on |log gamma_n| and |log delta_n|."""
    K = log_bound_constant(h)
    return (math.sqrt(3.0) * r + 4.0 * K * math.pi ** 2 * r ** 2) / 3.0


# Fourier route


@dataclass(frozen=True)
class NewtonReport:
    coeffs: np.ndarray
    residuals: List[float]
    iterations: int


def _affine_operator(rho: np.ndarray, modes: np.ndarray, k_max: int) -> np.ndarray:
    """
    Matrix of L_f g = g + sum_k (M^k g) * f^<k> / k! restricted to the
    active modes: L[n, p] = sum_k rho_n^k / k! (M^k e_p)^(n).
    """
    q_max = int(np.max(np.abs(modes), initial=0)) * 2
    q = np.arange(-q_max, q_max + 1)
    moments = modulated_moments(lambda t: np.ones_like(t, dtype=complex), q, k_max,
                                n_nodes=2 * q_max + 2 * k_max + 64)
    diff = np.subtract.outer(modes, modes) + q_max
    L = np.zeros((modes.size, modes.size), dtype=complex)
    factor = np.ones(modes.size, dtype=complex)
    L += moments[0][diff]
    for k in range(1, k_max + 1):
        factor = factor * rho / k
        L += factor[:, None] * moments[k][diff]
    return L


def solve_kernel_coefficients(rho: np.ndarray, modes: np.ndarray, kind: str = SINE_TYPE,
                              tol: float = 1e-10) -> NewtonReport:
    """
    Newton solve of H(f, g) = sign * s(f) + L_f g = 0 in coefficient space,
    sign = +1 for sine type and -1 for cosine type; f has coefficients rho
    on modes, g is supported on the modes with rho != 0.

    Returns:
        NewtonReport with the coefficients of g on `modes` and the residual history
    """
    rho = np.asarray(rho, dtype=float)
    modes = np.asarray(modes)
    coeffs = np.zeros(modes.size, dtype=complex)
    active = rho != 0
    if not np.any(active):
        return NewtonReport(coeffs, [0.0], 0)

    f_norm = float(np.linalg.norm(rho))
    if f_norm > NEWTON_NORM_BUDGET:
        warnings.warn(f"||f|| = {f_norm:.3g} exceeds the Newton budget {NEWTON_NORM_BUDGET}; "
                      "convergence is not guaranteed", RuntimeWarning)

    sign = 1.0 if kind == SINE_TYPE else -1.0
    r_act = rho[active]
    k_max = series_cutoff(0.5 * float(np.max(np.abs(r_act))))
    L = _affine_operator(r_act, modes[active], k_max)
    s_f = sign * np.sin(r_act)

    def residual(g):
        return s_f + L @ g

    g = -s_f.astype(complex)
    res = residual(g)
    history = [float(np.linalg.norm(res))]
    iterations = 0
    while history[-1] > tol and iterations < NEWTON_MAX_ITER:
        iterations += 1
        try:
            step = linalg.solve(L, -res)
        except linalg.LinAlgError as e:
            raise SolverError(f"singular derivative in the zero-to-kernel solve: {e}", history[-1])
        t = 1.0
        for _ in range(NEWTON_MAX_HALVINGS + 1):
            trial = g + t * step
            trial_res = residual(trial)
            if np.linalg.norm(trial_res) < history[-1]:
                break
            t *= 0.5
        else:
            raise SolverError(f"Newton step halving failed, residual {history[-1]:.3e}", history[-1])
        g, res = trial, trial_res
        history.append(float(np.linalg.norm(res)))

    if history[-1] > tol:
        raise SolverError(f"zero-to-kernel solve did not converge in {NEWTON_MAX_ITER} iterations, "
                          f"residual {history[-1]:.3e}", history[-1])
    coeffs[active] = g
    return NewtonReport(coeffs, history, iterations)


def solve_zero_to_kernel(f: GridFunction, tol: float = 1e-10) -> GridFunction:
    """
    Find g with all zeros of sin z + int_0^1 g(t) e^{iz(1-2t)} dt at
    pi*n + f_hat(n).

    Args:
        f: real-coefficient grid function carrying the remainders
        tol: residual tolerance for H(f, g)

    Returns:
        g on the grid of f
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    c = analysis(f)
    n = band_indices(f.m)
    keep = np.abs(c) > 1e-15
    if np.any(np.abs(c[keep].imag) > 1e-12):
        raise ValueError("f must have real Fourier coefficients")
    report = solve_kernel_coefficients(c[keep].real, n[keep], SINE_TYPE, tol)
    full = np.zeros(f.m, dtype=complex)
    full[n[keep] % f.m] = report.coeffs
    return synthesis(full)


def eval_G(kernel: KernelDensity, z, kind: str = SINE_TYPE) -> np.ndarray:
    """
    sin z + int_0^1 r(t) e^{iz(1-2t)} dt (cos z for cosine type), in closed
    form for a band-limited density.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    omega = (2.0 * np.pi * kernel.modes[None, :] + np.pi * kernel.shift) - 2.0 * z[:, None]
    small = np.abs(omega) < 1e-12
    safe = np.where(small, 1.0, omega)
    E = np.where(small, 1.0, (np.exp(1j * safe) - 1.0) / (1j * safe))
    integral = kernel.scale * np.exp(1j * z) * (E @ kernel.coeffs)
    base = np.sin(z) if kind == SINE_TYPE else np.cos(z)
    return base + integral


def kernel_pair(data: SpectralData, tol: float = 1e-10) -> KernelPair:
    """
    Densities r1, r2 of S and C from the two spectra.

    r2 = -i e^{i pi t} g with g solving the cosine-type equation on the
    remainders rho_2n+1.
    """
    n = data.n
    rho_even = data.lam - np.pi * n
    rho_odd = data.mu - np.pi * (n + 0.5)
    r1 = solve_kernel_coefficients(rho_even, n, SINE_TYPE, tol)
    r2 = solve_kernel_coefficients(rho_odd, n, COSINE_TYPE, tol)
    return KernelPair(KernelDensity(r1.coeffs), KernelDensity(r2.coeffs, shift=1, scale=-1j))


def gamma_delta_via_fourier(data: SpectralData, tol: float = 1e-10) -> GammaDelta:
    """
    gamma_n = cos rho_2n + Psi(f_lambda, i(1-2s) r1)^(n)
    delta_n = cos rho_2n + Psi(f_lambda, r2)^(n)
    """
    pair = kernel_pair(data, tol)
    n = data.n
    rho_even = data.lam - np.pi * n
    r1 = pair.r1

    def sdot_density(t):
        return 1j * (1.0 - 2.0 * t) * r1(t)

    gamma = np.cos(rho_even) + psi_coefficients(rho_even, sdot_density, n).real
    delta = np.cos(rho_even) + psi_coefficients(rho_even, pair.r2, n).real
    return GammaDelta(gamma, delta)


def dump_norming_csv(data: SpectralData, gd: GammaDelta, path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["n", "lambda", "gamma", "delta", "alpha"])
        for row in zip(data.n, data.lam, gd.gamma, gd.delta, gd.alpha):
            writer.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])
