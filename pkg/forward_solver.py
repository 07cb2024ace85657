#!/usr/bin/env python3
"""
Forward Solver

Integrates l_Q u = lambda u, l_Q = sigma2 (1/i) d/dx + Q, with u(0) = (0, 1).
In first-order form

    u' = J (lambda I - Q(x)) u,    J = [[0, 1], [-1, 0]],

so Q = 0 gives u = (sin lambda x, cos lambda x). The free rotation
e^{lambda J x} is factored out analytically and the remaining slow system

    v' = -J e^{-2 lambda J x} Q(x) v

is advanced by classical RK4, vectorized over many lambda at once. The
eigenvalues of D1 (zeros of u1(1, .)) and D2 (zeros of u2(1, .)) are
bracketed on a scan grid and polished by a bisection-safeguarded secant.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson

from spectral_data import NormingData, PotentialAKNS, SolverError, SpectralData, mode_indices

D1 = "D1"
D2 = "D2"

SCAN_POINTS = 8
REFINED_SCAN_POINTS = 64
ROOT_TOL = 1e-12
ROOT_MAX_ITER = 100


@dataclass(frozen=True)
class Solution2:
    """s(x, lambda) = (u1, u2) on the grid of the potential."""

    u1: np.ndarray
    u2: np.ndarray
    lam: float

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.u1.size)


def default_substeps(lam_max: float, m: int) -> int:
    """RK4 steps per grid cell keeping 2 |lambda| h below 1/2."""
    return max(2, math.ceil(4.0 * abs(lam_max) / m))


def _propagate(Q: PotentialAKNS, lams: np.ndarray, substeps: int, record: bool = False):
    """
    RK4 in the interaction picture for every lambda in `lams`.

    Returns:
        u at x = 1 with shape (L, 2), or the node trajectory (m+1, L, 2) when record is set
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    m = Q.m
    n_steps = m * substeps
    h = 1.0 / n_steps
    # potential on the half-step lattice, piecewise linear between nodes
    xh = np.arange(2 * n_steps + 1) * (0.5 * h)
    q1 = np.interp(xh, Q.x, Q.q1)
    q3 = np.interp(xh, Q.x, Q.q3)

    def rhs(k, v):
        theta = -2.0 * lams * xh[k]
        c, s = np.cos(theta), np.sin(theta)
        a = c * q1[k] - s * q3[k]
        b = s * q1[k] + c * q3[k]
        return np.stack((-a * v[:, 0] + b * v[:, 1], b * v[:, 0] + a * v[:, 1]), axis=1)

    v = np.zeros((lams.size, 2))
    v[:, 1] = 1.0
    traj = np.empty((m + 1, lams.size, 2)) if record else None
    if record:
        traj[0] = v
    for step in range(n_steps):
        k = 2 * step
        k1 = rhs(k, v)
        k2 = rhs(k + 1, v + 0.5 * h * k1)
        k3 = rhs(k + 1, v + 0.5 * h * k2)
        k4 = rhs(k + 2, v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if record and (step + 1) % substeps == 0:
            traj[(step + 1) // substeps] = v

    def rotate(vv, x):
        theta = lams * x
        c, s = np.cos(theta), np.sin(theta)
        return np.stack((c * vv[..., 0] + s * vv[..., 1], -s * vv[..., 0] + c * vv[..., 1]), axis=-1)

    if record:
        return rotate(traj, Q.x[:, None])
    return rotate(v, 1.0)


def integrate(Q: PotentialAKNS, lam: float, substeps: Optional[int] = None) -> Solution2:
    if not (np.all(np.isfinite(Q.q1)) and np.all(np.isfinite(Q.q3))):
        raise ValueError("potential has non-finite samples")
    if substeps is None:
        substeps = default_substeps(lam, Q.m)
    traj = _propagate(Q, np.array([lam]), substeps, record=True)
    return Solution2(traj[:, 0, 0].copy(), traj[:, 0, 1].copy(), float(lam))


def endpoint(Q: PotentialAKNS, lams: np.ndarray, substeps: Optional[int] = None) -> np.ndarray:
    """(S(lambda), C(lambda)) = s(1, lambda) for an array of lambda, shape (L, 2)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if substeps is None:
        substeps = default_substeps(float(np.max(np.abs(lams), initial=0.0)), Q.m)
    return _propagate(Q, lams, substeps)


def _brackets(which: str, N: int):
    n = mode_indices(N)
    if which == D1:
        return n, np.pi * (n - 0.5), np.pi * (n + 0.5), 0
    if which == D2:
        return n, np.pi * n, np.pi * (n + 1), 1
    raise ValueError(f"unknown operator {which!r}, expected {D1!r} or {D2!r}")


def _locate_sign_changes(values: np.ndarray):
    """First sign change in each row; returns (row has exactly one, index)."""
    sign = np.where(values >= 0, 1.0, -1.0)
    changes = sign[:, :-1] * sign[:, 1:] < 0
    count = np.sum(changes, axis=1)
    return count == 1, np.argmax(changes, axis=1)


def _scan(Q, lo, hi, points, comp, substeps):
    grid = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, points + 1)[None, :]
    vals = endpoint(Q, grid.ravel(), substeps)[:, comp].reshape(grid.shape)
    return grid, vals


def _illinois(Q, a, b, fa, fb, comp, substeps, tol=ROOT_TOL):
    """Vectorized Illinois iteration on bracketing pairs (a, b)."""
    a, b, fa, fb = a.copy(), b.copy(), fa.copy(), fb.copy()
    done = (fa == 0) | (fb == 0)
    b = np.where(fa == 0, a, b)
    for _ in range(ROOT_MAX_ITER):
        if np.all(done):
            break
        denom = np.where(fb != fa, fb - fa, 1.0)
        c = np.where(fb != fa, b - fb * (b - a) / denom, 0.5 * (a + b))
        # fall back to bisection when the secant leaves the bracket
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        outside = (c <= lo) | (c >= hi)
        c = np.where(outside, 0.5 * (a + b), c)
        c = np.where(done, b, c)
        fc = endpoint(Q, c, substeps)[:, comp]
        flip = fc * fb < 0
        step = np.abs(c - b)
        a = np.where(done, a, np.where(flip, b, a))
        fa = np.where(done, fa, np.where(flip, fb, 0.5 * fa))
        b = np.where(done, b, c)
        fb = np.where(done, fb, fc)
        done = done | (fc == 0) | (step < tol) | (np.abs(b - a) < tol)
    if not np.all(done):
        raise SolverError(f"eigenvalue polish did not converge for {int(np.sum(~done))} brackets")
    return b


def eigenvalues(Q: PotentialAKNS, which: str = D1, N: int = 32,
                substeps: Optional[int] = None) -> np.ndarray:
    """
    Eigenvalues n = -N..N of D1 (u1(1, .) = 0) or D2 (u2(1, .) = 0).

    Each eigenvalue is searched in a bracket of width pi around pi*n
    (D1) or pi*(n + 1/2) (D2).

    Raises:
        SolverError: if a bracket keeps showing zero or several sign changes
    """
    if N < 0:
        raise ValueError(f"N must be non-negative, got {N}")
    n, lo, hi, comp = _brackets(which, N)
    if substeps is None:
        substeps = default_substeps(float(np.max(np.abs(np.concatenate((lo, hi))))), Q.m)

    grid, vals = _scan(Q, lo, hi, SCAN_POINTS, comp, substeps)
    single, idx = _locate_sign_changes(vals)
    if not np.all(single):
        bad = ~single
        g2, v2 = _scan(Q, lo[bad], hi[bad], REFINED_SCAN_POINTS, comp, substeps)
        single2, idx2 = _locate_sign_changes(v2)
        if not np.all(single2):
            first = int(n[bad][np.flatnonzero(~single2)[0]])
            raise SolverError(f"{which}: bracket around n = {first} does not hold exactly one eigenvalue")
        rows = np.arange(g2.shape[0])
        a_bad, b_bad = g2[rows, idx2], g2[rows, idx2 + 1]
        fa_bad, fb_bad = v2[rows, idx2], v2[rows, idx2 + 1]
    rows = np.arange(grid.shape[0])
    a, b = grid[rows, idx], grid[rows, idx + 1]
    fa, fb = vals[rows, idx], vals[rows, idx + 1]
    if not np.all(single):
        a[bad], b[bad], fa[bad], fb[bad] = a_bad, b_bad, fa_bad, fb_bad
    return np.sort(_illinois(Q, a, b, fa, fb, comp, substeps))


def norming_direct(Q: PotentialAKNS, lambda_n: np.ndarray, substeps: Optional[int] = None) -> np.ndarray:
    """alpha_n = 1 / ||s(., lambda_n)||^2 (Simpson on the potential grid)."""
    lambda_n = np.atleast_1d(np.asarray(lambda_n, dtype=float))
    if substeps is None:
        substeps = default_substeps(float(np.max(np.abs(lambda_n), initial=0.0)), Q.m)
    traj = _propagate(Q, lambda_n, substeps, record=True)
    density = np.sum(traj ** 2, axis=-1)
    return 1.0 / simpson(density, x=Q.x, axis=0)


def spectral_data(Q: PotentialAKNS, N: int = 32) -> SpectralData:
    return SpectralData(eigenvalues(Q, D1, N), eigenvalues(Q, D2, N))


def norming_data(Q: PotentialAKNS, N: int = 32) -> NormingData:
    lam = eigenvalues(Q, D1, N)
    return NormingData(lam, norming_direct(Q, lam))


def _linear_filon(omega: np.ndarray):
    """
    (A, B) with int_0^1 ((1 - u) f0 + u f1) e^{i omega u} du = A f0 + B f1,
    by Taylor series where |omega| < 1e-2.
    """
    omega = np.asarray(omega, dtype=float)
    small = np.abs(omega) < 1e-2
    w = np.where(small, 1.0, omega)
    e = np.exp(1j * w)
    B = e / (1j * w) + (e - 1.0) / w ** 2
    A = (e - 1.0) / (1j * w) - B
    iw = 1j * omega
    A_small = sum(iw ** k / (math.factorial(k) * (k + 1) * (k + 2)) for k in range(7))
    B_small = sum(iw ** k / (math.factorial(k) * (k + 2)) for k in range(7))
    return np.where(small, A_small, A), np.where(small, B_small, B)


def transformation_residual(Q: PotentialAKNS, R, lambdas: np.ndarray) -> float:
    """
    max over x_i and lambda of |s(x, lambda) - s0(x, lambda) - int_0^x R(x, x - t) s0(x - 2t, lambda) dt|,
    s0(y, lambda) = (sin lambda y, cos lambda y). R is a triangular kernel on the grid of Q.

    R is taken piecewise linear in t and integrated exactly against
    e^{i lambda (x - 2t)}, so the quadrature error does not grow with lambda.
    """
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    m = Q.m
    if R.m != m:
        raise ValueError(f"grid mismatch: potential {m} vs kernel {R.m}")
    traj = _propagate(Q, lambdas, default_substeps(float(np.max(np.abs(lambdas))), m), record=True)
    h = 1.0 / m
    A, B = _linear_filon(-2.0 * lambdas * h)
    worst = 0.0
    for i in range(1, m + 1):
        x = i * h
        j = np.arange(i + 1)
        phase = np.exp(1j * np.outer(x - 2.0 * j * h, lambdas))  # (j, L)
        weights = np.zeros(phase.shape, dtype=complex)
        weights[:-1] += A * phase[:-1]
        weights[1:] += B * phase[:-1]
        J = h * np.einsum("jl,jab->lab", weights, R.values[i, i - j])
        # R s0 = R[:, 0] sin + R[:, 1] cos
        integral = J[:, :, 0].imag + J[:, :, 1].real
        free = np.stack((np.sin(lambdas * x), np.cos(lambdas * x)), axis=-1)
        worst = max(worst, float(np.max(np.abs(traj[i] - free - integral))))
    return worst
