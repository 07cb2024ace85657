#!/usr/bin/env python3
"""
Krein Solver

Solves the Krein equation

    R(x, t) + H(x - t) + int_0^x R(x, s) H(s - t) ds = 0,   0 <= t <= x <= 1,

by a trapezoid Nystrom discretization on the uniform grid x_i = i/m, and
recovers the potential from R(x, 0). The rows x_i can also be solved on
the doubled grid of H, which puts R(x, (x +- t)/2) on nodes for the GLM
kernel. Also provides the lower-triangular
projection, the positivity certificate of I + convolution(H), the GLM
kernel K built from R and the residual diagnostics used by the CLI.
"""

import csv
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg as linalg
from scipy.integrate import trapezoid

from fourier_series import MatrixKernel
from spectral_data import (J_MATRIX, SIGMA1, SIGMA3, PotentialAKNS, PositivityError,
                           SolverError)

POSITIVITY_FLOOR = 1e-10
OFF_FORM_THRESHOLD = 1e-3
# l_Q = B d/dx + Q with B = sigma2 / i
B_MATRIX = -J_MATRIX


@dataclass(frozen=True)
class TriangularKernel:
    """
    R(x_i, t_j) as an array of shape (m+1, m+1, 2, 2), index [i, j];
    entries with j > i are zero.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 4 or values.shape[2:] != (2, 2) or values.shape[0] != values.shape[1]:
            raise ValueError(f"triangular kernels need shape (m+1, m+1, 2, 2), got {values.shape}")
        values[np.triu_indices(values.shape[0], k=1)] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.shape[0] - 1

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m + 1)

    @classmethod
    def zeros(cls, m: int) -> "TriangularKernel":
        return cls(np.zeros((m + 1, m + 1, 2, 2)))

    def column(self, j: int) -> np.ndarray:
        """x -> R(x, t_j), shape (m+1, 2, 2)."""
        return self.values[:, j]

    def norm(self) -> float:
        return float(np.sqrt(hs_inner(self, self)))


@dataclass(frozen=True)
class PositivityCertificate:
    eps: float
    m: int
    passed: bool


def _as_array(T: Union[TriangularKernel, np.ndarray]) -> np.ndarray:
    return T.values if isinstance(T, TriangularKernel) else np.asarray(T)


def trapezoid_weights(n: int, m: int) -> np.ndarray:
    """Weights of the trapezoid rule on nodes 0..n-1 with spacing 1/m."""
    w = np.full(n, 1.0 / m)
    if n == 1:
        return np.zeros(1)
    w[0] = w[-1] = 0.5 / m
    return w


def project_plus(T: np.ndarray) -> TriangularKernel:
    """Lower-triangular part T(x, y) for x >= y."""
    return TriangularKernel(np.asarray(T))


def hs_inner(X, Y) -> float:
    """<X, Y>_2 = int int tr X(x, y) Y(x, y)^T dx dy with trapezoid weights."""
    X, Y = _as_array(X), _as_array(Y)
    if X.shape != Y.shape:
        raise ValueError(f"kernel shapes differ: {X.shape} vs {Y.shape}")
    m = X.shape[0] - 1
    w = trapezoid_weights(m + 1, m)
    tr = np.einsum("ijab,ijab->ij", X, Y)
    return float(w @ tr @ w)


def block_matrix(H: MatrixKernel) -> np.ndarray:
    """B[2k+a, 2j+b] = H(x_k - x_j)[a, b] on the grid of H."""
    m = H.m
    idx = np.arange(m + 1)
    blocks = H.at_index(np.subtract.outer(idx, idx))
    return blocks.transpose(0, 2, 1, 3).reshape(2 * (m + 1), 2 * (m + 1))


def _check_finite(H: MatrixKernel) -> None:
    if not np.all(np.isfinite(H.entries)):
        raise SolverError("kernel H has non-finite samples")


def certify_positivity(H: MatrixKernel, floor: float = POSITIVITY_FLOOR) -> PositivityCertificate:
    """
    Smallest eigenvalue of I + W^{1/2} B W^{1/2}, the symmetrized discrete
    form of (I + convolution(H)) on L2(0, 1) x C^2.
    """
    _check_finite(H)
    m = H.m
    B = block_matrix(H)
    sw = np.sqrt(np.repeat(trapezoid_weights(m + 1, m), 2))
    A = np.eye(B.shape[0]) + sw[:, None] * B * sw[None, :]
    eps = float(linalg.eigvalsh(0.5 * (A + A.T), subset_by_index=[0, 0])[0])
    return PositivityCertificate(eps=eps, m=m, passed=eps > floor)


def apply_krein_operator(Y: TriangularKernel, H: MatrixKernel) -> TriangularKernel:
    """(I + P+_H) Y = Y + P+(Y H), (Y H)(x, t) = int_0^1 Y(x, s) H(s - t) ds."""
    m = Y.m
    if H.m != m:
        raise ValueError(f"grid mismatch: kernel {H.m} vs triangular {m}")
    w = trapezoid_weights(m + 1, m)
    idx = np.arange(m + 1)
    Hd = H.at_index(np.subtract.outer(idx, idx))  # [k, j] = H(x_k - t_j)
    YH = np.einsum("k,ikab,kjbc->ijac", w, Y.values, Hd)
    return TriangularKernel(Y.values + YH)


def _row_system(B: np.ndarray, i: int, m: int):
    n = 2 * (i + 1)
    w2 = np.repeat(trapezoid_weights(i + 1, m), 2)
    return np.eye(n) + w2[:, None] * B[:n, :n]


def _solve_row(B: np.ndarray, i: int, m: int) -> np.ndarray:
    """Row x_i = i/m of the discrete Krein equation, shape (i+1, 2, 2)."""
    A = _row_system(B, i, m)
    C = B[2 * i:2 * i + 2, :2 * (i + 1)]
    try:
        lu = linalg.lu_factor(A.T, check_finite=False)
    except (linalg.LinAlgError, ValueError) as e:
        raise SolverError(f"Krein row system failed at x = {i / m:.4f}: {e}")
    diag = np.abs(np.diag(lu[0]))
    if np.min(diag) < 1e-14 * np.max(diag):
        cond = np.linalg.cond(A)
        raise SolverError(f"singular Krein row system at x = {i / m:.4f} "
                          f"(condition estimate {cond:.3e})")
    X = linalg.lu_solve(lu, -C.T).T
    return X.reshape(2, i + 1, 2).transpose(1, 0, 2)


def _row_residual(B: np.ndarray, row: np.ndarray, i: int, m: int) -> float:
    n = 2 * (i + 1)
    X = row.transpose(1, 0, 2).reshape(2, n)
    return float(np.max(np.abs(X @ _row_system(B, i, m) + B[2 * i:2 * i + 2, :n])))


def solve_krein(H: MatrixKernel) -> TriangularKernel:
    """
    Nystrom solve of the Krein equation, one dense system per abscissa x_i.

    Writing row i as the block row X = [R(x_i, t_0) ... R(x_i, t_i)], the
    discrete equation is X (I + W B_i) = -C_i with C_i = [H(x_i - t_j)]_j, so
    both rows of the 2x2 unknown share one factorization.

    Raises:
        SolverError: on non-finite input or a singular row system
    """
    _check_finite(H)
    m = H.m
    B = block_matrix(H)
    R = np.zeros((m + 1, m + 1, 2, 2))
    # x_0 = 0: the integral vanishes
    R[0, 0] = -H.at_index(0)
    for i in range(1, m + 1):
        R[i, :i + 1] = _solve_row(B, i, m)
    return TriangularKernel(R)


@dataclass(frozen=True)
class KreinRows:
    """
    R(x_i, tau_k) for x_i = i/m and tau_k = k/(2m), shape (m+1, 2m+1, 2, 2);
    entries with k > 2i are zero.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 4 or values.shape[2:] != (2, 2) or values.shape[1] != 2 * values.shape[0] - 1:
            raise ValueError(f"Krein rows need shape (m+1, 2m+1, 2, 2), got {values.shape}")
        i, k = np.indices(values.shape[:2])
        values[k > 2 * i] = 0.0
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.shape[0] - 1

    def coarse(self) -> TriangularKernel:
        """R on the m grid, tau_k for even k."""
        return TriangularKernel(self.values[:, ::2])


def solve_krein_rows(H_fine: MatrixKernel) -> KreinRows:
    """
    Solve the rows x_i = i/m of the Krein equation on the 2m grid of H_fine.

    Each row then holds R(x_i, .) at every half-step, so R(x, (x +- t)/2)
    for grid points x, t needs no interpolation.
    """
    _check_finite(H_fine)
    fine = H_fine.m
    if fine % 2:
        raise ValueError(f"the fine grid needs an even resolution, got {fine}")
    m = fine // 2
    B = block_matrix(H_fine)
    rows = np.zeros((m + 1, fine + 1, 2, 2))
    rows[0, 0] = -H_fine.at_index(0)
    for i in range(1, m + 1):
        rows[i, :2 * i + 1] = _solve_row(B, 2 * i, fine)
    return KreinRows(rows)


def krein_residual(R: Union[TriangularKernel, KreinRows], H: MatrixKernel) -> float:
    """
    max over t_j <= x_i of |R + H + int_0^x R H| (trapezoid on [0, x_i]).

    Rows from solve_krein_rows are checked on the 2m grid of H.
    """
    stride = 2 if isinstance(R, KreinRows) else 1
    m = R.m
    if H.m != stride * m:
        raise ValueError(f"grid mismatch: kernel {H.m} vs rows {m}")
    B = block_matrix(H)
    worst = float(np.max(np.abs(R.values[0, 0] + H.at_index(0))))
    for i in range(1, m + 1):
        k = stride * i
        worst = max(worst, _row_residual(B, R.values[i, :k + 1], k, H.m))
    return worst


def _to_akns(M: np.ndarray, label: str) -> PotentialAKNS:
    """Project (m+1, 2, 2) samples onto q1 sigma1 + q3 sigma3, warning on the remainder."""
    q1 = 0.5 * (M[:, 0, 1] + M[:, 1, 0])
    q3 = 0.5 * (M[:, 0, 0] - M[:, 1, 1])
    Q = PotentialAKNS(q1, q3)
    off = PotentialAKNS(0.5 * (M[:, 0, 1] - M[:, 1, 0]), 0.5 * (M[:, 0, 0] + M[:, 1, 1]))
    off_norm, q_norm = off.l2_norm(), Q.l2_norm()
    if off_norm > OFF_FORM_THRESHOLD * max(q_norm, 1.0):
        warnings.warn(f"{label}: off-form residual {off_norm:.3e} (||Q|| = {q_norm:.3e})",
                      RuntimeWarning)
    return Q


def off_form_residual(R: TriangularKernel) -> float:
    """L2 norm of the part of R(x, 0) sigma1 outside span{sigma1, sigma3}."""
    M = R.values[:, 0] @ SIGMA1
    return PotentialAKNS(0.5 * (M[:, 0, 1] - M[:, 1, 0]), 0.5 * (M[:, 0, 0] + M[:, 1, 1])).l2_norm()


def reconstruct_Q(R: TriangularKernel) -> PotentialAKNS:
    """Q(x) = R(x, 0) sigma1 read in AKNS form."""
    return _to_akns(R.values[:, 0] @ SIGMA1, "reconstruct_Q")


def reconstruct_Q_from_diagonal(R: TriangularKernel) -> PotentialAKNS:
    """
    Q(x) = K(x, x) B - B K(x, x) with K(x, x) = 1/2 [R(x, x) - R(x, 0) sigma3].

    Only meaningful for continuous potentials; used as a consistency check.
    """
    i = np.arange(R.m + 1)
    Kd = 0.5 * (R.values[i, i] - R.values[:, 0] @ SIGMA3)
    return _to_akns(Kd @ B_MATRIX - B_MATRIX @ Kd, "reconstruct_Q_from_diagonal")


def _interp_row(row: np.ndarray, t_index: np.ndarray) -> np.ndarray:
    lo = np.floor(t_index).astype(int)
    hi = np.minimum(lo + 1, row.shape[0] - 1)
    frac = (t_index - lo)[:, None, None]
    return (1.0 - frac) * row[lo] + frac * row[hi]


def K_from_R(R: Union[TriangularKernel, KreinRows]) -> TriangularKernel:
    """
    K(x, t) = 1/2 [R(x, (x+t)/2) - R(x, (x-t)/2) sigma3] on the m grid.

    Rows from solve_krein_rows carry the half-steps as nodes. A plain
    triangular kernel is interpolated linearly in t between samples.
    """
    m = R.m
    K = np.zeros((m + 1, m + 1, 2, 2))
    for i in range(m + 1):
        j = np.arange(i + 1)
        if isinstance(R, KreinRows):
            plus, minus = R.values[i, i + j], R.values[i, i - j]
        else:
            row = R.values[i, :i + 1]
            plus = _interp_row(row, 0.5 * (i + j))
            minus = _interp_row(row, 0.5 * (i - j))
        K[i, :i + 1] = 0.5 * (plus - minus @ SIGMA3)
    return TriangularKernel(K)


def glm_residual(K: TriangularKernel, F: np.ndarray) -> float:
    """max over t_j <= x_i of |K(x, t) + F(x, t) + int_0^x K(x, s) F(s, t) ds|."""
    m = K.m
    F = np.asarray(F)
    if F.shape != K.values.shape:
        raise ValueError(f"grid mismatch: K {K.values.shape} vs F {F.shape}")
    worst = 0.0
    for i in range(m + 1):
        w = trapezoid_weights(i + 1, m)
        integral = np.einsum("k,kab,kjbc->jac", w, K.values[i, :i + 1], F[:i + 1, :i + 1])
        res = K.values[i, :i + 1] + F[i, :i + 1] + integral
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def riesz_lower_bound(lambdas: np.ndarray) -> float:
    """
    Smallest eigenvalue of the Gram matrix of {e^{2 i lambda_n s}} in L2(0, 1),
    G[n, k] = int_0^1 e^{2 i (lambda_n - lambda_k) s} ds.
    """
    lam = np.asarray(lambdas, dtype=float)
    omega = 2.0 * np.subtract.outer(lam, lam)
    small = np.abs(omega) < 1e-12
    safe = np.where(small, 1.0, omega)
    G = np.where(small, 1.0, (np.exp(1j * safe) - 1.0) / (1j * safe))
    return float(linalg.eigvalsh(0.5 * (G + G.conj().T), subset_by_index=[0, 0])[0])


def row_increments(R: TriangularKernel) -> np.ndarray:
    """L2 norms over x of R(., t_{j+1}) - R(., t_j), j = 0..m-1."""
    diff = np.diff(R.values, axis=1)
    sq = np.sum(diff ** 2, axis=(-2, -1))
    return np.sqrt(trapezoid(sq, R.x, axis=0))


def require_positive(cert: PositivityCertificate) -> None:
    if not cert.passed:
        raise PositivityError(f"I + H is not positive on the m = {cert.m} grid "
                              f"(smallest eigenvalue {cert.eps:.3e})")


def dump_triangular_csv(R: TriangularKernel, path: str) -> None:
    m = R.m
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "t", "r11", "r12", "r21", "r22"])
        for i in range(m + 1):
            for j in range(i + 1):
                v = R.values[i, j]
                writer.writerow([repr(i / m), repr(j / m)] + [repr(float(a)) for a in v.ravel()])
