#!/usr/bin/env python3
"""
Spectral Data Types

Domain types for the inverse spectral problem of Dirac operators in AKNS
normal form on [0, 1]: two interlacing spectra, eigenvalues with norming
constants, admissibility checks for the sets N(h, r), L(h, r) and
A(h', r'), the unital Banach algebra of sequences used for norming
constants, and the grid potential Q = q1*sigma1 + q3*sigma3.

All sequences are stored on the window n = -N..N. Beyond the window the
data follow the zero-remainder tail: lambda_n = pi*n, mu_n = pi*(n + 1/2)
and alpha_n = 1.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid


SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA2 = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]])
# J = i*sigma2, the real rotation generator
J_MATRIX = np.array([[0.0, 1.0], [-1.0, 0.0]])

TAIL_ZERO_REMAINDER = "zero_remainder"
DEFAULT_GRID = 256


class SpectralError(Exception):
    """Base class for failures of the reconstruction pipeline."""

    exit_code = 1


class AdmissibilityError(SpectralError):
    """Spectral data outside the admissible class."""

    exit_code = 2

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class PositivityError(SpectralError):
    """I + H is not (numerically) positive definite."""

    exit_code = 3


class SolverError(SpectralError):
    """A numerical solver failed to converge or met a singular system."""

    exit_code = 4

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class DataIOError(SpectralError):
    """Unreadable or malformed input/output file."""

    exit_code = 5


class NonInvertibleError(ValueError):
    """Banach-algebra element without an inverse."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


def is_power_of_two(m: int) -> bool:
    return isinstance(m, (int, np.integer)) and m > 0 and (m & (m - 1)) == 0


def mode_indices(N: int) -> np.ndarray:
    """Indices n = -N..N of the stored window."""
    return np.arange(-N, N + 1)


def _as_window(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size % 2 != 1:
        raise ValueError(f"{name} must have odd length 2N+1, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class AdmissibilityParams:
    """
    Parameters of the admissible sets N(h, r), L(h, r) and A(h', r').

    Args:
        h: separation gap (radians)
        r: l2 budget of the eigenvalue remainders
        h_prime: lower floor for the norming constants
        r_prime: l2 budget of beta_n = alpha_n - 1
    """

    h: float = 0.5
    r: float = 1.0
    h_prime: float = 0.05
    r_prime: float = 10.0

    def __post_init__(self):
        for name in ("h", "r", "h_prime", "r_prime"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues of D1 (lam) and D2 (mu) on the window n = -N..N."""

    lam: np.ndarray
    mu: np.ndarray
    tail_policy: str = TAIL_ZERO_REMAINDER

    def __post_init__(self):
        lam = _as_window(self.lam, "lambda")
        mu = _as_window(self.mu, "mu")
        if lam.shape != mu.shape:
            raise ValueError(f"lambda and mu lengths differ: {lam.size} vs {mu.size}")
        if self.tail_policy != TAIL_ZERO_REMAINDER:
            raise ValueError(f"Unsupported tail policy: {self.tail_policy}")
        lam.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @property
    def N(self) -> int:
        return (self.lam.size - 1) // 2

    @property
    def n(self) -> np.ndarray:
        return mode_indices(self.N)

    @classmethod
    def unperturbed(cls, N: int) -> "SpectralData":
        n = mode_indices(N)
        return cls(np.pi * n, np.pi * (n + 0.5))

    @classmethod
    def from_remainders(cls, rho: np.ndarray) -> "SpectralData":
        """Inverse of remainders(): rho interleaved as (rho_2n, rho_2n+1)."""
        rho = np.asarray(rho, dtype=float)
        N = (rho.size // 2 - 1) // 2
        n = mode_indices(N)
        return cls(np.pi * n + rho[0::2], np.pi * (n + 0.5) + rho[1::2])


@dataclass(frozen=True)
class NormingData:
    """Eigenvalues of D1 with their norming constants on n = -N..N."""

    lam: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        lam = _as_window(self.lam, "lambda")
        alpha = _as_window(self.alpha, "alpha")
        if lam.shape != alpha.shape:
            raise ValueError(f"lambda and alpha lengths differ: {lam.size} vs {alpha.size}")
        lam.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "alpha", alpha)

    @property
    def N(self) -> int:
        return (self.lam.size - 1) // 2

    @property
    def n(self) -> np.ndarray:
        return mode_indices(self.N)

    @property
    def beta(self) -> np.ndarray:
        return self.alpha - 1.0

    @property
    def rho_even(self) -> np.ndarray:
        """Remainders rho_2n = lambda_n - pi*n."""
        return self.lam - np.pi * self.n

    @classmethod
    def unperturbed(cls, N: int) -> "NormingData":
        n = mode_indices(N)
        return cls(np.pi * n, np.ones(2 * N + 1))


@dataclass(frozen=True)
class MembershipReport:
    """
    Outcome of an admissibility check.

    min_gap is the smallest separation found, l2_norm the measured l2 norm
    (of rho for spectra, of beta for norming constants). min_alpha is only
    set for norming data.
    """

    is_member: bool
    min_gap: float
    l2_norm: float
    message: str = ""
    violation_index: Optional[int] = None
    min_alpha: Optional[float] = None


def remainders(data: SpectralData) -> np.ndarray:
    """
    Interleave the remainders rho_2n = lambda_n - pi*n and
    rho_2n+1 = mu_n - pi*(n + 1/2).

    Returns:
        Array of length 2(2N+1) ordered (rho_2n, rho_2n+1) for n = -N..N
    """
    n = data.n
    rho = np.empty(2 * n.size)
    rho[0::2] = data.lam - np.pi * n
    rho[1::2] = data.mu - np.pi * (n + 0.5)
    return rho


def _first_violation(diffs: np.ndarray) -> Optional[int]:
    bad = np.flatnonzero(~(diffs > 0))
    return int(bad[0]) if bad.size else None


def validate_spectral(data: SpectralData, params: AdmissibilityParams) -> MembershipReport:
    """
    Check membership of two spectra in N(h, r).

    The separation is measured on lambda_n < mu_n < lambda_{n+1} over the
    window and against the first tail points pi*(N+1) and pi*(-N - 1/2).

    Args:
        data: two spectra
        params: admissibility parameters (h and r are used)

    Returns:
        MembershipReport with the minimal gap and the l2 norm of rho
    """
    N = data.N
    rho_norm = float(np.linalg.norm(remainders(data)))

    violation = _first_violation(np.diff(data.lam))
    if violation is not None:
        return MembershipReport(False, float(np.min(np.diff(data.lam))), rho_norm,
                                f"lambda is not strictly increasing at n = {violation + 1 - N}",
                                violation + 1 - N)

    # lambda_n < mu_n < lambda_{n+1}, with the zero-remainder neighbours
    # pi*(N+1) and pi*(-N-1/2) closing the window
    lam_ext = np.append(data.lam, np.pi * (N + 1))
    mu_ext = np.insert(data.mu, 0, np.pi * (-N - 0.5))
    gaps_up = data.mu - lam_ext[:-1]
    gaps_down = lam_ext[1:] - data.mu
    gaps_left = data.lam[0] - mu_ext[0]

    for gaps, label in ((gaps_up, "mu_n > lambda_n"), (gaps_down, "lambda_{n+1} > mu_n")):
        violation = _first_violation(gaps)
        if violation is not None:
            return MembershipReport(False, float(np.min(gaps)), rho_norm,
                                    f"interlacing violated ({label}) at n = {violation - N}",
                                    violation - N)
    if not gaps_left > 0:
        return MembershipReport(False, float(gaps_left), rho_norm,
                                f"interlacing violated against the tail at n = {-N}", -N)

    min_gap = float(min(gaps_up.min(), gaps_down.min(), gaps_left))
    if min_gap < params.h:
        return MembershipReport(False, min_gap, rho_norm,
                                f"spectra are only {min_gap:.6g}-separated (h = {params.h})")
    if rho_norm > params.r * (1.0 + 1e-12):
        return MembershipReport(False, min_gap, rho_norm,
                                f"remainder norm {rho_norm:.6g} exceeds r = {params.r}")
    return MembershipReport(True, min_gap, rho_norm)


def norming_floor_check(data: NormingData, params: AdmissibilityParams) -> MembershipReport:
    """
    Check membership of (lambda, alpha) in L(h, r) x A(h', r').

    Indices run over Z (the window plus the unit tail).
    """
    N = data.N
    beta_norm = float(np.linalg.norm(data.beta))
    rho_norm = float(np.linalg.norm(data.rho_even))
    min_alpha = float(np.min(data.alpha))

    violation = _first_violation(data.alpha)
    if violation is not None:
        return MembershipReport(False, float("nan"), beta_norm,
                                f"norming constant floor violated: alpha = {data.alpha[violation]:.6g} "
                                f"at n = {violation - N}", violation - N, min_alpha)

    lam_ext = np.concatenate(([np.pi * (-N - 1)], data.lam, [np.pi * (N + 1)]))
    gaps = np.diff(lam_ext)
    violation = _first_violation(gaps)
    if violation is not None:
        return MembershipReport(False, float(gaps.min()), beta_norm,
                                f"lambda is not strictly increasing at n = {violation - N}",
                                violation - N, min_alpha)
    min_gap = float(gaps.min())

    if min_gap < params.h:
        return MembershipReport(False, min_gap, beta_norm,
                                f"eigenvalues are only {min_gap:.6g}-separated (h = {params.h})",
                                min_alpha=min_alpha)
    if rho_norm > params.r * (1.0 + 1e-12):
        return MembershipReport(False, min_gap, beta_norm,
                                f"remainder norm {rho_norm:.6g} exceeds r = {params.r}",
                                min_alpha=min_alpha)
    if min_alpha < params.h_prime:
        return MembershipReport(False, min_gap, beta_norm,
                                f"min alpha {min_alpha:.6g} below floor h' = {params.h_prime}",
                                int(np.argmin(data.alpha)) - N, min_alpha)
    if beta_norm > params.r_prime * (1.0 + 1e-12):
        return MembershipReport(False, min_gap, beta_norm,
                                f"beta norm {beta_norm:.6g} exceeds r' = {params.r_prime}",
                                min_alpha=min_alpha)
    return MembershipReport(True, min_gap, beta_norm, min_alpha=min_alpha)


# Banach algebra A = C*1 + l2 with pointwise product


@dataclass(frozen=True)
class AlgebraElement:
    """Element a*1 + x of the unital algebra A, norm |a| + ||x||."""

    a: complex
    x: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=complex))

    def __post_init__(self):
        x = np.asarray(self.x, dtype=complex)
        x.setflags(write=False)
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "x", x)

    @property
    def values(self) -> np.ndarray:
        """The stored window of the sequence a + x_n."""
        return self.a + self.x


def algebra_norm(e: AlgebraElement) -> float:
    return abs(e.a) + float(np.linalg.norm(e.x))


def algebra_multiply(e1: AlgebraElement, e2: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(e1.a * e2.a, e1.a * e2.x + e2.a * e1.x + e1.x * e2.x)


def algebra_subtract(e1: AlgebraElement, e2: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(e1.a - e2.a, e1.x - e2.x)


def algebra_invert(e: AlgebraElement) -> AlgebraElement:
    """
    Invert a*1 + x in A.

    The inverse is a^{-1}*1 + y with y_n = -x_n / (a (a + x_n)).

    Raises:
        NonInvertibleError: if a = 0 or some a + x_n = 0
    """
    if e.a == 0:
        raise NonInvertibleError("scalar part is zero")
    denom = e.a + e.x
    zero = np.flatnonzero(denom == 0)
    if zero.size:
        raise NonInvertibleError(f"a + x_n vanishes at index {zero[0]}", int(zero[0]))
    return AlgebraElement(1.0 / e.a, -e.x / (e.a * denom))


def inverse_norm_bound(e: AlgebraElement) -> float:
    """Upper bound |a|^{-1} (1 + ||x|| / inf|a + x_n|) on the norm of the inverse."""
    inf_denom = float(np.min(np.abs(e.a + e.x))) if e.x.size else abs(e.a)
    inf_denom = min(inf_denom, abs(e.a))
    return (1.0 + float(np.linalg.norm(e.x)) / inf_denom) / abs(e.a)


def in_invertible_set(e: AlgebraElement, eps: float) -> bool:
    """Membership in S_eps: |a| >= eps and inf |a + x_n| >= eps."""
    if abs(e.a) < eps:
        return False
    return not e.x.size or float(np.min(np.abs(e.a + e.x))) >= eps


def sample_invertible_pairs(rng: np.random.Generator, count: int, size: int, eps: float,
                            cap: int = 200) -> List[Tuple[AlgebraElement, AlgebraElement]]:
    """
    Random pairs in S_eps. The first element has a in [2 eps, 2] with a random
    sign and decaying Gaussian x; the second is a Gaussian perturbation of it
    of size 10^u, u uniform in [-3, -1].

    Raises:
        NonInvertibleError: if a draw stays outside S_eps for `cap` attempts
    """
    decay = 1.0 / (1.0 + np.abs(np.arange(size) - size // 2))

    def draw(make):
        for _ in range(cap):
            e = make()
            if in_invertible_set(e, eps):
                return e
        raise NonInvertibleError(f"no element of S_{eps:g} after {cap} draws")

    def first():
        a = rng.choice([-1.0, 1.0]) * rng.uniform(2.0 * eps, 2.0)
        return AlgebraElement(a, rng.standard_normal(size) * decay)

    pairs = []
    for _ in range(count):
        e1 = draw(first)
        size_log = rng.uniform(-3.0, -1.0)

        def second():
            step = rng.standard_normal(size + 1)
            step *= 10.0 ** size_log / np.linalg.norm(step)
            return AlgebraElement(e1.a + step[0], e1.x + step[1:])

        pairs.append((e1, draw(second)))
    return pairs


def algebra_lipschitz(pairs: Sequence[Tuple[AlgebraElement, AlgebraElement]], eps: float) -> float:
    """
    Largest ||e1^{-1} - e2^{-1}|| / ||e1 - e2|| over pairs in S_eps.

    Raises:
        ValueError: if an element lies outside S_eps
    """
    worst = 0.0
    for e1, e2 in pairs:
        if not (in_invertible_set(e1, eps) and in_invertible_set(e2, eps)):
            raise ValueError(f"pair outside S_{eps:g}")
        gap = algebra_norm(algebra_subtract(e1, e2))
        if gap == 0:
            continue
        diff = algebra_norm(algebra_subtract(algebra_invert(e1), algebra_invert(e2)))
        worst = max(worst, diff / gap)
    return worst


def norming_to_algebra(data: NormingData) -> AlgebraElement:
    return AlgebraElement(1.0, data.beta)


def norming_inverse_range(params: AdmissibilityParams) -> Tuple[float, float]:
    """(h'', r'') with alpha^{-1} in A(h'', r'') whenever alpha in A(h', r')."""
    return 1.0 / (1.0 + params.r_prime), params.r_prime / params.h_prime


# Potentials


@dataclass(frozen=True)
class PotentialAKNS:
    """Real pair (q1, q3) sampled at x_i = i/m, i = 0..m."""

    q1: np.ndarray
    q3: np.ndarray

    def __post_init__(self):
        q1 = np.asarray(self.q1)
        q3 = np.asarray(self.q3)
        if np.iscomplexobj(q1) or np.iscomplexobj(q3):
            raise ValueError("AKNS potentials must be real-valued")
        q1 = q1.astype(float)
        q3 = q3.astype(float)
        if q1.shape != q3.shape or q1.ndim != 1 or q1.size < 2:
            raise ValueError(f"q1 and q3 must be matching 1-D grids, got {q1.shape} and {q3.shape}")
        q1.setflags(write=False)
        q3.setflags(write=False)
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "q3", q3)

    @property
    def m(self) -> int:
        return self.q1.size - 1

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m + 1)

    @classmethod
    def zero(cls, m: int = DEFAULT_GRID) -> "PotentialAKNS":
        return cls(np.zeros(m + 1), np.zeros(m + 1))

    @classmethod
    def from_functions(cls, q1, q3, m: int = DEFAULT_GRID) -> "PotentialAKNS":
        x = np.linspace(0.0, 1.0, m + 1)
        return cls(np.broadcast_to(q1(x), x.shape).copy(), np.broadcast_to(q3(x), x.shape).copy())

    def matrix(self) -> np.ndarray:
        """Samples of Q(x) as an (m+1, 2, 2) array."""
        return (self.q1[:, None, None] * SIGMA1 + self.q3[:, None, None] * SIGMA3)

    def l2_norm(self) -> float:
        """L2 norm of Q (Frobenius entries), trapezoid rule."""
        return float(np.sqrt(trapezoid(2.0 * (self.q1 ** 2 + self.q3 ** 2), self.x)))

    def __sub__(self, other: "PotentialAKNS") -> "PotentialAKNS":
        return PotentialAKNS(self.q1 - other.q1, self.q3 - other.q3)


def relative_error(estimate: PotentialAKNS, reference: PotentialAKNS) -> float:
    """||estimate - reference|| / ||reference||, or the absolute error for Q = 0."""
    if estimate.m != reference.m:
        raise ValueError(f"grid mismatch: {estimate.m} vs {reference.m}")
    ref = reference.l2_norm()
    err = (estimate - reference).l2_norm()
    return err / ref if ref > 0 else err


# File formats


def _read_json(path: str) -> dict:
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise DataIOError(f"Malformed JSON in {path} at line {e.lineno}: {e.msg}")
    except OSError as e:
        raise DataIOError(f"Cannot read {path}: {e}")


def _window_from_json(payload: dict, key: str, path: str) -> np.ndarray:
    if key not in payload:
        raise DataIOError(f"Missing key '{key}' in {path}")
    try:
        values = np.asarray(payload[key], dtype=float)
    except (TypeError, ValueError):
        raise DataIOError(f"Key '{key}' in {path} is not a list of numbers")
    N = payload.get("N")
    if N is not None and values.size != 2 * int(N) + 1:
        raise DataIOError(f"Key '{key}' in {path} has {values.size} entries, expected 2N+1 = {2 * int(N) + 1}")
    return values


def load_spectral_json(path: str) -> SpectralData:
    payload = _read_json(path)
    try:
        return SpectralData(_window_from_json(payload, "lambda", path),
                            _window_from_json(payload, "mu", path))
    except ValueError as e:
        raise DataIOError(f"Invalid spectral data in {path}: {e}")


def save_spectral_json(data: SpectralData, path: str) -> None:
    payload = {"N": data.N, "lambda": data.lam.tolist(), "mu": data.mu.tolist()}
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)


def load_norming_json(path: str) -> NormingData:
    payload = _read_json(path)
    try:
        return NormingData(_window_from_json(payload, "lambda", path),
                           _window_from_json(payload, "alpha", path))
    except ValueError as e:
        raise DataIOError(f"Invalid norming data in {path}: {e}")


def save_norming_json(data: NormingData, path: str) -> None:
    payload = {"N": data.N, "lambda": data.lam.tolist(), "alpha": data.alpha.tolist()}
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)


def load_potential_csv(path: str) -> PotentialAKNS:
    """
    Read a potential from CSV with header x,q1,q3 on a uniform grid.

    Raises:
        DataIOError: naming the offending line for malformed rows
    """
    try:
        with open(path, "r", newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise DataIOError(f"Cannot read {path}: {e}")

    if not rows or [c.strip() for c in rows[0]] != ["x", "q1", "q3"]:
        raise DataIOError(f"{path}: line 1: expected header 'x,q1,q3'")

    xs, q1, q3 = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(c.strip() == "" for c in row):
            continue
        if len(row) != 3:
            raise DataIOError(f"{path}: line {lineno}: expected 3 columns, got {len(row)}")
        try:
            values = [float(c) for c in row]
        except ValueError:
            raise DataIOError(f"{path}: line {lineno}: non-numeric value in {row}")
        if not all(math.isfinite(v) for v in values):
            raise DataIOError(f"{path}: line {lineno}: non-finite value in {row}")
        xs.append(values[0])
        q1.append(values[1])
        q3.append(values[2])

    m = len(xs) - 1
    if m < 1 or not is_power_of_two(m):
        raise DataIOError(f"{path}: expected m+1 rows with m a power of two, got {len(xs)} rows")
    if not np.allclose(xs, np.linspace(0.0, 1.0, m + 1), atol=1e-9):
        raise DataIOError(f"{path}: x column is not the uniform grid on [0, 1]")
    return PotentialAKNS(np.array(q1), np.array(q3))


def save_potential_csv(potential: PotentialAKNS, path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "q1", "q3"])
        for x, a, b in zip(potential.x, potential.q1, potential.q3):
            writer.writerow([repr(float(x)), repr(float(a)), repr(float(b))])


def output_path(out_dir: str, name: str) -> str:
    return str(Path(out_dir) / name)
