#!/usr/bin/env python3
"""
Inverse Spectral Reconstruction Script

Recovers the potential Q = q1*sigma1 + q3*sigma3 of a Dirac operator in AKNS
form on [0, 1] from two spectra, or from eigenvalues and norming constants,
by solving the Krein equation. Also runs the forward problem, round-trip
checks over a built-in family of potentials and an empirical Lipschitz stability check.

Usage:
    python invert_spectra.py forward potential.csv
    python invert_spectra.py invert-two-spectra potential_spectra.json --grid 256 --nmodes 32
    python invert_spectra.py invert-norming potential_norming.json --out results/
    python invert_spectra.py stability --seed 7
    python invert_spectra.py roundtrip --config run.cfg

Exit codes:
    0 success, 1 usage or configuration error, 2 admissibility failure,
    3 positivity failure, 4 solver failure, 5 I/O error
"""

import argparse
import csv
import json
import multiprocessing as mp
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from char_functions import (GammaDelta, dump_norming_csv, gamma_delta_via_fourier,
                            gamma_delta_via_products)
from forward_solver import D1, D2, eigenvalues, norming_direct
from fourier_series import (MatrixKernel, ScalarKernel, build_F, build_H, build_h, dump_kernel_csv,
                            dump_matrix_kernel_csv)
from krein_solver import (K_from_R, KreinRows, TriangularKernel, certify_positivity,
                          dump_triangular_csv, glm_residual, krein_residual, off_form_residual,
                          reconstruct_Q, require_positive, solve_krein_rows)
from spectral_data import (AdmissibilityError, AdmissibilityParams, DataIOError, NormingData,
                           PotentialAKNS, SolverError, SpectralData, SpectralError,
                           algebra_lipschitz, is_power_of_two, load_norming_json,
                           load_potential_csv, load_spectral_json, norming_floor_check,
                           output_path, relative_error, remainders, sample_invertible_pairs,
                           save_norming_json, save_potential_csv, save_spectral_json,
                           validate_spectral)

STABILITY_SCALES = (1e-1, 1e-2, 1e-3)
SAMPLING_CAP = 200
ALGEBRA_PAIRS = 100
ALGEBRA_EPS = 0.1
ROUNDTRIP_NORMS = (0.25, 0.5, 1.0)
# remainders of the norm-1 members sit close to the default budget r = 1
ROUNDTRIP_BUDGET = 2.0


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by all commands; CLI flags override the config file."""

    m: int = 256
    N: int = 32
    tol: float = 1e-10
    seed: int = 0
    h: float = 0.5
    r: float = 1.0
    h_prime: float = 0.05
    r_prime: float = 10.0
    out: str = "."
    samples: int = 34  # pairs per scale; three scales give 102
    workers: int = 0  # 0 means one per CPU

    @property
    def params(self) -> AdmissibilityParams:
        return AdmissibilityParams(self.h, self.r, self.h_prime, self.r_prime)

    def validate(self) -> Tuple[bool, str]:
        """
        Check the grid, truncation and tolerances.

        Returns:
            Tuple of (is_valid, error_message)
        """
        if not is_power_of_two(self.m):
            return False, f"Grid resolution must be a power of two, got: {self.m}"
        if self.N < 0:
            return False, f"Number of modes must be non-negative, got: {self.N}"
        if 2 * self.N + 1 > self.m // 2:
            return False, f"2N+1 = {2 * self.N + 1} exceeds m/2 = {self.m // 2}"
        if not self.tol > 0:
            return False, f"Tolerance must be positive, got: {self.tol}"
        if self.samples < 1:
            return False, f"Stability samples must be at least 1, got: {self.samples}"
        if self.workers < 0:
            return False, f"Workers must be non-negative, got: {self.workers}"
        try:
            self.params
        except ValueError as e:
            return False, str(e)
        return True, ""


_CONFIG_TYPES = {f.name: f.type for f in fields(RunConfig)}
_CASTS = {"int": int, "float": float, "str": str}


def parse_config_file(path: str) -> Dict[str, object]:
    """
    Parse a flat key=value file. '#' starts a comment, blank lines are skipped.

    Raises:
        DataIOError: on unreadable files, unknown keys or bad values (with line number)
    """
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as e:
        raise DataIOError(f"cannot read config {path}: {e}")

    values: Dict[str, object] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataIOError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_TYPES:
            raise DataIOError(f"{path}:{lineno}: unknown key {key!r}")
        cast = _CASTS[getattr(_CONFIG_TYPES[key], "__name__", str(_CONFIG_TYPES[key]))]
        try:
            values[key] = cast(value)
        except ValueError:
            raise DataIOError(f"{path}:{lineno}: invalid value for {key}: {value!r}")
    return values


def load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        config = replace(config, **parse_config_file(args.config))
    overrides = {"m": args.grid, "N": args.nmodes, "tol": args.tol, "seed": args.seed, "out": args.out,
                 "workers": args.workers}
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})


def validate_input_file(file_path: str, suffixes: Tuple[str, ...]) -> Tuple[bool, str]:
    """
    Validate that input file exists, is readable and has an expected suffix.

    Args:
        file_path: Path to input file
        suffixes: Accepted lowercase suffixes

    Returns:
        Tuple of (is_valid, error_message)
    """
    if file_path is None or file_path.strip() == "":
        return False, "Input file path is empty"

    path = Path(file_path)

    if not path.exists():
        return False, f"Input file does not exist: {file_path}"

    if not path.is_file():
        return False, f"Path is not a file: {file_path}"

    if not os.access(file_path, os.R_OK):
        return False, f"Input file is not readable: {file_path}"

    if path.suffix.lower() not in suffixes:
        return False, f"Expected a {' or '.join(suffixes)} file: {file_path}"

    return True, ""


def _require_file(file_path: str, suffixes: Tuple[str, ...]) -> None:
    is_valid, error_msg = validate_input_file(file_path, suffixes)
    if not is_valid:
        raise DataIOError(error_msg)


def _prepare_out(out_dir: str) -> None:
    try:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"cannot create output directory {out_dir}: {e}")


def _write_json(payload: dict, path: str) -> None:
    try:
        with open(path, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
    except OSError as e:
        raise DataIOError(f"cannot write {path}: {e}")


def _run_tasks(task: Callable, jobs: List[tuple], workers: int) -> list:
    """Apply `task` to each job tuple; results come back in job order."""
    if workers == 1 or len(jobs) <= 1:
        return [task(*job) for job in jobs]
    with mp.Pool(processes=workers or None) as pool:
        return pool.starmap(task, jobs)


# Pipelines


@dataclass
class InversionArtifacts:
    """Intermediate kernels of one inversion, written out by --dump."""

    h: ScalarKernel
    H: MatrixKernel
    rows: KreinRows
    spectra: Optional[SpectralData] = None
    gamma_delta: Optional[GammaDelta] = None


@dataclass
class InversionResult:
    potential: PotentialAKNS
    kernel: TriangularKernel
    diagnostics: Dict[str, object] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    artifacts: Optional[InversionArtifacts] = None


def invert_norming_data(data: NormingData, config: RunConfig) -> InversionResult:
    """
    (lambda, alpha) -> h -> H -> positivity -> Krein solve -> Q on the m grid.

    H is built on the 2m grid and the rows x_i = i/m are solved there, so
    the GLM kernel K comes out on nodes and F is available for the
    consistency diagnostic.
    """
    if 2 * data.N + 1 > config.m // 2:
        raise AdmissibilityError(f"spectral window 2N+1 = {2 * data.N + 1} does not fit grid m = {config.m}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        h = build_h(data, 2 * config.m)
        H_fine = build_H(h)
        cert = certify_positivity(H_fine)
        require_positive(cert)
        rows = solve_krein_rows(H_fine)
        R = rows.coarse()
        Q = reconstruct_Q(R)
        diagnostics = {
            "m": config.m,
            "N": data.N,
            "eps": cert.eps,
            "krein_residual": krein_residual(rows, H_fine),
            "glm_residual": glm_residual(K_from_R(rows), build_F(H_fine)),
            "off_form_residual": off_form_residual(R),
            "potential_l2_norm": Q.l2_norm(),
        }
    return InversionResult(Q, R, diagnostics, [str(w.message) for w in caught],
                           InversionArtifacts(h, H_fine, rows))


def invert_two_spectra_data(data: SpectralData, config: RunConfig) -> InversionResult:
    """
    Two spectra -> norming constants (product route with fitted tails) -> invert_norming_data.

    route_gap compares the bare products with the Fourier route, which
    both assume unperturbed zeros beyond the window.
    """
    report = validate_spectral(data, config.params)
    if not report.is_member:
        raise AdmissibilityError(report.message, report.violation_index)
    try:
        bare = gamma_delta_via_products(data)
        gd = gamma_delta_via_products(data, tail=True)
    except ValueError as e:
        raise AdmissibilityError(str(e))
    norming = NormingData(data.lam, gd.alpha)
    notes = []
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fourier = gamma_delta_via_fourier(data, config.tol)
        route_gap: Optional[float] = float(np.max(np.abs(fourier.alpha - bare.alpha)))
    except (SolverError, AdmissibilityError) as e:
        route_gap = None
        notes.append(f"Fourier route unavailable: {e}")
    result = invert_norming_data(norming, config)
    result.diagnostics["route_gap"] = route_gap
    result.artifacts = replace(result.artifacts, spectra=data, gamma_delta=gd)
    result.diagnostics["tail_correction"] = float(np.max(np.abs(gd.alpha - bare.alpha)))
    result.diagnostics["alpha_l2_deviation"] = float(np.linalg.norm(norming.beta))
    result.warnings.extend(notes)
    return result


def forward_data(Q: PotentialAKNS, N: int) -> Tuple[SpectralData, NormingData]:
    lam = eigenvalues(Q, D1, N)
    mu = eigenvalues(Q, D2, N)
    return SpectralData(lam, mu), NormingData(lam, norming_direct(Q, lam))


def _report_warnings(messages: List[str]) -> None:
    for message in messages:
        print(f"Warning: {message}")


# Commands


def cmd_forward(config: RunConfig, potential_file: str) -> Tuple[str, str]:
    """
    Compute two spectra and norming constants of a potential CSV.

    Returns:
        Tuple of (spectra_path, norming_path)
    """
    _require_file(potential_file, (".csv",))
    print(f"Loading potential: {potential_file}")
    Q = load_potential_csv(potential_file)
    print(f"Computing {2 * config.N + 1} eigenvalues of D1 and D2 on m={Q.m} grid")
    spectra, norming = forward_data(Q, config.N)

    _prepare_out(config.out)
    stem = Path(potential_file).stem
    spectra_path = output_path(config.out, f"{stem}_spectra.json")
    norming_path = output_path(config.out, f"{stem}_norming.json")
    save_spectral_json(spectra, spectra_path)
    save_norming_json(norming, norming_path)
    return spectra_path, norming_path


def _dump_artifacts(artifacts: InversionArtifacts, config: RunConfig, stem: str) -> List[str]:
    """Write h, H (2m grid), R and, for two spectra, gamma/delta/alpha as CSV."""
    jobs = [("h", dump_kernel_csv, artifacts.h),
            ("H", dump_matrix_kernel_csv, artifacts.H),
            ("R", dump_triangular_csv, artifacts.rows.coarse())]
    if artifacts.gamma_delta is not None:
        jobs.append(("gamma_delta", lambda gd, path: dump_norming_csv(artifacts.spectra, gd, path),
                     artifacts.gamma_delta))
    paths = []
    for name, dump, item in jobs:
        path = output_path(config.out, f"{stem}_{name}.csv")
        try:
            dump(item, path)
        except OSError as e:
            raise DataIOError(f"cannot write {path}: {e}")
        paths.append(path)
    return paths


def _write_inversion(result: InversionResult, config: RunConfig, stem: str,
                     dump: bool = False) -> Tuple[str, str]:
    _prepare_out(config.out)
    potential_path = output_path(config.out, f"{stem}_potential.csv")
    diagnostics_path = output_path(config.out, f"{stem}_diagnostics.json")
    try:
        save_potential_csv(result.potential, potential_path)
    except OSError as e:
        raise DataIOError(f"cannot write {potential_path}: {e}")
    _write_json(dict(result.diagnostics, warnings=result.warnings), diagnostics_path)
    if dump and result.artifacts is not None:
        for path in _dump_artifacts(result.artifacts, config, stem):
            print(f"Dumped: {path}")
    return potential_path, diagnostics_path


def cmd_invert_two_spectra(config: RunConfig, spectra_file: str, dump: bool = False) -> Tuple[str, str]:
    """
    Reconstruct Q from two spectra.

    Returns:
        Tuple of (potential_path, diagnostics_path)
    """
    _require_file(spectra_file, (".json",))
    print(f"Loading spectra: {spectra_file}")
    data = load_spectral_json(spectra_file)
    print(f"Solving Krein equation on m={config.m} grid (N={data.N})")
    result = invert_two_spectra_data(data, config)
    _report_warnings(result.warnings)
    return _write_inversion(result, config, Path(spectra_file).stem, dump)


def cmd_invert_norming(config: RunConfig, norming_file: str, dump: bool = False) -> Tuple[str, str]:
    """
    Reconstruct Q from eigenvalues and norming constants.

    Returns:
        Tuple of (potential_path, diagnostics_path)
    """
    _require_file(norming_file, (".json",))
    print(f"Loading norming data: {norming_file}")
    data = load_norming_json(norming_file)
    report = norming_floor_check(data, config.params)
    if not report.is_member:
        raise AdmissibilityError(report.message, report.violation_index)
    print(f"Solving Krein equation on m={config.m} grid (N={data.N})")
    result = invert_norming_data(data, config)
    _report_warnings(result.warnings)
    return _write_inversion(result, config, Path(norming_file).stem, dump)


# Stability


@dataclass(frozen=True)
class StabilityReport:
    pairs: List[Tuple[float, float, float]]
    fitted_L: float
    max_ratio: float
    params: Tuple[float, float]
    ratio_by_scale: Dict[str, float]
    algebra_L: float = 0.0

    def to_json(self) -> dict:
        payload = asdict(self)
        payload["perturbation_model"] = "iid Gaussian remainder perturbations, rescaled, rejection-sampled in N(h, r)"
        return payload


def sample_base(rng: np.random.Generator, N: int, params: AdmissibilityParams,
                cap: int = SAMPLING_CAP) -> SpectralData:
    """
    Random two spectra in N(h, r): Gaussian remainders with 1/(1 + |n|) decay,
    rescaled to half the budget r and rejection-sampled for separation.

    Raises:
        AdmissibilityError: if no admissible sample is found within `cap` draws
    """
    decay = np.repeat(1.0 / (1.0 + np.abs(np.arange(-N, N + 1))), 2)
    for _ in range(cap):
        rho = rng.standard_normal(2 * (2 * N + 1)) * decay
        rho *= 0.5 * params.r / np.linalg.norm(rho)
        data = SpectralData.from_remainders(rho)
        if validate_spectral(data, params).is_member:
            return data
    raise AdmissibilityError(f"no admissible sample in N(h={params.h}, r={params.r}) after {cap} draws")


def perturb(data: SpectralData, scale: float, rng: np.random.Generator, params: AdmissibilityParams,
            cap: int = SAMPLING_CAP) -> SpectralData:
    """Gaussian perturbation of the remainders with l2 size `scale`, kept inside N(h, r)."""
    rho = remainders(data)
    for _ in range(cap):
        delta = rng.standard_normal(rho.size)
        delta *= scale / np.linalg.norm(delta)
        candidate = rho + delta
        norm = np.linalg.norm(candidate)
        if norm > params.r:
            candidate *= params.r / norm
        perturbed = SpectralData.from_remainders(candidate)
        if validate_spectral(perturbed, params).is_member:
            return perturbed
    raise AdmissibilityError(f"no admissible perturbation of size {scale} after {cap} draws")


def stability_pair(base: SpectralData, other: SpectralData, config: RunConfig,
                   Q_base: Optional[PotentialAKNS] = None) -> Tuple[float, float]:
    """(||nu1 - nu2||, ||Q1 - Q2||) for two admissible spectral data."""
    if Q_base is None:
        Q_base = invert_two_spectra_data(base, config).potential
    Q_other = invert_two_spectra_data(other, config).potential
    dnu = float(np.linalg.norm(remainders(base) - remainders(other)))
    return dnu, (Q_base - Q_other).l2_norm()


def run_stability(config: RunConfig) -> StabilityReport:
    """
    Draw all perturbations from one seeded generator, then invert the
    samples across `config.workers` processes.
    """
    rng = np.random.default_rng(config.seed)
    params = config.params
    base = sample_base(rng, config.N, params)
    Q_base = invert_two_spectra_data(base, config).potential
    scales = [scale for scale in STABILITY_SCALES for _ in range(config.samples)]
    others = [perturb(base, scale, rng, params) for scale in scales]
    results = _run_tasks(stability_pair, [(base, other, config, Q_base) for other in others], config.workers)

    pairs = sorted((scale, dnu, dQ) for scale, (dnu, dQ) in zip(scales, results))
    ratio_by_scale = {}
    for scale in STABILITY_SCALES:
        ratios = [dQ / dnu for s, dnu, dQ in pairs if s == scale and dnu > 0]
        ratio_by_scale[repr(scale)] = max(ratios, default=0.0)
        print(f"  scale {scale:g}: max ||dQ||/||dnu|| = {ratio_by_scale[repr(scale)]:.4f}")

    dnu = np.array([p[1] for p in pairs])
    dQ = np.array([p[2] for p in pairs])
    denom = float(dnu @ dnu)
    fitted = float(dnu @ dQ) / denom if denom > 0 else 0.0
    max_ratio = max(ratio_by_scale.values(), default=0.0)
    pairs_A = sample_invertible_pairs(rng, ALGEBRA_PAIRS, 2 * config.N + 1, ALGEBRA_EPS)
    algebra_L = algebra_lipschitz(pairs_A, ALGEBRA_EPS)
    print(f"  norming algebra: max ||e1^-1 - e2^-1||/||e1 - e2|| on S_{ALGEBRA_EPS:g} = {algebra_L:.4f}")
    return StabilityReport(pairs, fitted, max_ratio, (params.h, params.r), ratio_by_scale, algebra_L)


def cmd_stability(config: RunConfig) -> str:
    print(f"Sampling stability in N(h={config.h}, r={config.r}) with seed {config.seed}")
    report = run_stability(config)
    _prepare_out(config.out)
    path = output_path(config.out, "stability_report.json")
    _write_json(report.to_json(), path)
    print(f"Fitted Lipschitz constant: {report.fitted_L:.4f}")
    return path


# Round trip


def roundtrip_family(m: int) -> List[Tuple[str, PotentialAKNS]]:
    """Trigonometric polynomial potentials with ||Q|| in {0, 0.25, 0.5, 1.0}."""
    shapes = [
        ("sin", lambda x: np.sin(2 * np.pi * x), lambda x: np.zeros_like(x)),
        ("mixed", lambda x: 1.0 - np.cos(2 * np.pi * x), lambda x: 0.5 * np.sin(4 * np.pi * x)),
    ]
    family = [("zero", PotentialAKNS.zero(m))]
    for name, q1, q3 in shapes:
        unit = PotentialAKNS.from_functions(q1, q3, m)
        scale = 1.0 / unit.l2_norm()
        for target in ROUNDTRIP_NORMS:
            factor = target * scale
            family.append((f"{name}_{target:g}", PotentialAKNS(unit.q1 * factor, unit.q3 * factor)))
    return family


def roundtrip_member(name: str, Q: PotentialAKNS, config: RunConfig) -> Tuple[str, float, float, float]:
    start = time.perf_counter()
    spectra, _ = forward_data(Q, config.N)
    Q_hat = invert_two_spectra_data(spectra, config).potential
    return name, Q.l2_norm(), relative_error(Q_hat, Q), time.perf_counter() - start


def run_roundtrip(config: RunConfig) -> List[Tuple[str, float, float, float]]:
    """Forward -> invert -> compare; rows of (name, ||Q||, relative error, seconds)."""
    config = replace(config, r=max(config.r, ROUNDTRIP_BUDGET))
    jobs = [(name, Q, config) for name, Q in roundtrip_family(config.m)]
    return _run_tasks(roundtrip_member, jobs, config.workers)


def cmd_roundtrip(config: RunConfig) -> str:
    print(f"Round trip on m={config.m}, N={config.N}")
    rows = run_roundtrip(config)
    print(f"  {'potential':<12} {'||Q||':>8} {'rel. error':>12} {'time (s)':>10}")
    for name, norm, err, seconds in rows:
        print(f"  {name:<12} {norm:>8.3f} {err:>12.3e} {seconds:>10.2f}")
    _prepare_out(config.out)
    path = output_path(config.out, "roundtrip_summary.csv")
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["potential", "l2_norm", "relative_error"])
            for name, norm, err, _ in sorted(rows):
                writer.writerow([name, repr(norm), repr(err)])
    except OSError as e:
        raise DataIOError(f"cannot write {path}: {e}")
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Reconstruct an AKNS Dirac potential on [0, 1] from spectral data.',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s forward potential.csv --nmodes 32
  %(prog)s invert-two-spectra potential_spectra.json --grid 256
  %(prog)s invert-norming potential_norming.json --out results/
  %(prog)s stability --seed 7
  %(prog)s roundtrip --config run.cfg
        """
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=None, help='Flat key=value configuration file')
    common.add_argument('--grid', type=int, default=None, help='Grid resolution m, a power of two (default: 256)')
    common.add_argument('--nmodes', type=int, default=None, help='Spectral truncation N (default: 32)')
    common.add_argument('--tol', type=float, default=None, help='Solver tolerance (default: 1e-10)')
    common.add_argument('--seed', type=int, default=None, help='Random seed for sampling (default: 0)')
    common.add_argument('--out', default=None, help='Output directory (default: current directory)')
    common.add_argument('--workers', type=int, default=None,
                        help='Processes for stability and roundtrip, 1 runs serially (default: one per CPU)')

    sub = parser.add_subparsers(dest='command', required=True)
    p = sub.add_parser('forward', parents=[common], help='Spectra and norming constants of a potential CSV')
    p.add_argument('input', help='Potential CSV with columns x,q1,q3')
    p = sub.add_parser('invert-two-spectra', parents=[common], help='Potential from two spectra')
    p.add_argument('input', help='Spectra JSON with keys N, lambda, mu')
    p.add_argument('--dump', action='store_true', help='Also write h, H and R (and gamma/delta) as CSV')
    p = sub.add_parser('invert-norming', parents=[common], help='Potential from eigenvalues and norming constants')
    p.add_argument('input', help='Norming JSON with keys N, lambda, alpha')
    p.add_argument('--dump', action='store_true', help='Also write h, H and R (and gamma/delta) as CSV')
    sub.add_parser('stability', parents=[common], help='Empirical Lipschitz estimate of the inverse map')
    sub.add_parser('roundtrip', parents=[common], help='Forward/inverse round trip over built-in potentials')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the script."""
    args = build_parser().parse_args(argv)

    try:
        config = load_config(args)
    except SpectralError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code

    is_valid, error_msg = config.validate()
    if not is_valid:
        print(f"Error: {error_msg}", file=sys.stderr)
        return 1

    try:
        if args.command == 'forward':
            spectra_path, norming_path = cmd_forward(config, args.input)
            print(f"\n✓ Successfully computed spectral data:")
            print(f"  Spectra: {spectra_path}")
            print(f"  Norming constants: {norming_path}")
        elif args.command in ('invert-two-spectra', 'invert-norming'):
            command = cmd_invert_two_spectra if args.command == 'invert-two-spectra' else cmd_invert_norming
            potential_path, diagnostics_path = command(config, args.input, args.dump)
            print(f"\n✓ Successfully reconstructed potential:")
            print(f"  Potential: {potential_path}")
            print(f"  Diagnostics: {diagnostics_path}")
        elif args.command == 'stability':
            path = cmd_stability(config)
            print(f"\n✓ Successfully wrote stability report: {path}")
        else:
            path = cmd_roundtrip(config)
            print(f"\n✓ Successfully wrote round-trip summary: {path}")
    except SpectralError as e:
        print(f"\nError: {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
