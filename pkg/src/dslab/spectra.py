"""Dense eigensolvers, gap classification and zero-eigenvalue diagnostics.

Parity-commuting operators are diagonalized sector by sector, which halves the
dimension and keeps the semisimple zero eigenvalues of L_0 L_2 apart (one lives
in each sector).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.linalg as sla

from dslab.model import ModelParams
from dslab.operators import (
    DiscreteOperator,
    Grid,
    ParitySector,
    assemble_L,
    restrict_parity,
    soliton_vector,
)
from dslab.stability import q_operator_norm

SCHEMA_VERSION = 1
LOCALIZATION_MIN = 0.99
IMAG_CLAMP = 1e-10
KERNEL_RTOL = 1e-8
ZERO_CLAMP = 100.0


class SpectralClass(str, Enum):
    GAP_POINT = "gap_point"
    ESSENTIAL = "essential_cluster"
    EDGE = "edge_ambiguous"


class OperatorKind(str, Enum):
    L = "L"  # Dirac-type, gap (-m-omega, m-omega)
    H = "H"  # z^2 spectra of L_0 L_mu, gap |z| < m - omega
    SCHRODINGER = "schrodinger"  # essential spectrum [m^2, inf)


class DiagonalizationError(RuntimeError):
    pass


@dataclass
class SpectrumReport:
    """Eigenvalues of one operator with residuals, localization and classes.

    For H-square blocks ``values`` holds z^2 and ``z`` the representative
    sqrt in the closed upper-right quadrant.
    """

    values: np.ndarray
    residuals: np.ndarray
    localization: np.ndarray
    classes: list[SpectralClass]
    kind: OperatorKind
    params: ModelParams | None
    grid: Grid
    label: str
    solver: str
    elapsed_ms: float
    sectors: list[str | None] = field(default_factory=list)
    z: np.ndarray | None = None
    vectors: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.values)

    def select(self, cls: SpectralClass) -> np.ndarray:
        mask = np.array([c is cls for c in self.classes], dtype=bool)
        return (self.z if self.kind is OperatorKind.H else self.values)[mask]

    def gap_points(self) -> np.ndarray:
        return self.select(SpectralClass.GAP_POINT)

    def z_orbit(self) -> np.ndarray:
        """All z with the four-fold symmetry completion {z, -z, conj z, -conj z}."""
        if self.z is None:
            raise ValueError("z values exist only for H-square spectra")
        return np.concatenate([_orbit(z) for z in self.z]) if len(self.z) else np.zeros(0, complex)

    def to_json(self) -> dict:
        vals = self.z if self.kind is OperatorKind.H else self.values
        entries = []
        for i, val in enumerate(vals):
            entry = {
                "re": float(np.real(val)),
                "im": float(np.imag(val)),
                "residual": float(self.residuals[i]),
                "class": self.classes[i].value,
                "localization": float(self.localization[i]),
            }
            if self.sectors and self.sectors[i] is not None:
                entry["sector"] = self.sectors[i]
            if self.kind is OperatorKind.H:
                entry["z2_re"] = float(np.real(self.values[i]))
                entry["z2_im"] = float(np.imag(self.values[i]))
                entry["orbit"] = [[float(w.real), float(w.imag)] for w in _orbit(val)]
            entries.append(entry)
        return {
            "schema": SCHEMA_VERSION,
            "operator": self.label,
            "kind": self.kind.value,
            "params": self.params.as_dict() if self.params else None,
            "grid": self.grid.as_dict(),
            "eigenvalues": entries,
            "meta": {"solver": self.solver, "elapsed_ms": round(self.elapsed_ms, 3)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _orbit(z: complex) -> np.ndarray:
    out = [z, -z, np.conj(z), -np.conj(z)]
    uniq: list[complex] = []
    for w in out:
        if not any(w == u for u in uniq):
            uniq.append(w)
    return np.array(uniq, dtype=complex)


def canonical_sqrt(z2: np.ndarray) -> np.ndarray:
    """Representative sqrt of z^2 in the closed upper-right quadrant."""
    z = np.sqrt(np.asarray(z2, dtype=complex))
    return np.abs(z.real) + 1j * np.abs(z.imag)


def localization(grid: Grid, full_vectors: np.ndarray) -> np.ndarray:
    """Fraction of |vector|^2 carried by |x| <= X/2, summed over both spinor components."""
    n = grid.n_points
    inner = np.abs(grid.x) <= 0.5 * grid.half_width
    w = np.abs(full_vectors) ** 2
    if full_vectors.shape[0] == 2 * n:
        mask = np.concatenate([inner, inner])
    else:
        mask = inner
    total = w.sum(axis=0)
    return w[mask].sum(axis=0) / np.where(total > 0, total, 1.0)


def _residuals(a: np.ndarray, vals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    r = a @ vecs - vecs * vals[None, :]
    return np.linalg.norm(r, axis=0) / np.linalg.norm(vecs, axis=0)


def _infer_kind(opr: DiscreteOperator) -> OperatorKind:
    if opr.label.startswith("L0L"):
        return OperatorKind.H
    if opr.label.startswith("schrodinger"):
        return OperatorKind.SCHRODINGER
    return OperatorKind.L


def default_delta(params: ModelParams) -> float:
    return 0.02 * (params.m - params.omega)


def eig_hermitian(opr: DiscreteOperator, keep_vectors: bool = False, delta: float | None = None,
                  kind: OperatorKind | None = None) -> SpectrumReport:
    """Full spectrum of a symmetric operator, ascending, with classification.

    Raises
    ------
    DiagonalizationError
        If LAPACK fails; the backend message is attached.
    """
    a = opr.matrix
    t0 = time.perf_counter()
    try:
        vals, vecs = sla.eigh(a)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DiagonalizationError(f"eigh failed for {opr.label}: {exc}") from exc
    elapsed = 1e3 * (time.perf_counter() - t0)
    res = _residuals(a, vals, vecs)
    full = opr.to_full(vecs)
    loc = localization(opr.grid, full)
    sector = opr.sector.value if opr.sector else None
    report = SpectrumReport(
        vals, res, loc, [SpectralClass.ESSENTIAL] * len(vals), kind or _infer_kind(opr), opr.params,
        opr.grid, opr.label, "scipy.linalg.eigh", elapsed, [sector] * len(vals),
        vectors=full if keep_vectors else None,
    )
    return classify_gap(report, delta) if opr.params is not None else report


def eig_general(opr: DiscreteOperator, keep_vectors: bool = False, delta: float | None = None) -> SpectrumReport:
    """z^2 spectrum of an H-square block L_0 L_mu, with z = sqrt(z^2) representatives."""
    a = opr.matrix
    t0 = time.perf_counter()
    try:
        vals, vecs = sla.eig(a)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise DiagonalizationError(f"eig failed for {opr.label}: {exc}") from exc
    elapsed = 1e3 * (time.perf_counter() - t0)
    res = _residuals(a, vals, vecs)
    vals = np.where(np.abs(vals.imag) <= IMAG_CLAMP, vals.real + 0j, vals)
    # a semisimple zero is resolved only to rounding of ||A||, which would
    # otherwise surface as a spurious z ~ sqrt(eps ||A||) on the imaginary axis
    zero_tol = ZERO_CLAMP * np.finfo(float).eps * np.abs(a).sum(axis=0).max()
    vals = np.where(np.abs(vals) <= zero_tol, 0j, vals)
    z = canonical_sqrt(vals)
    z = np.where(np.abs(z.imag) <= IMAG_CLAMP, z.real + 0j, z)
    order = np.lexsort((z.imag, z.real))
    vals, z, res, vecs = vals[order], z[order], res[order], vecs[:, order]
    full = opr.to_full(vecs)
    loc = localization(opr.grid, full)
    sector = opr.sector.value if opr.sector else None
    report = SpectrumReport(
        vals, res, loc, [SpectralClass.ESSENTIAL] * len(vals), OperatorKind.H, opr.params, opr.grid,
        opr.label, "scipy.linalg.eig", elapsed, [sector] * len(vals), z=z,
        vectors=full if keep_vectors else None,
    )
    return classify_gap(report, delta) if opr.params is not None else report


def classify_gap(report: SpectrumReport, delta: float | None = None) -> SpectrumReport:
    """Mark gap_point / edge_ambiguous / essential_cluster for every value.

    Values strictly inside the gap by more than ``delta`` and localized to
    >= 0.99 are gap points; values within ``delta`` of an edge are ambiguous.
    Off-axis z of H-spectra are point spectrum when localized.
    """
    params = report.params
    delta = default_delta(params) if delta is None else delta
    if not 0 < delta <= 0.5 * (params.m - params.omega) + 1e-15:
        raise ValueError(f"delta must lie in (0, (m-omega)/2], got {delta}")
    m, w = params.m, params.omega
    classes = []
    for i, val in enumerate(report.values):
        loc = report.localization[i]
        if report.kind is OperatorKind.H:
            z = report.z[i]
            if abs(z.imag) > 1e-6 * m:
                dist = np.inf  # off the real axis: not part of the essential spectrum
                inside = True
            else:
                r = abs(z.real)
                inside = r < m - w
                dist = abs(r - (m - w))
        elif report.kind is OperatorKind.SCHRODINGER:
            x = float(np.real(val))
            inside = x < m * m
            dist = abs(x - m * m)
        else:
            x = float(np.real(val))
            lo, hi = -m - w, m - w
            inside = lo < x < hi
            dist = min(abs(x - lo), abs(x - hi))
        if dist < delta:
            classes.append(SpectralClass.EDGE)
        elif inside and loc >= LOCALIZATION_MIN:
            classes.append(SpectralClass.GAP_POINT)
        else:
            classes.append(SpectralClass.ESSENTIAL)
    return replace(report, classes=classes)


def merge_reports(reports: list[SpectrumReport], label: str) -> SpectrumReport:
    """Union of sector spectra, re-sorted."""
    first = reports[0]
    cat = lambda name: np.concatenate([getattr(r, name) for r in reports])  # noqa: E731
    vals = cat("values")
    z = cat("z") if first.z is not None else None
    key = np.lexsort((z.imag, z.real)) if z is not None else np.argsort(vals.real, kind="stable")
    classes = [c for r in reports for c in r.classes]
    sectors = [s for r in reports for s in r.sectors]
    vectors = None
    if all(r.vectors is not None for r in reports):
        vectors = np.concatenate([r.vectors for r in reports], axis=1)[:, key]
    return SpectrumReport(
        vals[key], cat("residuals")[key], cat("localization")[key], [classes[i] for i in key], first.kind,
        first.params, first.grid, label, first.solver + "/sectors", sum(r.elapsed_ms for r in reports),
        [sectors[i] for i in key], z=z[key] if z is not None else None, vectors=vectors,
    )


def hermitian_spectrum(opr: DiscreteOperator, keep_vectors: bool = False, delta: float | None = None,
                       sectors: bool = True) -> SpectrumReport:
    """eig_hermitian on both parity sectors of a full-space operator, merged."""
    if not sectors or opr.basis is not None:
        return eig_hermitian(opr, keep_vectors, delta)
    parts = [eig_hermitian(restrict_parity(opr, s), keep_vectors, delta) for s in ParitySector]
    return merge_reports(parts, opr.label)


def h_spectrum(params: ModelParams, grid: Grid, mu: float | None = None, keep_vectors: bool = False,
               delta: float | None = None) -> SpectrumReport:
    """z-spectrum of H_mu from both parity sectors of L_0 L_mu."""
    mu = params.mu if mu is None else mu
    parts = [eig_general(_sector_h_block(params, grid, mu, s), keep_vectors, delta) for s in ParitySector]
    return merge_reports(parts, f"L0L[mu={mu:g}]")


def _sector_h_block(params: ModelParams, grid: Grid, mu: float, sector: ParitySector) -> DiscreteOperator:
    # both factors commute with parity, so the restricted product is the product of restrictions
    l0 = restrict_parity(assemble_L(params, grid, mu=0.0), sector)
    lmu = restrict_parity(assemble_L(params, grid, mu=mu), sector)
    return DiscreteOperator(l0.matrix @ lmu.matrix, grid, f"L0L[mu={mu:g}]|{sector.value}",
                            params.with_mu(mu), True, sector, l0.basis)


def kernel_count(a: np.ndarray, rtol: float = KERNEL_RTOL) -> tuple[int, np.ndarray]:
    """Number of singular values below rtol * ||a||_2, plus the smallest few."""
    s = sla.svdvals(a)
    return int(np.sum(s < rtol * s[0])), np.sort(s)[:4]


def h_kernel_dimension(params: ModelParams, grid: Grid, mu: float | None = None,
                       rtol: float = KERNEL_RTOL) -> dict[str, int]:
    """Kernel dimension of L_0 L_mu per parity sector, by singular-value counting."""
    mu = params.mu if mu is None else mu
    return {s.value: kernel_count(_sector_h_block(params, grid, mu, s).matrix, rtol)[0] for s in ParitySector}


# --- zero-eigenvalue diagnostics -------------------------------------------


class Multiplicity(str, Enum):
    TWO = "multiplicity-2"
    SUSPICIOUS = "suspicious"


@dataclass(frozen=True)
class ZeroMultiplicityReport:
    """l(mu) = <phi_0, L_mu^{-1} phi_0> on the even sector and the kernel count of L_0 L_mu.

    ``verdict`` is multiplicity-2 when the even sector carries 0 as an
    eigenvalue of H_mu with algebraic multiplicity exactly 2: l(mu) finite and
    nonzero and a one-dimensional even kernel of L_0 L_mu.
    """

    mu: float
    l_value: float
    min_singular: float
    kernel_dim: int | None
    kernel_by_sector: dict | None
    verdict: Multiplicity


def compute_l(params: ModelParams, grid: Grid, mu: float | None = None, count_kernel: bool = True,
              rtol: float = KERNEL_RTOL) -> ZeroMultiplicityReport:
    """Solve the even-sector system L_mu psi = phi_0 and return <phi_0, psi>.

    When the smallest singular value of the even-sector matrix is below
    rtol * ||L_mu||, l is reported as NaN and the verdict is suspicious.
    """
    mu = params.mu if mu is None else mu
    lmu = restrict_parity(assemble_L(params, grid, mu=mu), ParitySector.EVEN)
    phi = lmu.basis.T @ soliton_vector(params, grid)
    s = sla.svdvals(lmu.matrix)
    smin = float(s[-1])
    if smin < rtol * s[0]:
        l_value = float("nan")
    else:
        psi = sla.solve(lmu.matrix, phi, assume_a="sym")
        l_value = float(grid.h * phi @ psi)
    by_sector = h_kernel_dimension(params, grid, mu, rtol) if count_kernel else None
    kdim = sum(by_sector.values()) if by_sector else None
    ok = np.isfinite(l_value) and abs(l_value) > 1e3 * np.finfo(float).eps * grid.h * (phi @ phi) / max(smin, 1e-300)
    if by_sector is not None:
        ok = ok and by_sector[ParitySector.EVEN.value] == 1
    return ZeroMultiplicityReport(mu, l_value, smin, kdim, by_sector, Multiplicity.TWO if ok else Multiplicity.SUSPICIOUS)


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    lambda1: float | None
    lower: float
    margin: float  # distance to the nearer violated side; negative on failure
    message: str = ""


def first_eigenvalue(report: SpectrumReport, params: ModelParams, tol: float = 1e-6) -> float | None:
    """Smallest gap eigenvalue strictly above -2 omega."""
    gp = np.sort(np.real(report.gap_points()))
    above = gp[gp > -2.0 * params.omega + tol * params.m]
    return float(above[0]) if above.size else None


def first_eigenvalue_bound_check(params: ModelParams, grid: Grid, mu: float | None = None) -> BoundCheck:
    """Check -mu ||Q|| <= lambda_1(mu) < 0 on the computed L_mu spectrum."""
    mu = params.mu if mu is None else mu
    if not mu > 0:
        raise ValueError("the first-eigenvalue bound needs mu > 0")
    rep = hermitian_spectrum(assemble_L(params, grid, mu=mu))
    lam = first_eigenvalue(rep, params)
    lower = -mu * q_operator_norm(params)
    if lam is None:
        return BoundCheck(False, None, lower, -np.inf, "no gap eigenvalue above -2 omega")
    margin = min(lam - lower, -lam)
    return BoundCheck(bool(lower <= lam < 0), lam, lower, float(margin))
