"""Dense Fourier-collocation discretizations of L_mu, Q, L_0 L_mu and the Schrodinger pair.

Spinor grid functions are stored as stacked blocks ``[first component (N), second
component (N)]``. With the convention (alpha, beta) = (-sigma_2, sigma_3) the
free operator reads D_m = [[m, d/dx], [-d/dx, -m]], so every assembled matrix is
real.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from dslab.model import (
    ModelParams,
    density_power,
    effective_mass,
    effective_mass_derivative,
    q_entries,
    soliton_derivative,
    soliton_eval,
)

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]])

DEFAULT_POINTS = 1024


class GridSizingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid x_j = -X + j h, j = 0..N-1, with h = 2X/N."""

    half_width: float
    n_points: int = DEFAULT_POINTS

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("grid half-width must be positive")
        if self.n_points < 64 or self.n_points % 2:
            raise ValueError(f"n_points must be even and >= 64, got {self.n_points}")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def x(self) -> np.ndarray:
        return -self.half_width + self.h * np.arange(self.n_points)

    @classmethod
    def default(cls, params: ModelParams, n_points: int = DEFAULT_POINTS, scale: float = 1.0) -> "Grid":
        return cls(scale * default_half_width(params), n_points)

    def reflection(self) -> np.ndarray:
        """Index permutation j -> (N - j) mod N implementing x -> -x."""
        return (-np.arange(self.n_points)) % self.n_points

    def as_dict(self) -> dict:
        return {"half_width": self.half_width, "n_points": self.n_points}


# e^{-36} ~ 2e-16: the soliton itself decays only at rate kappa, so 20/kappa
# would leave a ~1e-9 jump at the periodic seam
SOLITON_EFOLDS = 36.0
POTENTIAL_EFOLDS = 20.0


def default_half_width(params: ModelParams) -> float:
    """X = max(36/kappa, 20/(p kappa)).

    The soliton tail (rate kappa) and the potentials (rate 2 p kappa) both fall
    below 1e-15 of their peak at the box edge.
    """
    kappa = params.kappa
    return max(SOLITON_EFOLDS / kappa, POTENTIAL_EFOLDS / (params.p * kappa))


class ParitySector(str, Enum):
    """Eigenspaces of sigma_3 P, where P psi(x) = psi(-x).

    EVEN means first component even and second component odd.
    """

    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    matrix: np.ndarray
    grid: Grid
    label: str
    params: ModelParams | None = None
    parity_compatible: bool = True
    sector: ParitySector | None = None
    # columns map sector coordinates to full 2N-vectors (None for full-space operators)
    basis: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def n_components(self) -> int:
        return 2 if self.matrix.shape[0] != self.grid.n_points else 1

    def to_full(self, vectors: np.ndarray) -> np.ndarray:
        return vectors if self.basis is None else self.basis @ vectors

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2)) if self.matrix.shape[0] <= 512 else _norm_estimate(self.matrix)


def _norm_estimate(a: np.ndarray) -> float:
    # the max absolute row sum bounds the 2-norm for our banded-dominant matrices
    # within a small factor, and is all the tolerances need
    return float(np.abs(a).sum(axis=1).max())


def derivative_matrix(grid: Grid) -> np.ndarray:
    """Fourier spectral differentiation matrix on the periodic grid.

    Entries are (pi/X) * (-1)^k cot(k pi / N) / 2 for offset k = i - j, built so
    that the matrix is exactly antisymmetric. The Nyquist mode is annihilated.
    """
    n = grid.n_points
    k = np.arange(1, n // 2)
    col = np.zeros(n)
    col[k] = 0.5 * (-1.0) ** k / np.tan(k * np.pi / n)
    col[n - k] = -col[k]
    col *= np.pi / grid.half_width
    i = np.arange(n)
    return col[(i[:, None] - i[None, :]) % n]


def _check_sizing(params: ModelParams, grid: Grid, strict: bool):
    target = default_half_width(params)
    if grid.half_width < 0.5 * target:
        msg = (
            f"grid half-width {grid.half_width:.4g} is below half the sizing rule "
            f"{target:.4g}; periodic wrap errors will be visible"
        )
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, GridSizingWarning, stacklevel=3)


def _block(a11, a12, a21, a22) -> np.ndarray:
    return np.block([[a11, a12], [a21, a22]])


def assemble_L(params: ModelParams, grid: Grid, mu: float | None = None, strict: bool = False) -> DiscreteOperator:
    """L_mu = D_m - omega - (v^2-u^2)^p sigma_3 - mu Q.

    ``mu`` defaults to ``params.mu``.
    """
    mu = params.mu if mu is None else mu
    _check_sizing(params, grid, strict)
    x = grid.x
    d = derivative_matrix(grid)
    dens = density_power(params, x)
    q11, q12, q22 = q_entries(params, x)
    m, w = params.m, params.omega
    a = _block(
        np.diag(m - w - dens - mu * q11),
        d - mu * np.diag(q12),
        -d - mu * np.diag(q12),
        np.diag(-m - w + dens - mu * q22),
    )
    return DiscreteOperator(a, grid, f"L[mu={mu:g}]", params.with_mu(mu))


def assemble_free(params: ModelParams, grid: Grid) -> DiscreteOperator:
    """D_m - omega with the soliton terms removed."""
    d = derivative_matrix(grid)
    n = grid.n_points
    eye = np.eye(n)
    a = _block((params.m - params.omega) * eye, d, -d, (-params.m - params.omega) * eye)
    return DiscreteOperator(a, grid, "free", params)


def assemble_Q(params: ModelParams, grid: Grid) -> DiscreteOperator:
    """Multiplication by the rank-one 2x2 matrix Q(x)."""
    q11, q12, q22 = q_entries(params, grid.x)
    a = _block(np.diag(q11), np.diag(q12), np.diag(q12), np.diag(q22))
    return DiscreteOperator(a, grid, "Q", params)


def assemble_H_square_block(params: ModelParams, grid: Grid, mu: float | None = None) -> DiscreteOperator:
    """The product L_0 L_mu, whose eigenvalues are the squares z^2 of eigenvalues of H_mu."""
    mu = params.mu if mu is None else mu
    l0 = assemble_L(params, grid, mu=0.0)
    lmu = assemble_L(params, grid, mu=mu)
    return DiscreteOperator(l0.matrix @ lmu.matrix, grid, f"L0L[mu={mu:g}]", params.with_mu(mu))


def assemble_schrodinger_pair(params: ModelParams, grid: Grid) -> tuple[DiscreteOperator, DiscreteOperator]:
    """-d^2/dx^2 + M^2 - M' and -d^2/dx^2 + M^2 + M', with M' taken analytically."""
    x = grid.x
    d = derivative_matrix(grid)
    lap = -(d @ d)
    lap = 0.5 * (lap + lap.T)
    M = effective_mass(params, x)
    dM = effective_mass_derivative(params, x)
    minus = DiscreteOperator(lap + np.diag(M * M - dM), grid, "schrodinger-", params)
    plus = DiscreteOperator(lap + np.diag(M * M + dM), grid, "schrodinger+", params)
    return minus, plus


# --- parity sectors -------------------------------------------------------


def _scalar_parity_bases(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases (columns) of even and odd scalar grid functions."""
    n = grid.n_points
    half = n // 2
    even = np.zeros((n, half + 1))
    odd = np.zeros((n, half - 1))
    even[0, 0] = 1.0
    even[half, half] = 1.0
    r = 1.0 / np.sqrt(2.0)
    for j in range(1, half):
        even[j, j] = r
        even[n - j, j] = r
        odd[j, j - 1] = r
        odd[n - j, j - 1] = -r
    return even, odd


def parity_basis(grid: Grid, sector: ParitySector) -> np.ndarray:
    """2N x N orthonormal basis of a parity sector of spinor grid functions."""
    even, odd = _scalar_parity_bases(grid)
    first, second = (even, odd) if ParitySector(sector) is ParitySector.EVEN else (odd, even)
    n = grid.n_points
    basis = np.zeros((2 * n, first.shape[1] + second.shape[1]))
    basis[:n, : first.shape[1]] = first
    basis[n:, first.shape[1] :] = second
    return basis


def parity_operator(grid: Grid) -> np.ndarray:
    """sigma_3 P as a 2N x 2N permutation-with-signs matrix."""
    n = grid.n_points
    perm = np.eye(n)[grid.reflection()]
    return _block(perm, np.zeros((n, n)), np.zeros((n, n)), -perm)


def commutator_norm(opr: DiscreteOperator) -> float:
    """max |A Pi - Pi A| relative to max |A|, with Pi = sigma_3 P."""
    n = opr.grid.n_points
    idx = opr.grid.reflection()
    a = opr.matrix
    sign = np.concatenate([np.ones(n), -np.ones(n)])
    full_idx = np.concatenate([idx, idx + n])
    # (Pi A Pi)_{ij} = s_i s_j A_{r(i) r(j)}
    conj = sign[:, None] * sign[None, :] * a[np.ix_(full_idx, full_idx)]
    return float(np.abs(conj - a).max() / max(np.abs(a).max(), 1e-300))


def restrict_parity(opr: DiscreteOperator, sector: ParitySector, tol: float = 1e-10) -> DiscreteOperator:
    """Compress a parity-commuting 2N x 2N operator to one N x N sector.

    Raises
    ------
    ValueError
        If the operator is not flagged parity compatible, is already restricted,
        or fails the commutation test ||[A, sigma_3 P]|| <= tol ||A||.
    """
    sector = ParitySector(sector)
    if opr.basis is not None:
        raise ValueError("operator is already restricted to a parity sector")
    if not opr.parity_compatible or opr.matrix.shape[0] != 2 * opr.grid.n_points:
        raise ValueError(f"operator {opr.label} is not parity compatible")
    c = commutator_norm(opr)
    if c > tol:
        raise ValueError(f"operator {opr.label} fails the parity commutation test ({c:.2e} > {tol:.1e})")
    b = parity_basis(opr.grid, sector)
    a = b.T @ opr.matrix @ b
    return DiscreteOperator(a, opr.grid, f"{opr.label}|{sector.value}", opr.params, True, sector, b)


# --- known eigenfunctions ---------------------------------------------------


def soliton_vector(params: ModelParams, grid: Grid) -> np.ndarray:
    v, u = soliton_eval(params, grid.x)
    return np.concatenate([v, u])


def swapped_soliton_vector(params: ModelParams, grid: Grid) -> np.ndarray:
    """sigma_1 phi_0, the eigenfunction of L_mu for -2 omega."""
    v, u = soliton_eval(params, grid.x)
    return np.concatenate([u, v])


def soliton_derivative_vector(params: ModelParams, grid: Grid) -> np.ndarray:
    dv, du = soliton_derivative(params, grid.x)
    return np.concatenate([dv, du])


def relative_residual(opr: DiscreteOperator, vec: np.ndarray, eigenvalue: float) -> float:
    """||A v - lambda v||_inf / ||v||_inf."""
    r = opr.matrix @ vec - eigenvalue * vec
    return float(np.abs(r).max() / np.abs(vec).max())


# --- binary matrix dump -----------------------------------------------------

MAGIC = b"DSL1"
_DTYPE_CODES = {np.dtype(np.float64): 1, np.dtype(np.complex128): 2}
_HEADER = struct.Struct("<4sIQQ8x")


def dump_matrix(opr: DiscreteOperator, path) -> tuple[Path, Path]:
    """Write ``opr`` as column-major little-endian 8-byte floats plus a JSON sidecar.

    The 32-byte header is {magic "DSL1", uint32 dtype code (1 real, 2 complex),
    uint64 rows, uint64 cols, 8 pad bytes}. Complex data is interleaved re/im.
    """
    path = Path(path)
    a = np.asarray(opr.matrix)
    if np.iscomplexobj(a):
        a = a.astype(np.complex128)
    else:
        a = a.astype(np.float64)
    code = _DTYPE_CODES[a.dtype]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, code, a.shape[0], a.shape[1]))
        fh.write(np.asfortranarray(a).astype(a.dtype.newbyteorder("<")).tobytes(order="F"))
    sidecar = path.with_suffix(path.suffix + ".json")
    meta = {
        "label": opr.label,
        "grid": opr.grid.as_dict(),
        "params": opr.params.as_dict() if opr.params else None,
        "sector": opr.sector.value if opr.sector else None,
    }
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, sidecar


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic, code, rows, cols = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        dtype = {1: np.dtype("<f8"), 2: np.dtype("<c16")}[code]
        data = np.frombuffer(fh.read(), dtype=dtype)
    return data.reshape((rows, cols), order="F")
