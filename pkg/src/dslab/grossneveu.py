"""Special case p = 1: threshold resonances, the exact gap spectrum of L_0 and t = m thresholds."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from dslab.model import ModelParams, density_power
from dslab.operators import Grid, assemble_L, assemble_schrodinger_pair
from dslab.spectra import OperatorKind, eig_hermitian, h_spectrum, hermitian_spectrum
from dslab.stability import (
    IMPROVED_BETA_1,
    THETA_PLUS_0,
    beta,
    certified_E,
    q_operator_norm,
    theta_plus,
    theta_value,
)


def _require_p1(params: ModelParams):
    if params.p != 1.0:
        raise ValueError(f"Gross-Neveu routines need p = 1, got p = {params.p}")


@dataclass(frozen=True)
class ResonancePair:
    """R = uv/(v^2-u^2) and S = -nu/(1-nu) (v^2 - u^2/nu)/(v^2-u^2) with x-derivatives."""

    x: np.ndarray
    R: np.ndarray
    S: np.ndarray
    dR: np.ndarray
    dS: np.ndarray
    omega: float


def resonance_profiles(params: ModelParams, x) -> ResonancePair:
    """Bounded generalized eigenfunctions at the thresholds m - omega and -m - omega.

    With T = tanh(kappa x): R = sqrt(nu) T / (1 - nu T^2) and
    S = -nu/(1-nu) (1 - T^2)/(1 - nu T^2); derivatives carry a factor kappa.
    """
    _require_p1(params)
    x = np.asarray(x, dtype=float)
    nu, kappa = params.nu, params.kappa
    T = np.tanh(kappa * x)
    with np.errstate(over="ignore"):
        sech2 = 1.0 / np.cosh(kappa * x) ** 2
    d = 1.0 - nu * T * T
    R = np.sqrt(nu) * T / d
    S = -nu / (1.0 - nu) * sech2 / d
    dR = kappa * np.sqrt(nu) * sech2 * (1.0 + nu * T * T) / d**2
    dS = kappa * 2.0 * nu * sech2 * T / d**2
    return ResonancePair(x, R, S, dR, dS, params.omega)


def _apply_l0_pointwise(params: ModelParams, x, f1, f2, d1, d2):
    """(L_0 psi)(x) for psi = (f1, f2) with analytic derivatives (d1, d2)."""
    dens = density_power(params, x)
    m, w = params.m, params.omega
    return (m - w - dens) * f1 + d2, -d1 + (-m - w + dens) * f2


@dataclass(frozen=True)
class ResonanceResidual:
    omega: float
    upper: float  # (R, S) at m - omega
    lower: float  # (S, R) at -m - omega


def resonance_residuals(params: ModelParams, n_points: int = 4001, window: float | None = None) -> ResonanceResidual:
    """Max-norm residuals of (L_0 - (m-omega))(R,S) and (L_0 + m + omega)(S,R), relative to the profile."""
    _require_p1(params)
    window = 20.0 / params.kappa if window is None else window
    x = np.linspace(-window, window, n_points)
    r = resonance_profiles(params, x)
    m, w = params.m, params.omega
    scale = max(np.abs(r.R).max(), np.abs(r.S).max())
    a1, a2 = _apply_l0_pointwise(params, x, r.R, r.S, r.dR, r.dS)
    up = max(np.abs(a1 - (m - w) * r.R).max(), np.abs(a2 - (m - w) * r.S).max()) / scale
    b1, b2 = _apply_l0_pointwise(params, x, r.S, r.R, r.dS, r.dR)
    lo = max(np.abs(b1 + (m + w) * r.S).max(), np.abs(b2 + (m + w) * r.R).max()) / scale
    return ResonanceResidual(params.omega, float(up), float(lo))


@dataclass
class L0SpectrumCheck:
    omega: float
    passed: bool
    gap_points: list
    expected: list
    residuals: list
    localizations: list
    message: str = ""


def verify_L0_spectrum_p1(params: ModelParams, grid: Grid | None = None, tol: float = 1e-6,
                          allow_any_p: bool = False) -> L0SpectrumCheck:
    """Check that the gap spectrum of L_0 is exactly {-2 omega, 0}.

    ``allow_any_p`` runs the same comparison for p != 1, where it is expected
    to fail; it exercises the failure path.
    """
    if not allow_any_p:
        _require_p1(params)
    grid = grid or Grid.default(params)
    rep = hermitian_spectrum(assemble_L(params, grid, mu=0.0))
    mask = [c.value == "gap_point" for c in rep.classes]
    gp = np.real(rep.values[mask])
    expected = [-2.0 * params.omega, 0.0]
    ok = gp.size == 2 and all(abs(g - e) <= tol * params.m for g, e in zip(np.sort(gp), expected))
    msg = "" if ok else f"gap spectrum {np.sort(gp).tolist()} differs from {expected}"
    return L0SpectrumCheck(params.omega, bool(ok), np.sort(gp).tolist(), expected,
                           rep.residuals[mask].tolist(), rep.localization[mask].tolist(), msg)


def schrodinger_bound_states(params: ModelParams, grid: Grid | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues below m^2 of the two squared operators -d^2 + M^2 -/+ M'."""
    grid = grid or Grid.default(params)
    out = []
    for opr in assemble_schrodinger_pair(params, grid):
        rep = eig_hermitian(opr, kind=OperatorKind.SCHRODINGER)
        mask = [c.value == "gap_point" for c in rep.classes]
        out.append(np.real(rep.values[mask]))
    return out[0], out[1]


def improved_beta1() -> tuple[float, float]:
    """(closed form, dichotomy root) of the t = m, E = 0 threshold at p = 1, mu = 2."""

    def f(w):
        return theta_value(ModelParams(p=1.0, omega=w, mu=2.0), t=1.0) - THETA_PLUS_0

    root = brentq(f, 1e-3, 0.5, xtol=1e-15, rtol=1e-14)
    return IMPROVED_BETA_1, float(root)


def generic_beta1() -> float:
    return beta(1.0)


def dichotomy_boundary(m: float = 1.0) -> float:
    """omega/m where the t = m certificate Re z^2 >= (m - omega)^2 becomes exact at p = 1, mu = 2."""

    def f(w):
        params = ModelParams(p=1.0, omega=w * m, m=m, mu=2.0)
        s = m + params.omega
        return theta_value(params, t=m) - theta_plus(2.0 * (m - params.omega) ** 2 / (s * s))

    return float(brentq(f, 0.2, 0.5, xtol=1e-15, rtol=1e-14))


@dataclass
class ClearanceResult:
    omega: float
    passed: bool
    E_max: float
    required: float
    im_bound_ok: bool = True
    off_axis: list = field(default_factory=list)


def threshold_clearance(omega: float, m: float = 1.0, grid: Grid | None = None,
                        check_spectrum: bool = False) -> ClearanceResult:
    """Whether Re z^2 >= (m - omega)^2 is certified with t = m at p = 1, mu = 2.

    With ``check_spectrum`` the computed H_2 spectrum is also screened: every
    localized off-axis z must satisfy the hyperbola bound and every z must
    satisfy |Im z| <= ||Q||.
    """
    params = ModelParams(p=1.0, omega=omega, m=m, mu=2.0)
    E = certified_E(params, t=m)
    required = m - omega
    passed = E >= required
    result = ClearanceResult(omega, bool(passed), E, required)
    if check_spectrum:
        rep = h_spectrum(params, grid or Grid.default(params))
        q = q_operator_norm(params)
        result.im_bound_ok = bool(np.all(np.abs(rep.z.imag) <= q + 1e-6 * m))
        off = off_axis_points(rep, m)
        result.off_axis = [[float(z.real), float(z.imag)] for z in off]
        hyper_ok = all((z * z).real >= E * E - 1e-6 * m * m for z in off)
        result.passed = bool(passed and hyper_ok and result.im_bound_ok)
    return result


def off_axis_points(rep, m: float = 1.0, tol: float = 1e-6) -> np.ndarray:
    """Localized z off both axes (|Re z|, |Im z| > tol m).

    Purely imaginary pairs (a Vakhitov-Kolokolov instability) and discretized
    continuum values are excluded.
    """
    gp = np.array([c.value == "gap_point" for c in rep.classes], dtype=bool)
    return rep.z[gp & (np.abs(rep.z.imag) > tol * m) & (np.abs(rep.z.real) > tol * m)]


def gn_report(omegas=(0.3, 0.5, 0.7, 0.9), m: float = 1.0, grid_n: int = 1024, grid_x: float | None = None) -> dict:
    """Per-omega Gross-Neveu checks and the p = 1 thresholds as a JSON-ready dict."""
    rows = []
    for w in omegas:
        params = ModelParams(p=1.0, omega=w * m, m=m)
        grid = Grid(grid_x, grid_n) if grid_x else Grid.default(params, grid_n)
        spec = verify_L0_spectrum_p1(params, grid)
        res = resonance_residuals(params)
        minus, plus = schrodinger_bound_states(params, grid)
        clear = threshold_clearance(w * m, m) if w >= 0.35 else None
        single = minus.size == 1 and plus.size == 1
        row = {
            "omega": w * m,
            "l0_spectrum": asdict(spec),
            "resonance_residual_upper": res.upper,
            "resonance_residual_lower": res.lower,
            "schrodinger_bound_states": [minus.tolist(), plus.tolist()],
            "schrodinger_single_bound_state": bool(single),
            "threshold_clearance": asdict(clear) if clear else None,
        }
        row["pass"] = bool(spec.passed and res.upper <= 1e-10 and res.lower <= 1e-10 and single
                           and (clear is None or clear.passed))
        rows.append(row)
    closed, dich = improved_beta1()
    return {
        "schema": 1,
        "m": m,
        "rows": rows,
        "thresholds": {
            "improved_beta1": closed,
            "improved_beta1_dichotomy": dich,
            "generic_beta1": generic_beta1(),
            "dichotomy_boundary": dichotomy_boundary(),
        },
        "pass": all(r["pass"] for r in rows) and abs(closed - dich) <= 1e-8,
    }
