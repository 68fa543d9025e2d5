"""Closed-form solitary waves for the power nonlinearity f(s) = s|s|^(p-1).

All profile quantities are written in terms of T = tanh(p*kappa*x) and the
bounded ratio g = (1 - T^2) / (1 - nu*T^2), which never requires subtracting
v^2 and u^2. The ratio itself is evaluated as 2 / ((1+nu) + (1-nu)cosh(2 p kappa x))
so that it decays smoothly to zero instead of losing digits in 1 - tanh^2.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from dslab.quadrature import QuadratureResult, QuadratureSpec, tanh_sinh


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of one solitary wave and its linearization.

    ``kappa`` and ``nu`` are properties so they can never go stale.
    """

    p: float
    omega: float
    m: float = 1.0
    mu: float = 2.0

    def __post_init__(self):
        if not (np.isfinite(self.m) and self.m > 0):
            raise ValueError(f"mass must be positive, got m={self.m}")
        if not (np.isfinite(self.p) and self.p > 0):
            raise ValueError(f"nonlinearity power must be positive, got p={self.p}")
        if not (0 < self.omega < self.m):
            raise ValueError(f"omega must lie in (0, m) = (0, {self.m}), got {self.omega}")
        if not (np.isfinite(self.mu) and self.mu >= 0):
            raise ValueError(f"mu must be >= 0, got {self.mu}")

    @property
    def kappa(self) -> float:
        return float(np.sqrt((self.m - self.omega) * (self.m + self.omega)))

    @property
    def nu(self) -> float:
        return (self.m - self.omega) / (self.m + self.omega)

    @property
    def amplitude(self) -> float:
        """Peak density (p+1)(m-omega) of (v^2-u^2)^p, attained at x = 0."""
        return (self.p + 1.0) * (self.m - self.omega)

    def with_mu(self, mu: float) -> "ModelParams":
        return replace(self, mu=mu)

    def with_omega(self, omega: float) -> "ModelParams":
        return replace(self, omega=omega)

    def as_dict(self) -> dict:
        return {"m": self.m, "p": self.p, "omega": self.omega, "mu": self.mu}


class SolitonSample(NamedTuple):
    x: np.ndarray
    v: np.ndarray
    u: np.ndarray
    density_p: np.ndarray
    M: np.ndarray


def derived(params: ModelParams) -> tuple[float, float]:
    """Return ``(kappa, nu)`` for valid parameters."""
    return params.kappa, params.nu


def _profile(params: ModelParams, x):
    """T = tanh(p kappa |x|), g, 1 - nu T^2 and the sign of x."""
    x = np.asarray(x, dtype=float)
    y = params.p * params.kappa * np.abs(x)
    nu = params.nu
    T = np.tanh(y)
    with np.errstate(over="ignore"):
        g = 2.0 / ((1.0 + nu) + (1.0 - nu) * np.cosh(2.0 * y))
    denom = 1.0 - nu * T * T
    return T, g, denom, np.sign(x)


def density_power(params: ModelParams, x) -> np.ndarray:
    """(v^2 - u^2)^p = (p+1)(m-omega) (1 - T^2)/(1 - nu T^2)."""
    _, g, _, _ = _profile(params, x)
    return params.amplitude * g


def soliton_eval(params: ModelParams, x) -> tuple[np.ndarray, np.ndarray]:
    """Upper and lower components ``(v, u)`` of the solitary wave.

    ``v`` is evaluated at ``|x|`` and ``u`` carries the sign of ``x``, so the
    parity v(-x) = v(x), u(-x) = -u(x) holds bit for bit.
    """
    T, g, denom, sgn = _profile(params, x)
    v = (params.amplitude * g) ** (0.5 / params.p) / np.sqrt(denom)
    u = sgn * np.sqrt(params.nu) * T * v
    return v, u


def soliton_derivative(params: ModelParams, x) -> tuple[np.ndarray, np.ndarray]:
    """Analytic x-derivatives ``(v', u')`` of the closed forms."""
    T, g, denom, sgn = _profile(params, x)
    p, kappa, nu = params.p, params.kappa, params.nu
    v = (params.amplitude * g) ** (0.5 / p) / np.sqrt(denom)
    # d/dx log v = kappa T ((p+1) nu g - 1) for x >= 0
    dv_right = kappa * T * ((p + 1.0) * nu * g - 1.0) * v
    sech2 = g * denom
    du = np.sqrt(nu) * (p * kappa * sech2 * v + T * dv_right)
    return sgn * dv_right, du


def effective_mass(params: ModelParams, x) -> np.ndarray:
    """M = m - (v^2 - u^2)^p."""
    return params.m - density_power(params, x)


def effective_mass_derivative(params: ModelParams, x) -> np.ndarray:
    """Analytic M'(x) = 2 p kappa (1-nu) (p+1)(m-omega) T (1-T^2) / (1-nu T^2)^2."""
    T, g, denom, sgn = _profile(params, x)
    p, kappa, nu = params.p, params.kappa, params.nu
    return sgn * 2.0 * p * kappa * (1.0 - nu) * params.amplitude * T * g / denom


def q_entries(params: ModelParams, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pointwise entries ``(Q11, Q12, Q22)`` of the rank-one matrix Q(x).

    Uses the prefactor form p(p+1)(m-omega)(1-T^2)/(1-nu T^2)^2 times
    [[1, -sqrt(nu) T], [-sqrt(nu) T, nu T^2]].
    """
    T, g, denom, sgn = _profile(params, x)
    nu = params.nu
    pref = params.p * params.amplitude * g / denom
    t = sgn * np.sqrt(nu) * T
    return pref, -pref * t, pref * t * t


def sample(params: ModelParams, x) -> SolitonSample:
    x = np.asarray(x, dtype=float)
    v, u = soliton_eval(params, x)
    return SolitonSample(x, v, u, density_power(params, x), effective_mass(params, x))


def soliton_l2_norm_sq(params: ModelParams, quad: QuadratureSpec | None = None) -> QuadratureResult:
    """||phi_0||^2 = int (v^2 + u^2) dx by tanh-sinh quadrature.

    With y = tanh(p kappa x) the integral becomes
    (2/(p kappa)) A^(1/p) int_0^1 (1+nu y^2)/(1-nu y^2)^(1+1/p) (1-y^2)^(1/p-1) dy,
    which has an integrable endpoint singularity at y = 1 when p > 1.
    """
    p, nu, kappa = params.p, params.nu, params.kappa
    scale = 2.0 / (p * kappa) * params.amplitude ** (1.0 / p)

    def integrand(y, ym):
        one_minus_y2 = ym * (1.0 + y)
        d = 1.0 - nu * y * y
        return (1.0 + nu * y * y) / d ** (1.0 + 1.0 / p) * one_minus_y2 ** (1.0 / p - 1.0)

    res = tanh_sinh(integrand, quad)
    return QuadratureResult(scale * res.value, scale * res.error, res.level, res.n_evals)
