"""Closed-form spectral-stability bounds for power-nonlinearity solitary waves.

Collects the operator norm of Q, the cone condition and its E-refinement, the
minimax threshold function theta_+, the frequency thresholds beta, omega_circ,
omega_star and the quadrature evaluation of the Vakhitov-Kolokolov derivative.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from dslab.model import ModelParams
from dslab.quadrature import QuadratureError, QuadratureResult, QuadratureSpec, tanh_sinh

SQRT3 = float(np.sqrt(3.0))
THETA_PLUS_0 = 3.0 * SQRT3 / 8.0
ROOT_XTOL = 1e-14
ROOT_RTOL = 1e-12


def q_operator_norm(params: ModelParams) -> float:
    """sup_x of the largest eigenvalue of Q(x).

    p(p+1)(m - omega) when omega > m/2, otherwise p(p+1) m^2 / (4 omega). The two
    branches meet at omega = m/2.
    """
    p, m, w = params.p, params.m, params.omega
    if w > 0.5 * m:
        return p * (p + 1.0) * (m - w)
    return p * (p + 1.0) * m * m / (4.0 * w)


def im_bound(params: ModelParams) -> float:
    """Upper bound mu ||Q|| / 2 on |Im z| for eigenvalues z of H_mu."""
    return 0.5 * params.mu * q_operator_norm(params)


def theta_plus(xi: float) -> float:
    """Threshold function on [0, 2), strictly decreasing from 3 sqrt(3)/8 to 0.

    Raises
    ------
    ValueError
        If ``xi`` lies outside [0, 2).
    """
    if not 0.0 <= xi < 2.0:
        raise ValueError(f"theta_plus needs xi in [0, 2), got {xi}")
    s = np.sqrt(9.0 * (2.0 - xi) ** 2 + 8.0 * xi)
    return float(2.0 * (2.0 - 3.0 * xi + s) * (6.0 - 3.0 * xi + s) ** 1.5 / (14.0 - 9.0 * xi + 3.0 * s) ** 2)


def _eta_lhs(eta: float) -> float:
    return 4.0 * eta**3 * (eta * eta - 1.0) / (3.0 * eta * eta - 1.0) ** 2


def eta_theta(theta: float) -> tuple[float, float]:
    """Root eta > 1 of 4 eta^3 (eta^2 - 1) / (3 eta^2 - 1)^2 = theta, and h(eta).

    h(eta) = 2 eta^2 (3 - eta^2) / (3 eta^2 - 1) is the value of the minimax
    problem. The left side increases from 0 to infinity on (1, inf), and the
    root lies between (theta + sqrt(theta^2 + 4))/2 and 2 theta + sqrt(4 theta^2 + 1).
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    lo = max(1.0, 0.5 * (theta + np.sqrt(theta * theta + 4.0)))
    hi = 2.0 * theta + np.sqrt(4.0 * theta * theta + 1.0)
    if _eta_lhs(lo) >= theta:
        lo = 1.0
    eta = brentq(lambda e: _eta_lhs(e) - theta, lo, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)
    h = 2.0 * eta * eta * (3.0 - eta * eta) / (3.0 * eta * eta - 1.0)
    return float(eta), float(h)


def g_theta(theta: float, alpha, eta):
    return (1.0 - alpha) * eta * eta + (1.0 + alpha) - 4.0 * eta * theta / (1.0 + alpha)


def minimax_oracle(theta: float, n_alpha: int = 10_001) -> float:
    """Brute-force inf over eta of max over alpha in [0, 1] of g_theta(alpha, eta).

    The inner max uses an alpha grid polished by a bounded scalar search around
    the best grid point; the outer inf is a bounded scalar search on the eta
    bracket [(theta + sqrt(theta^2+4))/2, 2 theta + sqrt(4 theta^2 + 1)].
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    alphas = np.linspace(0.0, 1.0, n_alpha)
    da = alphas[1]

    def inner(eta):
        vals = g_theta(theta, alphas, eta)
        i = int(np.argmax(vals))
        a, b = max(0.0, alphas[i] - da), min(1.0, alphas[i] + da)
        res = minimize_scalar(lambda a_: -g_theta(theta, a_, eta), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-14})
        return max(vals[i], -res.fun)

    lo = 0.5 * (theta + np.sqrt(theta * theta + 4.0))
    hi = 2.0 * theta + np.sqrt(4.0 * theta * theta + 1.0)
    res = minimize_scalar(inner, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(res.fun)


def theta_value(params: ModelParams, t: float | None = None) -> float:
    """theta = mu ||Q|| / (4 (t + omega)), with t defaulting to omega."""
    t = params.omega if t is None else t
    return params.mu * q_operator_norm(params) / (4.0 * (t + params.omega))


@dataclass(frozen=True)
class ConeResult:
    ok: bool
    theta: float
    margin: float  # theta_+(0) - theta
    simplified_ok: bool  # ||Q|| <= (3 sqrt(3)/2) omega, the mu = 2, t = omega form
    simplified_margin: float


def _check_t(params: ModelParams, t: float) -> float:
    if not params.omega - 1e-14 <= t <= params.m + 1e-14:
        raise ValueError(f"t must lie in [omega, m] = [{params.omega}, {params.m}], got {t}")
    return t


def cone_condition(params: ModelParams, t: float | None = None) -> ConeResult:
    """Cone condition Re z^2 >= 0 for eigenvalues z of H_mu off both axes.

    Combined with a negative VK derivative it rules out nonzero purely
    imaginary eigenvalues.
    """
    t = _check_t(params, params.omega if t is None else t)
    th = theta_value(params, t)
    q = q_operator_norm(params)
    simple = 1.5 * SQRT3 * params.omega
    return ConeResult(th <= THETA_PLUS_0, th, THETA_PLUS_0 - th, q <= simple, simple - q)


def e_certificate_holds(params: ModelParams, t: float, E: float) -> bool:
    """Whether Re z^2 >= E^2 is certified for all eigenvalues z off both axes."""
    s = t + params.omega
    if E < 0 or E >= s or E > 2.0 * params.omega:
        return False
    return theta_value(params, t) <= theta_plus(2.0 * E * E / (s * s))


def certified_E(params: ModelParams, t: float | None = None, tol: float | None = None) -> float:
    """Largest E in [0, min(2 omega, t + omega)) with theta <= theta_+(2 E^2 / (t+omega)^2).

    Bisection on E to ``tol`` (default 1e-10 m); returns 0 when the cone
    condition itself fails.
    """
    t = _check_t(params, params.omega if t is None else t)
    tol = 1e-10 * params.m if tol is None else tol
    s = t + params.omega
    th = theta_value(params, t)
    if th > THETA_PLUS_0:
        return 0.0
    # theta_+(xi) -> 0 as xi -> 2, so the largest admissible xi is the root of theta_+ = th
    e_cap = min(2.0 * params.omega, s * (1.0 - 1e-15))
    if e_certificate_holds(params, t, e_cap):
        return float(e_cap)
    lo, hi = 0.0, e_cap
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if e_certificate_holds(params, t, mid):
            lo = mid
        else:
            hi = mid
    return float(lo)


@dataclass(frozen=True)
class Thresholds:
    p: float
    mu: float
    beta: float
    omega_circ: float
    omega_star: float
    p_circ: float
    p_star: float


def p_circ(mu: float) -> float:
    return float((np.sqrt(1.0 + 12.0 * SQRT3 / mu) - 1.0) / 2.0)


def p_star(mu: float) -> float:
    return float((np.sqrt(1.0 + 18.0 * SQRT3 / mu) - 1.0) / 2.0)


def omega_circ(p: float, mu: float) -> float:
    """Smallest omega/m at which the cone condition holds with t = omega."""
    c = mu * p * (p + 1.0)
    if p > p_circ(mu):
        return float(c / (c + 3.0 * SQRT3))
    return float(np.sqrt(c / (12.0 * SQRT3)))


def omega_star(p: float, mu: float) -> float:
    """Smallest omega/m at which the cone condition holds with t = m.

    This is the optimistic curve: it is a valid certificate only when L_0 has
    no eigenvalue in (0, m - omega), as for p = 1.
    """
    c = mu * p * (p + 1.0)
    if p > p_star(mu):
        return float((2.0 * c - 3.0 * SQRT3) / (2.0 * c + 3.0 * SQRT3))
    return float((np.sqrt(1.0 + 2.0 * c / (3.0 * SQRT3)) - 1.0) / 2.0)


def beta(p: float) -> float:
    """Physical (mu = 2) frequency threshold beta(p) = omega_circ(2, p)."""
    return omega_circ(p, 2.0)


def beta_thresholds(p: float, mu: float = 2.0) -> Thresholds:
    if not (p > 0 and mu > 0):
        raise ValueError("beta thresholds need p > 0 and mu > 0")
    return Thresholds(p, mu, beta(p), omega_circ(p, mu), omega_star(p, mu), p_circ(mu), p_star(mu))


# --- Vakhitov-Kolokolov derivative ------------------------------------------


@dataclass(frozen=True)
class VKResult:
    value: float  # d/domega ||phi_0||^2
    error: float
    sign: int  # 0 when |value| is within the error estimate
    f_prime: float


def _p_nu(nu: float, p: float, z):
    return (
        nu * nu * (2.0 * nu / p + 1.0 - nu) * z * z
        + nu * (1.0 + nu) * (2.0 / p + 4.0) * z
        + (nu + 2.0 / p - 1.0)
    )


def vk_quadrature(params: ModelParams, quad: QuadratureSpec | None = None) -> VKResult:
    """d/domega ||phi_0||^2 from d/dnu of ||phi_0||^2 = C F(nu) by quadrature.

    With y = tanh(p kappa x), ||phi_0||^2 = C F(nu) where
    C = m^(1/p - 1) 2^(1/p) (p+1)^(1/p) / p and F(nu) = int_0^1 h(nu, y) dy. The
    nu-derivative of h is integrated in its factored form, which keeps the
    (1 - y^2)^(1/p - 1) endpoint factor explicit, then d nu / d omega = -2m/(m+omega)^2.

    Raises
    ------
    QuadratureError
        If the quadrature does not converge.
    """
    p, m, nu = params.p, params.m, params.nu
    pref = nu ** (1.0 / p - 1.5) / (1.0 + nu) ** (1.0 / p)

    def integrand(y, ym):
        z = y * y
        one_minus_z = ym * (1.0 + y)
        return (
            pref
            * _p_nu(nu, p, z)
            / (2.0 * (1.0 - nu * z) ** (1.0 / p + 2.0) * one_minus_z ** (1.0 - 1.0 / p))
        )

    res: QuadratureResult = tanh_sinh(integrand, quad)
    c = m ** (1.0 / p - 1.0) * 2.0 ** (1.0 / p) * (p + 1.0) ** (1.0 / p) / p
    dnu = -2.0 * m / (m + params.omega) ** 2
    value = c * res.value * dnu
    error = abs(c * dnu) * res.error
    # rounding floor: a few ulps of the integrand scale
    error = max(error, 64.0 * np.finfo(float).eps * abs(value))
    sign = 0 if abs(value) <= error else int(np.sign(value))
    return VKResult(float(value), float(error), sign, float(res.value))


def vk_sign_change(p: float, lo: float, hi: float, m: float = 1.0, tol: float = 1e-4) -> float:
    """omega/m in [lo, hi] where the VK derivative changes sign, by bisection to ``tol``."""

    def val(w):
        return vk_quadrature(ModelParams(p=p, omega=w * m, m=m)).value

    flo, fhi = val(lo), val(hi)
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"no sign change of the VK derivative on [{lo}, {hi}] for p={p}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = val(mid)
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- region classification --------------------------------------------------

# improved t = m threshold for p = 1 at mu = 2: omega >= (sqrt(1 + 8/(3 sqrt 3)) - 1)/2
IMPROVED_BETA_1 = float((np.sqrt(1.0 + 8.0 / (3.0 * SQRT3)) - 1.0) / 2.0)


@dataclass(frozen=True)
class StabilityVerdict:
    p: float
    omega: float
    m: float
    mu: float
    vk_sign: int
    vk_value: float
    vk_error: float
    q_norm: float
    im_bound: float
    cone_ok: bool
    theta: float
    beta_ok: bool
    E_max: float
    t_used: float
    certified: bool

    def as_row(self) -> dict:
        return asdict(self)


def region_classify(p: float, omega: float, m: float = 1.0, mu: float = 2.0,
                    t: str = "auto", quad: QuadratureSpec | None = None) -> StabilityVerdict:
    """Verdict row combining the VK sign, the beta(p) test and the cone condition.

    ``t`` is "omega" (always valid), "m" (valid for p = 1 only) or "auto", which
    picks m for p = 1 and omega otherwise. ``certified`` means VK holds strictly
    and the cone condition holds, so H_mu has no nonzero purely imaginary
    eigenvalues.
    """
    params = ModelParams(p=p, omega=omega, m=m, mu=mu)
    if t == "auto":
        t = "m" if p == 1.0 else "omega"
    if t not in ("m", "omega"):
        raise ValueError(f"t must be 'm', 'omega' or 'auto', got {t!r}")
    if t == "m" and p != 1.0:
        raise ValueError("t = m is only justified for p = 1")
    t_val = m if t == "m" else omega
    try:
        vk = vk_quadrature(params, quad)
        vk_sign, vk_value, vk_err = vk.sign, vk.value, vk.error
    except QuadratureError as exc:
        vk_sign, vk_value, vk_err = 0, exc.value, exc.error
    cone = cone_condition(params, t_val)
    if t == "m" and mu == 2.0:
        beta_ok = omega >= IMPROVED_BETA_1 * m
    else:
        beta_ok = omega >= omega_circ(p, mu) * m
    e_max = certified_E(params, t_val)
    q = q_operator_norm(params)
    return StabilityVerdict(
        p, omega, m, mu, vk_sign, vk_value, vk_err, q, 0.5 * mu * q, cone.ok, cone.theta,
        bool(beta_ok), e_max, t_val, bool(vk_sign < 0 and cone.ok),
    )


REGION_HEADER = ["p", "omega_over_m", "vk_sign", "vk_value", "q_norm", "cone_ok", "beta_ok", "E_max_over_m", "certified"]


def fmt(x) -> str:
    """Fixed 12-significant-digit float formatting used in every CSV."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.12g" % x


def region_csv(verdicts: Iterable[StabilityVerdict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REGION_HEADER)
    for v in verdicts:
        w.writerow([fmt(v.p), fmt(v.omega / v.m), fmt(v.vk_sign), fmt(v.vk_value), fmt(v.q_norm),
                    fmt(v.cone_ok), fmt(v.beta_ok), fmt(v.E_max / v.m), fmt(v.certified)])
    return buf.getvalue()
