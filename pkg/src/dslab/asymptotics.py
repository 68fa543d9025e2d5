"""Non-relativistic (omega -> m) eigenvalue ladder of L_mu and sup-norm identities.

In the limit kappa -> 0 the gap eigenvalues of L_mu above -2 omega follow the
Poschl-Teller levels of -d^2/dx^2 - s(s+1) sech^2 x after rescaling by p kappa.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from dslab.model import ModelParams
from dslab.operators import Grid, assemble_L
from dslab.spectra import hermitian_spectrum
from dslab.stability import fmt


def s_parameter(p: float, mu: float) -> float:
    """Positive root s of s(s+1) = (p+1)(1 + p mu)/p^2."""
    if not (p > 0 and mu >= 0):
        raise ValueError("s_parameter needs p > 0 and mu >= 0")
    return float((np.sqrt(1.0 + 4.0 * (p + 1.0) * (1.0 + p * mu) / (p * p)) - 1.0) / 2.0)


def ceil_s(s: float) -> int:
    # guard against s = 2.0000000000000004 from rounding
    return int(math.ceil(s - 1e-12))


def pt_levels(s: float) -> np.ndarray:
    """Bound-state energies -(s + 1 - j)^2 / 2 for j = 1..ceil(s)."""
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    j = np.arange(1, ceil_s(s) + 1)
    return -((s + 1.0 - j) ** 2) / 2.0


def lambda_expansion(params: ModelParams, k: int) -> float:
    """Leading-order lambda_k = (1 - p^2 (s + 1 - k)^2) kappa^2 / (2m).

    Raises
    ------
    ValueError
        For k outside 1..ceil(s); beyond the ladder only lambda >= m - omega is known.
    """
    s = s_parameter(params.p, params.mu)
    if not 1 <= k <= ceil_s(s):
        raise ValueError(f"k must lie in 1..{ceil_s(s)} for s = {s:.6g}, got {k}")
    return (1.0 - params.p**2 * (s + 1.0 - k) ** 2) * params.kappa**2 / (2.0 * params.m)


@dataclass(frozen=True)
class ExpansionLadder:
    s_param: float
    levels: list  # (k, E_k, lambda_k)
    ceil_s: int


def expansion_ladder(params: ModelParams) -> ExpansionLadder:
    s = s_parameter(params.p, params.mu)
    e = pt_levels(s)
    levels = [(k, float(e[k - 1]), lambda_expansion(params, k)) for k in range(1, ceil_s(s) + 1)]
    return ExpansionLadder(s, levels, ceil_s(s))


def params_for_kappa(p: float, kappa_over_m: float, m: float = 1.0, mu: float = 2.0) -> ModelParams:
    kappa = kappa_over_m * m
    return ModelParams(p=p, omega=float(np.sqrt(m * m - kappa * kappa)), m=m, mu=mu)


@dataclass(frozen=True)
class LadderRow:
    p: float
    mu: float
    kappa_over_m: float
    k: int
    predicted: float
    computed: float | None
    rel_err: float | None
    count_ok: bool


@dataclass(frozen=True)
class LadderComparison:
    rows: list[LadderRow]
    computed: np.ndarray  # gap eigenvalues in [-2 omega, m - omega), ascending
    count_ok: bool
    next_ok: bool  # the eigenvalue after the ladder, if any, sits at or above m - omega up to slack
    message: str = ""


def compare_to_spectrum(params: ModelParams, grid: Grid | None = None, slack: float = 0.01) -> LadderComparison:
    """Pair the predicted ladder with computed gap eigenvalues of L_mu above -2 omega.

    lambda_0 = -2 omega is exact and excluded from the pairing. The count check
    requires at least ceil(s) eigenvalues strictly above -2 omega and at most 0
    at leading order; an eigenvalue beyond the ladder must satisfy
    lambda >= m - omega - slack kappa^2.
    """
    grid = grid or Grid.default(params)
    rep = hermitian_spectrum(assemble_L(params, grid, mu=params.mu))
    gp = np.sort(np.real(rep.gap_points()))
    tol = 1e-6 * params.m
    above = gp[gp > -2.0 * params.omega + tol]
    ladder = expansion_ladder(params)
    n = ladder.ceil_s
    count_ok = above.size >= n
    rows = []
    for k, _, pred in ladder.levels:
        comp = float(above[k - 1]) if k - 1 < above.size else None
        if comp is None:
            rel = None
        elif pred == 0.0 or abs(pred) < 1e-14 * params.m:
            rel = abs(comp)  # compare against the exact zero, not the expansion
        else:
            rel = abs(comp - pred) / abs(pred)
        rows.append(LadderRow(params.p, params.mu, params.kappa / params.m, k, pred, comp, rel, count_ok))
    next_ok = True
    if above.size > n:
        next_ok = bool(above[n] >= params.m - params.omega - slack * params.kappa**2)
    msg = "" if count_ok else f"found {above.size} eigenvalues above -2 omega, expected at least {n}"
    return LadderComparison(rows, above, bool(count_ok), next_ok, msg)


LADDER_HEADER = ["p", "mu", "kappa_over_m", "k", "predicted", "computed", "rel_err", "count_ok"]


def ladder_csv(comparisons) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LADDER_HEADER)
    for c in comparisons:
        for r in c.rows:
            w.writerow([fmt(r.p), fmt(r.mu), fmt(r.kappa_over_m), fmt(r.k), fmt(r.predicted),
                        "" if r.computed is None else fmt(r.computed),
                        "" if r.rel_err is None else fmt(r.rel_err), fmt(r.count_ok and c.next_ok)])
    return buf.getvalue()


# --- sup-norm identities in the rescaled variable ----------------------------


@dataclass(frozen=True)
class SupPair:
    name: str
    closed_form: float
    grid_max: float
    argmax: float  # rescaled position of the polished maximum
    analytic_argmax: float

    @property
    def rel_err(self) -> float:
        return abs(self.closed_form - self.grid_max) / abs(self.closed_form)


def _rescaled_terms(params: ModelParams):
    """The four even profile expressions as functions of the rescaled x~ = p kappa x."""
    p, m, w, nu = params.p, params.m, params.omega, params.nu
    amp = params.amplitude
    kappa = params.kappa

    def dens(xt):
        t2 = np.tanh(xt) ** 2
        return amp * (1.0 - t2) / (1.0 - nu * t2)

    def cross(xt):
        # (v^2 - u^2)^(p-1) u v with u = sqrt(nu) T v and v^2 = dens^(1/p) / (1 - nu T^2)
        t = np.tanh(xt)
        return amp * np.sqrt(nu) * t * (1.0 - t * t) / (1.0 - nu * t * t) ** 2

    def lower_sq(xt):
        t2 = np.tanh(xt) ** 2
        return amp * nu * t2 * (1.0 - t2) / (1.0 - nu * t2) ** 2

    def remainder(xt):
        return dens(xt) - (p + 1.0) * kappa**2 / (2.0 * m * np.cosh(xt) ** 2)

    return dens, cross, lower_sq, remainder


def sup_norm_pairs(params: ModelParams, n_grid: int = 100_000, x_max: float = 25.0) -> list[SupPair]:
    """Closed-form suprema of four profile expressions against polished grid maxima.

    The expressions are (v^2-u^2)^p, (v^2-u^2)^(p-1) u v, (v^2-u^2)^(p-1) u^2 and
    (v^2-u^2)^p - (p+1) kappa^2 / (2m cosh^2), each as a function of x~ = p kappa x.
    """
    m, w, nu = params.m, params.omega, params.nu
    amp = params.amplitude
    y3 = (-3.0 * (1.0 - nu) + np.sqrt(9.0 * (1.0 - nu) ** 2 + 4.0 * nu)) / (2.0 * nu)
    closed = [
        amp,
        amp * np.sqrt(nu) * np.sqrt(y3) * (1.0 - y3) / (1.0 - nu * y3) ** 2,
        (params.p + 1.0) * (m - w) ** 2 / (8.0 * w),
        (params.p + 1.0) * params.kappa**2 / m * (np.sqrt(m) - np.sqrt(w)) / (np.sqrt(m) + np.sqrt(w)),
    ]
    where = [
        0.0,
        float(np.arctanh(np.sqrt(y3))),
        float(np.arctanh(np.sqrt(1.0 / (2.0 - nu)))),
        float(np.arccosh(np.sqrt((1.0 + np.sqrt(m / w)) / 2.0))),
    ]
    names = ["density", "cross", "lower_sq", "remainder"]
    xs = np.linspace(0.0, x_max, n_grid)
    dx = xs[1] - xs[0]
    out = []
    for name, fn, cf, xa in zip(names, _rescaled_terms(params), closed, where):
        vals = fn(xs)
        i = int(np.argmax(vals))
        a, b = max(0.0, xs[i] - dx), min(x_max, xs[i] + dx)
        res = minimize_scalar(lambda t: -fn(t), bounds=(a, b), method="bounded", options={"xatol": 1e-14})
        best, arg = (vals[i], xs[i]) if vals[i] >= -res.fun else (-res.fun, res.x)
        out.append(SupPair(name, float(cf), float(best), float(arg), xa))
    return out
