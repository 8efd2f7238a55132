"""Valuation adjustments: the curve-substitution ladder and quadrature formulas.

``decompose`` prices the trade five times, switching each party from the
risk-free curve to its synthetic (CDS-implied) curve and then to its cash
curve, counterparty first::

    CVA = P(r, r)     - P(r, r~c)
    DVA = P(r~b, r~c) - P(r, r~c)
    CFA = P(r~b, r~c) - P(r~b, rc)
    DFA = P(rb, rc)   - P(r~b, rc)

so that ``V = V* - CVA + DVA - CFA + DFA`` holds by construction. The
remaining functions evaluate the same adjustments by time quadrature for
single-signed trades, where the liability side never changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .curves import PartyCredit, RateCurve, party_curves, zero_curve
from .instruments import Instrument, MarketEnv, bs_delta, bs_price
from .pde import (
    NO_COLLATERAL,
    CollateralSpec,
    GridSpec,
    Mode,
    build_coefficients,
    riskfree_coefficients,
    solve_pde,
)
from .pde.solver import ValueSurface

__all__ = [
    "XvaReport",
    "ExposureProfile",
    "ZeroRecoveryAdjustments",
    "decompose",
    "riskfree_surface",
    "ladder_parties",
    "cra_integral",
    "zero_recovery_adjustments",
    "cva_closed_form",
    "exposure_profile",
    "tfc",
    "quadrature_times",
    "LADDER_LABELS",
]

LADDER_LABELS = (
    "p_rf_rf",
    "p_rf_syn",
    "p_syn_syn",
    "p_syn_cash",
    "p_cash_cash",
)


@dataclass(frozen=True)
class XvaReport:
    v_star: float
    v_tilde: float
    v_fair: float
    cva: float
    dva: float
    cfa: float
    dfa: float
    cra: float
    ladder: tuple[float, float, float, float, float]

    @classmethod
    def from_ladder(cls, ladder: Sequence[float]) -> XvaReport:
        p0, p1, p2, p3, p4 = (float(x) for x in ladder)
        return cls(
            v_star=p0,
            v_tilde=p2,
            v_fair=p4,
            cva=p0 - p1,
            dva=p2 - p1,
            cfa=p2 - p3,
            dfa=p4 - p3,
            cra=p0 - p4,
            ladder=(p0, p1, p2, p3, p4),
        )

    @property
    def bcva(self) -> float:
        return self.v_star - self.v_tilde

    @property
    def bfva(self) -> float:
        return self.v_tilde - self.v_fair

    @property
    def telescoping_residual(self) -> float:
        return self.v_fair - (self.v_star - self.cva + self.dva - self.cfa + self.dfa)

    def rows(self) -> list[tuple[str, float]]:
        head = [(name, getattr(self, name)) for name in
                ("v_star", "v_tilde", "v_fair", "cva", "dva", "cfa", "dfa", "cra")]
        return head + list(zip(LADDER_LABELS, self.ladder))


def ladder_parties(party_b: PartyCredit, party_c: PartyCredit) -> list[tuple[PartyCredit, PartyCredit]]:
    rf = PartyCredit.risk_free()
    b_syn, c_syn = party_b.synthetic_only(), party_c.synthetic_only()
    return [(rf, rf), (rf, c_syn), (b_syn, c_syn), (b_syn, party_c), (party_b, party_c)]


def riskfree_surface(market: MarketEnv, inst: Instrument, grid: GridSpec | None = None) -> ValueSurface:
    return solve_pde(riskfree_coefficients(market), inst, grid)


def decompose(
    market: MarketEnv,
    party_b: PartyCredit,
    party_c: PartyCredit,
    inst: Instrument,
    grid: GridSpec | None = None,
    mode: Mode | str = Mode.BASIC,
    collateral: CollateralSpec = NO_COLLATERAL,
    spot: float | None = None,
) -> XvaReport:
    """Run the five-solve ladder and assemble the adjustments at ``(0, spot)``."""
    mode = Mode(mode)
    spot = market.spot if spot is None else spot
    surface = None
    if mode is Mode.RISKFREE_CLOSEOUT or collateral.needs_riskfree_surface:
        surface = riskfree_surface(market, inst, grid)
    prices = []
    for b, c in ladder_parties(party_b, party_c):
        coeffs = build_coefficients(mode, market, b, c, collateral, surface)
        prices.append(solve_pde(coeffs, inst, grid).value_at(0.0, spot))
    return XvaReport.from_ladder(prices)


def quadrature_times(horizon: float, points: int = 200, curves: Sequence[RateCurve] = ()) -> np.ndarray:
    """Uniform grid on ``[0, horizon]`` with every curve breakpoint added."""
    if points < 2:
        raise ValueError("quadrature needs at least 2 points")
    base = np.linspace(0.0, horizon, points)
    extra = [t for c in curves for t in c.breakpoints if 0.0 < t < horizon]
    return np.unique(np.concatenate([base, extra]))


def _prepare_times(times, horizon, curves):
    if times is None:
        return quadrature_times(horizon, curves=curves)
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("quadrature times must be strictly increasing with at least 2 points")
    if t[0] < 0 or t[-1] > horizon + 1e-12:
        raise ValueError(f"quadrature times must lie in [0, {horizon}]")
    extra = [b for c in curves for b in c.breakpoints if t[0] < b < t[-1]]
    return np.unique(np.concatenate([t, extra]))


def _trapezoid(times: np.ndarray, rate: RateCurve, g: np.ndarray) -> float:
    """Trapezoid rule for ``rate(s) g(s)`` with ``rate`` constant on each panel.

    ``times`` must contain the breakpoints of ``rate`` so each panel sees a
    single rate value (taken from its left end).
    """
    widths = np.diff(times)
    panel_rate = np.asarray(rate.short_rate(times[:-1]))
    return float(np.sum(0.5 * widths * panel_rate * (g[:-1] + g[1:])))


def _single_sign(inst: Instrument) -> int:
    sign = inst.payoff_sign()
    if sign == 0:
        raise ValueError(
            "instrument changes sign; the liability side is path dependent, "
            "use decompose() for the CRA"
        )
    return sign


def cra_integral(market: MarketEnv, party_b: PartyCredit, party_c: PartyCredit,
                 inst: Instrument, quad_times=None) -> float:
    """Total adjustment ``V* - V`` at time 0 by quadrature in time.

    Valid for single-signed instruments only, where the effective discount
    rate is deterministic: the counterparty's cash curve for a receivable,
    own cash curve for a payable.
    """
    sign = _single_sign(inst)
    r = market.risk_free
    _, cash_b = party_curves(r, party_b)
    _, cash_c = party_curves(r, party_c)
    r_e = cash_c if sign > 0 else cash_b
    spread = r_e - r
    times = _prepare_times(quad_times, inst.maturity, [r, r_e])
    v0 = bs_price(inst, market, r, market.carry())
    # E[V*(s)] = V*(0) / DF_r(0, s)
    g = v0 / r.discount_factor(0.0, times) * r_e.discount_factor(0.0, times)
    return _trapezoid(times, spread, g)


class ZeroRecoveryAdjustments(NamedTuple):
    cva: float
    fva: float


def zero_recovery_adjustments(
    closeout: str,
    market: MarketEnv,
    party_b: PartyCredit,
    party_c: PartyCredit,
    inst: Instrument,
    quad_times=None,
) -> ZeroRecoveryAdjustments:
    """CVA and FVA of a receivable under zero recovery.

    ``closeout="liability_side"`` settles at the pre-default fair value:
    CVA discounts at ``r + lambda_c`` and CVA + FVA at the full cash curve.
    ``closeout="risk_free"`` settles at ``V*`` and discounts both terms with
    the joint survival ``r + lambda_c + lambda_b``.
    """
    if closeout not in ("liability_side", "risk_free"):
        raise ValueError(f"unknown close-out convention {closeout!r}")
    if party_c.recovery != 0.0 or (closeout == "risk_free" and party_b.recovery != 0.0):
        raise ValueError("zero_recovery_adjustments requires zero recovery")
    if _single_sign(inst) < 0:
        raise ValueError("zero_recovery_adjustments prices receivables (V* >= 0) only")

    r = market.risk_free
    lam_c = party_c.synthetic_spread
    eta_c = party_c.funding_basis
    lam_b = party_b.synthetic_spread
    times = _prepare_times(quad_times, inst.maturity, [r, lam_c, eta_c, lam_b])
    v0 = bs_price(inst, market, r, market.carry())
    epe = v0 / r.discount_factor(0.0, times)

    if closeout == "liability_side":
        cva = _trapezoid(times, lam_c, epe * (r + lam_c).discount_factor(0.0, times))
        full = lam_c + eta_c
        total = _trapezoid(times, full, epe * (r + full).discount_factor(0.0, times))
        return ZeroRecoveryAdjustments(cva, total - cva)

    joint = (r + lam_c + lam_b).discount_factor(0.0, times)
    return ZeroRecoveryAdjustments(
        _trapezoid(times, lam_c, epe * joint),
        _trapezoid(times, eta_c, epe * joint),
    )


def cva_closed_form(model: str, lambda_b: float, lambda_c: float,
                    recovery_b: float, recovery_c: float, horizon: float) -> float:
    """CVA / V* for flat hazard rates.

    ``"lsp"``: ``1 - exp(-lambda_c (1 - R_c) tau)``; ``"bk"`` adds the
    dealer's own ``lambda_b (1 - R_b)`` to the exponent.
    """
    if lambda_b < 0 or lambda_c < 0:
        raise ValueError("hazard rates must be non-negative")
    if not (0.0 <= recovery_b <= 1.0 and 0.0 <= recovery_c <= 1.0):
        raise ValueError("recoveries must lie in [0, 1]")
    exponent = lambda_c * (1.0 - recovery_c)
    if model == "bk":
        exponent += lambda_b * (1.0 - recovery_b)
    elif model != "lsp":
        raise ValueError(f"unknown closed-form model {model!r}")
    return -math.expm1(-exponent * horizon)


@dataclass(frozen=True)
class ExposureProfile:
    """Undiscounted expectations under Q at each time ``s``.

    ``expected_delta_notional`` is ``E[S_s * Delta(s, S_s)]``; the haircut
    is applied by :func:`tfc`.
    """

    times: np.ndarray
    epe: np.ndarray
    ene: np.ndarray
    expected_delta_notional: np.ndarray


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = leggauss(n)
    return _GL_CACHE[n]


def _lognormal_expectations(funcs, mean, sd, breaks, nodes, std_width=8.0):
    """Integrate each ``f(S)`` against the lognormal law ``log S ~ N(mean, sd^2)``.

    The log-spot range ``mean +/- std_width sd`` is split at ``breaks`` (log
    points where an integrand has a kink) and each piece gets ``nodes``
    Gauss-Legendre points.
    """
    lo, hi = mean - std_width * sd, mean + std_width * sd
    cuts = np.unique(np.clip(np.concatenate([[lo, hi], breaks]), lo, hi))
    x_ref, w_ref = _gauss_legendre(nodes)
    xs, ws = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 0:
            continue
        half = 0.5 * (b - a)
        xs.append(0.5 * (a + b) + half * x_ref)
        ws.append(half * w_ref)
    x = np.concatenate(xs)
    w = np.concatenate(ws) * np.exp(-0.5 * ((x - mean) / sd) ** 2) / (sd * math.sqrt(2.0 * math.pi))
    s = np.exp(x)
    return [float(np.dot(w, f(s))) for f in funcs]


def _sign_change_roots(f, lo, hi, samples=401):
    x = np.linspace(lo, hi, samples)
    y = f(x)
    roots = []
    for i in np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]:
        roots.append(brentq(f, x[i], x[i + 1], xtol=1e-14))
    return roots


def exposure_profile(market: MarketEnv, inst: Instrument, times, collateral_level: float = 0.0,
                     nodes: int = 64, delta=None) -> ExposureProfile:
    """Exposure of the risk-free value ``V*`` net of a constant collateral level.

    ``delta`` optionally overrides the analytic ``V*`` delta with a callable
    ``delta(s, spots)`` (for example read off a solved surface).
    """
    times = np.asarray(times, dtype=float)
    T = inst.maturity
    if np.any(times < 0) or np.any(times > T + 1e-12):
        raise ValueError(f"exposure times must lie in [0, {T}]")
    r = market.risk_free
    carry = market.carry()
    L = float(collateral_level)
    log_strikes = np.log([k for k in inst.strikes if k > 0]) if inst.strikes else np.array([])

    epe, ene, dn = (np.empty(len(times)) for _ in range(3))
    for i, s in enumerate(times):
        s = float(min(s, T))

        def value(spots, s=s):
            return bs_price(inst, market, r, carry, t=s, spot=spots)

        def delta_fn(spots, s=s):
            if delta is not None:
                return delta(s, spots)
            return bs_delta(inst, market, r, carry, t=s, spot=spots)

        if s == 0.0:
            v = value(market.spot)
            epe[i], ene[i] = max(v - L, 0.0), max(L - v, 0.0)
            dn[i] = market.spot * float(delta_fn(np.asarray(market.spot)))
            continue
        sd = market.vol * math.sqrt(s)
        mean = math.log(market.spot) + carry.integrated_rate(0.0, s) - 0.5 * sd * sd
        lo, hi = mean - 8.0 * sd, mean + 8.0 * sd
        roots = _sign_change_roots(lambda x: value(np.exp(x)) - L, lo, hi)
        breaks = np.concatenate([roots, log_strikes])
        epe[i], ene[i], dn[i] = _lognormal_expectations(
            [lambda S: np.maximum(value(S) - L, 0.0),
             lambda S: np.maximum(L - value(S), 0.0),
             lambda S: S * delta_fn(S)],
            mean, sd, breaks, nodes,
        )
    return ExposureProfile(times, epe, ene, dn)


def tfc(market: MarketEnv, inst: Instrument, haircut: float, treasury_spread: RateCurve,
        times=None, intensity_sum: RateCurve | None = None,
        surface: ValueSurface | None = None) -> float:
    """Treasury funding charge at time 0 for financing the haircut ``h S Delta``.

    Integrates ``(r_N - r) h E[S_u Delta_u]`` discounted at the risk-free
    curve and weighted by joint survival. Delta is the analytic ``V*``
    delta unless a solved ``surface`` is given.
    """
    if not 0.0 <= haircut < 1.0:
        raise ValueError(f"haircut must lie in [0, 1), got {haircut}")
    T = inst.maturity
    intensity_sum = intensity_sum or zero_curve()
    r = market.risk_free
    times = _prepare_times(times, T, [r, treasury_spread, intensity_sum])
    if haircut == 0.0 or all(
        treasury_spread.short_rate(t) == 0.0 for t in (0.0, *treasury_spread.breakpoints) if t < T
    ):
        return 0.0
    delta = None
    if surface is not None:
        lo, hi = surface.spots[0], surface.spots[-1]
        delta = lambda s, spots: surface.delta_at(s, np.clip(spots, lo, hi))  # noqa: E731
    profile = exposure_profile(market, inst, times, delta=delta)
    weight = r.discount_factor(0.0, times) * intensity_sum.discount_factor(0.0, times)
    return haircut * _trapezoid(times, treasury_spread, profile.expected_delta_notional * weight)
