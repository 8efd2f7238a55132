"""European single-stock payoffs and the analytic Black-Scholes reference."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .curves import RateCurve, flat_curve, zero_curve

__all__ = ["Leg", "Instrument", "MarketEnv", "payoff", "bs_price", "bs_delta", "LEG_KINDS"]

LEG_KINDS = ("call", "put", "forward", "cash")


@dataclass(frozen=True)
class Leg:
    kind: str
    strike: float = 0.0
    quantity: float = 1.0

    def __post_init__(self):
        if self.kind not in LEG_KINDS:
            raise ValueError(f"unknown leg kind {self.kind!r}; expected one of {LEG_KINDS}")
        if not (np.isfinite(self.strike) and np.isfinite(self.quantity)):
            raise ValueError("leg strike and quantity must be finite")
        if self.kind != "cash" and self.strike < 0:
            raise ValueError("strike must be non-negative")


@dataclass(frozen=True)
class Instrument:
    maturity: float
    legs: tuple[Leg, ...]

    def __post_init__(self):
        legs = tuple(self.legs)
        if not legs:
            raise ValueError("instrument needs at least one leg")
        if not self.maturity > 0:
            raise ValueError(f"maturity must be positive, got {self.maturity}")
        object.__setattr__(self, "legs", legs)

    @property
    def strikes(self) -> list[float]:
        return sorted({leg.strike for leg in self.legs if leg.kind in ("call", "put")})

    def negated(self) -> Instrument:
        return Instrument(self.maturity, tuple(Leg(l.kind, l.strike, -l.quantity) for l in self.legs))

    def payoff_sign(self) -> int:
        """+1 if the payoff is never negative, -1 if never positive, 0 if mixed.

        An identically zero payoff reports +1. Exact because the payoff is
        piecewise linear: it suffices to look at the kinks, S=0 and the
        slope at infinity.
        """
        probes = np.array([0.0, *self.strikes])
        values = payoff(self, probes)
        far_slope = sum(l.quantity for l in self.legs if l.kind in ("call", "forward"))
        nonneg = np.all(values >= 0) and far_slope >= 0
        nonpos = np.all(values <= 0) and far_slope <= 0
        if nonneg:
            return 1
        if nonpos:
            return -1
        return 0

    @classmethod
    def shifted_forward(cls, call_strike=45.0, put_strike=55.0, maturity=1.0) -> Instrument:
        return cls(maturity, (Leg("call", call_strike, 1.0), Leg("put", put_strike, -1.0)))

    @classmethod
    def cash_note(cls, quantity=1.0, maturity=1.0) -> Instrument:
        return cls(maturity, (Leg("cash", 0.0, quantity),))


@dataclass(frozen=True)
class MarketEnv:
    spot: float
    vol: float
    risk_free: RateCurve = field(default_factory=zero_curve)
    repo: RateCurve | None = None
    dividend_yield: float = 0.0

    def __post_init__(self):
        if not self.spot > 0:
            raise ValueError(f"spot must be positive, got {self.spot}")
        if not self.vol > 0:
            raise ValueError(f"vol must be positive, got {self.vol}")
        if self.dividend_yield < 0:
            raise ValueError("dividend yield must be non-negative")
        if self.repo is None:
            object.__setattr__(self, "repo", self.risk_free)

    @classmethod
    def flat(cls, spot, vol, rate, borrow_spread=0.0, dividend_yield=0.0) -> MarketEnv:
        return cls(spot, vol, flat_curve(rate), flat_curve(rate - borrow_spread), dividend_yield)

    def carry(self) -> RateCurve:
        """Stock drift under the pricing measure, ``r_s - q``."""
        return self.repo - flat_curve(self.dividend_yield)


def payoff(inst: Instrument, terminal_spot):
    s = np.asarray(terminal_spot, dtype=float)
    if np.any(s < 0):
        raise ValueError("terminal spot must be non-negative")
    total = np.zeros_like(s)
    for leg in inst.legs:
        if leg.kind == "call":
            total = total + leg.quantity * np.maximum(s - leg.strike, 0.0)
        elif leg.kind == "put":
            total = total + leg.quantity * np.maximum(leg.strike - s, 0.0)
        elif leg.kind == "forward":
            total = total + leg.quantity * (s - leg.strike)
        else:
            total = total + leg.quantity
    return float(total) if total.ndim == 0 else total


def _d1_d2(s, strike, carry_int, var):
    vol_sqrt = np.sqrt(var)
    with np.errstate(divide="ignore"):
        d1 = (np.log(s / strike) + carry_int + 0.5 * var) / vol_sqrt
    return d1, d1 - vol_sqrt


def bs_price(inst: Instrument, market: MarketEnv, discount: RateCurve, carry: RateCurve,
             t: float = 0.0, spot=None):
    """Generalized Black-Scholes value of ``inst`` at time ``t``.

    Discounting uses ``discount`` and the stock grows at ``carry``, both
    integrated exactly over ``[t, T]``. ``spot`` may be an array; defaults
    to ``market.spot``.
    """
    T = inst.maturity
    s = np.asarray(market.spot if spot is None else spot, dtype=float)
    if t >= T:
        return payoff(inst, s)
    tau = T - t
    df = discount.discount_factor(t, T)
    carry_int = carry.integrated_rate(t, T)
    fwd = s * np.exp(carry_int)
    var = market.vol**2 * tau
    total = np.zeros_like(s)
    for leg in inst.legs:
        q = leg.quantity
        if leg.kind == "cash":
            total = total + q * df
        elif leg.kind == "forward":
            total = total + q * df * (fwd - leg.strike)
        elif leg.strike == 0.0:
            # call struck at 0 is the forward; put is worthless
            if leg.kind == "call":
                total = total + q * df * fwd
        else:
            d1, d2 = _d1_d2(s, leg.strike, carry_int, var)
            call = df * (fwd * ndtr(d1) - leg.strike * ndtr(d2))
            if leg.kind == "call":
                total = total + q * call
            else:
                total = total + q * (call - df * (fwd - leg.strike))
    return float(total) if total.ndim == 0 else total


def bs_delta(inst: Instrument, market: MarketEnv, discount: RateCurve, carry: RateCurve,
             t: float = 0.0, spot=None):
    """Analytic spot delta matching :func:`bs_price`.

    At ``t >= T`` this is the payoff slope (right derivative at kinks).
    """
    T = inst.maturity
    s = np.asarray(market.spot if spot is None else spot, dtype=float)
    total = np.zeros_like(s)
    if t >= T:
        for leg in inst.legs:
            if leg.kind == "call":
                total = total + leg.quantity * (s >= leg.strike)
            elif leg.kind == "put":
                total = total - leg.quantity * (s < leg.strike)
            elif leg.kind == "forward":
                total = total + leg.quantity
        return float(total) if total.ndim == 0 else total
    tau = T - t
    carry_int = carry.integrated_rate(t, T)
    growth = discount.discount_factor(t, T) * np.exp(carry_int)
    var = market.vol**2 * tau
    for leg in inst.legs:
        q = leg.quantity
        if leg.kind == "forward" or (leg.kind == "call" and leg.strike == 0.0):
            total = total + q * growth
        elif leg.kind in ("call", "put") and leg.strike > 0.0:
            d1, _ = _d1_d2(s, leg.strike, carry_int, var)
            nd1 = ndtr(d1)
            total = total + q * growth * (nd1 if leg.kind == "call" else nd1 - 1.0)
    return float(total) if total.ndim == 0 else total


def legs_from_spec(items: Sequence[tuple[str, float, float]]) -> tuple[Leg, ...]:
    return tuple(Leg(kind, float(k), float(q)) for kind, k, q in items)
