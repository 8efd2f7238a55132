"""Coefficient bundles for the family of liability-side pricing PDEs.

All four modes share one operator shape::

    V_t + mu(t) S V_S + 1/2 sigma^2 S^2 V_SS - rho(t) V
        - k(t, W) W + source(t, S) = 0,        W = V - L

where ``k`` is the receivable rate when ``W > 0`` and the payable rate when
``W <= 0``. In ``basic`` mode ``rho = 0`` and the switching rates are full
cash rates; in ``collateral``/``generalized`` mode ``rho = r`` and they are
spreads over ``r``. ``riskfree_closeout`` mode solves for the adjustment
``U = V* - V`` instead, which is linear (see :func:`build_coefficients`).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING

from ..curves import PartyCredit, RateCurve, flat_curve, party_curves, zero_curve
from ..instruments import MarketEnv

if TYPE_CHECKING:
    from .solver import ValueSurface


class Mode(str, Enum):
    BASIC = "basic"
    COLLATERAL = "collateral"
    GENERALIZED = "generalized"
    RISKFREE_CLOSEOUT = "riskfree_closeout"


POSTED_KINDS = ("none", "constant", "fraction_riskfree", "fraction_value")


@dataclass(frozen=True)
class CollateralSpec:
    """Collateral and stock-financing terms.

    ``posted`` selects how the collateral balance ``L`` is set:

    * ``"none"`` -- ``L = 0``
    * ``"constant"`` -- ``L = amount``
    * ``"fraction_riskfree"`` -- ``L = amount * V*`` (needs a risk-free surface)
    * ``"fraction_value"`` -- ``L = amount * V`` against the solved value itself

    ``collateral_rate`` (``r_L``) and ``treasury_rate`` (``r_N``) default to
    the risk-free curve.
    """

    posted: str = "none"
    amount: float = 0.0
    collateral_rate: RateCurve | None = None
    haircut: float = 0.0
    treasury_rate: RateCurve | None = None

    def __post_init__(self):
        if self.posted not in POSTED_KINDS:
            raise ValueError(f"unknown collateral kind {self.posted!r}")
        if not 0.0 <= self.haircut < 1.0:
            raise ValueError(f"haircut must lie in [0, 1), got {self.haircut}")
        if self.posted.startswith("fraction") and not 0.0 <= self.amount <= 1.0:
            raise ValueError(f"collateral fraction must lie in [0, 1], got {self.amount}")

    @property
    def needs_riskfree_surface(self) -> bool:
        return self.posted == "fraction_riskfree"


NO_COLLATERAL = CollateralSpec()


@dataclass(frozen=True)
class PdeCoefficients:
    mode: Mode
    spot: float
    diffusion_vol: float
    drift_rate: RateCurve
    base_discount: RateCurve
    payable_rate_or_spread: RateCurve
    receivable_rate_or_spread: RateCurve
    collateral: CollateralSpec = NO_COLLATERAL
    collateral_spread: RateCurve = field(default_factory=zero_curve)
    closeout_intensity_sum: RateCurve | None = None
    riskfree_value_surface: ValueSurface | None = field(default=None, repr=False, compare=False)

    def curves(self) -> list[RateCurve]:
        out = [self.drift_rate, self.base_discount, self.payable_rate_or_spread,
               self.receivable_rate_or_spread, self.collateral_spread]
        if self.closeout_intensity_sum is not None:
            out.append(self.closeout_intensity_sum)
        return out

    def with_surface(self, surface: ValueSurface) -> PdeCoefficients:
        return replace(self, riskfree_value_surface=surface)


def collateral_drift(market: MarketEnv, collateral: CollateralSpec) -> RateCurve:
    """Drift ``(r - q) - gamma`` with ``gamma = (r_N - r) h + (1 + h)(r - r_s)``."""
    r = market.risk_free
    r_n = collateral.treasury_rate or r
    h = collateral.haircut
    gamma = (r_n - r).scaled(h) + (r - market.repo).scaled(1.0 + h)
    return r - flat_curve(market.dividend_yield) - gamma


def gamma_mapped_treasury_spread(market: MarketEnv, collateral: CollateralSpec) -> RateCurve:
    """Treasury spread ``f_N`` making the generalized drift equal the collateral drift.

    With ``N = h S V_S`` folded into the drift, ``(r_s - q) - f_N h`` equals
    ``(r - q) - gamma`` exactly when ``f_N = r_N - r_s``.
    """
    r_n = collateral.treasury_rate or market.risk_free
    return r_n - market.repo


def generalized_coefficients(
    market: MarketEnv,
    f_b: RateCurve,
    f_c: RateCurve,
    f_n: RateCurve | None = None,
    collateral: CollateralSpec = NO_COLLATERAL,
    riskfree_surface: ValueSurface | None = None,
) -> PdeCoefficients:
    """Coefficients for the generalized funding PDE with explicit spreads.

    ``f_n`` is the treasury funding spread charged on ``N = h S V_S``; it
    enters as ``-f_n * h`` in the drift.
    """
    f_n = f_n or zero_curve()
    r = market.risk_free
    drift = market.carry() - f_n.scaled(collateral.haircut)
    r_l = collateral.collateral_rate or r
    _check_surface(collateral, riskfree_surface)
    return PdeCoefficients(
        mode=Mode.GENERALIZED,
        spot=market.spot,
        diffusion_vol=market.vol,
        drift_rate=drift,
        base_discount=r,
        payable_rate_or_spread=f_b,
        receivable_rate_or_spread=f_c,
        collateral=collateral,
        collateral_spread=r_l - r,
        riskfree_value_surface=riskfree_surface,
    )


def hull_white_preset(market: MarketEnv, derivative_rate: RateCurve) -> PdeCoefficients:
    """``h = L = N = 0``, ``f_b = 0`` and ``f_c = r_d - r``."""
    return generalized_coefficients(market, zero_curve(), derivative_rate - market.risk_free)


def piterbarg_preset(market: MarketEnv, collateral: CollateralSpec,
                     riskfree_surface: ValueSurface | None = None) -> PdeCoefficients:
    """Collateral spread only: ``f_N = f_b = f_c = 0``."""
    return generalized_coefficients(market, zero_curve(), zero_curve(), zero_curve(),
                                    collateral, riskfree_surface)


def burgard_kjaer_preset(market: MarketEnv, lambda_b: float, lambda_c: float,
                         recovery_b: float, recovery_c: float) -> PdeCoefficients:
    """CDS-hedged bilateral setting with ``f_b = lambda_b R_b`` and ``f_c = lambda_c R_c``."""
    return generalized_coefficients(market, flat_curve(lambda_b * recovery_b),
                                    flat_curve(lambda_c * recovery_c))


def _check_surface(collateral: CollateralSpec, surface) -> None:
    if collateral.needs_riskfree_surface and surface is None:
        raise ValueError("collateral posted as a fraction of V* requires a risk-free value surface")


def build_coefficients(
    mode: Mode | str,
    market: MarketEnv,
    party_b: PartyCredit,
    party_c: PartyCredit,
    collateral: CollateralSpec = NO_COLLATERAL,
    riskfree_surface: ValueSurface | None = None,
) -> PdeCoefficients:
    mode = Mode(mode)
    r = market.risk_free
    _, cash_b = party_curves(r, party_b)
    _, cash_c = party_curves(r, party_c)

    if mode is Mode.BASIC:
        if collateral != NO_COLLATERAL:
            raise ValueError("basic mode takes no collateral; use mode 'collateral'")
        return PdeCoefficients(
            mode=mode,
            spot=market.spot,
            diffusion_vol=market.vol,
            drift_rate=market.carry(),
            base_discount=zero_curve(),
            payable_rate_or_spread=cash_b,
            receivable_rate_or_spread=cash_c,
        )

    r_l = collateral.collateral_rate or r
    if mode is Mode.COLLATERAL:
        _check_surface(collateral, riskfree_surface)
        return PdeCoefficients(
            mode=mode,
            spot=market.spot,
            diffusion_vol=market.vol,
            drift_rate=collateral_drift(market, collateral),
            base_discount=r,
            payable_rate_or_spread=cash_b - r,
            receivable_rate_or_spread=cash_c - r,
            collateral=collateral,
            collateral_spread=r_l - r,
            riskfree_value_surface=riskfree_surface,
        )

    if mode is Mode.GENERALIZED:
        return generalized_coefficients(
            market, cash_b - r, cash_c - r, gamma_mapped_treasury_spread(market, collateral),
            collateral, riskfree_surface,
        )

    # riskfree close-out: the solver integrates the linear U-equation
    if riskfree_surface is None:
        raise ValueError("riskfree_closeout mode requires the risk-free value surface V*")
    if collateral.haircut != 0.0:
        raise ValueError("riskfree_closeout mode assumes zero haircut")
    if collateral.posted == "fraction_value":
        raise ValueError("riskfree_closeout collateral must not reference the solved value")
    return PdeCoefficients(
        mode=mode,
        spot=market.spot,
        diffusion_vol=market.vol,
        drift_rate=market.carry(),
        base_discount=r,
        payable_rate_or_spread=cash_b - r,
        receivable_rate_or_spread=cash_c - r,
        collateral=collateral,
        collateral_spread=r_l - r,
        closeout_intensity_sum=party_b.intensity() + party_c.intensity(),
        riskfree_value_surface=riskfree_surface,
    )


def riskfree_coefficients(market: MarketEnv) -> PdeCoefficients:
    """Classical BSM coefficients (both parties risk-free)."""
    return build_coefficients(Mode.BASIC, market, PartyCredit.risk_free(), PartyCredit.risk_free())
