import pytest

from lsxva.curves import PartyCredit, party_curves
from lsxva.instruments import Instrument, Leg, MarketEnv, bs_price
from lsxva.lattice import LatticeSpec, lattice_price

RF = PartyCredit.risk_free()


def test_riskfree_tree_matches_black_scholes(market, shifted_forward):
    ref = bs_price(shifted_forward, market, market.risk_free, market.carry())
    assert lattice_price(market, RF, RF, shifted_forward) == pytest.approx(ref, abs=1e-5)


@pytest.mark.parametrize("strike", [40.0, 50.0, 63.0])
def test_receivable_tree_discounts_at_counterparty_rate(market, dealer, counterparty, strike):
    call = Instrument(1.5, (Leg("call", strike),))
    _, cash_c = party_curves(market.risk_free, counterparty)
    ref = bs_price(call, market, cash_c, market.carry())
    assert lattice_price(market, dealer, counterparty, call) == pytest.approx(ref, rel=1e-5)


def test_worked_example_fair_value(market, dealer, counterparty, shifted_forward):
    # quoted fair value 1.3577
    v = lattice_price(market, dealer, counterparty, shifted_forward)
    assert v == pytest.approx(1.3577, abs=2e-3)


def test_extrapolation_tightens_the_estimate(market, dealer, counterparty, shifted_forward):
    fine = lattice_price(market, dealer, counterparty, shifted_forward, LatticeSpec(8000))
    plain = lattice_price(market, dealer, counterparty, shifted_forward, LatticeSpec(1000, extrapolate=False))
    rich = lattice_price(market, dealer, counterparty, shifted_forward, LatticeSpec(1000))
    assert abs(rich - fine) < abs(plain - fine)


def test_probability_outside_unit_interval_raises():
    m = MarketEnv.flat(50.0, 0.01, 0.5)
    with pytest.raises(ValueError, match="outside"):
        lattice_price(m, RF, RF, Instrument(1.0, (Leg("call", 50.0),)), LatticeSpec(1, extrapolate=False))


def test_single_step_tree_runs():
    m = MarketEnv.flat(50.0, 0.3, 0.01)
    v = lattice_price(m, RF, RF, Instrument.cash_note(1.0, 0.5), LatticeSpec(1, extrapolate=False))
    assert v == pytest.approx(0.99501247919268, abs=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        LatticeSpec(0)
    with pytest.raises(ValueError):
        LatticeSpec(10.5)
