import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import ndtr

from lsxva.curves import PartyCredit, flat_curve, make_curve
from lsxva.instruments import Instrument, Leg, MarketEnv, bs_price
from lsxva.pde import Mode, build_coefficients, solve_pde
from lsxva.xva import (
    LADDER_LABELS,
    XvaReport,
    cra_integral,
    cva_closed_form,
    decompose,
    exposure_profile,
    ladder_parties,
    quadrature_times,
    riskfree_surface,
    tfc,
    zero_recovery_adjustments,
)

RF = PartyCredit.risk_free()
ladder_values = st.lists(st.floats(-100, 100, allow_nan=False), min_size=5, max_size=5)


@given(ladder_values)
def test_report_identities(ladder):
    rep = XvaReport.from_ladder(ladder)
    assert abs(rep.telescoping_residual) <= 1e-12 * (1 + max(map(abs, ladder)))
    assert rep.bcva == pytest.approx(rep.cva - rep.dva, abs=1e-10)
    assert rep.bfva == pytest.approx(rep.cfa - rep.dfa, abs=1e-10)
    assert rep.cra == pytest.approx(rep.bcva + rep.bfva, abs=1e-10)


def test_report_rows_order():
    rep = XvaReport.from_ladder([5.0, 4.0, 4.5, 4.2, 4.4])
    names = [n for n, _ in rep.rows()]
    assert names == ["v_star", "v_tilde", "v_fair", "cva", "dva", "cfa", "dfa", "cra", *LADDER_LABELS]
    assert dict(rep.rows())["cva"] == 1.0


def test_ladder_parties_order(dealer, counterparty):
    steps = ladder_parties(dealer, counterparty)
    assert steps[0] == (RF, RF)
    assert steps[1] == (RF, counterparty.synthetic_only())
    assert steps[4] == (dealer, counterparty)


def test_bond_adjustments_are_exponentials():
    m = MarketEnv.flat(100.0, 0.2, 0.05)
    rep = decompose(m, RF, PartyCredit.flat(0.03, 0.005), Instrument.cash_note(1.0, 1.0))
    assert rep.v_star == pytest.approx(math.exp(-0.05), abs=1e-7)
    assert rep.cva == pytest.approx(math.exp(-0.05) - math.exp(-0.08), abs=1e-7)
    assert rep.cfa == pytest.approx(math.exp(-0.08) - math.exp(-0.085), abs=1e-7)
    assert rep.dva == 0.0 and rep.dfa == 0.0


def test_pure_receivable_has_no_own_credit_terms(market, dealer, counterparty):
    call = Instrument(1.0, (Leg("call", 45.0),))
    rep = decompose(market, dealer, counterparty, call)
    assert abs(rep.dva) < 1e-12 and abs(rep.dfa) < 1e-12


def test_pure_payable_has_no_counterparty_terms(market, dealer, counterparty):
    put = Instrument(1.0, (Leg("put", 55.0, -1.0),))
    rep = decompose(market, dealer, counterparty, put)
    assert abs(rep.cva) < 1e-12 and abs(rep.cfa) < 1e-12
    assert rep.dva > 0 and rep.dfa > 0


@pytest.mark.parametrize("inst", [Instrument(1.0, (Leg("call", 45.0),)), Instrument(2.0, (Leg("put", 50.0, -1.0),))])
def test_cra_integral_matches_ladder(market, dealer, counterparty, inst):
    rep = decompose(market, dealer, counterparty, inst)
    assert cra_integral(market, dealer, counterparty, inst) == pytest.approx(rep.cra, abs=5e-5)


def test_cra_integral_rejects_mixed(market, dealer, counterparty, shifted_forward):
    with pytest.raises(ValueError, match="changes sign"):
        cra_integral(market, dealer, counterparty, shifted_forward)


def test_cra_integral_piecewise_spread():
    # receivable note: CRA = e^{-rT} - e^{-int r_c}
    m = MarketEnv.flat(100.0, 0.2, 0.04)
    c = PartyCredit(make_curve("piecewise", [(0.0, 0.01), (0.7, 0.03)]), flat_curve(0.002))
    note = Instrument.cash_note(1.0, 2.0)
    exact = math.exp(-0.08) - math.exp(-0.08 - (0.007 + 0.039) - 0.004)
    assert cra_integral(m, RF, c, note) == pytest.approx(exact, abs=2e-5)


def _note_closed_forms(r, lam_c, eta_c, lam_b, T):
    df = math.exp(-r * T)
    liab = (df * (1 - math.exp(-lam_c * T)), df * (math.exp(-lam_c * T) - math.exp(-(lam_c + eta_c) * T)))
    joint = lam_c + lam_b
    rf = (df * lam_c / joint * (1 - math.exp(-joint * T)), df * eta_c / joint * (1 - math.exp(-joint * T)))
    return liab, rf


@pytest.mark.parametrize("lam_b", [0.0, 0.005, 0.02])
def test_zero_recovery_note_closed_forms(lam_b):
    m = MarketEnv.flat(100.0, 0.2, 0.05)
    b, c = PartyCredit.flat(lam_b), PartyCredit.flat(0.03, 0.005)
    note = Instrument.cash_note(1.0, 1.0)
    liab, rf = _note_closed_forms(0.05, 0.03, 0.005, lam_b, 1.0)
    got_l = zero_recovery_adjustments("liability_side", m, b, c, note)
    got_r = zero_recovery_adjustments("risk_free", m, b, c, note)
    # trapezoid on 200 panels
    assert got_l == pytest.approx(liab, abs=1e-7)
    assert got_r == pytest.approx(rf, abs=1e-7)


def test_zero_recovery_guards(market, dealer, counterparty, shifted_forward):
    note = Instrument.cash_note()
    with pytest.raises(ValueError):
        zero_recovery_adjustments("isda", market, dealer, counterparty, note)
    with pytest.raises(ValueError):
        zero_recovery_adjustments("risk_free", market, dealer, PartyCredit.flat(0.03, recovery=0.4), note)
    with pytest.raises(ValueError):
        zero_recovery_adjustments("risk_free", market, dealer, counterparty, Instrument.cash_note(-1.0))


def test_riskfree_closeout_fd_matches_quadrature(market):
    b, c = PartyCredit.flat(0.005), PartyCredit.flat(0.03, 0.005)
    call = Instrument(1.0, (Leg("call", 45.0),))
    surf = riskfree_surface(market, call)
    u = solve_pde(build_coefficients(Mode.RISKFREE_CLOSEOUT, market, b, c, riskfree_surface=surf), call)
    q = zero_recovery_adjustments("risk_free", market, b, c, call, quadrature_times(1.0, 2000))
    assert u.adjustment[0][np.searchsorted(u.spots, 50.0)] == pytest.approx(q.cva + q.fva, abs=1e-4)
    assert u.value_at(0.0, 50.0) == pytest.approx(surf.value_at(0.0, 50.0) - q.cva - q.fva, abs=1e-4)


def test_cva_closed_form_values():
    assert cva_closed_form("lsp", 0.0, 0.05, 0.4, 0.4, 5.0) == pytest.approx(1 - math.exp(-0.15), abs=1e-15)
    assert cva_closed_form("bk", 0.02, 0.0, 0.4, 0.4, 5.0) == pytest.approx(0.058235, abs=5e-7)
    assert cva_closed_form("lsp", 0.3, 0.0, 0.4, 0.4, 5.0) == 0.0
    with pytest.raises(ValueError):
        cva_closed_form("hw", 0.0, 0.05, 0.4, 0.4, 5.0)
    with pytest.raises(ValueError):
        cva_closed_form("lsp", -0.01, 0.05, 0.4, 0.4, 5.0)


@given(st.floats(0, 0.2), st.floats(0, 0.2), st.floats(0, 1), st.floats(0, 1), st.floats(0.1, 10))
def test_bk_dominates_lsp(lb, lc, rb, rc, T):
    assert cva_closed_form("bk", lb, lc, rb, rc, T) >= cva_closed_form("lsp", lb, lc, rb, rc, T)


def test_exposure_martingale_identity(market, shifted_forward):
    times = np.array([0.0, 0.25, 0.5, 0.9])
    prof = exposure_profile(market, shifted_forward, times)
    v0 = bs_price(shifted_forward, market, market.risk_free, market.carry())
    assert prof.epe - prof.ene == pytest.approx(v0 * np.exp(0.05 * times), abs=1e-9)


def test_terminal_exposure_of_shifted_forward(market, shifted_forward):
    # payoff+ = 2 (S - 50)+ - (S - 55)+, undiscounted under Q
    prof = exposure_profile(market, shifted_forward, [1.0])
    undisc = MarketEnv(market.spot, market.vol, flat_curve(0.0), market.repo)
    expected = (2 * bs_price(Instrument(1.0, (Leg("call", 50.0),)), undisc, flat_curve(0.0), market.carry())
                - bs_price(Instrument(1.0, (Leg("call", 55.0),)), undisc, flat_curve(0.0), market.carry()))
    assert prof.epe[0] == pytest.approx(expected, abs=1e-9)


def test_collateral_level_shifts_exposure(market, shifted_forward):
    a = exposure_profile(market, shifted_forward, [0.5], collateral_level=0.0)
    b = exposure_profile(market, shifted_forward, [0.5], collateral_level=2.0)
    # E[(V-L)+] - E[(L-V)+] = E[V] - L
    assert (b.epe - b.ene)[0] == pytest.approx((a.epe - a.ene)[0] - 2.0, abs=1e-9)


def test_tfc_call_closed_form(market):
    call = Instrument(1.0, (Leg("call", 45.0),))
    b = 0.045
    d1 = (math.log(50 / 45) + b + 0.125) / 0.5
    exact = 0.25 * 0.01 * 1.0 * 50.0 * ndtr(d1) * math.exp(b - 0.05)
    assert tfc(market, call, 0.25, flat_curve(0.01)) == pytest.approx(exact, abs=1e-8)


def test_tfc_vanishes_exactly(market, shifted_forward):
    assert tfc(market, shifted_forward, 0.0, flat_curve(0.01)) == 0.0
    assert tfc(market, shifted_forward, 0.3, flat_curve(0.0)) == 0.0


def test_tfc_with_solved_surface(market):
    call = Instrument(1.0, (Leg("call", 45.0),))
    surf = riskfree_surface(market, call)
    a = tfc(market, call, 0.25, flat_curve(0.01), quadrature_times(1.0, 50))
    b = tfc(market, call, 0.25, flat_curve(0.01), quadrature_times(1.0, 50), surface=surf)
    assert b == pytest.approx(a, rel=2e-3)


def test_quadrature_times_include_breakpoints():
    c = make_curve("piecewise", [(0.0, 0.01), (0.333, 0.02)])
    t = quadrature_times(1.0, 11, [c])
    assert 0.333 in t and t[0] == 0.0 and t[-1] == 1.0
    with pytest.raises(ValueError):
        quadrature_times(1.0, 1)
