import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsxva.curves import (
    PartyCredit,
    RateCurve,
    discount_factor,
    flat_curve,
    integrated_rate,
    make_curve,
    party_curves,
    union_breakpoints,
    zero_curve,
)
from lsxva.errors import CurveError

rates = st.floats(-0.05, 0.2, allow_nan=False)
times = st.floats(0.0, 10.0, allow_nan=False)


@st.composite
def piecewise_curves(draw):
    n = draw(st.integers(1, 5))
    gaps = draw(st.lists(st.floats(0.05, 3.0), min_size=n - 1, max_size=n - 1))
    nodes_t = np.concatenate([[0.0], np.cumsum(gaps)])
    nodes_r = draw(st.lists(rates, min_size=n, max_size=n))
    return make_curve("piecewise", list(zip(nodes_t, nodes_r)))


def test_flat_discount_is_exponential():
    assert flat_curve(0.05).discount_factor(0.0, 2.0) == pytest.approx(math.exp(-0.1), abs=1e-15)


def test_piecewise_integral_by_hand():
    c = make_curve("piecewise", [(0.0, 0.02), (1.0, 0.04), (3.0, 0.01)])
    # 0.02*1 + 0.04*2 + 0.01*1.5
    assert c.integrated_rate(0.0, 4.5) == pytest.approx(0.115, abs=1e-15)
    assert c.integrated_rate(0.5, 2.0) == pytest.approx(0.01 + 0.04, abs=1e-15)
    assert c.short_rate(1.0) == 0.04  # left-closed intervals
    assert c.short_rate(0.999) == 0.02
    assert c.breakpoints == (1.0, 3.0)


def test_zero_length_interval():
    c = make_curve("piecewise", [(0.0, 0.02), (1.0, 0.04)])
    assert c.integrated_rate(1.0, 1.0) == 0.0
    assert c.discount_factor(0.7, 0.7) == 1.0


def test_average_rate():
    c = make_curve("piecewise", [(0.0, 0.02), (1.0, 0.04)])
    assert c.average_rate(0.0, 2.0) == pytest.approx(0.03, abs=1e-15)


@pytest.mark.parametrize(
    "nodes",
    [[], [(0.5, 0.01)], [(0.0, 0.01), (1.0, 0.02), (1.0, 0.03)], [(0.0, float("nan"))]],
)
def test_invalid_nodes(nodes):
    with pytest.raises(CurveError):
        make_curve("piecewise", nodes)


def test_unknown_kind():
    with pytest.raises(CurveError):
        make_curve("linear", [(0.0, 0.01)])


def test_backward_interval_rejected():
    with pytest.raises(CurveError):
        flat_curve(0.01).integrated_rate(2.0, 1.0)
    with pytest.raises(CurveError):
        flat_curve(0.01).integrated_rate(-1.0, 1.0)


def test_module_level_helpers():
    c = flat_curve(0.03)
    assert integrated_rate(c, 0.0, 2.0) == c.integrated_rate(0.0, 2.0)
    assert discount_factor(c, 1.0, 2.0) == c.discount_factor(1.0, 2.0)


def test_curve_arithmetic_merges_nodes():
    a = make_curve("piecewise", [(0.0, 0.01), (1.0, 0.02)])
    b = make_curve("piecewise", [(0.0, 0.005), (2.0, 0.0)])
    s = a + b
    assert s.node_times == (0.0, 1.0, 2.0)
    assert s.node_rates == pytest.approx((0.015, 0.025, 0.02))
    assert (s - b).integrated_rate(0.0, 5.0) == pytest.approx(a.integrated_rate(0.0, 5.0), abs=1e-15)
    assert zero_curve().is_zero()
    assert a.scaled(2.0).node_rates == (0.02, 0.04)


def test_party_curves_stack_spread_and_basis():
    base = flat_curve(0.05)
    syn, cash = party_curves(base, PartyCredit.flat(0.03, 0.005))
    assert syn.short_rate(0.0) == pytest.approx(0.08)
    assert cash.short_rate(0.0) == pytest.approx(0.085)


def test_party_validation_and_intensity():
    with pytest.raises(CurveError):
        PartyCredit.flat(-0.01)
    with pytest.raises(CurveError):
        PartyCredit.flat(0.01, recovery=1.5)
    p = PartyCredit.flat(0.03, 0.005, recovery=0.4)
    assert p.intensity().short_rate(0.0) == pytest.approx(0.05)
    assert p.synthetic_only().funding_basis.is_zero()
    assert PartyCredit.risk_free().synthetic_spread.is_zero()


def test_union_breakpoints():
    a = make_curve("piecewise", [(0.0, 0.01), (0.5, 0.02), (4.0, 0.0)])
    b = make_curve("piecewise", [(0.0, 0.01), (0.5, 0.03), (1.5, 0.0)])
    assert union_breakpoints([a, b], 2.0) == [0.5, 1.5]


@given(piecewise_curves(), times, times, times)
def test_integral_additivity(curve, a, b, c):
    t0, t1, t2 = sorted((a, b, c))
    lhs = curve.integrated_rate(t0, t2)
    rhs = curve.integrated_rate(t0, t1) + curve.integrated_rate(t1, t2)
    assert lhs == pytest.approx(rhs, abs=1e-12)


@given(piecewise_curves(), times, times)
def test_discount_factor_matches_midpoint_sum(curve, a, b):
    # oracle: midpoint sum of the short rate; only cells straddling a
    # breakpoint are inexact, each by at most jump * dt
    t0, t1 = sorted((a, b))
    grid = np.linspace(t0, t1, 20001)
    mid = 0.5 * (grid[1:] + grid[:-1])
    approx = np.sum(curve.short_rate(mid) * np.diff(grid))
    jump = np.ptp(curve.node_rates) if len(curve.node_rates) > 1 else 0.0
    tol = len(curve.breakpoints) * jump * (t1 - t0) / 20000 + 1e-12
    assert curve.integrated_rate(t0, t1) == pytest.approx(approx, abs=tol)


@settings(max_examples=50)
@given(piecewise_curves(), piecewise_curves(), times)
def test_sum_of_curves_integrates_to_sum(a, b, t):
    assert (a + b).integrated_rate(0.0, t) == pytest.approx(
        a.integrated_rate(0.0, t) + b.integrated_rate(0.0, t), abs=1e-12
    )


def test_vectorized_queries():
    c = make_curve("piecewise", [(0.0, 0.01), (1.0, 0.02)])
    t = np.array([0.0, 0.5, 1.0, 2.0])
    out = c.discount_factor(0.0, t)
    assert out.shape == (4,)
    assert np.all(np.diff(out) < 0)
    assert isinstance(c, RateCurve)
