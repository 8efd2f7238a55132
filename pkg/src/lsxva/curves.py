"""Deterministic short-rate term structures.

Every rate in the engine (risk-free, repo, synthetic and cash funding,
collateral, treasury) is a :class:`RateCurve`: a continuously-compounded
short rate that is piecewise constant on left-closed intervals
``[t_i, t_{i+1})`` with the last rate extending to infinity. Integrals are
therefore closed-form and discounting is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CurveError

__all__ = [
    "RateCurve",
    "PartyCredit",
    "make_curve",
    "flat_curve",
    "zero_curve",
    "integrated_rate",
    "discount_factor",
    "party_curves",
]


@dataclass(frozen=True)
class RateCurve:
    node_times: tuple[float, ...]
    node_rates: tuple[float, ...]
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        times = tuple(float(t) for t in self.node_times)
        rates = tuple(float(r) for r in self.node_rates)
        if not times:
            raise CurveError("a curve needs at least one node")
        if len(times) != len(rates):
            raise CurveError("node_times and node_rates differ in length")
        if times[0] != 0.0:
            raise CurveError(f"first node time must be 0, got {times[0]}")
        if not all(np.isfinite(times)) or not all(np.isfinite(rates)):
            raise CurveError("curve nodes must be finite")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise CurveError(f"node times must be strictly increasing: {times}")
        object.__setattr__(self, "node_times", times)
        object.__setattr__(self, "node_rates", rates)
        t = np.asarray(times)
        r = np.asarray(rates)
        cum = np.concatenate([[0.0], np.cumsum(np.diff(t) * r[:-1])])
        cum.setflags(write=False)
        object.__setattr__(self, "_cum", cum)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Times (excluding 0) at which the short rate may jump."""
        return self.node_times[1:]

    def short_rate(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.node_times, t, side="right") - 1
        out = np.asarray(self.node_rates)[np.clip(idx, 0, None)]
        return float(out) if out.ndim == 0 else out

    def _cumulative(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise CurveError("curve queried at negative time")
        times = np.asarray(self.node_times)
        idx = np.searchsorted(times, t, side="right") - 1
        return self._cum[idx] + np.asarray(self.node_rates)[idx] * (t - times[idx])

    def integrated_rate(self, t0, t1):
        """Exact integral of the short rate over ``[t0, t1]``."""
        t0 = np.asarray(t0, dtype=float)
        t1 = np.asarray(t1, dtype=float)
        if np.any(t1 < t0):
            raise CurveError(f"integration interval reversed: t1 < t0 ({t1} < {t0})")
        out = np.where(t1 == t0, 0.0, self._cumulative(t1) - self._cumulative(t0))
        return float(out) if out.ndim == 0 else out

    def discount_factor(self, t0, t1):
        out = np.exp(-np.asarray(self.integrated_rate(t0, t1)))
        return float(out) if out.ndim == 0 else out

    def average_rate(self, t0: float, t1: float) -> float:
        """Mean short rate over ``[t0, t1]``; the short rate at ``t0`` if empty."""
        if t1 == t0:
            return float(self.short_rate(t0))
        return self.integrated_rate(t0, t1) / (t1 - t0)

    def is_zero(self) -> bool:
        return all(r == 0.0 for r in self.node_rates)

    def _combine(self, other: RateCurve, sign: float) -> RateCurve:
        times = sorted(set(self.node_times) | set(other.node_times))
        rates = [self.short_rate(t) + sign * other.short_rate(t) for t in times]
        return RateCurve(tuple(times), tuple(rates))

    def __add__(self, other: RateCurve) -> RateCurve:
        if not isinstance(other, RateCurve):
            return NotImplemented
        return self._combine(other, 1.0)

    def __sub__(self, other: RateCurve) -> RateCurve:
        if not isinstance(other, RateCurve):
            return NotImplemented
        return self._combine(other, -1.0)

    def scaled(self, factor: float) -> RateCurve:
        return RateCurve(self.node_times, tuple(factor * r for r in self.node_rates))

    def min_rate(self) -> float:
        return min(self.node_rates)


def make_curve(kind: str, nodes: Sequence[tuple[float, float]]) -> RateCurve:
    """Build a curve from ``(time, rate)`` nodes.

    ``kind="flat"`` takes exactly one node at time 0; ``"piecewise"`` takes
    any number with strictly increasing times starting at 0.
    """
    nodes = list(nodes)
    if not nodes:
        raise CurveError("empty node list")
    if kind == "flat":
        if len(nodes) != 1:
            raise CurveError("a flat curve takes a single (0, rate) node")
    elif kind != "piecewise":
        raise CurveError(f"unknown curve kind {kind!r}")
    times, rates = zip(*nodes)
    return RateCurve(tuple(times), tuple(rates))


def flat_curve(rate: float) -> RateCurve:
    return RateCurve((0.0,), (float(rate),))


def zero_curve() -> RateCurve:
    return flat_curve(0.0)


def integrated_rate(curve: RateCurve, t0, t1):
    return curve.integrated_rate(t0, t1)


def discount_factor(curve: RateCurve, t0, t1):
    return curve.discount_factor(t0, t1)


@dataclass(frozen=True)
class PartyCredit:
    """Credit and funding profile of one party.

    ``synthetic_spread`` is the CDS-implied spread over the risk-free curve
    (``lambda * (1 - R)``, equal to the intensity under zero recovery) and
    ``funding_basis`` the extra cash-bond spread on top of it. ``recovery``
    only enters the Burgard-Kjaer comparison formulas and the conversion to
    default intensity.
    """

    synthetic_spread: RateCurve = field(default_factory=zero_curve)
    funding_basis: RateCurve = field(default_factory=zero_curve)
    recovery: float = 0.0

    def __post_init__(self):
        if self.synthetic_spread.min_rate() < 0:
            raise CurveError("synthetic spread must be non-negative")
        if self.funding_basis.min_rate() < 0:
            raise CurveError("funding basis must be non-negative")
        if not 0.0 <= self.recovery <= 1.0:
            raise CurveError(f"recovery must lie in [0, 1], got {self.recovery}")

    @classmethod
    def flat(cls, spread: float, basis: float = 0.0, recovery: float = 0.0) -> PartyCredit:
        return cls(flat_curve(spread), flat_curve(basis), recovery)

    @classmethod
    def risk_free(cls) -> PartyCredit:
        return cls()

    def synthetic_only(self) -> PartyCredit:
        """Same party with the funding basis removed."""
        return PartyCredit(self.synthetic_spread, zero_curve(), self.recovery)

    def intensity(self) -> RateCurve:
        """Default intensity ``spread / (1 - R)``."""
        if self.recovery >= 1.0:
            raise CurveError("intensity undefined at 100% recovery")
        return self.synthetic_spread.scaled(1.0 / (1.0 - self.recovery))


def party_curves(base: RateCurve, party: PartyCredit) -> tuple[RateCurve, RateCurve]:
    """Return ``(synthetic, cash)`` funding curves of ``party`` over ``base``."""
    synthetic = base + party.synthetic_spread
    return synthetic, synthetic + party.funding_basis


def union_breakpoints(curves: Iterable[RateCurve], horizon: float) -> list[float]:
    """Sorted curve breakpoints strictly inside ``(0, horizon)``."""
    pts = set()
    for c in curves:
        pts.update(t for t in c.breakpoints if 0.0 < t < horizon)
    return sorted(pts)
