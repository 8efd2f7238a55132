"""Theta-scheme finite differences with per-step regime (policy) iteration."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from ..curves import union_breakpoints
from ..errors import InstabilityError, PicardConvergenceError
from ..instruments import Instrument, payoff
from .coefficients import Mode, PdeCoefficients
from .grid import GridSpec, space_grid, time_grid

logger = logging.getLogger(__name__)

__all__ = ["ValueSurface", "solve_pde", "value_at", "delta_at"]

_TIME_EPS = 1e-12


@dataclass(frozen=True)
class ValueSurface:
    """Solved values on the ``(time, spot)`` grid, times ascending.

    For ``riskfree_closeout`` solves ``adjustment`` holds ``U = V* - V``.
    """

    times: np.ndarray
    spots: np.ndarray
    values: np.ndarray
    adjustment: np.ndarray | None = None
    picard_iterations: np.ndarray | None = None
    regime_mismatches: int = 0

    @property
    def maturity(self) -> float:
        return float(self.times[-1])

    def _check(self, t, s):
        if np.any(t < -_TIME_EPS) or np.any(t > self.times[-1] + _TIME_EPS):
            raise ValueError(f"time {t} outside surface domain [0, {self.times[-1]}]")
        if np.any(s < self.spots[0]) or np.any(s > self.spots[-1]):
            raise ValueError(f"spot {s} outside surface domain [{self.spots[0]}, {self.spots[-1]}]")

    def row_at(self, t: float, data: np.ndarray | None = None) -> np.ndarray:
        """Nodal values at time ``t`` (linear in time between levels)."""
        data = self.values if data is None else data
        times = self.times
        i = int(np.searchsorted(times, t))
        if i < len(times) and abs(times[i] - t) <= _TIME_EPS:
            return data[i]
        if i > 0 and abs(times[i - 1] - t) <= _TIME_EPS:
            return data[i - 1]
        if i == 0 or i == len(times):
            raise ValueError(f"time {t} outside surface domain")
        w = (t - times[i - 1]) / (times[i] - times[i - 1])
        return (1.0 - w) * data[i - 1] + w * data[i]

    def row_on(self, t: float, spots: np.ndarray) -> np.ndarray:
        row = self.row_at(t)
        if len(spots) == len(self.spots) and np.array_equal(spots, self.spots):
            return row
        return np.interp(spots, self.spots, row)

    def value_at(self, t: float, s):
        s_arr = np.asarray(s, dtype=float)
        self._check(t, s_arr)
        out = np.interp(s_arr, self.spots, self.row_at(t))
        return float(out) if out.ndim == 0 else out

    def nodal_delta(self, t: float) -> np.ndarray:
        row = self.row_at(t)
        s = self.spots
        d = np.empty_like(row)
        d[1:-1] = (row[2:] - row[:-2]) / (s[2:] - s[:-2])
        d[0] = (row[1] - row[0]) / (s[1] - s[0])
        d[-1] = (row[-1] - row[-2]) / (s[-1] - s[-2])
        return d

    def delta_at(self, t: float, s):
        s_arr = np.asarray(s, dtype=float)
        self._check(t, s_arr)
        out = np.interp(s_arr, self.spots, self.nodal_delta(t))
        return float(out) if out.ndim == 0 else out


def value_at(surface: ValueSurface, t: float, s):
    return surface.value_at(t, s)


def delta_at(surface: ValueSurface, t: float, s):
    return surface.delta_at(t, s)


class _Stencil:
    """Nonuniform three-point stencils with the linearity closure at S_max folded in."""

    def __init__(self, spots: np.ndarray, vol: float):
        n = len(spots) - 1
        m = n  # unknowns are nodes 0..n-1
        hm = spots[1:-1] - spots[:-2]
        hp = spots[2:] - spots[1:-1]
        s = spots[1:-1]
        self.diff = [np.zeros(m) for _ in range(3)]
        self.conv = [np.zeros(m) for _ in range(3)]
        half_var = 0.5 * vol * vol * s * s
        d2 = (2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp)))
        d1 = (-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp)))
        for k in range(3):
            self.diff[k][1:] = half_var * d2[k]
            self.conv[k][1:] = s * d1[k]
        # V_n = V_{n-1} + ratio (V_{n-1} - V_{n-2})
        self.ratio = (spots[n] - spots[n - 1]) / (spots[n - 1] - spots[n - 2])
        for parts in (self.diff, self.conv):
            up = parts[2][-1]
            parts[0][-1] -= up * self.ratio
            parts[1][-1] += up * (1.0 + self.ratio)
            parts[2][-1] = 0.0
        self.m = m

    def operator(self, mu: float):
        return tuple(self.diff[k] + mu * self.conv[k] for k in range(3))

    def extend(self, v: np.ndarray) -> np.ndarray:
        return np.append(v, v[-1] + self.ratio * (v[-1] - v[-2]))


def _apply(tri, v):
    lo, di, up = tri
    out = di * v
    out[1:] += lo[1:] * v[:-1]
    out[:-1] += up[:-1] * v[1:]
    return out


def _solve(tri, react, theta_dt, rhs):
    lo, di, up = tri
    m = len(rhs)
    ab = np.empty((3, m))
    ab[0, 0] = 0.0
    ab[0, 1:] = -theta_dt * up[:-1]
    ab[1] = 1.0 + theta_dt * (react - di)
    ab[2, :-1] = -theta_dt * lo[1:]
    ab[2, -1] = 0.0
    return solve_banded((1, 1), ab, rhs, check_finite=False)


class _Rates:
    __slots__ = ("mu", "rho", "fb", "fc", "fl", "lam")


def _step_rates(coeffs: PdeCoefficients, t0: float, t1: float) -> _Rates:
    r = _Rates()
    r.mu = coeffs.drift_rate.average_rate(t0, t1)
    r.rho = coeffs.base_discount.average_rate(t0, t1)
    r.fb = coeffs.payable_rate_or_spread.average_rate(t0, t1)
    r.fc = coeffs.receivable_rate_or_spread.average_rate(t0, t1)
    r.fl = coeffs.collateral_spread.average_rate(t0, t1)
    lam = coeffs.closeout_intensity_sum
    r.lam = lam.average_rate(t0, t1) if lam is not None else 0.0
    return r


def solve_pde(coeffs: PdeCoefficients, inst: Instrument, grid: GridSpec | None = None) -> ValueSurface:
    """Backward-induct the pricing PDE from the payoff to ``t = 0``.

    Each time step freezes the receivable/payable assignment of every node
    from the current iterate, solves the resulting tridiagonal system, and
    repeats until the assignment is stable (or the iterate moves by less
    than ``grid.picard_tol``). Nodes with value exactly 0 take the payable
    regime.
    """
    grid = grid or GridSpec()
    T = inst.maturity
    spots = space_grid(coeffs.spot, coeffs.diffusion_vol, T, inst.strikes, grid)
    levels, thetas = time_grid(T, grid, union_breakpoints(coeffs.curves(), T))
    st = _Stencil(spots, coeffs.diffusion_vol)
    m = st.m
    nodes = spots[:m]

    mode = coeffs.mode
    coll = coeffs.collateral
    closeout = mode is Mode.RISKFREE_CLOSEOUT
    self_collateral = coll.posted == "fraction_value"
    vstar = coeffs.riskfree_value_surface

    def collateral_level(t):
        if coll.posted == "constant":
            return np.full(m, coll.amount)
        if coll.posted == "fraction_riskfree":
            return coll.amount * vstar.row_on(t, spots)[:m]
        return None

    def reaction_source(v, t, rates, regime=None):
        """Reaction coefficient per node, source term, and the regime used."""
        lvl = collateral_level(t)
        if closeout:
            w = vstar.row_on(t, spots)[:m] - (lvl if lvl is not None else 0.0)
            src = rates.fc * np.maximum(w, 0.0) - rates.fb * np.maximum(-w, 0.0)
            if lvl is not None:
                src = src + rates.fl * lvl
            return np.full(m, rates.rho + rates.lam), src, None
        if regime is None:
            w = v if lvl is None else v - lvl
            regime = w > 0.0
        k = np.where(regime, rates.fc, rates.fb)
        if self_collateral:
            kappa = coll.amount
            return rates.rho + k * (1.0 - kappa) + rates.fl * kappa, np.zeros(m), regime
        if lvl is None:
            return rates.rho + k, np.zeros(m), regime
        return rates.rho + k, (k - rates.fl) * lvl, regime

    nlev = len(levels)
    out = np.empty((nlev, m + 1))
    if closeout:
        v = np.zeros(m)
    else:
        v = payoff(inst, nodes).astype(float)
    out[0] = st.extend(v)
    iters = np.zeros(nlev - 1, dtype=int)
    mismatches = 0

    for i in range(nlev - 1):
        t_a, t_b = levels[i], levels[i + 1]
        dt = t_a - t_b
        theta = thetas[i]
        rates = _step_rates(coeffs, t_b, t_a)
        tri = st.operator(rates.mu)

        react_a, src_a, _ = reaction_source(v, t_a, rates)
        rhs = v.copy()
        if theta < 1.0:
            rhs += (1.0 - theta) * dt * (_apply(tri, v) - react_a * v + src_a)

        switching = not closeout and (rates.fb != rates.fc)
        guess = v
        n_it = 0
        while True:
            n_it += 1
            react_b, src_b, regime = reaction_source(guess, t_b, rates)
            new = _solve(tri, react_b, theta * dt, rhs + theta * dt * src_b)
            if not np.all(np.isfinite(new)):
                raise InstabilityError(f"non-finite values at step {i} (t={t_b:.6g})")
            if not switching:
                break
            change = float(np.max(np.abs(new - guess)))
            _, _, new_regime = reaction_source(new, t_b, rates)
            if np.array_equal(new_regime, regime):
                break
            if change < grid.picard_tol:
                mismatches += int(np.count_nonzero(new_regime != regime))
                break
            if n_it >= grid.picard_max_iters:
                raise PicardConvergenceError(i, t_b, change, n_it)
            guess = new
        iters[i] = n_it
        v = new
        out[i + 1] = st.extend(v)

    logger.debug("solve_pde mode=%s levels=%d max picard=%d", mode.value, nlev, iters.max(initial=0))
    times = levels[::-1].copy()
    values = out[::-1].copy()
    adjustment = None
    if closeout:
        adjustment = values
        vs = np.vstack([vstar.row_on(t, spots) for t in times])
        values = vs - adjustment
    return ValueSurface(times, spots, values, adjustment, iters[::-1].copy(), mismatches)
