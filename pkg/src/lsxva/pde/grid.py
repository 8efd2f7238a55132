from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import PchipInterpolator


@dataclass(frozen=True)
class GridSpec:
    """Discretization settings for :func:`~lsxva.pde.solve_pde`.

    ``rannacher_steps`` counts fully implicit half-steps taken at the start
    of the backward sweep (right after the payoff) before switching to
    ``scheme_theta``. ``space_concentration`` controls the sinh stretching
    of the spot grid around the spot (width ``c * spot * vol * sqrt(T)``);
    0 gives a piecewise-uniform grid.
    """

    num_space: int = 400
    num_time: int = 400
    space_max_multiplier: float = 5.0
    space_concentration: float = 1.0
    scheme_theta: float = 0.5
    rannacher_steps: int = 2
    picard_tol: float = 1e-10
    picard_max_iters: int = 50

    def __post_init__(self):
        if int(self.num_space) != self.num_space or self.num_space < 3:
            raise ValueError("num_space must be an integer >= 3")
        if int(self.num_time) != self.num_time or self.num_time < 2:
            raise ValueError("num_time must be an integer >= 2")
        if not self.space_max_multiplier > 0:
            raise ValueError("space_max_multiplier must be positive")
        if self.space_concentration < 0:
            raise ValueError("space_concentration must be >= 0")
        if not 0.0 <= self.scheme_theta <= 1.0:
            raise ValueError("scheme_theta must lie in [0, 1]")
        if self.rannacher_steps < 0:
            raise ValueError("rannacher_steps must be >= 0")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max_iters < 1:
            raise ValueError("picard_max_iters must be >= 1")

    def refined(self, factor: int = 2) -> GridSpec:
        return replace(self, num_space=self.num_space * factor, num_time=self.num_time * factor)


def space_grid(spot: float, vol: float, maturity: float, strikes, grid: GridSpec) -> np.ndarray:
    """Spot grid on ``[0, S_max]``, ``S_max = spot * exp(k vol sqrt(T))``.

    The spot is always a node, and so is every strike below the top two
    cells (which are reserved for the linearity closure at ``S_max``).
    """
    if grid.space_concentration > 0:
        return _stretched_grid(spot, vol, maturity, strikes, grid)
    return _piecewise_uniform_grid(spot, vol, maturity, strikes, grid)


def _s_max(spot, vol, maturity, grid):
    return spot * math.exp(grid.space_max_multiplier * vol * math.sqrt(maturity))


_MIN_PIN_RESOLUTION = 50


def _pin_resolution(n: int) -> int:
    """Coarsest ``m`` dividing ``n`` by halving, but not below ``_MIN_PIN_RESOLUTION``.

    Pins sit at multiples of ``1/m`` in the computational coordinate, so the
    grids of a doubling sequence share one map and are nested.
    """
    m = n
    while m % 2 == 0 and m // 2 >= _MIN_PIN_RESOLUTION:
        m //= 2
    return m


def _stretched_grid(spot, vol, maturity, strikes, grid):
    """``S = spot + a sinh(c1 + (c2 - c1) x(xi))`` on uniform ``xi`` in [0, 1].

    ``x(xi)`` is a monotone C1 cubic through the identity, nudged so that
    the spot and each strike sit exactly on a node. Pin positions in ``xi``
    depend only on :func:`_pin_resolution`, so doubling ``num_space`` refines
    the same smooth map.
    """
    n = grid.num_space
    s_max = _s_max(spot, vol, maturity, grid)
    a = grid.space_concentration * spot * vol * math.sqrt(maturity)
    c1 = math.asinh(-spot / a)
    c2 = math.asinh((s_max - spot) / a)
    m = _pin_resolution(n)

    knots_xi, knots_x = [0.0], [0.0]
    last = 0
    for p in sorted({float(spot), *(float(k) for k in strikes)}):
        x = (math.asinh((p - spot) / a) - c1) / (c2 - c1)
        j = max(round(m * x), last + 1)
        # keep the top two cells free for the linearity closure
        if p <= 0.0 or j > m - 2:
            if p == spot:
                raise ValueError(f"num_space={n} too small to place the spot")
            continue
        knots_xi.append(j / m)
        knots_x.append(x)
        last = j
    knots_xi.append(1.0)
    knots_x.append(1.0)
    x_of = PchipInterpolator(knots_xi, knots_x)
    xi = np.arange(n + 1) / n
    nodes = spot + a * np.sinh(c1 + (c2 - c1) * x_of(xi))
    nodes[0], nodes[-1] = 0.0, s_max
    # exact values at the pins
    for k, x in zip(knots_xi[1:-1], knots_x[1:-1]):
        nodes[round(k * n)] = spot + a * math.sinh(c1 + (c2 - c1) * x)
    if np.any(np.diff(nodes) <= 0):
        raise ValueError(f"num_space={n} too small to separate the spot and strikes")
    return nodes


def _piecewise_uniform_grid(spot, vol, maturity, strikes, grid):
    """Uniform spacing between consecutive pinned points.

    The spot and every strike below ``S_max`` are nodes. The grid is uniform
    between consecutive such points, with each segment getting a share of
    ``num_space`` intervals proportional to its length, so the spacing is
    close to ``S_max / num_space`` everywhere and only changes by a small
    ratio at the pinned points.
    """
    n = grid.num_space
    s_max = _s_max(spot, vol, maturity, grid)
    pins = sorted({0.0, float(spot), s_max} | {float(k) for k in strikes if 0.0 < k < s_max})
    lengths = np.diff(pins)
    if len(lengths) > n - 1:
        raise ValueError(f"num_space={n} too small for {len(pins)} pinned points")
    counts = np.maximum(1, np.round(lengths / lengths.sum() * n).astype(int))
    # absorb rounding in the longest segment so the total is exactly n
    counts[np.argmax(lengths)] += n - counts.sum()
    if counts.min() < 1:
        raise ValueError(f"num_space={n} too small for the pinned points")
    if counts[-1] < 2:
        # the closure at S_max needs two uniform intervals at the top
        j = int(np.argmax(counts[:-1]))
        counts[j] -= 1
        counts[-1] += 1
    pieces = [np.linspace(a, b, c + 1)[:-1] for a, b, c in zip(pins[:-1], pins[1:], counts)]
    nodes = np.concatenate(pieces + [[s_max]])
    for p in pins:
        nodes[np.argmin(np.abs(nodes - p))] = p
    return nodes


def time_grid(maturity: float, grid: GridSpec, breakpoints=()) -> tuple[np.ndarray, np.ndarray]:
    """Backward time levels and per-step theta.

    Returns ``levels`` descending from ``maturity`` to 0 and ``thetas`` with
    ``thetas[i]`` the scheme weight for the step ``levels[i] -> levels[i+1]``.
    Curve breakpoints inside ``(0, T)`` are inserted as levels.
    """
    base = np.linspace(0.0, maturity, grid.num_time + 1)
    pts = np.unique(np.concatenate([base, [b for b in breakpoints if 0.0 < b < maturity]]))
    levels = pts[::-1]
    n_split = math.ceil(grid.rannacher_steps / 2)
    out = [levels[0]]
    thetas = []
    for i in range(len(levels) - 1):
        a, b = levels[i], levels[i + 1]
        if i < n_split:
            mid = 0.5 * (a + b)
            out.extend([mid, b])
            thetas.extend([1.0, 1.0])
        else:
            out.append(b)
            thetas.append(grid.scheme_theta)
    thetas = np.array(thetas)
    if grid.rannacher_steps % 2:
        thetas[2 * n_split - 1] = grid.scheme_theta
    return np.array(out), thetas
