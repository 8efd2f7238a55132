from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from ..instruments import Instrument
from .coefficients import PdeCoefficients
from .grid import GridSpec
from .solver import solve_pde


@dataclass(frozen=True)
class ConvergenceRow:
    num_space: int
    num_time: int
    value: float
    error: float | None
    observed_order: float | None


def _order(e_coarse, e_fine):
    if e_coarse is None or e_fine is None or e_fine == 0.0 or e_coarse == 0.0:
        return None
    return math.log2(abs(e_coarse) / abs(e_fine))


def convergence_study(
    coeffs: PdeCoefficients,
    inst: Instrument,
    base_grid: GridSpec,
    levels: int,
    reference: float | None = None,
    spot: float | None = None,
    solver: Callable = solve_pde,
) -> list[ConvergenceRow]:
    """Price on ``levels`` successive doublings of ``base_grid``.

    With a ``reference`` value the error column is ``value - reference`` and
    the order comes from consecutive error ratios. Without one, the error is
    the Richardson estimate ``(v_k - v_{k-1}) / 3`` (second-order
    extrapolation) and the order comes from ratios of successive differences;
    the first row then has no error.
    """
    if levels < 2:
        raise ValueError("convergence_study needs levels >= 2")
    spot = coeffs.spot if spot is None else spot
    grids = [base_grid]
    for _ in range(levels - 1):
        grids.append(grids[-1].refined(2))
    values = [solver(coeffs, inst, g).value_at(0.0, spot) for g in grids]

    if reference is not None:
        errors = [v - reference for v in values]
    else:
        errors = [None] + [(values[k] - values[k - 1]) / 3.0 for k in range(1, levels)]

    rows = []
    for k, (g, v) in enumerate(zip(grids, values)):
        order = _order(errors[k - 1], errors[k]) if k > 0 else None
        rows.append(ConvergenceRow(g.num_space, g.num_time, v, errors[k], order))
    return rows
