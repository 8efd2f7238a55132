"""``xva`` command line: price, decompose, sweep and benchmark."""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import replace

import numpy as np

from .config import RunConfig, load_config
from .curves import PartyCredit, flat_curve
from .errors import ConfigError, NumericalError
from .instruments import Instrument, MarketEnv, bs_price
from .pde import NO_COLLATERAL, GridSpec, Mode, build_coefficients, convergence_study, solve_pde
from .xva import cva_closed_form, decompose, riskfree_surface

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
SWEEP_PARAMS = ("lambda_b", "lambda_c", "basis_b", "basis_c")


def _fmt(x: float) -> str:
    # round first so tiny negatives print as 0.000000, not -0.000000
    return f"{round(float(x), 6) + 0.0:.6f}"


def _emit(header, rows, out: str, csv_path: str | None, stdout) -> None:
    buf = io.StringIO()
    if out == "csv" or csv_path:
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])
        text = buf.getvalue()
        if csv_path:
            with open(csv_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        if out == "csv":
            stdout.write(text)
    if out == "table":
        cells = [[c if isinstance(c, str) else _fmt(c) for c in row] for row in rows]
        widths = [max(len(str(h)), *(len(r[i]) for r in cells)) for i, h in enumerate(header)]
        stdout.write("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip() + "\n")
        for r in cells:
            first = r[0].ljust(widths[0])
            rest = [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
            stdout.write("  ".join([first, *rest]).rstrip() + "\n")


def _coeff_mode(cfg: RunConfig, closeout: str) -> Mode:
    return Mode.RISKFREE_CLOSEOUT if closeout == "riskfree" else cfg.mode


def _price_rows(cfg: RunConfig, closeout: str):
    b, c = cfg.party_b.credit(), cfg.party_c.credit()
    mode = _coeff_mode(cfg, closeout)
    coll = cfg.collateral or NO_COLLATERAL
    surface = None
    if mode is Mode.RISKFREE_CLOSEOUT or coll.needs_riskfree_surface:
        surface = riskfree_surface(cfg.market, cfg.instrument, cfg.grid)
    rf = PartyCredit.risk_free()
    spot = cfg.market.spot
    v_star = solve_pde(build_coefficients(mode, cfg.market, rf, rf, coll, surface),
                       cfg.instrument, cfg.grid).value_at(0.0, spot)
    v_fair = solve_pde(build_coefficients(mode, cfg.market, b, c, coll, surface),
                       cfg.instrument, cfg.grid).value_at(0.0, spot)
    return [("v_star", v_star), ("v_fair", v_fair), ("cra", v_star - v_fair)]


def cmd_price(args, stdout) -> int:
    cfg = load_config(args.config)
    _emit(("metric", "value"), _price_rows(cfg, args.closeout), args.out, args.csv_path, stdout)
    return EXIT_OK


def cmd_decompose(args, stdout) -> int:
    cfg = load_config(args.config)
    report = decompose(
        cfg.market, cfg.party_b.credit(), cfg.party_c.credit(), cfg.instrument, cfg.grid,
        mode=_coeff_mode(cfg, args.closeout), collateral=cfg.collateral or NO_COLLATERAL,
    )
    _emit(("metric", "value"), report.rows(), args.out, args.csv_path, stdout)
    return EXIT_OK


def _swept(cfg: RunConfig, param: str, x: float) -> RunConfig:
    side = param[-1]
    quote = cfg.party_b if side == "b" else cfg.party_c
    if param.startswith("lambda"):
        quote = replace(quote, cds_spread=flat_curve(x * (1.0 - quote.recovery)))
    else:
        quote = replace(quote, basis=flat_curve(x))
    return cfg.with_party(side, quote)


def cmd_sweep(args, stdout) -> int:
    if args.param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {args.param!r}; choose from {', '.join(SWEEP_PARAMS)}",
                          key="param")
    if not args.start <= args.stop:
        raise ConfigError("--from must not exceed --to", key="from")
    if args.steps < 2:
        raise ConfigError("--steps must be >= 2", key="steps")
    if args.model != "pde" and args.param.startswith("basis"):
        raise ConfigError("closed-form models take no funding basis; sweep lambda_b or lambda_c",
                          key="param")
    cfg = load_config(args.config)
    rows = []
    for x in np.linspace(args.start, args.stop, args.steps):
        run = _swept(cfg, args.param, float(x))
        if args.model == "pde":
            prices = dict(_price_rows(run, args.closeout))
            rows.append((float(x), prices["v_fair"]))
        else:
            rows.append((float(x), cva_closed_form(
                args.model,
                run.party_b.flat_intensity(), run.party_c.flat_intensity(),
                run.party_b.recovery, run.party_c.recovery, run.instrument.maturity,
            )))
    value_name = "v_fair" if args.model == "pde" else "cva_ratio"
    _emit((args.param, value_name), rows, args.out, args.csv_path, stdout)
    return EXIT_OK


def _bond_rows(r: float, spread: float, basis: float, maturity: float, grid: GridSpec):
    market = MarketEnv.flat(spot=100.0, vol=0.2, rate=r)
    note = Instrument.cash_note(1.0, maturity)
    fd = decompose(market, PartyCredit.risk_free(), PartyCredit.flat(spread, basis), note, grid)
    closed = {
        "v_star": math.exp(-r * maturity),
        "v_tilde": math.exp(-(r + spread) * maturity),
        "v_fair": math.exp(-(r + spread + basis) * maturity),
    }
    closed["cva"] = closed["v_star"] - closed["v_tilde"]
    closed["cfa"] = closed["v_tilde"] - closed["v_fair"]
    return [(name, closed[name], getattr(fd, name), abs(getattr(fd, name) - closed[name]))
            for name in ("v_star", "v_tilde", "v_fair", "cva", "cfa")]


def cmd_benchmark(args, stdout) -> int:
    if args.kind == "bond":
        for name in ("r", "spread", "basis", "maturity"):
            if getattr(args, name) is None:
                raise ConfigError(f"benchmark bond needs --{name}", key=name)
        if args.maturity <= 0:
            raise ConfigError("--maturity must be positive", key="maturity")
        rows = _bond_rows(args.r, args.spread, args.basis, args.maturity, GridSpec())
        _emit(("metric", "closed_form", "fd", "abs_gap"), rows, args.out, args.csv_path, stdout)
        return EXIT_OK

    if args.config is None:
        raise ConfigError("benchmark converge needs --config", key="config")
    if args.levels < 2:
        raise ConfigError("--levels must be >= 2", key="levels")
    cfg = load_config(args.config)
    coeffs = build_coefficients(cfg.mode, cfg.market, cfg.party_b.credit(), cfg.party_c.credit(),
                                cfg.collateral or NO_COLLATERAL,
                                riskfree_surface(cfg.market, cfg.instrument, cfg.grid)
                                if cfg.collateral and cfg.collateral.needs_riskfree_surface else None)
    reference = None
    riskfree = (cfg.mode is Mode.BASIC and cfg.party_b.credit() == PartyCredit.risk_free()
                and cfg.party_c.credit() == PartyCredit.risk_free())
    if riskfree:
        reference = bs_price(cfg.instrument, cfg.market, cfg.market.risk_free, cfg.market.carry())
    base = replace(cfg.grid, num_space=args.base_space, num_time=args.base_time)
    table = convergence_study(coeffs, cfg.instrument, base, args.levels, reference=reference)
    rows = [(str(r.num_space), str(r.num_time), r.value,
             "" if r.error is None else _fmt(r.error),
             "" if r.observed_order is None else f"{r.observed_order:.3f}")
            for r in table]
    _emit(("num_space", "num_time", "value", "error", "order"), rows, args.out, args.csv_path, stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xva", description="Liability-side XVA pricing engine.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, metavar="PATH")
        p.add_argument("--closeout", choices=("liability", "riskfree"), default="liability")
        p.add_argument("--out", choices=("table", "csv"), default="table")
        p.add_argument("--csv-path", metavar="PATH")

    common(sub.add_parser("price", help="V*, fair value and total adjustment"))
    common(sub.add_parser("decompose", help="five-price ladder and CVA/DVA/CFA/DFA"))

    sw = sub.add_parser("sweep", help="sweep a hazard rate or funding basis")
    common(sw)
    sw.add_argument("--param", required=True)
    sw.add_argument("--from", dest="start", type=float, required=True)
    sw.add_argument("--to", dest="stop", type=float, required=True)
    sw.add_argument("--steps", type=int, default=11)
    sw.add_argument("--model", choices=("lsp", "bk", "pde"), default="lsp")

    bm = sub.add_parser("benchmark", help="closed-form bond check or grid convergence table")
    common(bm, config_required=False)
    bm.add_argument("kind", choices=("bond", "converge"))
    bm.add_argument("--r", type=float)
    bm.add_argument("--spread", type=float)
    bm.add_argument("--basis", type=float)
    bm.add_argument("--maturity", type=float)
    bm.add_argument("--levels", type=int, default=4)
    bm.add_argument("--base-space", type=int, default=50)
    bm.add_argument("--base-time", type=int, default=50)
    return parser


_COMMANDS = {"price": cmd_price, "decompose": cmd_decompose, "sweep": cmd_sweep, "benchmark": cmd_benchmark}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args, stdout)
    except ConfigError as exc:
        stderr.write(f"xva: config error: {exc}\n")
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError) as exc:
        stderr.write(f"xva: numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except ValueError as exc:
        stderr.write(f"xva: invalid input: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
