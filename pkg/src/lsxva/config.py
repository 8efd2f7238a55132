"""INI-style run configuration.

Example::

    [market]
    spot = 50
    vol = 0.5
    rate = 0.05
    borrow_spread = 0.005

    [party.B]
    cds_spread = 0.005
    basis = 0.002

    [party.C]
    cds_spread = 0.03
    basis = 0.005

    [instrument]
    maturity = 1
    leg = call 45 1
    leg = put 55 -1

Curve-valued keys accept a single decimal (flat) or ``time:rate`` pairs
separated by commas (piecewise constant), e.g. ``rate = 0:0.02, 1:0.04``.
``configparser`` is not used because legs repeat the same key and errors
must carry line numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .curves import PartyCredit, RateCurve, flat_curve, make_curve
from .errors import ConfigError
from .instruments import Instrument, Leg, MarketEnv
from .pde import CollateralSpec, GridSpec, Mode

__all__ = ["RunConfig", "load_config", "parse_config"]

_SECTIONS = {
    "market": {"spot", "vol", "rate", "borrow_spread", "dividend"},
    "party.B": {"cds_spread", "basis", "recovery"},
    "party.C": {"cds_spread", "basis", "recovery"},
    "instrument": {"maturity", "leg"},
    "grid": {
        "num_space", "num_time", "space_max_multiplier", "space_concentration",
        "scheme_theta", "rannacher_steps", "picard_tol", "picard_max_iters",
    },
    "collateral": {"mode", "level", "kappa", "haircut", "collateral_spread", "treasury_spread"},
}
_REQUIRED = ("market", "party.B", "party.C", "instrument")
_INT_GRID_KEYS = {"num_space", "num_time", "rannacher_steps", "picard_max_iters"}


@dataclass(frozen=True)
class PartyQuote:
    """Party inputs as quoted, kept for sweeps that re-derive intensities."""

    cds_spread: RateCurve
    basis: RateCurve
    recovery: float

    def credit(self) -> PartyCredit:
        return PartyCredit(self.cds_spread, self.basis, self.recovery)

    def flat_intensity(self) -> float:
        return self.cds_spread.node_rates[0] / (1.0 - self.recovery)


@dataclass(frozen=True)
class RunConfig:
    market: MarketEnv
    party_b: PartyQuote
    party_c: PartyQuote
    instrument: Instrument
    grid: GridSpec = field(default_factory=GridSpec)
    collateral: CollateralSpec | None = None
    mode: Mode = Mode.BASIC

    def with_party(self, name: str, quote: PartyQuote) -> RunConfig:
        return replace(self, **{f"party_{name.lower()}": quote})


@dataclass
class _Entry:
    value: str
    line: int


def _tokenize(text: str) -> dict[str, dict[str, list[_Entry]]]:
    sections: dict[str, dict[str, list[_Entry]]] = {}
    header_lines: dict[str, int] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section [{name}]", lineno)
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", lineno)
            sections[name] = {}
            header_lines[name] = lineno
            current = name
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if current is None:
            raise ConfigError("key outside of any section", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SECTIONS[current]:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno, key)
        entries = sections[current].setdefault(key, [])
        if entries and key != "leg":
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno, key)
        entries.append(_Entry(value, lineno))
    for name in _REQUIRED:
        if name not in sections:
            raise ConfigError(f"missing required section [{name}]")
    for name, line in header_lines.items():
        sections[name]["__line__"] = [_Entry("", line)]
    return sections


def _number(entry: _Entry, key: str) -> float:
    try:
        x = float(entry.value)
    except ValueError:
        raise ConfigError(f"{key} = {entry.value!r} is not a decimal number", entry.line, key) from None
    if not math.isfinite(x):
        raise ConfigError(f"{key} must be finite", entry.line, key)
    return x


def _curve(entry: _Entry, key: str) -> RateCurve:
    text = entry.value
    if ":" not in text:
        return flat_curve(_number(entry, key))
    nodes = []
    for item in text.split(","):
        t, _, r = item.partition(":")
        nodes.append((_number(_Entry(t, entry.line), key), _number(_Entry(r, entry.line), key)))
    try:
        return make_curve("piecewise", nodes)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}", entry.line, key) from None


def _get(section, key, convert, default=None):
    entries = section.get(key)
    if not entries:
        return default
    return convert(entries[0], key)


def _build(line: int, what: str, factory):
    try:
        return factory()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid {what}: {exc}", line) from None


def parse_config(text: str) -> RunConfig:
    sections = _tokenize(text)

    mk = sections["market"]
    for key in ("spot", "vol", "rate"):
        if key not in mk:
            raise ConfigError(f"[market] is missing {key!r}", mk["__line__"][0].line, key)
    rate = _get(mk, "rate", _curve)
    borrow = _get(mk, "borrow_spread", _curve, flat_curve(0.0))
    market = _build(mk["__line__"][0].line, "[market]", lambda: MarketEnv(
        spot=_get(mk, "spot", _number),
        vol=_get(mk, "vol", _number),
        risk_free=rate,
        repo=rate - borrow,
        dividend_yield=_get(mk, "dividend", _number, 0.0),
    ))

    def party(name):
        sec = sections[f"party.{name}"]
        quote = PartyQuote(
            _get(sec, "cds_spread", _curve, flat_curve(0.0)),
            _get(sec, "basis", _curve, flat_curve(0.0)),
            _get(sec, "recovery", _number, 0.0),
        )
        _build(sec["__line__"][0].line, f"[party.{name}]", quote.credit)
        return quote

    ins = sections["instrument"]
    if "maturity" not in ins:
        raise ConfigError("[instrument] is missing 'maturity'", ins["__line__"][0].line, "maturity")
    legs = []
    for entry in ins.get("leg", []):
        parts = entry.value.split()
        if len(parts) == 2 and parts[0] == "cash":
            parts = ["cash", "0", parts[1]]
        if len(parts) != 3:
            raise ConfigError(f"leg must be 'kind strike quantity', got {entry.value!r}", entry.line, "leg")
        kind = parts[0]
        strike = _number(_Entry(parts[1], entry.line), "leg strike")
        qty = _number(_Entry(parts[2], entry.line), "leg quantity")
        legs.append(_build(entry.line, "leg", lambda: Leg(kind, strike, qty)))
    if not legs:
        raise ConfigError("[instrument] needs at least one 'leg' line", ins["__line__"][0].line, "leg")
    maturity = _get(ins, "maturity", _number)
    instrument = _build(ins["__line__"][0].line, "[instrument]", lambda: Instrument(maturity, tuple(legs)))

    grid = GridSpec()
    if "grid" in sections:
        gs = sections["grid"]
        overrides = {}
        for key, entries in gs.items():
            if key == "__line__":
                continue
            x = _number(entries[0], key)
            if key in _INT_GRID_KEYS:
                if x != int(x):
                    raise ConfigError(f"{key} must be an integer", entries[0].line, key)
                x = int(x)
            overrides[key] = x
        grid = _build(gs["__line__"][0].line, "[grid]", lambda: GridSpec(**overrides))

    collateral, mode = None, Mode.BASIC
    if "collateral" in sections:
        cs = sections["collateral"]
        line = cs["__line__"][0].line
        mode_text = cs["mode"][0].value if "mode" in cs else "collateral"
        if mode_text not in ("collateral", "generalized"):
            raise ConfigError(f"collateral mode must be 'collateral' or 'generalized', got {mode_text!r}",
                              cs["mode"][0].line, "mode")
        mode = Mode(mode_text)
        if "level" in cs and "kappa" in cs:
            raise ConfigError("give either 'level' or 'kappa', not both", cs["kappa"][0].line, "kappa")
        if "kappa" in cs:
            posted, amount = "fraction_riskfree", _get(cs, "kappa", _number)
        elif "level" in cs:
            posted, amount = "constant", _get(cs, "level", _number)
        else:
            posted, amount = "none", 0.0
        r_l = _get(cs, "collateral_spread", _curve)
        r_n = _get(cs, "treasury_spread", _curve)
        collateral = _build(line, "[collateral]", lambda: CollateralSpec(
            posted=posted,
            amount=amount,
            collateral_rate=None if r_l is None else rate + r_l,
            haircut=_get(cs, "haircut", _number, 0.0),
            treasury_rate=None if r_n is None else rate + r_n,
        ))

    return RunConfig(market, party("B"), party("C"), instrument, grid, collateral, mode)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
