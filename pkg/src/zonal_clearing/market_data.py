"""Offer and transit-limit records, CSV I/O and merit-order curves."""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .errors import ParseError
from .network import NetworkTopology

OFFER_HEADER = ("CD_PURPOSE", "N_INTERVAL", "CD_ZONE", "N_QUANTITY", "N_ENERGY_PRICE")
LIMIT_HEADER = ("DA", "A", "LIMITE_TRANSITO")
# absolute tolerance for price/quantity comparisons
EPS = 1e-9


class Purpose(enum.IntEnum):
    """Offer side. The value is the sign used in the balance row."""

    SELL = 1
    BUY = -1

    @property
    def code(self) -> str:
        return "OFF" if self is Purpose.SELL else "BID"

    @classmethod
    def from_code(cls, code: str) -> "Purpose":
        code = code.strip().upper()
        if code == "OFF":
            return cls.SELL
        if code == "BID":
            return cls.BUY
        raise ValueError(f"purpose must be OFF or BID, got {code!r}")


@dataclass(frozen=True)
class Offer:
    purpose: Purpose
    hour: int
    zone: int
    quantity: float
    price: float
    id: int

    @property
    def is_sell(self) -> bool:
        return self.purpose is Purpose.SELL

    def with_price(self, price: float) -> "Offer":
        return replace(self, price=float(price))


@dataclass(frozen=True)
class TransitLimit:
    """Directed cap ``from_zone -> to_zone``; ``hour=None`` applies to every hour."""

    from_zone: int
    to_zone: int
    max_flow: float
    hour: int | None = None


class Side(enum.Enum):
    SUPPLY = "supply"
    DEMAND = "demand"


@dataclass(frozen=True)
class MeritCurve:
    side: Side
    cumulative: np.ndarray
    prices: np.ndarray

    @property
    def steps(self) -> list[tuple[float, float]]:
        return list(zip(self.cumulative.tolist(), self.prices.tolist()))

    @property
    def total(self) -> float:
        return float(self.cumulative[-1]) if len(self.cumulative) else 0.0

    def __len__(self):
        return len(self.cumulative)


def _number(text: str, what: str, row: int, source) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"malformed {what} {text!r}", row, source) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite, got {text!r}", row, source)
    return value


def _reader(stream, header, source):
    reader = csv.reader(stream)
    try:
        first = next(reader)
    except StopIteration:
        raise ParseError("empty file, expected a header", 1, source) from None
    cols = [c.strip().upper() for c in first]
    if cols and cols[0].startswith("\ufeff"):
        cols[0] = cols[0][1:]
    missing = [h for h in header if h not in cols]
    if missing:
        raise ParseError(f"header is missing {', '.join(missing)}", 1, source)
    return reader, {h: cols.index(h) for h in cols}


def parse_offers(stream, topology: NetworkTopology, source=None) -> list[Offer]:
    """Read offers CSV; ids follow data-row order starting at 0."""
    reader, col = _reader(stream, OFFER_HEADER, source)
    offers = []
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(col):
            raise ParseError(f"expected {len(col)} fields, got {len(row)}", lineno, source)
        get = lambda h: row[col[h]].strip()  # noqa: E731
        try:
            purpose = Purpose.from_code(get("CD_PURPOSE"))
        except ValueError as exc:
            raise ParseError(str(exc), lineno, source) from None
        try:
            hour = int(get("N_INTERVAL"))
        except ValueError:
            raise ParseError(f"malformed hour {get('N_INTERVAL')!r}", lineno, source) from None
        if not 1 <= hour <= 24:
            raise ParseError(f"hour {hour} outside 1..24", lineno, source)
        code = get("CD_ZONE").upper()
        if code not in topology.codes:
            raise ParseError(f"unknown zone {code!r}", lineno, source)
        qty = _number(get("N_QUANTITY"), "quantity", lineno, source)
        price = _number(get("N_ENERGY_PRICE"), "price", lineno, source)
        if qty < 0:
            raise ParseError(f"negative quantity {qty!r}", lineno, source)
        if price < 0:
            raise ParseError(f"negative price {price!r}", lineno, source)
        offers.append(Offer(purpose, hour, topology.index(code), qty, price, len(offers)))
    return offers


def format_offers(offers: Iterable[Offer], topology: NetworkTopology) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(OFFER_HEADER)
    for o in offers:
        w.writerow([o.purpose.code, o.hour, topology.codes[o.zone], repr(o.quantity), repr(o.price)])
    return buf.getvalue()


def parse_limits(stream, topology: NetworkTopology, source=None) -> list[TransitLimit]:
    """Read limits CSV. An optional N_INTERVAL column scopes a row to one hour.

    Edge membership is not checked here; see ``build_clearing_lp`` and the
    ``validate`` command.
    """
    reader, col = _reader(stream, LIMIT_HEADER, source)
    hourly = "N_INTERVAL" in col
    limits = []
    seen = set()
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(col):
            raise ParseError(f"expected {len(col)} fields, got {len(row)}", lineno, source)
        zones = []
        for h in ("DA", "A"):
            code = row[col[h]].strip().upper()
            if code not in topology.codes:
                raise ParseError(f"unknown zone {code!r}", lineno, source)
            zones.append(topology.index(code))
        cap = _number(row[col["LIMITE_TRANSITO"]].strip(), "limit", lineno, source)
        if cap < 0:
            raise ParseError(f"negative limit {cap!r}", lineno, source)
        hour = None
        if hourly:
            try:
                hour = int(row[col["N_INTERVAL"]].strip())
            except ValueError:
                raise ParseError("malformed hour", lineno, source) from None
            if not 1 <= hour <= 24:
                raise ParseError(f"hour {hour} outside 1..24", lineno, source)
        key = (zones[0], zones[1], hour)
        if key in seen:
            raise ParseError(
                f"duplicate limit DA={row[col['DA']].strip()} A={row[col['A']].strip()}",
                lineno, source,
            )
        seen.add(key)
        limits.append(TransitLimit(zones[0], zones[1], cap, hour))
    return limits


def limits_for_hour(limits: Iterable[TransitLimit], hour: int) -> list[TransitLimit]:
    """Hour-specific rows override the all-hours row for the same direction."""
    chosen: dict[tuple[int, int], TransitLimit] = {}
    for lim in limits:
        if lim.hour is None:
            chosen.setdefault((lim.from_zone, lim.to_zone), lim)
    for lim in limits:
        if lim.hour == hour:
            chosen[(lim.from_zone, lim.to_zone)] = lim
    return list(chosen.values())


def filter_by_hour(offers: Iterable[Offer], hour: int) -> list[Offer]:
    return [o for o in offers if o.hour == hour]


def build_merit_curves(offers: Iterable[Offer], zone_subset=None) -> tuple[MeritCurve, MeritCurve]:
    """Aggregate supply (price ascending) and demand (price descending) step curves.

    Ties are broken by offer id. Offers of at most ``EPS`` MWh produce no step.
    ``zone_subset=None`` keeps every zone.
    """
    keep = None if zone_subset is None else set(zone_subset)
    sells, buys = [], []
    for o in offers:
        if keep is not None and o.zone not in keep:
            continue
        if o.quantity <= EPS:
            continue
        (sells if o.is_sell else buys).append(o)
    sells.sort(key=lambda o: (o.price, o.id))
    buys.sort(key=lambda o: (-o.price, o.id))

    def curve(side, group):
        q = np.cumsum([o.quantity for o in group], dtype=float)
        p = np.array([o.price for o in group], dtype=float)
        return MeritCurve(side, q, p)

    return curve(Side.SUPPLY, sells), curve(Side.DEMAND, buys)


def _widths(curve: MeritCurve) -> np.ndarray:
    return np.diff(curve.cumulative, prepend=0.0)


def merit_order_clear(supply: MeritCurve, demand: MeritCurve) -> tuple[float, float]:
    """Cross the step curves. Returns ``(volume, price)``.

    The volume is the largest quantity at which the supply price does not
    exceed the demand price; the price is that of the last accepted supply
    step, or ``(0.0, 0.0)`` when nothing trades.
    """
    sw, dw = _widths(supply).tolist(), _widths(demand).tolist()
    sp, dp = supply.prices.tolist(), demand.prices.tolist()
    i = k = 0
    s_left = sw[0] if sw else 0.0
    d_left = dw[0] if dw else 0.0
    volume = 0.0
    price = 0.0
    while i < len(sw) and k < len(dw):
        if sp[i] > dp[k] + EPS:
            break
        take = min(s_left, d_left)
        volume += take
        price = sp[i]
        s_left -= take
        d_left -= take
        if s_left <= EPS:
            i += 1
            s_left = sw[i] if i < len(sw) else 0.0
        if d_left <= EPS:
            k += 1
            d_left = dw[k] if k < len(dw) else 0.0
    if volume <= 0.0:
        return 0.0, 0.0
    return volume, price


def merit_order_welfare(supply: MeritCurve, demand: MeritCurve, volume: float) -> float:
    """Area between demand and supply step curves over ``[0, volume]``."""

    def area(curve):
        widths = _widths(curve)
        left = np.concatenate(([0.0], curve.cumulative[:-1]))
        taken = np.clip(volume - left, 0.0, widths)
        return float(np.dot(taken, curve.prices))

    return area(demand) - area(supply)
