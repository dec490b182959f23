"""JSON and CSV rendering of clearing results.

Floats are written with the shortest round-trip representation, so a JSON
file parsed back reproduces the in-memory result bit for bit.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Iterable

from .clearing import ClearingResult, PriceMode
from .market_data import MeritCurve


def fmt_number(v: float) -> str:
    """Shortest round-trip decimal, without a trailing ``.0`` on integers."""
    text = repr(float(v))
    return text[:-2] if text.endswith(".0") else text


def result_to_dict(res: ClearingResult) -> dict:
    z = res.zones
    prices = {}
    for k, code in enumerate(z):
        prices[code] = {
            "marginal": None if res.prices_marginal is None else res.prices_marginal[k],
            "dual": None if res.prices_dual is None else res.prices_dual[k],
        }
    return {
        "hour": res.hour,
        "welfare": res.welfare,
        "macrozones": [[z[i] for i in m] for m in res.macrozones],
        "prices": prices,
        "transits": [{"from": z[i], "to": z[j], "flow": f} for i, j, f in res.transits],
        "accepted": [
            {"offer_id": oid, "quantity": q} for oid, q in zip(res.offer_ids, res.accepted)
        ],
        "saturated_edges": [{"from": z[i], "to": z[j], "mu": mu} for i, j, mu in res.saturated_edges],
    }


def result_from_dict(obj: dict) -> ClearingResult:
    zones = tuple(obj["prices"].keys())
    idx = {c: k for k, c in enumerate(zones)}
    marg = [obj["prices"][c]["marginal"] for c in zones]
    dual = [obj["prices"][c]["dual"] for c in zones]
    has_m = all(v is not None for v in marg)
    has_d = all(v is not None for v in dual)
    mode = PriceMode.BOTH if has_m and has_d else (PriceMode.MARGINAL if has_m else PriceMode.DUAL)
    return ClearingResult(
        hour=int(obj["hour"]),
        zones=zones,
        welfare=float(obj["welfare"]),
        macrozones=tuple(tuple(idx[c] for c in m) for m in obj["macrozones"]),
        prices_marginal=tuple(float(v) for v in marg) if has_m else None,
        prices_dual=tuple(float(v) for v in dual) if has_d else None,
        transits=tuple((idx[t["from"]], idx[t["to"]], float(t["flow"])) for t in obj["transits"]),
        offer_ids=tuple(int(a["offer_id"]) for a in obj["accepted"]),
        accepted=tuple(float(a["quantity"]) for a in obj["accepted"]),
        saturated_edges=tuple(
            (idx[s["from"]], idx[s["to"]], float(s["mu"])) for s in obj["saturated_edges"]
        ),
        price_mode=mode,
    )


def results_to_json(results: Iterable[ClearingResult]) -> str:
    return json.dumps([result_to_dict(r) for r in results], indent=2) + "\n"


def results_from_json(text: str) -> list[ClearingResult]:
    return [result_from_dict(o) for o in json.loads(text)]


CSV_HEADER = ("hour", "record", "key", "value")


def results_to_csv(results: Iterable[ClearingResult]) -> str:
    """Long format, one fact per line: ``hour,record,key,value``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in results:
        z = r.zones
        w.writerow([r.hour, "welfare", "", fmt_number(r.welfare)])
        for m, members in enumerate(r.macrozones):
            for i in members:
                w.writerow([r.hour, "macrozone", z[i], m])
        for name, series in (("price_marginal", r.prices_marginal), ("price_dual", r.prices_dual)):
            if series is None:
                continue
            for code, p in zip(z, series):
                w.writerow([r.hour, name, code, fmt_number(p)])
        for i, j, f in r.transits:
            w.writerow([r.hour, "transit", f"{z[i]}->{z[j]}", fmt_number(f)])
        for i, j, mu in r.saturated_edges:
            w.writerow([r.hour, "saturated", f"{z[i]}->{z[j]}", fmt_number(mu)])
        for oid, q in zip(r.offer_ids, r.accepted):
            w.writerow([r.hour, "accepted", oid, fmt_number(q)])
    return buf.getvalue()


def curves_to_csv(supply: MeritCurve, demand: MeritCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("side", "cumulative_mwh", "price"))
    for curve in (supply, demand):
        for q, p in curve.steps:
            w.writerow([curve.side.value, fmt_number(q), fmt_number(p)])
    return buf.getvalue()
