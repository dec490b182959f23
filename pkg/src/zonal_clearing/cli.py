"""Command-line front end: ``zonal-clearing clear|curves|validate``.

Exit status: 0 success, 2 invalid input (in any hour), 1 internal error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .clearing import ClearingConfig, PriceMode, clear_hour, open_ring
from .errors import ClearingError, InputError, TopologyError
from .market_data import build_merit_curves, filter_by_hour, parse_limits, parse_offers
from .network import parse_topology
from .serialize import curves_to_csv, fmt_number, results_to_csv, results_to_json

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2


@dataclass
class RunRequest:
    topology_path: Path
    offers_path: Path
    limits_path: Path | None = None
    hours: list[int] | None = None
    config: ClearingConfig = field(default_factory=ClearingConfig)
    output_path: Path | None = None
    output_format: str = "json"


def parse_hours(text: str) -> list[int]:
    """``"1,3,5-8"`` -> ``[1, 3, 5, 6, 7, 8]``."""
    hours = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = (int(v) for v in part.split("-", 1))
            hours.update(range(lo, hi + 1))
        else:
            hours.add(int(part))
    if not hours or any(not 1 <= h <= 24 for h in hours):
        raise argparse.ArgumentTypeError(f"hours must lie in 1..24, got {text!r}")
    return sorted(hours)


def _ring(text: str):
    if text.lower() == "none":
        return None
    parts = text.upper().split("-")
    if len(parts) != 2 or not all(parts):
        raise argparse.ArgumentTypeError("expected CODE_A-CODE_B or 'none'")
    return tuple(parts)


def load_inputs(req: RunRequest):
    with open(req.topology_path, encoding="utf-8-sig") as fh:
        topology = parse_topology(fh, source=req.topology_path)
    with open(req.offers_path, encoding="utf-8-sig", newline="") as fh:
        offers = parse_offers(fh, topology, source=req.offers_path)
    limits = []
    if req.limits_path is not None:
        with open(req.limits_path, encoding="utf-8-sig", newline="") as fh:
            limits = parse_limits(fh, topology, source=req.limits_path)
    return topology, offers, limits


def _requested_hours(req, offers):
    if req.hours:
        return req.hours
    return sorted({o.hour for o in offers})


def _emit(text: str, path: Path | None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_clear(req: RunRequest) -> int:
    try:
        topology, offers, limits = load_inputs(req)
    except (OSError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    status = EXIT_OK
    results = []
    info = sys.stdout if req.output_path is not None else sys.stderr
    for hour in _requested_hours(req, offers):
        t0 = time.perf_counter()
        try:
            res = clear_hour(offers, topology, limits, hour, req.config)
        except InputError as exc:
            print(f"hour {hour}: error: {exc}", file=sys.stderr)
            status = max(status, EXIT_INPUT)
            continue
        except ClearingError as exc:
            print(f"hour {hour}: internal error: {exc}", file=sys.stderr)
            status = EXIT_INTERNAL if status == EXIT_OK else status
            continue
        ms = 1000.0 * (time.perf_counter() - t0)
        results.append(res)
        prices = [res.price(c) for c in res.zones]
        line = (
            f"hour {hour:2d}: {len(res.macrozones)} macrozones, "
            f"price {fmt_number(min(prices))}..{fmt_number(max(prices))} EUR/MWh, "
            f"welfare {res.welfare:.2f}, {ms:.1f} ms"
        )
        if res.max_price_gap is not None:
            line += f", max dual/marginal gap {res.max_price_gap:.3g}"
        print(line, file=info)
    text = results_to_csv(results) if req.output_format == "csv" else results_to_json(results)
    try:
        _emit(text, req.output_path)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return status


def cmd_curves(req: RunRequest, zone_subset: list[str] | None = None) -> int:
    try:
        topology, offers, _ = load_inputs(req)
        hours = _requested_hours(req, offers)
        if len(hours) != 1:
            raise InputError(f"curves need exactly one hour, got {hours}")
        subset = None
        if zone_subset is not None:
            subset = {topology.index(c) for c in zone_subset}
    except (OSError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    supply, demand = build_merit_curves(filter_by_hour(offers, hours[0]), subset)
    _emit(curves_to_csv(supply, demand), req.output_path)
    return EXIT_OK


def validate(req: RunRequest) -> list[str]:
    """All findings for a request; empty when the inputs are clean."""
    try:
        topology, offers, limits = load_inputs(req)
    except (OSError, InputError) as exc:
        return [str(exc)]
    findings = []
    try:
        open_ring(topology, req.config)
    except TopologyError as exc:
        findings.append(str(exc))
    for lim in limits:
        if not topology.has_edge(lim.from_zone, lim.to_zone):
            a, b = topology.codes[lim.from_zone], topology.codes[lim.to_zone]
            findings.append(f"limit DA={a} A={b} has no edge")
    for hour in _requested_hours(req, offers):
        hour_offers = filter_by_hour(offers, hour)
        if not hour_offers:
            findings.append(f"hour {hour}: no offers")
            continue
        if not any(o.is_sell for o in hour_offers):
            findings.append(f"hour {hour}: no sell offers")
        if all(o.is_sell for o in hour_offers):
            findings.append(f"hour {hour}: no buy offers")
    return findings


def cmd_validate(req: RunRequest) -> int:
    findings = validate(req)
    for f in findings:
        print(f)
    print(f"{len(findings)} findings")
    return EXIT_OK if not findings else EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--topology", required=True, type=Path)
    common.add_argument("--offers", required=True, type=Path)
    common.add_argument("--limits", type=Path)
    common.add_argument("--hours", type=parse_hours, help="e.g. 9 or 1-24 or 1,5,7-9")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--snap-threshold", type=float, default=1e-4)
    common.add_argument("--price-cap", type=float, default=3000.0)
    common.add_argument("--price-mode", choices=[m.value for m in PriceMode], default="both")
    common.add_argument("--ring-open", type=_ring, default=("CNOR", "CORS"))
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="zonal-clearing", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    clear = sub.add_parser("clear", parents=[common], help="clear the selected hours")
    clear.add_argument("--format", choices=["json", "csv"], default="json")
    curves = sub.add_parser("curves", parents=[common], help="dump merit-order curves as CSV")
    curves.add_argument("--zones", help="comma-separated zone codes (default: all)")
    sub.add_parser("validate", parents=[common], help="check inputs and report findings")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = ClearingConfig(
            snap_threshold=args.snap_threshold,
            foreign_buy_price_cap=args.price_cap,
            price_mode=PriceMode(args.price_mode),
            ring_open_edge=args.ring_open,
        )
    except InputError as exc:
        parser.error(str(exc))
    req = RunRequest(
        topology_path=args.topology,
        offers_path=args.offers,
        limits_path=args.limits,
        hours=args.hours,
        config=config,
        output_path=args.out,
        output_format=getattr(args, "format", "json"),
    )
    if args.command == "clear":
        return cmd_clear(req)
    if args.command == "curves":
        zones = None
        if args.zones is not None:
            zones = [c.strip().upper() for c in args.zones.split(",") if c.strip()]
        return cmd_curves(req, zones)
    return cmd_validate(req)


if __name__ == "__main__":
    sys.exit(main())
