"""Per-hour clearing pipeline: LP solve, macrozones, zonal prices, transits."""
from __future__ import annotations

import enum
import logging
import tempfile
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError, SolverError, TopologyError
from .lp import LinearProgram, SolveStatus, build_clearing_lp, dump_lp, solve_lp
from .market_data import Offer, TransitLimit, filter_by_hour, limits_for_hour
from .network import NetworkTopology, _norm, connected_components, cut_matrix, detect_cycles

log = logging.getLogger(__name__)

DEFAULT_FOREIGN_ZONES = frozenset({"BSP", "XFRA", "XAUS", "MALT"})
REFILL_TOL = 1e-9


class PriceMode(enum.Enum):
    MARGINAL = "marginal"
    DUAL = "dual"
    BOTH = "both"


@dataclass(frozen=True)
class ClearingConfig:
    snap_threshold: float = 1e-4
    saturation_dual_tol: float = 1e-7
    foreign_zones: frozenset = DEFAULT_FOREIGN_ZONES
    foreign_buy_price_cap: float = 3000.0
    ring_open_edge: tuple[str, str] | None = ("CNOR", "CORS")
    price_mode: PriceMode = PriceMode.BOTH
    backend: str | None = None

    def __post_init__(self):
        if not self.snap_threshold > 0:
            raise InputError("snap_threshold must be > 0")
        if not self.foreign_buy_price_cap > 0:
            raise InputError("foreign_buy_price_cap must be > 0")
        object.__setattr__(self, "foreign_zones", frozenset(self.foreign_zones))


@dataclass(frozen=True)
class ClearingResult:
    hour: int
    zones: tuple[str, ...]
    welfare: float
    macrozones: tuple[tuple[int, ...], ...]
    # None when the price mode leaves that series out
    prices_marginal: tuple[float, ...] | None
    prices_dual: tuple[float, ...] | None
    # one entry per undirected edge, oriented as in the topology: (from, to, flow)
    transits: tuple[tuple[int, int, float], ...]
    offer_ids: tuple[int, ...]
    accepted: tuple[float, ...]
    # binding direction of each saturated edge: (from, to, mu)
    saturated_edges: tuple[tuple[int, int, float], ...]
    price_mode: PriceMode = PriceMode.BOTH
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def price(self, code: str) -> float:
        k = self.zones.index(code)
        series = self.prices_dual if self.prices_marginal is None else self.prices_marginal
        return series[k]

    def transit(self, src: str, dst: str) -> float:
        i, j = self.zones.index(src), self.zones.index(dst)
        for a, b, flow in self.transits:
            if (a, b) == (i, j):
                return flow
            if (a, b) == (j, i):
                return -flow
        raise KeyError(f"{src}-{dst} is not an edge")

    @property
    def max_price_gap(self) -> float | None:
        if self.prices_dual is None or self.prices_marginal is None:
            return None
        if not self.zones:
            return 0.0
        return float(np.max(np.abs(np.subtract(self.prices_dual, self.prices_marginal))))


def apply_foreign_zone_policy(
    offers: Sequence[Offer], topology: NetworkTopology, config: ClearingConfig
) -> list[Offer]:
    """Foreign sells are priced at 0, foreign buys at the configured cap."""
    foreign = {topology.index(c) for c in config.foreign_zones if c in topology.codes}
    out = []
    for o in offers:
        if o.zone in foreign:
            o = o.with_price(0.0 if o.is_sell else config.foreign_buy_price_cap)
        out.append(o)
    return out


def snap_small_quantities(x: np.ndarray, threshold: float) -> np.ndarray:
    if not threshold > 0:
        raise InputError("threshold must be > 0")
    x = np.asarray(x, dtype=float)
    return np.where(x <= threshold, 0.0, x)


def open_ring(topology: NetworkTopology, config: ClearingConfig):
    """Return ``(tree, opened_edge)``; ``opened_edge`` is None for acyclic input."""
    if not detect_cycles(topology):
        return topology, None
    if config.ring_open_edge is not None:
        a, b = config.ring_open_edge
        if a in topology.codes and b in topology.codes:
            edge = _norm((topology.index(a), topology.index(b)))
            if topology.has_edge(*edge):
                tree = topology.without_edges([edge])
                if not detect_cycles(tree):
                    return tree, edge
    raise TopologyError("unsupported cycle: topology is not a tree after opening the ring edge")


def saturated_rows(mu: np.ndarray, tol: float) -> np.ndarray:
    return np.flatnonzero(np.abs(np.asarray(mu)) > tol)


def detect_macrozones(topology: NetworkTopology, mu, row_tags, tol: float) -> list[tuple[int, ...]]:
    """Open every edge whose transit row carries a nonzero multiplier, then split."""
    opened = {_norm(row_tags[r]) for r in saturated_rows(mu, tol)}
    return connected_components(topology, sorted(opened))


def _zone_map(macrozones, n):
    owner = np.empty(n, dtype=np.int64)
    for m, zs in enumerate(macrozones):
        owner[list(zs)] = m
    return owner


def _sell_key(o):
    return (o.price, o.id)


def _buy_key(o):
    return (-o.price, o.id)


def is_prefix_shaped(x, group: Sequence[int], qty, tol: float = 0.0) -> bool:
    """Full, full, ..., partial, zero, ... along ``group`` (already merit-ordered)."""
    seen_short = False
    for k in group:
        if seen_short and x[k] > tol:
            return False
        if x[k] < qty[k] - tol:
            seen_short = True
    return True


def _merit_groups(offers, macrozones, n_zones):
    owner = _zone_map(macrozones, n_zones)
    groups = {}
    for k, o in enumerate(offers):
        groups.setdefault((int(owner[o.zone]), o.is_sell), []).append(k)
    for (m, is_sell), ks in groups.items():
        ks.sort(key=lambda k: _sell_key(offers[k]) if is_sell else _buy_key(offers[k]))
    return groups


def regularize_acceptances(x, offers: Sequence[Offer], macrozones, n_zones: int | None = None):
    """Refill each macrozone side greedily along merit order, keeping its total.

    Sides that are already prefix-shaped are returned untouched.
    """
    x = np.asarray(x, dtype=float)
    if n_zones is None:
        n_zones = 1 + max(z for zs in macrozones for z in zs)
    qty = np.array([o.quantity for o in offers], dtype=float)
    out = x.copy()
    for ks in _merit_groups(offers, macrozones, n_zones).values():
        if is_prefix_shaped(x, ks, qty):
            continue
        remaining = float(np.sum(x[ks]))
        for k in ks:
            take = min(qty[k], remaining)
            out[k] = take
            remaining -= take
            # rounding leftovers must not spill onto the next offer
            if remaining <= REFILL_TOL:
                remaining = 0.0
    return out


def compute_zonal_prices_marginal(x, offers: Sequence[Offer], macrozones, n_zones: int):
    """Highest accepted sell price per macrozone. Returns ``(prices, warnings)``."""
    prices = np.zeros(n_zones)
    warnings = []
    owner = _zone_map(macrozones, n_zones)
    best = np.full(len(macrozones), -np.inf)
    for k, o in enumerate(offers):
        if o.is_sell and x[k] > 0.0:
            m = owner[o.zone]
            best[m] = max(best[m], o.price)
    for m, zs in enumerate(macrozones):
        if np.isfinite(best[m]):
            prices[list(zs)] = best[m]
        else:
            warnings.append(f"macrozone {m} has no accepted sell; price set to 0")
    return prices, warnings


def compute_zonal_prices_dual(lam, mu, cuts: np.ndarray) -> np.ndarray:
    """``lam - sum_r mu[r] * cuts[r, z]``.

    ``lam`` is a scalar or a per-zone array (one balance multiplier per island).
    """
    cuts = np.asarray(cuts, dtype=float)
    mu = np.asarray(mu, dtype=float)
    n = cuts.shape[1] if cuts.ndim == 2 else np.size(lam)
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (n,))
    return lam - mu @ cuts.reshape(mu.shape[0], n)


def compute_transits(A: np.ndarray, x, row_tags=None) -> np.ndarray:
    """``Tr = A x``: net export across each row's cut."""
    return np.asarray(A, dtype=float) @ np.asarray(x, dtype=float)


def net_injections(x, offers: Sequence[Offer], n_zones: int) -> np.ndarray:
    """Accepted sells minus accepted buys, per zone."""
    inj = np.zeros(n_zones)
    for k, o in enumerate(offers):
        inj[o.zone] += x[k] if o.is_sell else -x[k]
    return inj


def compute_transits_by_balance(
    topology: NetworkTopology, injections, opened_edge=None, tol: float = 1e-6
) -> dict[tuple[int, int], float]:
    """Edge flows from zonal balances, peeling leaves; ``opened_edge`` carries 0.

    Keys are the topology's (i < j) edges; a positive flow runs i -> j.
    """
    tree = topology.without_edges([opened_edge]) if opened_edge is not None else topology
    if detect_cycles(tree):
        raise TopologyError("balance transits need a forest")
    n = topology.n
    surplus = np.array(injections, dtype=float)
    neigh = [set() for _ in range(n)]
    for i, j in tree.edges:
        neigh[i].add(j)
        neigh[j].add(i)
    flows = {e: 0.0 for e in topology.edges}
    leaves = sorted(z for z in range(n) if len(neigh[z]) == 1)
    done = np.zeros(n, dtype=bool)
    while leaves:
        z = leaves.pop(0)
        if done[z] or len(neigh[z]) != 1:
            continue
        (p,) = neigh[z]
        # the leaf exports its whole surplus to its only neighbour
        if z < p:
            flows[(z, p)] = surplus[z]
        else:
            flows[(p, z)] = -surplus[z]
        surplus[p] += surplus[z]
        surplus[z] = 0.0
        done[z] = True
        neigh[p].discard(z)
        neigh[z].clear()
        if len(neigh[p]) == 1:
            leaves.append(p)
    resid = np.abs(surplus).max() if n else 0.0
    if resid > tol:
        raise SolverError(f"zonal balance residual {resid:.3g} MWh exceeds {tol:g}")
    return flows


@dataclass
class HourTrace:
    """Intermediate values of one clearing run, for diagnostics and tests."""

    offers: list
    tree: NetworkTopology
    opened_edge: tuple[int, int] | None
    lp: LinearProgram
    solution: object
    x_snapped: np.ndarray
    x_regularized: np.ndarray
    result: ClearingResult


def clear_hour(
    offers: Sequence[Offer],
    topology: NetworkTopology,
    limits: Sequence[TransitLimit],
    hour: int,
    config: ClearingConfig | None = None,
) -> ClearingResult:
    """Filter, transform, solve, snap, split, regularise, price, and route one hour."""
    return trace_hour(offers, topology, limits, hour, config).result


def trace_hour(
    offers: Sequence[Offer],
    topology: NetworkTopology,
    limits: Sequence[TransitLimit],
    hour: int,
    config: ClearingConfig | None = None,
) -> HourTrace:
    """``clear_hour`` keeping every intermediate."""
    config = config or ClearingConfig()
    hour_offers = filter_by_hour(offers, hour)
    if not any(o.is_sell for o in hour_offers) or not any(not o.is_sell for o in hour_offers):
        raise InputError(f"empty hour {hour}: need at least one sell and one buy")
    hour_offers = apply_foreign_zone_policy(hour_offers, topology, config)

    tree, opened = open_ring(topology, config)
    hour_limits = [
        lim for lim in limits_for_hour(limits, hour)
        if opened is None or _norm((lim.from_zone, lim.to_zone)) != opened
    ]
    lp = build_clearing_lp(hour_offers, tree, hour_limits)
    sol = solve_lp(lp, backend=config.backend)
    if sol.status is not SolveStatus.OPTIMAL:
        raise SolverError(f"hour {hour}: solver returned {sol.status.value}; LP dump at {_dump(lp, tree)}")

    n = topology.n
    x = snap_small_quantities(sol.x, config.snap_threshold)
    macrozones = detect_macrozones(tree, sol.mu, lp.row_tags, config.saturation_dual_tol)
    x_reg = regularize_acceptances(x, hour_offers, macrozones, n)

    prices_m, warnings = compute_zonal_prices_marginal(x_reg, hour_offers, macrozones, n)
    for w in warnings:
        log.warning("hour %d: %s", hour, w)
    lam_zone = np.zeros(n)
    for r, comp in enumerate(lp.eq_tags):
        lam_zone[list(comp)] = sol.lam[r]
    prices_d = compute_zonal_prices_dual(lam_zone, sol.mu, cut_matrix(tree, lp.row_tags))

    if opened is None:
        cuts = cut_matrix(tree, list(tree.edges))
        flows = compute_transits(cuts, net_injections(x_reg, hour_offers, n))
        transits = tuple((i, j, float(f)) for (i, j), f in zip(tree.edges, flows))
    else:
        by_edge = compute_transits_by_balance(topology, net_injections(x_reg, hour_offers, n), opened)
        transits = tuple((i, j, float(by_edge[(i, j)])) for i, j in topology.edges)

    mode = config.price_mode
    saturated = []
    for r in saturated_rows(sol.mu, config.saturation_dual_tol):
        i, j = lp.row_tags[r]
        saturated.append((i, j, float(sol.mu[r])))

    result = ClearingResult(
        hour=hour,
        zones=topology.codes,
        welfare=float(sol.welfare),
        macrozones=tuple(tuple(m) for m in macrozones),
        prices_marginal=None if mode is PriceMode.DUAL else tuple(float(p) + 0.0 for p in prices_m),
        prices_dual=None if mode is PriceMode.MARGINAL else tuple(float(p) + 0.0 for p in prices_d),
        transits=transits,
        offer_ids=tuple(o.id for o in hour_offers),
        accepted=tuple(float(v) for v in x_reg),
        saturated_edges=tuple(saturated),
        price_mode=mode,
        warnings=tuple(warnings),
    )
    return HourTrace(hour_offers, tree, opened, lp, sol, x, x_reg, result)


def _dump(lp: LinearProgram, topology: NetworkTopology) -> str:
    labels = {t: topology.label(t) for t in lp.row_tags}
    with tempfile.NamedTemporaryFile("w", suffix=".lp.txt", delete=False) as fh:
        fh.write(dump_lp(lp, labels))
    return fh.name
