"""Reference network and random instance generators for tests and benchmarks."""
from __future__ import annotations

import numpy as np

from .market_data import Offer, Purpose, TransitLimit
from .network import NetworkTopology

ITALIAN_ZONES = (
    "FRAN", "SVIZ", "AUST", "SLOV", "BSP", "NORD", "CNOR", "SARD", "CORS", "COAC", "CSUD",
    "SUD", "FOGN", "BRNN", "GREC", "ROSN", "SICI", "PRGP", "MFTV", "XFRA", "XAUS", "MALT",
)

# Upper triangle of the 22x22 adjacency matrix, pre-2015 layout plus the
# CNOR-CORS-SARD-CSUD ring. MFTV has no connection.
ITALIAN_EDGES = (
    ("FRAN", "NORD"), ("FRAN", "XFRA"), ("SVIZ", "NORD"), ("AUST", "NORD"), ("AUST", "XAUS"),
    ("SLOV", "BSP"), ("SLOV", "NORD"), ("NORD", "CNOR"), ("CNOR", "CORS"), ("CNOR", "CSUD"),
    ("SARD", "CORS"), ("SARD", "COAC"), ("SARD", "CSUD"), ("CSUD", "SUD"), ("SUD", "FOGN"),
    ("SUD", "BRNN"), ("SUD", "ROSN"), ("BRNN", "GREC"), ("ROSN", "SICI"), ("SICI", "PRGP"),
    ("SICI", "MALT"),
)


def italian_topology(with_ring: bool = True) -> NetworkTopology:
    edges = ITALIAN_EDGES if with_ring else tuple(e for e in ITALIAN_EDGES if e != ("CNOR", "CORS"))
    return NetworkTopology.from_codes(ITALIAN_ZONES, edges)


def random_tree(n: int, rng: np.random.Generator) -> NetworkTopology:
    """Random labelled tree on ``n`` zones named Z0, Z1, ..."""
    codes = tuple(f"Z{k}" for k in range(n))
    edges = tuple((int(rng.integers(0, k)), k) for k in range(1, n))
    return NetworkTopology(codes, edges)


def random_offers(
    rng: np.random.Generator,
    n_zones: int,
    n_offers: int,
    hour: int = 1,
    price_range=(0.0, 3000.0),
    qty_range=(0.0, 1000.0),
    start_id: int = 0,
) -> list[Offer]:
    """Uniform random offers with at least one sell and one buy."""
    sides = rng.integers(0, 2, size=n_offers)
    if n_offers >= 2:
        sides[0], sides[1] = 0, 1
    out = []
    for k in range(n_offers):
        out.append(Offer(
            Purpose.SELL if sides[k] == 0 else Purpose.BUY,
            hour,
            int(rng.integers(0, n_zones)),
            float(rng.uniform(*qty_range)),
            float(rng.uniform(*price_range)),
            start_id + k,
        ))
    return out


def random_limits(rng: np.random.Generator, topology: NetworkTopology, lo: float, hi: float):
    out = []
    for i, j in topology.edges:
        out.append(TransitLimit(i, j, float(rng.uniform(lo, hi))))
        out.append(TransitLimit(j, i, float(rng.uniform(lo, hi))))
    return out


def sell_marginal_instance(rng: np.random.Generator, n_zones: int, offers_per_zone: int = 4):
    """Tree instance whose every macrozone is priced by a partially accepted sell.

    Every zone can cover its own demand, all buys outbid every sell and sell
    prices are distinct, so buys are always fully served and the marginal
    offer of each macrozone is a sell.
    """
    topo = random_tree(n_zones, rng)
    prices = rng.permutation(np.linspace(1.0, 900.0, n_zones * offers_per_zone))
    prices = prices + rng.uniform(0.0, 0.5, size=prices.size)
    offers = []
    p = 0
    for z in range(n_zones):
        demand = float(rng.uniform(50.0, 150.0))
        offers.append(Offer(Purpose.BUY, 1, z, demand, float(rng.uniform(2000.0, 3000.0)), len(offers)))
        supply = demand * float(rng.uniform(1.3, 2.0))
        split = rng.dirichlet(np.ones(offers_per_zone)) * supply
        for q in split:
            offers.append(Offer(Purpose.SELL, 1, z, float(q), float(prices[p]), len(offers)))
            p += 1
    limits = random_limits(rng, topo, 5.0, 80.0)
    return topo, offers, limits


def italian_day(rng: np.random.Generator, offers_per_hour: int = 1000, hours=range(1, 25)):
    """Synthetic day on the Italian network with mixed foreign/domestic offers."""
    topo = italian_topology()
    offers = []
    for h in hours:
        offers += random_offers(rng, topo.n, offers_per_hour, hour=h,
                                price_range=(0.0, 300.0), qty_range=(1.0, 500.0),
                                start_id=len(offers))
    limits = random_limits(rng, topo, 200.0, 3000.0)
    return topo, offers, limits
