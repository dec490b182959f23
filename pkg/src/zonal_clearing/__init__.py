"""Zonal day-ahead electricity market clearing with market splitting."""
from ._backend import BACKEND
from .clearing import (
    ClearingConfig,
    ClearingResult,
    PriceMode,
    apply_foreign_zone_policy,
    clear_hour,
    compute_transits,
    compute_transits_by_balance,
    compute_zonal_prices_dual,
    compute_zonal_prices_marginal,
    detect_macrozones,
    regularize_acceptances,
    snap_small_quantities,
    trace_hour,
)
from .errors import ClearingError, InputError, ParseError, SolverError, TopologyError
from .lp import LinearProgram, LpSolution, SolveStatus, build_clearing_lp, dump_lp, solve_lp, verify_kkt
from .market_data import (
    MeritCurve,
    Offer,
    Purpose,
    TransitLimit,
    build_merit_curves,
    filter_by_hour,
    merit_order_clear,
    merit_order_welfare,
    parse_limits,
    parse_offers,
)
from .network import (
    EdgeCut,
    NetworkTopology,
    Zone,
    connected_components,
    detect_cycles,
    edge_cut,
    parse_topology,
    reachable_zones,
)

__version__ = "0.1.0"
