"""End-to-end acceptance checks, one test per criterion.

Each test prints a PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""
import time
from dataclasses import replace

import numpy as np
import pytest

from corpus import (
    DATA,
    brute_force_welfare,
    full_corpus,
    grid_instances,
    load_fixture,
    sell_marginal_instances,
    single_zone_instances,
    tree_instances,
    two_zone,
)
from zonal_clearing import build_merit_curves, clear_hour, merit_order_clear, merit_order_welfare, verify_kkt
from zonal_clearing.clearing import _merit_groups, is_prefix_shaped, trace_hour
from zonal_clearing.cli import main
from zonal_clearing.network import cut_matrix
from zonal_clearing.serialize import results_to_json
from zonal_clearing.synthetic import italian_day


@pytest.fixture(scope="module")
def corpus_traces(warm_kernels):
    return [(name, trace_hour(o, t, l, h)) for name, t, o, l, h in full_corpus()]


def test_single_zone_matches_merit_order(criterion, warm_kernels):
    instances = single_zone_instances(500)
    worst_v = worst_w = worst_p = 0.0
    t0 = time.perf_counter()
    results = [clear_hour(o, t, l, 1) for t, o, l in instances]
    elapsed = time.perf_counter() - t0
    for (t, offers, _), res in zip(instances, results):
        supply, demand = build_merit_curves(offers)
        v_ref, p_ref = merit_order_clear(supply, demand)
        w_ref = merit_order_welfare(supply, demand, v_ref)
        sells = np.array([o.is_sell for o in offers])
        v = float(np.sum(np.array(res.accepted)[sells]))
        worst_v = max(worst_v, abs(v - v_ref))
        worst_w = max(worst_w, abs(res.welfare - w_ref) / (1.0 + abs(v_ref)))
        worst_p = max(worst_p, abs(res.prices_marginal[0] - p_ref))
    ok = worst_v <= 1e-6 and worst_w <= 1e-6 and worst_p <= 1e-6 and elapsed < 5.0
    criterion(
        "single-zone oracle equivalence (500 instances)",
        ok,
        f"max |dv|={worst_v:.2e}, max rel dW={worst_w:.2e}, max |dp|={worst_p:.2e}, {elapsed:.2f} s",
    )


def _check_two_zone(res, accepted, macrozones, prices, transit, welfare, n_saturated):
    errs = [
        np.max(np.abs(np.subtract(res.accepted, accepted))),
        abs(res.transit("A", "B") - transit),
        abs(res.welfare - welfare),
        np.max(np.abs(np.subtract(res.prices_marginal, prices))),
        np.max(np.abs(np.subtract(res.prices_dual, prices))),
    ]
    shape_ok = res.macrozones == macrozones and len(res.saturated_edges) == n_saturated
    return shape_ok and max(errs) <= 1e-9, max(errs)


def test_two_zone_congested(criterion):
    topo, offers, limits = two_zone(10.0)
    res = clear_hour(offers, topo, limits, 1)
    ok, err = _check_two_zone(res, (15, 15, 5, 25), ((0,), (1,)), (10, 30), 10, 900, 1)
    criterion("two-zone congested case", ok, f"max error {err:.1e}")


def test_two_zone_relaxed(criterion):
    topo, offers, limits = two_zone(20.0)
    res = clear_hour(offers, topo, limits, 1)
    ok, err = _check_two_zone(res, (20, 10, 5, 25), ((0, 1),), (30, 30), 15, 1000, 0)
    criterion("two-zone relaxed case", ok, f"max error {err:.1e}")


def test_kkt_on_corpus(criterion, corpus_traces):
    bad = []
    for name, tr in corpus_traces:
        problems = verify_kkt(tr.lp, tr.solution)
        res = tr.result
        caps = dict(zip(tr.lp.row_tags, tr.lp.b))
        for i, j, f in res.transits:
            if (i, j) in caps and f > caps[(i, j)] + 1e-6:
                problems.append(f"transit {i}->{j}")
            if (j, i) in caps and -f > caps[(j, i)] + 1e-6:
                problems.append(f"transit {j}->{i}")
        if problems:
            bad.append((name, problems[:3]))
    criterion(f"KKT conditions on {len(corpus_traces)} corpus instances", not bad, f"{len(bad)} failing {bad[:3]}")


def test_dual_and_marginal_prices_agree(criterion, warm_kernels):
    worst = 0.0
    for topo, offers, limits in sell_marginal_instances(200):
        res = clear_hour(offers, topo, limits, 1)
        gap = np.abs(np.subtract(res.prices_dual, res.prices_marginal)) / (1.0 + np.abs(res.prices_marginal))
        worst = max(worst, float(gap.max()))
    criterion("dual/marginal price agreement (200 trees)", worst <= 1e-6, f"max scaled gap {worst:.2e}")


def test_welfare_dominates_brute_force(criterion, warm_kernels):
    worst = -np.inf
    for topo, offers, limits in grid_instances(100):
        res = clear_hour(offers, topo, limits, 1)
        best = brute_force_welfare(topo, offers, limits)
        worst = max(worst, best - res.welfare)
    criterion("welfare dominates grid enumeration (100 instances)", worst <= 1e-6,
              f"max(best grid - LP) = {worst:.2e}")


def test_regularization_invariants(criterion, corpus_traces):
    worst_tr = 0.0
    not_prefix = []
    for name, tr in corpus_traces:
        n = tr.tree.n
        qty = np.array([o.quantity for o in tr.offers])
        for ks in _merit_groups(tr.offers, tr.result.macrozones, n).values():
            if not is_prefix_shaped(tr.x_regularized, ks, qty, tol=1e-9):
                not_prefix.append(name)
        cuts = cut_matrix(tr.tree, list(tr.tree.edges))
        inj_before = np.zeros(n)
        inj_after = np.zeros(n)
        for k, o in enumerate(tr.offers):
            s = 1.0 if o.is_sell else -1.0
            inj_before[o.zone] += s * tr.x_snapped[k]
            inj_after[o.zone] += s * tr.x_regularized[k]
        if len(tr.tree.edges):
            worst_tr = max(worst_tr, float(np.max(np.abs(cuts @ inj_before - cuts @ inj_after))))
    ok = not not_prefix and worst_tr <= 1e-9
    criterion("regularization keeps prefix shape and transits", ok,
              f"{len(not_prefix)} non-prefix sides, max transit change {worst_tr:.1e}")


def test_performance_italian_day(criterion, warm_kernels):
    topo, offers, limits = italian_day(np.random.default_rng(2024), 1000)
    clear_hour(offers, topo, limits, 1)
    per_hour = []
    t_all = time.perf_counter()
    for h in range(1, 25):
        t0 = time.perf_counter()
        clear_hour(offers, topo, limits, h)
        per_hour.append(time.perf_counter() - t0)
    total = time.perf_counter() - t_all
    ok = max(per_hour) < 0.25 and total < 6.0
    criterion(
        f"performance, 22 zones x 1000 offers/hour [{warm_kernels.name}]",
        ok,
        f"max {1000 * max(per_hour):.1f} ms/hour, mean {1000 * np.mean(per_hour):.1f} ms, 24 h in {total:.2f} s",
    )


def test_golden_fixture(criterion):
    topo, offers, limits = load_fixture("italy_h9")
    res = clear_hour(offers, topo, limits, 9)
    expected = (DATA / "italy_h9" / "expected_h9.json").read_text()
    byte_exact = results_to_json([res]) == expected
    targets = {"NORD": 64.37, "CSUD": 64.37, "SUD": 36.33, "SICI": 55.0, "BSP": 0.0}
    price_ok = all(res.price(z) == p for z, p in targets.items())
    priced = {round(res.price(topo.codes[m[0]]), 2) for m in res.macrozones if "MFTV" not in
              [topo.codes[z] for z in m] and "BSP" not in [topo.codes[z] for z in m]}
    ok = byte_exact and price_ok and priced == {64.37, 36.33, 55.0}
    criterion("golden 22-zone fixture", ok,
              f"byte-exact={byte_exact}, Italian macrozone prices {sorted(priced)}, BSP={res.price('BSP')}")


def test_determinism_and_price_scaling(criterion, tmp_path, warm_kernels):
    base = DATA / "italy_h9"
    outs = []
    for k in range(3):
        out = tmp_path / f"run{k}.json"
        args = ["clear", "--topology", str(base / "topology.txt"), "--offers", str(base / "offers.csv"),
                "--limits", str(base / "limits.csv"), "--hours", "9", "--out", str(out)]
        assert main(args) == 0
        outs.append(out.read_bytes())
    repeat_ok = len(set(outs)) == 1

    c = 7.3
    worst_p = worst_q = 0.0
    partition_ok = True
    for topo, offers, limits in tree_instances(60, seed=99):
        a = clear_hour(offers, topo, limits, 1)
        b = clear_hour([replace(o, price=o.price * c) for o in offers], topo, limits, 1)
        partition_ok &= a.macrozones == b.macrozones
        worst_q = max(worst_q, float(np.max(np.abs(np.subtract(a.accepted, b.accepted)))))
        for pa, pb in ((a.prices_marginal, b.prices_marginal), (a.prices_dual, b.prices_dual)):
            pa, pb = c * np.asarray(pa), np.asarray(pb)
            worst_p = max(worst_p, float(np.max(np.abs(pb - pa) / np.maximum(1.0, np.abs(pa)))))
    ok = repeat_ok and partition_ok and worst_q <= 1e-9 and worst_p <= 1e-9
    criterion("determinism and x7.3 price scaling", ok,
              f"repeat identical={repeat_ok}, partition same={partition_ok}, "
              f"max |dq|={worst_q:.1e}, max rel dp={worst_p:.1e}")
