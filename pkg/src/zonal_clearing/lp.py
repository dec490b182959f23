"""Clearing LP assembly, bounded-variable simplex with duals, KKT checks.

The LP is kept in minimisation form::

    min  c.x   s.t.  A x <= b,  A_eq x = b_eq,  lb <= x <= ub

with ``c = +price`` for sells and ``-price`` for buys, so welfare is
``-objective``. Duals follow ``c + A.T mu - A_eq.T lam = reduced_costs``,
which gives ``mu >= 0`` and the zonal price ``lam - sum(mu over cuts)``.
"""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import InputError, SolverError
from .kernels.codes import AT_LOWER, AT_UPPER, BASIC, ITERATION_LIMIT, OPTIMAL, UNBOUNDED
from .market_data import Offer, TransitLimit
from .network import NetworkTopology, _require_tree, connected_components, cut_matrix

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9
OPT_TOL = 1e-9


@dataclass
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    row_tags: list = field(default_factory=list)
    col_tags: list = field(default_factory=list)
    # zones covered by each balance row
    eq_tags: list = field(default_factory=list)

    @property
    def n_cols(self) -> int:
        return self.c.shape[0]


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    mu: np.ndarray
    lam: np.ndarray
    reduced_costs: np.ndarray
    status: SolveStatus
    iterations: int = 0

    @property
    def welfare(self) -> float:
        return -self.objective


def build_clearing_lp(
    offers: Sequence[Offer], topology: NetworkTopology, limits: Sequence[TransitLimit]
) -> LinearProgram:
    """One column per offer, one row per limited direction, one balance row per island."""
    if not offers:
        raise InputError("empty hour: no offers")
    _require_tree(topology)
    caps: dict[tuple[int, int], float] = {}
    for lim in limits:
        key = (lim.from_zone, lim.to_zone)
        if not topology.has_edge(*key):
            a, b = (topology.codes[z] for z in key)
            raise InputError(f"limit DA={a} A={b} has no edge")
        if key in caps:
            raise InputError(f"duplicate limit for {topology.label(key)}")
        if lim.max_flow < 0:
            raise InputError(f"negative limit on {topology.label(key)}")
        caps[key] = float(lim.max_flow)

    row_tags = []
    for i, j in topology.edges:
        for key in ((i, j), (j, i)):
            if key in caps:
                row_tags.append(key)

    sign = np.array([int(o.purpose) for o in offers], dtype=float)
    zone = np.array([o.zone for o in offers], dtype=np.int64)
    price = np.array([o.price for o in offers], dtype=float)
    qty = np.array([o.quantity for o in offers], dtype=float)

    cuts = cut_matrix(topology, row_tags)
    A = cuts[:, zone] * sign + 0.0
    b = np.array([caps[t] for t in row_tags], dtype=float)

    present = set(zone.tolist())
    islands = [comp for comp in connected_components(topology) if present.intersection(comp)]
    A_eq = np.zeros((len(islands), len(offers)))
    for r, comp in enumerate(islands):
        mask = np.isin(zone, comp)
        A_eq[r, mask] = sign[mask]

    return LinearProgram(
        c=sign * price,
        A=A.reshape(len(row_tags), len(offers)),
        b=b,
        A_eq=A_eq,
        b_eq=np.zeros(len(islands)),
        lb=np.zeros(len(offers)),
        ub=qty,
        row_tags=row_tags,
        col_tags=[o.id for o in offers],
        eq_tags=islands,
    )


def solve_lp(lp: LinearProgram, *, backend: str | None = None) -> LpSolution:
    """Two-phase bounded-variable primal simplex on a dense tableau.

    Dantzig pricing switches to Bland's rule after ``2 * (rows + cols)``
    iterations. The final basis is refactorised once to recover primal
    values and the duals ``y = c_B B^-1``.
    """
    kern = kernels.get_kernels(backend)
    c = np.asarray(lp.c, dtype=float)
    K = c.shape[0]
    A = np.asarray(lp.A, dtype=float).reshape(-1, K)
    A_eq = np.asarray(lp.A_eq, dtype=float).reshape(-1, K)
    lb = np.asarray(lp.lb, dtype=float)
    ub = np.asarray(lp.ub, dtype=float)
    if np.any(~np.isfinite(lb)) or np.any(lb > ub):
        raise InputError("bounds must satisfy finite lb <= ub")
    m1, m2 = A.shape[0], A_eq.shape[0]
    M = m1 + m2

    rows = np.vstack([A, A_eq])
    rhs = np.concatenate([np.asarray(lp.b, float), np.asarray(lp.b_eq, float)]) - rows @ lb
    row_sign = np.where(rhs < 0, -1.0, 1.0)
    rows = rows * row_sign[:, None]
    rhs = rhs * row_sign

    needs_art = np.ones(M, dtype=bool)
    needs_art[:m1] = row_sign[:m1] < 0
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size
    ncol = K + m1 + n_art
    Afull = np.zeros((M, ncol))
    Afull[:, :K] = rows
    Afull[np.arange(m1), K + np.arange(m1)] = row_sign[:m1]
    Afull[art_rows, K + m1 + np.arange(n_art)] = 1.0

    basis = np.empty(M, dtype=np.int64)
    basis[:m1] = K + np.arange(m1)
    basis[art_rows] = K + m1 + np.arange(n_art)
    upper = np.concatenate([ub - lb, np.full(m1 + n_art, np.inf)])
    state = np.full(ncol, AT_LOWER, dtype=np.int64)
    state[basis] = BASIC
    T = Afull.copy()
    beta = rhs.copy()
    art = slice(K + m1, ncol)

    max_iter = 50 * (M + ncol) + 1000
    bland_after = 2 * (M + ncol)
    iterations = 0

    if n_art and beta[art_rows].sum() > FEAS_TOL:
        c1 = np.zeros(ncol)
        c1[art] = 1.0
        d = c1 - c1[basis] @ T
        code, it = kern.simplex_loop(
            T, beta, d, basis, state, upper, max_iter, bland_after, PIVOT_TOL, OPT_TOL
        )
        iterations += it
        if code == ITERATION_LIMIT:
            raise SolverError("phase 1 hit the iteration limit")
        infeas = sum(beta[r] for r in range(M) if basis[r] >= K + m1)
        if infeas > FEAS_TOL * (1.0 + np.abs(rhs).max()):
            return _failed(K, m1, m2, SolveStatus.INFEASIBLE, iterations)

    upper[art] = 0.0
    scratch = np.zeros(ncol)
    for r in range(M):
        if basis[r] < K + m1:
            continue
        cand = np.abs(T[r, : K + m1])
        cand[state[: K + m1] == BASIC] = 0.0
        j = int(np.argmax(cand)) if cand.size else -1
        if j < 0 or cand[j] <= 1e-7:
            continue  # redundant row, artificial stays basic at zero
        leaving = basis[r]
        kern.pivot(T, scratch, r, j)
        beta[r] = 0.0 if state[j] == AT_LOWER else upper[j]
        state[leaving] = AT_LOWER
        basis[r] = j
        state[j] = BASIC

    cfull = np.concatenate([c, np.zeros(m1 + n_art)])
    d = cfull - cfull[basis] @ T
    code, it = kern.simplex_loop(
        T, beta, d, basis, state, upper, max_iter, bland_after, PIVOT_TOL, OPT_TOL
    )
    iterations += it
    if code == ITERATION_LIMIT:
        raise SolverError(f"phase 2 hit the iteration limit ({max_iter})")
    if code == UNBOUNDED:
        return _failed(K, m1, m2, SolveStatus.UNBOUNDED, iterations)

    xfull = np.where(state == AT_UPPER, upper, 0.0)
    xfull[basis] = 0.0
    if M:
        B = Afull[:, basis]
        try:
            xB = np.linalg.solve(B, rhs - Afull @ xfull)
            y = np.linalg.solve(B.T, cfull[basis])
        except np.linalg.LinAlgError:  # pragma: no cover - basis kept nonsingular by pivoting
            xB = beta.copy()
            y = np.linalg.lstsq(B.T, cfull[basis], rcond=None)[0]
        # drop refactorisation noise at the bounds
        ubB = upper[basis]
        xB = np.where(np.abs(xB) <= FEAS_TOL, 0.0, xB)
        xB = np.where(np.isfinite(ubB) & (np.abs(xB - ubB) <= FEAS_TOL), ubB, xB)
        xfull[basis] = xB
    else:
        y = np.zeros(0)
    y = y * row_sign
    x = lb + xfull[:K]
    mu = -y[:m1]
    lam = y[m1:]
    reduced = c + A.T @ mu - A_eq.T @ lam
    return LpSolution(
        x=x,
        objective=float(c @ x),
        mu=mu,
        lam=lam,
        reduced_costs=reduced,
        status=SolveStatus.OPTIMAL,
        iterations=iterations,
    )


def _failed(K, m1, m2, status, iterations):
    nan = np.full
    return LpSolution(nan(K, np.nan), np.nan, nan(m1, np.nan), nan(m2, np.nan),
                      nan(K, np.nan), status, iterations)


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    amount: float

    def __str__(self):
        return f"{self.kind}[{self.index}]: {self.amount:.3g}"


def verify_kkt(
    lp: LinearProgram,
    sol: LpSolution,
    *,
    bound_tol: float = 1e-9,
    row_tol: float = 1e-6,
    dual_tol: float = 1e-9,
    cs_tol: float = 1e-6,
    gap_tol: float = 1e-6,
) -> list[Violation]:
    """Primal feasibility, dual sign, complementary slackness and duality gap.

    Returns an empty list when every check passes.
    """
    out: list[Violation] = []
    x, mu, lam = sol.x, sol.mu, sol.lam
    for k in np.flatnonzero((x < lp.lb - bound_tol) | (x > lp.ub + bound_tol)):
        out.append(Violation("bound", int(k), float(max(lp.lb[k] - x[k], x[k] - lp.ub[k]))))
    Ax = lp.A @ x
    excess = Ax - lp.b
    for r in np.flatnonzero(excess > row_tol):
        out.append(Violation("inequality", int(r), float(excess[r])))
    resid = lp.A_eq @ x - lp.b_eq
    for r in np.flatnonzero(np.abs(resid) > row_tol):
        out.append(Violation("balance", int(r), float(resid[r])))
    for r in np.flatnonzero(mu < -dual_tol):
        out.append(Violation("dual_sign", int(r), float(mu[r])))
    cs = np.abs(mu * (lp.b - Ax))
    for r in np.flatnonzero(cs > cs_tol * (1.0 + np.abs(lp.b))):
        out.append(Violation("complementarity", int(r), float(cs[r])))

    primal = float(lp.c @ x)
    rc = lp.c + lp.A.T @ mu - lp.A_eq.T @ lam
    z_low = np.maximum(rc, 0.0)
    z_up = np.maximum(-rc, 0.0)
    with np.errstate(invalid="ignore"):
        up_term = np.where(z_up > 0.0, z_up * lp.ub, 0.0)
    dual = float(lp.b_eq @ lam - lp.b @ mu + lp.lb @ z_low - up_term.sum())
    gap = abs(primal - dual)
    if not gap <= gap_tol * (1.0 + abs(primal)):
        out.append(Violation("duality_gap", -1, gap))
    return out


def dump_lp(lp: LinearProgram, labels: dict | None = None) -> str:
    """Plain-text tableau: one line per column, then one line per row."""
    fmt = repr
    buf = io.StringIO()
    buf.write(f"# columns {lp.n_cols} rows {lp.A.shape[0]} balance {lp.A_eq.shape[0]}\n")
    buf.write("[columns] tag c lb ub\n")
    for k in range(lp.n_cols):
        tag = lp.col_tags[k] if k < len(lp.col_tags) else k
        buf.write(f"x{tag} {fmt(float(lp.c[k]))} {fmt(float(lp.lb[k]))} {fmt(float(lp.ub[k]))}\n")
    buf.write("[rows] tag coefficients... <= b\n")
    for r in range(lp.A.shape[0]):
        tag = lp.row_tags[r]
        name = labels.get(tag, tag) if labels else f"{tag[0]}->{tag[1]}"
        coef = " ".join(fmt(float(v)) for v in lp.A[r])
        buf.write(f"{name} {coef} <= {fmt(float(lp.b[r]))}\n")
    for r in range(lp.A_eq.shape[0]):
        coef = " ".join(fmt(float(v)) for v in lp.A_eq[r])
        buf.write(f"balance{r} {coef} = {fmt(float(lp.b_eq[r]))}\n")
    return buf.getvalue()
