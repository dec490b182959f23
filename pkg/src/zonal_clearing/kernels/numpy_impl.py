"""Pure-numpy kernels. Reference path, selected with ZONAL_CLEARING_BACKEND=numpy."""
import numpy as np

from .codes import AT_LOWER, AT_UPPER, BASIC, ITERATION_LIMIT, OPTIMAL, UNBOUNDED

RATIO_TIE = 1e-12


def dfs_reach(adj, start):
    """Visited set of a stack-based DFS from ``start``; mark-on-push, ascending neighbours."""
    n = adj.shape[0]
    visited = np.zeros(n, dtype=np.bool_)
    visited[start] = True
    stack = [start]
    while stack:
        node = stack.pop()
        fresh = np.flatnonzero((adj[node] != 0) & ~visited)
        visited[fresh] = True
        stack.extend(fresh.tolist())
    return visited


def pivot(T, d, r, j):
    """Gauss-Jordan pivot of tableau ``T`` and reduced-cost row ``d`` on (r, j)."""
    prow = T[r] / T[r, j]
    col = T[:, j].copy()
    T -= np.outer(col, prow)
    T[r] = prow
    T[:, j] = 0.0
    T[r, j] = 1.0
    d -= d[j] * prow
    d[j] = 0.0


def _entering(d, state, upper, opt_tol, bland):
    movable = upper > 0.0
    elig = movable & (
        ((state == AT_LOWER) & (d < -opt_tol)) | ((state == AT_UPPER) & (d > opt_tol))
    )
    if not elig.any():
        return -1
    if bland:
        return int(np.flatnonzero(elig)[0])
    return int(np.argmax(np.where(elig, np.abs(d), -1.0)))


def _leaving(alpha, beta, basis, upper, piv_tol, bland):
    m = alpha.shape[0]
    ratios = np.full(m, np.inf)
    ub = upper[basis]
    pos = alpha > piv_tol
    ratios[pos] = np.maximum(beta[pos], 0.0) / alpha[pos]
    neg = (alpha < -piv_tol) & np.isfinite(ub)
    ratios[neg] = np.maximum(ub[neg] - beta[neg], 0.0) / -alpha[neg]
    if m == 0:
        return -1, np.inf
    tmin = ratios.min()
    if not np.isfinite(tmin):
        return -1, np.inf
    ties = np.flatnonzero(ratios <= tmin + RATIO_TIE)
    if bland:
        r = ties[np.argmin(basis[ties])]
    else:
        r = ties[np.argmax(np.abs(alpha[ties]))]
    return int(r), float(tmin)


def simplex_loop(T, beta, d, basis, state, upper, max_iter, bland_after, piv_tol, opt_tol):
    """Bounded-variable primal simplex iterations on a dense tableau, in place.

    All lower bounds are zero. Returns ``(status, iterations)``.
    """
    it = 0
    while it < max_iter:
        bland = it >= bland_after
        j = _entering(d, state, upper, opt_tol, bland)
        if j < 0:
            return OPTIMAL, it
        delta = 1.0 if state[j] == AT_LOWER else -1.0
        alpha = delta * T[:, j]
        r, t = _leaving(alpha, beta, basis, upper, piv_tol, bland)
        uj = upper[j]
        if np.isfinite(uj) and uj <= t:
            # bound flip, basis unchanged
            beta -= delta * uj * T[:, j]
            state[j] = AT_UPPER if state[j] == AT_LOWER else AT_LOWER
        elif r < 0:
            return UNBOUNDED, it
        else:
            x_old = 0.0 if state[j] == AT_LOWER else uj
            beta -= (delta * t) * T[:, j]
            leaving = basis[r]
            state[leaving] = AT_LOWER if alpha[r] > 0.0 else AT_UPPER
            beta[r] = x_old + delta * t
            pivot(T, d, r, j)
            basis[r] = j
            state[j] = BASIC
        it += 1
    return ITERATION_LIMIT, it
