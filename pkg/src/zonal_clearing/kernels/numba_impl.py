"""Numba kernels. Same decision rules as numpy_impl, written as explicit loops."""
import numpy as np
from numba import njit

from .codes import AT_LOWER, AT_UPPER, BASIC, ITERATION_LIMIT, OPTIMAL, UNBOUNDED

RATIO_TIE = 1e-12


@njit(cache=True)
def dfs_reach(adj, start):
    n = adj.shape[0]
    visited = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    visited[start] = True
    stack[0] = start
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        for k in range(n):
            if adj[node, k] != 0 and not visited[k]:
                visited[k] = True
                stack[top] = k
                top += 1
    return visited


@njit(cache=True)
def pivot(T, d, r, j):
    m, n = T.shape
    piv = T[r, j]
    prow = np.empty(n)
    for k in range(n):
        prow[k] = T[r, k] / piv
    for i in range(m):
        if i == r:
            continue
        f = T[i, j]
        if f != 0.0:
            for k in range(n):
                T[i, k] -= f * prow[k]
        T[i, j] = 0.0
    for k in range(n):
        T[r, k] = prow[k]
    T[r, j] = 1.0
    dj = d[j]
    if dj != 0.0:
        for k in range(n):
            d[k] -= dj * prow[k]
    d[j] = 0.0


@njit(cache=True)
def _entering(d, state, upper, opt_tol, bland):
    best = -1.0
    jbest = -1
    for j in range(d.shape[0]):
        if upper[j] <= 0.0:
            continue
        s = state[j]
        if (s == AT_LOWER and d[j] < -opt_tol) or (s == AT_UPPER and d[j] > opt_tol):
            if bland:
                return j
            a = abs(d[j])
            if a > best:
                best = a
                jbest = j
    return jbest


@njit(cache=True)
def _leaving(alpha, beta, basis, upper, piv_tol, bland):
    m = alpha.shape[0]
    ratios = np.full(m, np.inf)
    tmin = np.inf
    for i in range(m):
        a = alpha[i]
        if a > piv_tol:
            ratios[i] = max(beta[i], 0.0) / a
        elif a < -piv_tol:
            ub = upper[basis[i]]
            if np.isfinite(ub):
                ratios[i] = max(ub - beta[i], 0.0) / -a
        if ratios[i] < tmin:
            tmin = ratios[i]
    if not np.isfinite(tmin):
        return -1, np.inf
    r = -1
    for i in range(m):
        if ratios[i] <= tmin + RATIO_TIE:
            if r < 0:
                r = i
            elif bland:
                if basis[i] < basis[r]:
                    r = i
            elif abs(alpha[i]) > abs(alpha[r]):
                r = i
    return r, tmin


@njit(cache=True)
def simplex_loop(T, beta, d, basis, state, upper, max_iter, bland_after, piv_tol, opt_tol):
    m = T.shape[0]
    alpha = np.empty(m)
    it = 0
    while it < max_iter:
        bland = it >= bland_after
        j = _entering(d, state, upper, opt_tol, bland)
        if j < 0:
            return OPTIMAL, it
        delta = 1.0 if state[j] == AT_LOWER else -1.0
        for i in range(m):
            alpha[i] = delta * T[i, j]
        r, t = _leaving(alpha, beta, basis, upper, piv_tol, bland)
        uj = upper[j]
        if np.isfinite(uj) and uj <= t:
            step = delta * uj
            for i in range(m):
                beta[i] -= step * T[i, j]
            state[j] = AT_UPPER if state[j] == AT_LOWER else AT_LOWER
        elif r < 0:
            return UNBOUNDED, it
        else:
            x_old = 0.0 if state[j] == AT_LOWER else uj
            step = delta * t
            for i in range(m):
                beta[i] -= step * T[i, j]
            leaving = basis[r]
            state[leaving] = AT_LOWER if alpha[r] > 0.0 else AT_UPPER
            beta[r] = x_old + delta * t
            pivot(T, d, r, j)
            basis[r] = j
            state[j] = BASIC
        it += 1
    return ITERATION_LIMIT, it
