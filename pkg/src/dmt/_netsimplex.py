"""Exact transportation solver: network simplex on the bipartite flow graph.

Supplies sit on rows, demands on columns; a basis is a spanning tree of the
n+m node graph with n+m-1 arcs.  Pivoting follows the textbook MODI scheme:
potentials from the basis tree, most-negative reduced cost enters, the unique
tree cycle is traced and the minimum odd-position flow leaves.  The returned
plan is a vertex of the coupling polytope.  A pivot cap guards against
cycling on degenerate instances; callers fall back to an LP solver when the
cap is hit (status 1).
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _solve(C, a, b, tol, max_pivots):  # pragma: no cover - exercised via transport tests
    n, m = C.shape
    N = n + m
    nb = N - 1

    basis_i = np.empty(nb, np.int64)
    basis_j = np.empty(nb, np.int64)
    flow = np.zeros(nb, np.float64)

    # north-west corner start
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    for k in range(nb):
        basis_i[k] = i
        basis_j[k] = j
        f = ra[i] if ra[i] < rb[j] else rb[j]
        flow[k] = f
        ra[i] -= f
        rb[j] -= f
        if k == nb - 1:
            break
        if (ra[i] <= 0.0 and i < n - 1) or j == m - 1:
            i += 1
        else:
            j += 1

    u = np.zeros(n, np.float64)
    v = np.zeros(m, np.float64)
    # adjacency over basis arcs, rebuilt per pivot
    deg = np.zeros(N, np.int64)
    start = np.zeros(N + 1, np.int64)
    fill = np.zeros(N, np.int64)
    inc = np.zeros(2 * nb, np.int64)
    par_node = np.zeros(N, np.int64)
    par_arc = np.zeros(N, np.int64)
    order = np.zeros(N, np.int64)
    stackbuf = np.zeros(N, np.int64)
    onpath = np.zeros(N, np.bool_)
    cyc_arcs = np.zeros(N + 1, np.int64)

    status = 1
    for _pivot in range(max_pivots):
        # potentials via walk over the basis tree from row node 0
        deg[:] = 0
        for k in range(nb):
            deg[basis_i[k]] += 1
            deg[n + basis_j[k]] += 1
        start[0] = 0
        for x in range(N):
            start[x + 1] = start[x] + deg[x]
            fill[x] = start[x]
        for k in range(nb):
            x = basis_i[k]
            y = n + basis_j[k]
            inc[fill[x]] = k
            fill[x] += 1
            inc[fill[y]] = k
            fill[y] += 1
        par_node[:] = -1
        par_arc[:] = -1
        top = 0
        stackbuf[0] = 0
        par_node[0] = 0
        u[0] = 0.0
        cnt = 0
        while top >= 0:
            x = stackbuf[top]
            top -= 1
            order[cnt] = x
            cnt += 1
            for p in range(start[x], start[x + 1]):
                k = inc[p]
                y = n + basis_j[k] if x < n else basis_i[k]
                if par_node[y] == -1:
                    par_node[y] = x
                    par_arc[y] = k
                    if y >= n:
                        v[y - n] = C[basis_i[k], basis_j[k]] - u[basis_i[k]]
                    else:
                        u[y] = C[basis_i[k], basis_j[k]] - v[basis_j[k]]
                    top += 1
                    stackbuf[top] = y

        # entering arc: most negative reduced cost
        best = -tol
        ie = -1
        je = -1
        for r in range(n):
            ur = u[r]
            for c in range(m):
                red = C[r, c] - ur - v[c]
                if red < best:
                    best = red
                    ie = r
                    je = c
        if ie < 0:
            status = 0
            break

        # unique basis-tree cycle between row ie and column je
        onpath[:] = False
        x = ie
        while True:
            onpath[x] = True
            if x == par_node[x]:
                break
            x = par_node[x]
        y = n + je
        while not onpath[y]:
            y = par_node[y]
        lca = y
        # arcs je-side then ie-side; positions count from the entering arc
        ncyc = 0
        y = n + je
        while y != lca:
            cyc_arcs[ncyc] = par_arc[y]
            ncyc += 1
            y = par_node[y]
        down = ncyc  # arcs from lca down to ie get appended reversed
        x = ie
        while x != lca:
            cyc_arcs[ncyc] = par_arc[x]
            ncyc += 1
            x = par_node[x]
        # reverse the ie-side so positions run continuously around the cycle
        lo = down
        hi = ncyc - 1
        while lo < hi:
            t = cyc_arcs[lo]
            cyc_arcs[lo] = cyc_arcs[hi]
            cyc_arcs[hi] = t
            lo += 1
            hi -= 1

        theta = np.inf
        leave = -1
        for p in range(ncyc):
            if p % 2 == 0:  # odd position around the cycle (entering arc is 0th)
                k = cyc_arcs[p]
                if flow[k] < theta:
                    theta = flow[k]
                    leave = k
        for p in range(ncyc):
            k = cyc_arcs[p]
            if p % 2 == 0:
                flow[k] -= theta
            else:
                flow[k] += theta
        slot = leave
        flow[slot] = theta
        basis_i[slot] = ie
        basis_j[slot] = je

    G = np.zeros((n, m), np.float64)
    for k in range(nb):
        G[basis_i[k], basis_j[k]] += flow[k]
    return G, status


def transport_plan(cost: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, int]:
    """Exact minimizer of <cost, plan> over couplings of a and b.

    Returns (plan, status); status 0 means proven optimal, 1 means the pivot
    cap was reached and the caller should fall back to an LP.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    scale = max(1.0, float(np.abs(cost).max()))
    tol = 1e-11 * scale
    max_pivots = 200 * (cost.shape[0] + cost.shape[1]) + 1000
    return _solve(cost, a, b, tol, max_pivots)
