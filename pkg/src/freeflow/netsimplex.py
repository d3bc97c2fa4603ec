"""Primal network simplex for uncapacitated min-cost flow.

Each mesh edge becomes two opposed arcs with cost equal to the edge
length, so the optimum of  min sum_a cost_a * x_a, x >= 0,
incidence @ x = b  equals the minimal length-weighted mass
min sum_e length_e * |phi_e| over signed edge flows with the same
divergence. Feasibility is bootstrapped with artificial big-cost arcs
through an extra root node; the leaving arc is the last blocking arc
along the pivot cycle from its apex, which keeps the spanning tree
strongly feasible and prevents degenerate cycling.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import SolverFailure


def min_cost_flow(mesh, b, pivot_tol=None):
    """Optimal signed edge flow for the vertex imbalance ``b``.

    Returns ``(flow, value)``: flow is signed along canonical edge
    orientations, value is its length-weighted mass.
    """
    V = mesh.vertex_count
    E = len(mesh.edges)
    b = np.asarray(b, dtype=float)
    if b.shape != (V,):
        raise ValueError(f"imbalance has shape {b.shape}, expected ({V},)")
    if abs(b.sum()) > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
        raise SolverFailure(f"imbalance does not sum to zero: {b.sum()}")

    root = V
    n_nodes = V + 1
    n_real = 2 * E
    n_arcs = n_real + V

    tails = np.empty(n_arcs, dtype=np.int64)
    heads = np.empty(n_arcs, dtype=np.int64)
    costs = np.empty(n_arcs)
    tails[0:n_real:2] = mesh.edges[:, 0]
    heads[0:n_real:2] = mesh.edges[:, 1]
    tails[1:n_real:2] = mesh.edges[:, 1]
    heads[1:n_real:2] = mesh.edges[:, 0]
    costs[0:n_real:2] = mesh.edge_lengths
    costs[1:n_real:2] = mesh.edge_lengths

    big = 1.0 + 4.0 * float(mesh.edge_lengths.sum())
    for v in range(V):
        a = n_real + v
        costs[a] = big
        if b[v] > 0:
            tails[a], heads[a] = root, v
        else:
            tails[a], heads[a] = v, root

    flow = np.zeros(n_arcs)
    flow[n_real:] = np.abs(b)

    # spanning tree state; potentials satisfy rc = 0 on tree arcs
    parent = np.full(n_nodes, -1, dtype=np.int64)
    parent_arc = np.full(n_nodes, -1, dtype=np.int64)
    in_tree = np.zeros(n_arcs, dtype=bool)
    parent[:V] = root
    parent_arc[:V] = n_real + np.arange(V)
    in_tree[n_real:] = True

    depth = np.zeros(n_nodes, dtype=np.int64)
    depth[:V] = 1
    pi = np.zeros(n_nodes)
    for v in range(V):
        a = n_real + v
        pi[v] = big if heads[a] == v else -big

    if pivot_tol is None:
        pivot_tol = 1e-11 * (1.0 + float(mesh.edge_lengths.max(initial=0.0)))

    def retree():
        """Recompute parent/depth/potentials from the tree arc set."""
        adj = [[] for _ in range(n_nodes)]
        for a in np.flatnonzero(in_tree):
            adj[tails[a]].append((heads[a], a))
            adj[heads[a]].append((tails[a], a))
        parent[root] = -1
        parent_arc[root] = -1
        depth[root] = 0
        pi[root] = 0.0
        stack = [root]
        seen = np.zeros(n_nodes, dtype=bool)
        seen[root] = True
        while stack:
            u = stack.pop()
            for v, a in adj[u]:
                if seen[v]:
                    continue
                seen[v] = True
                parent[v] = u
                parent_arc[v] = a
                depth[v] = depth[u] + 1
                pi[v] = pi[u] + costs[a] if heads[a] == v else pi[u] - costs[a]
                stack.append(v)
        if not seen.all():
            raise SolverFailure("spanning tree lost during pivoting")

    block = max(64, int(math.ceil(math.sqrt(n_arcs))))
    max_pivots = 200 * n_arcs + 1000
    pivots = 0
    cursor = 0
    while True:
        # entering arc: best reduced cost within a wrapping block scan
        entering = -1
        scanned = 0
        while scanned < n_arcs:
            hi = min(cursor + block, n_arcs)
            idx = np.arange(cursor, hi)
            rc = costs[idx] + pi[tails[idx]] - pi[heads[idx]]
            rc[in_tree[idx]] = 0.0
            k = int(np.argmin(rc))
            if rc[k] < -pivot_tol:
                entering = int(idx[k])
                cursor = hi % n_arcs
                break
            scanned += hi - cursor
            cursor = hi % n_arcs
        if entering < 0:
            break
        pivots += 1
        if pivots > max_pivots:
            raise SolverFailure("pivot cap exceeded")

        t, h = int(tails[entering]), int(heads[entering])
        # cycle = tree path h .. apex .. t plus the entering arc t->h;
        # pushing along the entering direction increases arcs oriented
        # with the cycle and decreases arcs against it
        up_t, up_h = [], []
        a_node, b_node = t, h
        while a_node != b_node:
            if depth[a_node] >= depth[b_node]:
                up_t.append(int(parent_arc[a_node]))
                a_node = int(parent[a_node])
            else:
                up_h.append(int(parent_arc[b_node]))
                b_node = int(parent[b_node])
        apex = a_node

        # traverse from the apex along the push direction:
        # apex -> t (against up_t order), entering, h -> apex
        cycle = []
        for a in reversed(up_t):
            node_above = heads[a] if depth[heads[a]] < depth[tails[a]] else tails[a]
            with_dir = tails[a] == node_above  # arc points away from apex
            cycle.append((a, 1.0 if with_dir else -1.0))
        cycle.append((entering, 1.0))
        for a in up_h:
            node_above = heads[a] if depth[heads[a]] < depth[tails[a]] else tails[a]
            with_dir = heads[a] == node_above  # arc points toward apex
            cycle.append((a, 1.0 if with_dir else -1.0))

        delta = math.inf
        leaving = -1
        for a, sgn in cycle:
            if sgn < 0 and flow[a] <= delta:
                delta = flow[a]
                leaving = a
        if leaving < 0:
            raise SolverFailure("unbounded pivot cycle (negative cost cycle)")

        for a, sgn in cycle:
            flow[a] += sgn * delta
        flow[leaving] = 0.0

        in_tree[leaving] = False
        in_tree[entering] = True
        retree()

    if flow[n_real:].max(initial=0.0) > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
        raise SolverFailure("artificial arcs still carry flow at optimality")

    signed = flow[0:n_real:2] - flow[1:n_real:2]
    value = float(np.sum(mesh.edge_lengths * np.abs(signed)))
    return signed, value
