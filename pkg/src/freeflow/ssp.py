"""Successive-shortest-path min-cost flow on a metric edge graph.

Solves  min sum_e length_e * |phi_e|  subject to  incidence @ phi = b
(uncapacitated, both traversal directions cost the edge length) by
augmenting along shortest residual paths with Dijkstra over reduced
costs. The accumulated node potentials are an optimal solution of the
dual problem: they maximize sum_v b[v] * f[v] over all vertex fields
with |f[u] - f[v]| <= length(u, v) on every edge.
"""

from __future__ import annotations

import heapq

import numpy as np

from .errors import SolverFailure


def min_cost_flow(mesh, b):
    """Route the imbalance ``b`` (net required inflow per vertex, summing
    to zero) at minimum length-weighted cost.

    Returns ``(flow, potential)`` where ``flow[e]`` is signed along the
    canonical edge orientation and ``potential`` is an optimal dual
    vertex field with potential[base_vertex] == 0.
    """
    V = mesh.vertex_count
    b = np.asarray(b, dtype=float)
    if b.shape != (V,):
        raise ValueError(f"imbalance has shape {b.shape}, expected ({V},)")
    if abs(b.sum()) > 1e-9 * max(1.0, np.abs(b).max()):
        raise SolverFailure(f"imbalance does not sum to zero: {b.sum()}")

    edges = mesh.edges
    lengths = mesh.edge_lengths
    # neighbor[u] = list of (v, edge id, +1 if u->v matches canonical)
    neighbor = [[] for _ in range(V)]
    for e, (u, v) in enumerate(edges):
        neighbor[int(u)].append((int(v), e, 1.0))
        neighbor[int(v)].append((int(u), e, -1.0))

    flow = np.zeros(len(edges))
    pi = np.zeros(V)
    remaining = b.copy()
    # roundoff in the balanced imbalance leaves crumbs below this scale
    settled = 1e-12 * max(1.0, float(np.abs(b).max(initial=0.0)))

    max_rounds = 10 * (V + len(edges)) + 100
    rounds = 0
    while True:
        sinks = np.flatnonzero(remaining > settled)
        if not len(sinks):
            break
        sources = np.flatnonzero(remaining < -settled)
        if not len(sources):
            raise SolverFailure("supply exhausted before demand was met")
        rounds += 1
        if rounds > max_rounds:
            raise SolverFailure("augmentation cap exceeded")

        dist = np.full(V, np.inf)
        parent = np.full(V, -1, dtype=np.int64)
        parent_edge = np.full(V, -1, dtype=np.int64)
        parent_sign = np.zeros(V)
        heap = []
        for s in sources:
            dist[s] = 0.0
            heapq.heappush(heap, (0.0, int(s)))
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, e, sign in neighbor[u]:
                # traversing against existing flow refunds the edge cost
                cost = -lengths[e] if flow[e] * sign < 0 else lengths[e]
                rc = cost + pi[u] - pi[v]
                if rc < 0.0:
                    rc = 0.0  # clamp float noise on tight arcs
                nd = d + rc
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = u
                    parent_edge[v] = e
                    parent_sign[v] = sign
                    heapq.heappush(heap, (nd, v))

        t = int(sinks[np.argmin(dist[sinks])])
        if not np.isfinite(dist[t]):
            raise SolverFailure("sink unreachable in residual network")

        # walk back to the source, collecting the bottleneck over
        # cancellation arcs (their capacity is the opposing flow)
        path = []
        node = t
        while parent[node] >= 0:
            e, sign = int(parent_edge[node]), parent_sign[node]
            path.append((e, sign))
            node = int(parent[node])
        s = node

        delta = min(-remaining[s], remaining[t])
        for e, sign in path:
            if flow[e] * sign < 0:
                delta = min(delta, abs(flow[e]))
        for e, sign in path:
            flow[e] += delta * sign
        remaining[s] += delta
        remaining[t] -= delta

        finite = np.isfinite(dist)
        pi[finite] += dist[finite]

    potential = pi - pi[mesh.base_vertex]
    return flow, potential
