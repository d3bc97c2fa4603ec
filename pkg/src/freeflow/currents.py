"""Classification of discrete 1-currents: exact, closed-not-exact, not closed.

An EdgeForm stores one circulation per canonical oriented edge (u < v);
flipping an edge's orientation negates its value. Exactness is decided by
integrating along a spanning tree from the base vertex and measuring the
worst mismatch on the remaining edges; closedness by the oriented
circulation around each face. On surfaces with first Betti number zero
the two notions coincide, and the constructed annulus/torus generators
witness that they differ otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MeshError, RankUnstable

DEFAULT_TOL = 1e-8


def _as_edgeform(mesh, omega):
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (len(mesh.edges),):
        raise MeshError(
            f"edge form has shape {omega.shape}, expected ({len(mesh.edges)},)"
        )
    if not np.all(np.isfinite(omega)):
        raise MeshError("edge form has non-finite entries")
    return omega


def d0(mesh, f):
    """Differences of a vertex field along canonical edge orientations."""
    f = np.asarray(f, dtype=float)
    u, v = mesh.edges[:, 0], mesh.edges[:, 1]
    return f[v] - f[u]


def d1(mesh, omega):
    """Oriented circulation of an edge form around each face."""
    if mesh.dimension != 2:
        raise MeshError("d1 requires a dimension-2 mesh")
    omega = _as_edgeform(mesh, omega)
    out = np.zeros(len(mesh.triangles))
    for f in range(len(mesh.triangles)):
        total = 0.0
        for u, v in mesh.oriented_face_edges(f):
            e = mesh.edge_id(u, v)
            total += omega[e] if u < v else -omega[e]
        out[f] = total
    return out


def spanning_tree(mesh, rng=None):
    """Edge ids of a spanning tree, deterministic unless ``rng`` is given."""
    order = np.arange(len(mesh.edges))
    if rng is not None:
        order = rng.permutation(order)
    parent = list(range(mesh.vertex_count))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = []
    for e in order:
        u, v = (int(x) for x in mesh.edges[e])
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            tree.append(int(e))
    return tree


def solve_potential(mesh, omega, tree=None):
    """Integrate an edge form from the base vertex along a spanning tree.

    Returns ``(potential, exactness_residual)`` where the residual is the
    maximal mismatch |g(v) - g(u) - omega_e| over non-tree edges. For an
    exact form the residual vanishes and the potential is the witness
    with potential[base] == 0.
    """
    omega = _as_edgeform(mesh, omega)
    if tree is None:
        tree = spanning_tree(mesh)
    tree_set = set(tree)
    adj = [[] for _ in range(mesh.vertex_count)]
    for e in tree:
        u, v = (int(x) for x in mesh.edges[e])
        adj[u].append((v, e, 1.0))
        adj[v].append((u, e, -1.0))

    g = np.zeros(mesh.vertex_count)
    seen = np.zeros(mesh.vertex_count, dtype=bool)
    seen[mesh.base_vertex] = True
    stack = [mesh.base_vertex]
    while stack:
        u = stack.pop()
        for v, e, sign in adj[u]:
            if not seen[v]:
                seen[v] = True
                g[v] = g[u] + sign * omega[e]
                stack.append(v)
    if not seen.all():
        raise MeshError("spanning tree does not span the mesh")

    residual = 0.0
    for e in range(len(mesh.edges)):
        if e in tree_set:
            continue
        u, v = (int(x) for x in mesh.edges[e])
        residual = max(residual, abs(g[v] - g[u] - omega[e]))
    return g, residual


@dataclass(frozen=True)
class CurrentClass:
    kind: str  # exact | closed_not_exact | not_closed
    closedness_residual: float
    exactness_residual: float
    witness_potential: np.ndarray | None = None

    def to_dict(self):
        out = {
            "kind": self.kind,
            "closedness_residual": self.closedness_residual,
            "exactness_residual": self.exactness_residual,
        }
        if self.witness_potential is not None:
            out["witness_potential"] = [float(x) for x in self.witness_potential]
        return out


def classify(mesh, omega, tol=DEFAULT_TOL):
    """Decide whether an edge form is exact, closed but not exact, or not
    closed, with both residuals reported."""
    omega = _as_edgeform(mesh, omega)
    closedness = (
        float(np.max(np.abs(d1(mesh, omega)))) if mesh.dimension == 2 else 0.0
    )
    potential, exactness = solve_potential(mesh, omega)
    if closedness > tol:
        return CurrentClass("not_closed", closedness, exactness)
    if exactness <= tol:
        return CurrentClass("exact", closedness, exactness, potential)
    return CurrentClass("closed_not_exact", closedness, exactness)


def _rank_gaussian(matrix, pivot_tol=1e-9, unstable_band=1e-11):
    """Rank by floating Gaussian elimination with an ambiguity guard."""
    a = np.array(matrix, dtype=float)
    if a.size == 0:
        return 0
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        col = np.abs(a[r:, c])
        p = int(np.argmax(col))
        pivot = col[p]
        if pivot < unstable_band:
            continue
        if pivot < pivot_tol:
            raise RankUnstable(
                f"pivot {pivot:.3e} inside [{unstable_band:.0e}, {pivot_tol:.0e})"
            )
        if p != 0:
            a[[r, r + p]] = a[[r + p, r]]
        a[r] = a[r] / a[r, c]
        below = a[r + 1 :, c]
        a[r + 1 :] -= np.outer(below, a[r])
        r += 1
    return r


def betti1(mesh):
    """First Betti number: cycles of the edge graph modulo face boundaries."""
    E = len(mesh.edges)
    V = mesh.vertex_count
    cycles = E - V + 1
    if mesh.dimension == 1 or not len(mesh.triangles):
        return cycles
    boundary = np.zeros((E, len(mesh.triangles)))
    for f in range(len(mesh.triangles)):
        for u, v in mesh.oriented_face_edges(f):
            e = mesh.edge_id(u, v)
            boundary[e, f] += 1.0 if u < v else -1.0
    return cycles - _rank_gaussian(boundary)


def oneform_to_edgeform(mesh, f):
    """Circulations of a per-face covector field along canonical edges.

    Interior edges average the two incident faces; the conversion is
    lossy in general (a piecewise constant covector field need not have
    matching tangential traces).
    """
    if mesh.dimension != 2:
        raise MeshError("conversion requires a dimension-2 mesh")
    f = np.asarray(f, dtype=float)
    geom = mesh.face_geometry()
    total = np.zeros(len(mesh.edges))
    count = np.zeros(len(mesh.edges))
    for t in range(len(mesh.triangles)):
        tri = [int(x) for x in mesh.triangles[t]]
        for i in range(3):
            j = (i + 1) % 3
            u, v = tri[i], tri[j]
            e = mesh.edge_id(u, v)
            vec = geom.layout[t, j] - geom.layout[t, i]
            circ = float(f[t] @ vec)
            total[e] += circ if u < v else -circ
            count[e] += 1
    return total / count


def edgeform_to_oneform(mesh, omega):
    """Per-face least-squares covector matching the three edge circulations.

    Returns ``(oneform, max_residual)``; the residual is zero only on
    forms whose face circulations vanish, so the conversion is flagged
    lossy through it.
    """
    if mesh.dimension != 2:
        raise MeshError("conversion requires a dimension-2 mesh")
    omega = _as_edgeform(mesh, omega)
    geom = mesh.face_geometry()
    out = np.zeros((len(mesh.triangles), 2))
    worst = 0.0
    for t in range(len(mesh.triangles)):
        tri = [int(x) for x in mesh.triangles[t]]
        rows = []
        rhs = []
        for i in range(3):
            j = (i + 1) % 3
            u, v = tri[i], tri[j]
            e = mesh.edge_id(u, v)
            rows.append(geom.layout[t, j] - geom.layout[t, i])
            rhs.append(omega[e] if u < v else -omega[e])
        sol, _, _, _ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
        out[t] = sol
        worst = max(worst, float(np.max(np.abs(np.array(rows) @ sol - rhs))))
    return out, worst
