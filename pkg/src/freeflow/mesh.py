"""Intrinsic metric simplicial surfaces and metric graphs.

A mesh is purely intrinsic: combinatorics plus one positive length per
edge. No vertex embedding is required; every derived quantity (face
metric, orthonormal frames, areas, geodesic distances) is computed from
edge lengths alone. Dimension 2 meshes are triangle surfaces, dimension 1
meshes are metric graphs (no triangles).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import (
    DegenerateFace,
    Disconnected,
    MeshError,
    NonManifold,
    NonOrientable,
    TriangleInequalityViolated,
)

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class GeodesicTable:
    """Shortest-path distances from one source vertex.

    Satisfies d[source] == 0 and the edge relaxation inequality
    |d[u] - d[v]| <= length(u, v) for every edge.
    """

    source: int
    dist: np.ndarray


@dataclass(frozen=True)
class FaceFrame:
    """Orthonormal tangent frame of one face.

    ``basis_coeffs`` holds the two frame vectors as columns, expressed in
    the face's chart basis (the edge vectors e1 = v1 - v0, e2 = v2 - v0
    laid out in the plane from the edge lengths). The Gram matrix of the
    frame under the face metric is the identity and the frame is
    positively oriented with respect to the face orientation.
    """

    face: int
    basis_coeffs: np.ndarray  # 2x2, columns = frame vectors in chart basis
    gram: np.ndarray  # 2x2, frame Gram matrix under the face metric


@dataclass(frozen=True)
class Patchwork:
    """Disjoint chart domains covering the surface up to the edge skeleton.

    One patch per face: the face interiors are pairwise disjoint and
    their union is the whole face list; the shared edges form the skipped
    null set.
    """

    patches: tuple  # tuple of (face_ids tuple, FaceFrame)

    def face_sets(self):
        return [set(faces) for faces, _ in self.patches]


@dataclass
class _FaceGeometry:
    layout: np.ndarray  # (F, 3, 2) planar vertex positions per face
    areas: np.ndarray  # (F,)
    hat_gradients: np.ndarray  # (F, 3, 2) gradient of each corner hat
    metrics: np.ndarray  # (F, 2, 2) chart-basis Gram matrices


class TriMesh:
    """Intrinsic metric triangle surface or metric graph.

    Parameters
    ----------
    triangles : array_like of shape (F, 3)
        Vertex triples. May be empty for a metric graph. Input orientations
        are adjusted by a global search so that every interior edge is
        traversed once in each direction; if no consistent assignment
        exists the mesh is rejected.
    edge_lengths : dict
        Map from vertex pairs to positive lengths. Keys may be given in
        either order; the map must cover all triangle edges and may add
        extra graph edges.
    base_vertex : int
        The distinguished vertex used to normalize potentials and absorb
        molecule mass deficits.

    Raises
    ------
    TriangleInequalityViolated, NonOrientable, NonManifold, Disconnected
    """

    def __init__(self, triangles, edge_lengths, base_vertex=0):
        triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)

        lengths = {}
        for (u, v), l in edge_lengths.items():
            u, v = int(u), int(v)
            if u == v:
                raise MeshError(f"self-loop edge ({u}, {v})")
            key = (u, v) if u < v else (v, u)
            l = float(l)
            if not l > 0.0:
                raise MeshError(f"edge {key} has non-positive length {l}")
            prev = lengths.get(key)
            if prev is not None and prev != l:
                raise MeshError(f"edge {key} given two lengths {prev} and {l}")
            lengths[key] = l

        for tri in triangles:
            a, b, c = (int(x) for x in tri)
            if len({a, b, c}) != 3:
                raise MeshError(f"degenerate triangle {tuple(tri)}")
            for u, v in ((a, b), (b, c), (a, c)):
                key = (u, v) if u < v else (v, u)
                if key not in lengths:
                    raise MeshError(f"missing length for triangle edge {key}")

        if not lengths:
            raise MeshError("mesh has no edges")

        self.dimension = 2 if len(triangles) else 1
        edges = sorted(lengths)
        self.edges = np.array(edges, dtype=np.int64)
        self.edge_lengths = np.array([lengths[e] for e in edges])
        self.edge_index = {e: i for i, e in enumerate(edges)}
        self.vertex_count = int(
            max(
                self.edges.max(),
                triangles.max() if len(triangles) else 0,
            )
        ) + 1

        self.aux = {}  # construction metadata from generators, not serialized
        self._geom = None
        self._adjacency = None
        self._all_dist = None

        self._check_triangle_inequalities(triangles)
        self.triangles = self._orient(triangles)
        self._check_connected()

        if not 0 <= int(base_vertex) < self.vertex_count:
            raise MeshError(f"base vertex {base_vertex} out of range")
        self.base_vertex = int(base_vertex)

        if self.dimension == 2:
            counts = self._edge_face_counts()
            self.boundary_edges = frozenset(np.flatnonzero(counts == 1).tolist())
        else:
            self.boundary_edges = frozenset()

        self.triangles.setflags(write=False)
        self.edges.setflags(write=False)
        self.edge_lengths.setflags(write=False)

    # -- validation -----------------------------------------------------

    def _check_triangle_inequalities(self, triangles):
        for f, tri in enumerate(triangles):
            a, b, c = (int(x) for x in tri)
            lab = self._length_of(a, b)
            lbc = self._length_of(b, c)
            lca = self._length_of(c, a)
            if (
                lab + lbc <= lca
                or lbc + lca <= lab
                or lca + lab <= lbc
            ):
                raise TriangleInequalityViolated(tri, (lab, lbc, lca))

    def _length_of(self, u, v):
        key = (u, v) if u < v else (v, u)
        return self.edge_lengths[self.edge_index[key]]

    def _edge_face_counts(self):
        counts = np.zeros(len(self.edges), dtype=np.int64)
        for tri in self.triangles:
            a, b, c = (int(x) for x in tri)
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                counts[self.edge_index[key]] += 1
        return counts

    def _orient(self, triangles):
        """Search for a globally consistent orientation by flipping faces.

        Two faces sharing an edge must traverse it in opposite directions.
        The constraint graph is bipartite iff the surface is orientable.
        """
        if not len(triangles):
            return triangles
        # directed traversals per canonical edge: (face, +1 if u->v else -1)
        incident = {}
        for f, tri in enumerate(triangles):
            a, b, c = (int(x) for x in tri)
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                incident.setdefault(key, []).append((f, 1 if u < v else -1))
        for key, faces in incident.items():
            if len(faces) > 2:
                raise NonManifold(f"edge {key} lies in {len(faces)} triangles")

        nfaces = len(triangles)
        flip = np.full(nfaces, -1, dtype=np.int64)
        for start in range(nfaces):
            if flip[start] >= 0:
                continue
            flip[start] = 0
            stack = [start]
            while stack:
                f = stack.pop()
                a, b, c = (int(x) for x in triangles[f])
                for u, v in ((a, b), (b, c), (c, a)):
                    key = (u, v) if u < v else (v, u)
                    for g, gdir in incident[key]:
                        if g == f:
                            continue
                        fdir = 1 if u < v else -1
                        # opposite traversal: fdir*(-1)^flip f != gdir*(-1)^flip g
                        need = 0 if fdir != gdir else 1
                        want = flip[f] ^ need
                        if flip[g] < 0:
                            flip[g] = want
                            stack.append(g)
                        elif flip[g] != want:
                            raise NonOrientable(
                                "no consistent orientation assignment exists"
                            )
        oriented = triangles.copy()
        flipped = flip == 1
        oriented[flipped] = oriented[flipped][:, ::-1]
        return oriented

    def _check_connected(self):
        n, _ = connected_components(self.adjacency(), directed=False)
        if n != 1:
            raise Disconnected(f"edge graph has {n} components")

    # -- derived geometry -------------------------------------------------

    def adjacency(self):
        """Symmetric sparse matrix of edge lengths."""
        if self._adjacency is None:
            u, v = self.edges[:, 0], self.edges[:, 1]
            w = self.edge_lengths
            self._adjacency = csr_matrix(
                (
                    np.concatenate([w, w]),
                    (np.concatenate([u, v]), np.concatenate([v, u])),
                ),
                shape=(self.vertex_count, self.vertex_count),
            )
        return self._adjacency

    def face_geometry(self):
        """Planar layouts, areas, hat gradients and chart metrics per face.

        Each face is laid out in the plane from its edge lengths with
        v0 at the origin and v1 on the positive x axis; these layout
        coordinates are exactly the orthonormal frame coordinates produced
        by Gram-Schmidt on the chart edge basis.
        """
        if self.dimension != 2:
            raise MeshError("face geometry requires a dimension-2 mesh")
        if self._geom is None:
            tris = self.triangles
            F = len(tris)
            l01 = np.array([self._length_of(t[0], t[1]) for t in tris])
            l02 = np.array([self._length_of(t[0], t[2]) for t in tris])
            l12 = np.array([self._length_of(t[1], t[2]) for t in tris])

            x = (l01**2 + l02**2 - l12**2) / (2.0 * l01)
            y = np.sqrt(np.maximum(l02**2 - x**2, 0.0))

            dots = (l01**2 + l02**2 - l12**2) / 2.0
            metrics = np.empty((F, 2, 2))
            metrics[:, 0, 0] = l01**2
            metrics[:, 0, 1] = metrics[:, 1, 0] = dots
            metrics[:, 1, 1] = l02**2
            conds = _sym2x2_cond(metrics)
            bad = np.flatnonzero(conds > _COND_LIMIT)
            if len(bad):
                f = int(bad[0])
                raise DegenerateFace(f, float(conds[f]))

            layout = np.zeros((F, 3, 2))
            layout[:, 1, 0] = l01
            layout[:, 2, 0] = x
            layout[:, 2, 1] = y

            # Heron, guarded by the validated strict triangle inequality
            s = (l01 + l02 + l12) / 2.0
            areas = np.sqrt(s * (s - l01) * (s - l02) * (s - l12))

            grads = np.empty((F, 3, 2))
            for i in (1, 2):
                opp = layout[:, (i + 2) % 3, :] - layout[:, (i + 1) % 3, :]
                grads[:, i, 0] = -opp[:, 1]
                grads[:, i, 1] = opp[:, 0]
            grads[:, 1:] /= (2.0 * areas)[:, None, None]
            # hats sum to one, so their gradients sum to zero exactly
            grads[:, 0] = -(grads[:, 1] + grads[:, 2])

            for arr in (layout, areas, grads, metrics):
                arr.setflags(write=False)
            self._geom = _FaceGeometry(layout, areas, grads, metrics)
        return self._geom

    def all_pairs_distances(self):
        """Dense (V, V) matrix of graph geodesic distances, cached."""
        if self._all_dist is None:
            d = dijkstra(self.adjacency(), directed=False)
            d.setflags(write=False)
            self._all_dist = d
        return self._all_dist

    @property
    def boundary_vertices(self):
        """Vertices on the boundary: endpoints of boundary edges for
        surfaces, degree-1 vertices for graphs."""
        if self.dimension == 2:
            out = set()
            for e in self.boundary_edges:
                out.update(int(x) for x in self.edges[e])
            return frozenset(out)
        deg = np.zeros(self.vertex_count, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return frozenset(np.flatnonzero(deg == 1).tolist())

    def oriented_face_edges(self, f):
        """The three (tail, head) pairs of face f in face orientation."""
        a, b, c = (int(x) for x in self.triangles[f])
        return ((a, b), (b, c), (c, a))

    def edge_id(self, u, v):
        key = (u, v) if u < v else (v, u)
        return self.edge_index[key]


def _sym2x2_cond(m):
    tr = m[:, 0, 0] + m[:, 1, 1]
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    disc = np.sqrt(np.maximum((tr / 2.0) ** 2 - det, 0.0))
    lo = tr / 2.0 - disc
    hi = tr / 2.0 + disc
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(lo > 0, hi / lo, np.inf)


def build_mesh(triangles, edge_lengths, base_vertex=0):
    """Validate and orient a mesh from triangles and symmetric edge lengths.

    See :class:`TriMesh` for the accepted inputs and raised errors.
    """
    return TriMesh(triangles, edge_lengths, base_vertex=base_vertex)


def geodesic_distances(mesh, source):
    """Shortest-path distances from ``source`` in the weighted edge graph."""
    if not 0 <= source < mesh.vertex_count:
        raise MeshError(f"source vertex {source} out of range")
    dist = dijkstra(mesh.adjacency(), directed=False, indices=source)
    dist.setflags(write=False)
    return GeodesicTable(source=int(source), dist=dist)


def face_area(mesh, f):
    """Heron area of face ``f`` from its three edge lengths."""
    return float(mesh.face_geometry().areas[f])


def _face_frame(mesh, f):
    geom = mesh.face_geometry()
    g = geom.metrics[f]
    # Gram-Schmidt on the chart basis (e1, e2) under the face metric g.
    c1 = np.array([1.0, 0.0])
    n1 = np.sqrt(c1 @ g @ c1)
    c1 = c1 / n1
    c2 = np.array([0.0, 1.0])
    c2 = c2 - (c2 @ g @ c1) * c1
    c2 = c2 / np.sqrt(c2 @ g @ c2)
    coeffs = np.column_stack([c1, c2])
    gram = coeffs.T @ g @ coeffs
    return FaceFrame(face=f, basis_coeffs=coeffs, gram=gram)


def build_patchwork(mesh):
    """One patch per face, each with its Gram-Schmidt orthonormal frame.

    Face interiors are pairwise disjoint and cover the surface up to the
    edge skeleton, which is the null set skipped by the patchwork.
    """
    if mesh.dimension != 2:
        raise MeshError("patchwork requires a dimension-2 mesh")
    mesh.face_geometry()  # raises DegenerateFace before any patch is built
    patches = tuple(
        ((f,), _face_frame(mesh, f)) for f in range(len(mesh.triangles))
    )
    return Patchwork(patches=patches)
