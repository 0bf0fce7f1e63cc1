"""Structured triangulations of the unit square split at y = 1/2.

The square is meshed by n x n cells, each cut along its bottom-left to
top-right diagonal.  Triangles above the midline belong to the free-flow
region, triangles below to the porous region.  Edges are oriented by
ascending global vertex index, which makes the interface normal equal to
(0, -1) (pointing from the top region into the bottom one).
"""

import numpy as np

# entity tags
INTERIOR_S = 0
INTERIOR_D = 1
GAMMA_S = 2
GAMMA_D = 3
SIGMA = 4


class CoupledMesh:
    """Triangulation of (0,1)^2 with subdomain, boundary and interface tags.

    Attributes
    ----------
    n : int
        subdivisions per unit length
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counterclockwise
    tri_region : (nt,) int array, 0 in the Stokes half, 1 in the Darcy half
    edges : (ne, 2) int array, each row sorted ascending
    edge_tag : (ne,) int array with the entity tags above
    tri_edges : (nt, 3) int array, edge opposite local vertex k
    sigma_edges : (ns,) int array, interface edges ordered left to right
    parent : (nt,) int array or None, child -> parent triangle map
    """

    def __init__(self, n, vertices, triangles, tri_region, parent=None):
        self.n = n
        self.h = 1.0 / n
        self.vertices = vertices
        self.triangles = triangles
        self.tri_region = tri_region
        self.parent = parent
        self._build_edges()
        self._classify()

    def _build_edges(self):
        t = self.triangles
        # edge k of a triangle is opposite local vertex k
        pairs = np.concatenate([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]])
        pairs = np.sort(pairs, axis=1)
        self.edges, inv = np.unique(pairs, axis=0, return_inverse=True)
        self.tri_edges = inv.reshape(3, -1).T

    def _classify(self):
        v = self.vertices
        mid = 0.5 * (v[self.edges[:, 0]] + v[self.edges[:, 1]])
        on_sigma = (np.abs(v[self.edges[:, 0], 1] - 0.5) < 1e-12) & (
            np.abs(v[self.edges[:, 1], 1] - 0.5) < 1e-12)
        on_boundary = (np.abs(mid[:, 0]) < 1e-12) | (np.abs(mid[:, 0] - 1) < 1e-12) | (
            np.abs(mid[:, 1]) < 1e-12) | (np.abs(mid[:, 1] - 1) < 1e-12)
        tag = np.where(mid[:, 1] > 0.5, INTERIOR_S, INTERIOR_D)
        tag[on_boundary & (mid[:, 1] > 0.5)] = GAMMA_S
        tag[on_boundary & (mid[:, 1] < 0.5)] = GAMMA_D
        tag[on_sigma] = SIGMA
        self.edge_tag = tag
        sig = np.where(on_sigma)[0]
        order = np.argsort(mid[sig, 0])
        self.sigma_edges = sig[order]

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)

    def region_triangles(self, region):
        """Indices of triangles in region 0 (Stokes) or 1 (Darcy)."""
        return np.where(self.tri_region == region)[0]

    def triangle_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_signs(self):
        """Per-triangle, per-local-edge orientation signs.

        +1 where the ascending-index orientation of edge k agrees with the
        counterclockwise traversal of the triangle; a pure function of the
        global vertex indices.
        """
        t = self.triangles
        s = np.empty((len(t), 3), dtype=int)
        s[:, 0] = np.where(t[:, 1] < t[:, 2], 1, -1)
        s[:, 1] = np.where(t[:, 2] < t[:, 0], 1, -1)
        s[:, 2] = np.where(t[:, 0] < t[:, 1], 1, -1)
        return s

    def dump(self, path):
        """Plain-text dump: vertices, triangles with region, tagged edges."""
        with open(path, "w") as f:
            for x, y in self.vertices:
                f.write("v %.17g %.17g\n" % (x, y))
            for tri, reg in zip(self.triangles, self.tri_region):
                f.write("t %d %d %d %s\n" % (tri[0], tri[1], tri[2],
                                             "D" if reg else "S"))
            names = {INTERIOR_S: "interior-S", INTERIOR_D: "interior-D",
                     GAMMA_S: "GammaS", GAMMA_D: "GammaD", SIGMA: "Sigma"}
            for (a, b), tag in zip(self.edges, self.edge_tag):
                f.write("e %d %d %s\n" % (a, b, names[tag]))


def build_unit_square(n):
    """Uniform n x n mesh of (0,1)^2, every cell split bottom-left to top-right.

    Parameters
    ----------
    n : even int >= 2, so that y = 1/2 is a mesh line.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError("n must be an even integer >= 2, got %r" % (n,))
    xs = np.arange(n + 1) / n
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    region = []
    for j in range(n):
        for i in range(n):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
            region += [0 if (j + 0.5) / n > 0.5 else 1] * 2
    return CoupledMesh(n, vertices, np.array(tris), np.array(region))


def refine_uniform(mesh):
    """Red refinement: each triangle is split into four via edge midpoints."""
    nv = mesh.num_vertices
    mid_id = nv + np.arange(len(mesh.edges))
    midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] +
                       mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])

    t = mesh.triangles
    m0 = mid_id[mesh.tri_edges[:, 0]]  # midpoint of edge (v1, v2)
    m1 = mid_id[mesh.tri_edges[:, 1]]  # midpoint of edge (v2, v0)
    m2 = mid_id[mesh.tri_edges[:, 2]]  # midpoint of edge (v0, v1)
    children = np.empty((4 * len(t), 3), dtype=int)
    children[0::4] = np.column_stack([t[:, 0], m2, m1])
    children[1::4] = np.column_stack([m2, t[:, 1], m0])
    children[2::4] = np.column_stack([m1, m0, t[:, 2]])
    children[3::4] = np.column_stack([m2, m0, m1])
    region = np.repeat(mesh.tri_region, 4)
    parent = np.repeat(np.arange(len(t)), 4)
    return CoupledMesh(2 * mesh.n, vertices, children, region, parent=parent)


def mesh_hierarchy(n, n_coarsest=2):
    """Nested meshes [coarsest ... finest] for multilevel preconditioners.

    Built by independent construction at n_coarsest, n_coarsest*2, ..., n;
    the uniform structure makes consecutive levels nested.
    """
    if n < n_coarsest:
        raise ValueError("n smaller than the coarsest level")
    sizes = []
    m = n
    while m > n_coarsest:
        if m % 2 != 0:
            raise ValueError("hierarchy requires n = n_coarsest * 2**k")
        sizes.append(m)
        m //= 2
    if m != n_coarsest:
        raise ValueError("hierarchy requires n = n_coarsest * 2**k")
    sizes.append(n_coarsest)
    return [build_unit_square(s) for s in reversed(sizes)]


def interface_trace(mesh):
    """Interface edges sorted by x, with the unit normal (0, -1).

    Returns
    -------
    edges : (ns, 2) int array of vertex pairs, left endpoint first
    normal : (2,) array, the same for every interface edge
    """
    out = []
    for e in mesh.sigma_edges:
        a, b = mesh.edges[e]
        if mesh.vertices[a, 0] > mesh.vertices[b, 0]:
            a, b = b, a
        out.append((a, b))
    return np.array(out, dtype=int), np.array([0.0, -1.0])
