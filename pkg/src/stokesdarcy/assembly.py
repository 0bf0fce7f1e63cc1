"""Assembly of the bilinear forms, interface coupling and load vectors."""

import numpy as np
import scipy.sparse as sp

from . import quadrature

# quadrature degree 2*(basis degree)+2 per family
_QDEG = {"p1": 4, "p1dc": 4, "p0dc": 2, "p2": 6, "p1b": 8, "bdm1": 4, "rt1": 6}


class InvalidCaseError(ValueError):
    """Raised when load data violates a solvability requirement."""


class PhysicalParams:
    """Viscosity nu, interface friction kappa, inverse permeability tau."""

    def __init__(self, nu=1.0, kappa=1.0, tau=1.0):
        if min(nu, kappa, tau) <= 0:
            raise ValueError("physical parameters must be positive")
        self.nu = nu
        self.kappa = kappa
        self.tau = tau


def _scatter(rows, cols, vals, shape):
    """Element-block scatter: rows (nt, a), cols (nt, b), vals (nt, a, b)."""
    nt, a = rows.shape
    b = cols.shape[1]
    r = np.repeat(rows[:, :, None], b, axis=2)
    c = np.repeat(cols[:, None, :], a, axis=1)
    return sp.coo_matrix((vals.ravel(), (r.ravel(), c.ravel())),
                         shape=shape).tocsr()


def scalar_mass(space, qdeg=None):
    pts, w = quadrature.triangle_rule(qdeg or _QDEG[space.family])
    vals, _, det = space.tabulate(pts)
    loc = np.einsum("q,lq,mq,t->tlm", w, vals, vals, det)
    return _scatter(space.cell_dofs, space.cell_dofs, loc,
                    (space.ndof, space.ndof))


def scalar_stiffness(space, qdeg=None):
    pts, w = quadrature.triangle_rule(qdeg or _QDEG[space.family])
    _, grads, det = space.tabulate(pts)
    loc = np.einsum("q,tlqa,tmqa,t->tlm", w, grads, grads, det)
    return _scatter(space.cell_dofs, space.cell_dofs, loc,
                    (space.ndof, space.ndof))


def pressure_integral(space, qdeg=None):
    """Vector of integrals of the pressure basis functions."""
    pts, w = quadrature.triangle_rule(qdeg or _QDEG[space.family])
    vals, _, det = space.tabulate(pts)
    loc = np.einsum("q,lq,t->tl", w, vals, det)
    out = np.zeros(space.ndof)
    np.add.at(out, space.cell_dofs.ravel(), loc.ravel())
    return out


def _sigma_edge_context(space):
    """Per interface edge: owning triangle of the space and its vertices.

    Edges follow the left-to-right interface order; the edge is
    parametrized from its left endpoint.
    """
    mesh = space.mesh
    out = []
    gmap = -np.ones(mesh.num_triangles, dtype=int)
    gmap[space.tris] = np.arange(len(space.tris))
    tri_of_edge = {}
    for tloc, tg in enumerate(space.tris):
        for e in mesh.tri_edges[tg]:
            tri_of_edge.setdefault(e, tloc)
    for e in mesh.sigma_edges:
        a, b = mesh.edges[e]
        pa, pb = mesh.vertices[a], mesh.vertices[b]
        if pa[0] > pb[0]:
            pa, pb = pb, pa
        out.append((tri_of_edge[e], pa, pb))
    return out


def _edge_ref_coords(space, tloc, phys):
    mesh = space.mesh
    p = mesh.vertices[mesh.triangles[space.tris[tloc]]]
    J = np.stack([p[1] - p[0], p[2] - p[0]], axis=-1)
    return np.linalg.solve(J, (phys - p[0]).T).T


def stokes_velocity_matrix(vel, params, qdeg=None):
    """Velocity form 2 nu (eps(u), eps(v)) plus the interface friction
    term kappa <u_x, v_x> on y = 1/2, over all (unconstrained) DOFs."""
    sc = vel.scalar
    pts, w = quadrature.triangle_rule(qdeg or _QDEG[sc.family])
    _, grads, det = sc.tabulate(pts)
    nt, nloc = grads.shape[0], grads.shape[1]

    kgrad = np.einsum("q,tlqa,tmqa,t->tlm", w, grads, grads, det)
    cross = np.einsum("q,tlqa,tmqb,t->tlmab", w, grads, grads, det)
    # entry (2l+a, 2m+b) of the viscous block:
    #   nu * [ delta_ab (grad phi_l, grad phi_m) + (d_b phi_l, d_a phi_m) ]
    locA = np.zeros((nt, 2 * nloc, 2 * nloc))
    for a in range(2):
        for b in range(2):
            blk = params.nu * cross[:, :, :, b, a]
            if a == b:
                blk = blk + params.nu * kgrad
            locA[:, a::2, b::2] = blk
    A = _scatter(vel.cell_dofs, vel.cell_dofs, locA, (vel.ndof, vel.ndof))

    # interface friction: the tangential trace is just the x component here
    sq, swq = quadrature.segment_rule(4)
    rows, cols, data = [], [], []
    for tloc, pa, pb in _sigma_edge_context(sc):
        length = np.linalg.norm(pb - pa)
        phys = pa[None, :] + sq[:, None] * (pb - pa)[None, :]
        ref = _edge_ref_coords(sc, tloc, phys)
        bv, _ = _ref_vals(sc.family, ref)
        loc = params.kappa * length * np.einsum("q,lq,mq->lm", swq, bv, bv)
        dofs = 2 * sc.cell_dofs[tloc]
        rows.append(np.repeat(dofs, len(dofs)))
        cols.append(np.tile(dofs, len(dofs)))
        data.append(loc.ravel())
    if rows:
        A = A + sp.coo_matrix((np.concatenate(data),
                               (np.concatenate(rows), np.concatenate(cols))),
                              shape=(vel.ndof, vel.ndof)).tocsr()
    return A


def divergence_matrix(vel, pres, qdeg=None):
    """B[q, v] = (div v, q) over the velocity subdomain."""
    sc = vel.scalar
    deg = qdeg or max(_QDEG[sc.family], _QDEG[pres.family])
    pts, w = quadrature.triangle_rule(deg)
    _, grads, det = sc.tabulate(pts)
    pvals, _, _ = pres.tabulate(pts)
    nt, nloc = grads.shape[0], grads.shape[1]
    locB = np.zeros((nt, pvals.shape[0], 2 * nloc))
    for b in range(2):
        locB[:, :, b::2] = np.einsum("q,jq,tmq,t->tjm", w, pvals,
                                     grads[:, :, :, b], det)
    return _scatter(pres.cell_dofs, vel.cell_dofs, locB,
                    (pres.ndof, vel.ndof))


def assemble_stokes(vel, pres, params, qdeg=None):
    """Stokes blocks: velocity form, divergence coupling, pressure mass."""
    A = stokes_velocity_matrix(vel, params, qdeg)
    B = divergence_matrix(vel, pres, qdeg)
    M = scalar_mass(pres)
    return A, B, M


def _ref_vals(family, ref_pts):
    from .fespace import ref_basis
    return ref_basis(family, ref_pts)


def flux_operator_matrices(flux, tau, qdeg=None):
    """Weighted flux mass tau (u, v) and the div-div form (div u, div v)."""
    pts, w = quadrature.triangle_rule(qdeg or _QDEG[flux.family])
    vals, divs, det = flux.tabulate(pts)
    locA = tau * np.einsum("q,tlqc,tmqc,t->tlm", w, vals, vals, det)
    locD = np.einsum("q,tlq,tmq,t->tlm", w, divs, divs, det)
    A = _scatter(flux.cell_dofs, flux.cell_dofs, locA, (flux.ndof, flux.ndof))
    D = _scatter(flux.cell_dofs, flux.cell_dofs, locD, (flux.ndof, flux.ndof))
    return A, D


def assemble_darcy(flux, dpres, params, qdeg=None):
    """Darcy blocks: weighted flux mass, divergence coupling, div-div form,
    and the pressure mass matrix."""
    deg = qdeg or max(_QDEG[flux.family], _QDEG[dpres.family])
    A, D = flux_operator_matrices(flux, params.tau, deg)
    pts, w = quadrature.triangle_rule(deg)
    _, divs, det = flux.tabulate(pts)
    pvals, _, _ = dpres.tabulate(pts)
    locB = np.einsum("q,jq,tmq,t->tjm", w, pvals, divs, det)
    B = _scatter(dpres.cell_dofs, flux.cell_dofs, locB, (dpres.ndof, flux.ndof))
    M = scalar_mass(dpres)
    return A, B, D, M


def assemble_interface(vel, flux, trace):
    """Interface mass, mixed trace matrix and the L2 trace projection.

    Returns (Q, T, R): Q the trace-space mass, T[mu, v] = <v.n, mu> over
    the interface, R = Q^{-1} T the matrix of the projection of Stokes
    normal traces onto the Darcy trace space.
    """
    sc = vel.scalar
    Q = trace.mass_matrix()
    sq, swq = quadrature.segment_rule(4)
    rows, cols, data = [], [], []
    for k, (tloc, pa, pb) in enumerate(_sigma_edge_context(sc)):
        length = np.linalg.norm(pb - pa)
        phys = pa[None, :] + sq[:, None] * (pb - pa)[None, :]
        ref = _edge_ref_coords(sc, tloc, phys)
        bv, _ = _ref_vals(sc.family, ref)
        # v.n = -v_y for the fixed interface normal (0, -1)
        mu = np.stack([1 - sq, sq])
        loc = -length * np.einsum("q,iq,lq->il", swq, mu, bv)
        dofs = 2 * sc.cell_dofs[tloc] + 1
        rows.append(np.repeat([2 * k, 2 * k + 1], len(dofs)))
        cols.append(np.tile(dofs, 2))
        data.append(loc.ravel())
    T = sp.coo_matrix((np.concatenate(data),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(trace.ndim, vel.ndof)).tocsr()
    Qinv_blocks = [np.linalg.inv(ln / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]]))
                   for ln in trace.lengths]
    Qinv = sp.block_diag(Qinv_blocks, format="csr")
    R = (Qinv @ T).tocsr()
    return Q, T, R


def stokes_load(vel, case, params, qdeg=10):
    """Body-force load plus the interface stress correction."""
    if (case.nu, case.kappa, case.tau) != (params.nu, params.kappa, params.tau):
        raise InvalidCaseError("manufactured data assumes unit parameters")
    sc = vel.scalar
    pts, w = quadrature.triangle_rule(qdeg)
    vals, _, det = sc.tabulate(pts)
    p = sc.mesh.vertices[sc.mesh.triangles[sc.tris]]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
    F = np.zeros(vel.ndof)
    for iq, wq in enumerate(w):
        phys = p[:, 0] + J[:, :, 0] * pts[iq, 0] + J[:, :, 1] * pts[iq, 1]
        f = case.f_S(phys)
        for c in range(2):
            contrib = wq * (det * f[:, c])[:, None] * vals[None, :, iq]
            np.add.at(F, 2 * sc.cell_dofs + c, contrib)

    sq, swq = quadrature.segment_rule(6)
    for tloc, pa, pb in _sigma_edge_context(sc):
        length = np.linalg.norm(pb - pa)
        phys = pa[None, :] + sq[:, None] * (pb - pa)[None, :]
        g = case.g_sigma(phys[:, 0])
        ref = _edge_ref_coords(sc, tloc, phys)
        bv, _ = _ref_vals(sc.family, ref)
        for c in range(2):
            contrib = length * np.einsum("q,q,lq->l", swq, g[:, c], bv)
            np.add.at(F, 2 * sc.cell_dofs[tloc] + c, contrib)
    return F


def darcy_load(dpres, case, qdeg=10, compat_tol=1e-10):
    """Source load (f_D, q); rejects incompatible sources."""
    pts, w = quadrature.triangle_rule(qdeg)
    vals, _, det = dpres.tabulate(pts)
    p = dpres.mesh.vertices[dpres.mesh.triangles[dpres.tris]]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
    G = np.zeros(dpres.ndof)
    total = 0.0
    for iq, wq in enumerate(w):
        phys = p[:, 0] + J[:, :, 0] * pts[iq, 0] + J[:, :, 1] * pts[iq, 1]
        f = case.f_D(phys)
        total += wq * np.sum(det * f)
        np.add.at(G, dpres.cell_dofs,
                  wq * (det * f)[:, None] * vals[None, :, iq])
    if abs(total) > compat_tol:
        raise InvalidCaseError("source must integrate to zero over the "
                               "porous region, got %.3e" % total)
    return G


def dump_matrix(M, path):
    """Coordinate-format text dump 'i j value' for external comparison."""
    coo = sp.coo_matrix(M)
    with open(path, "w") as f:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            f.write("%d %d %.17g\n" % (i, j, v))
