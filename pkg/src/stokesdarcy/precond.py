"""Block preconditioners: direct inverses, Gauss-Seidel mass sweeps,
multilevel additive (BPX) operators and the two-dimensional nodal
auxiliary-space preconditioner for the div-elliptic Darcy block."""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import assembly, quadrature
from .fespace import REGION_D, Space, nodal_prolongation
from .krylov import LinOp
from .mesh import mesh_hierarchy


def direct_inverse(M):
    """Exact inverse of an SPD sparse matrix via a cached factorization."""
    M = sp.csc_matrix(M)
    n = M.shape[0]
    asym = abs(M - M.T).max() if M.nnz else 0.0
    scale = max(abs(M).max(), 1e-300)
    if asym > 1e-10 * scale:
        raise ValueError("matrix is not symmetric (|M - M^T| = %.2e)" % asym)
    lu = spla.splu(M)
    rng = np.random.default_rng(12345)
    for _ in range(3):
        x = rng.standard_normal(n)
        if x @ (M @ x) <= 0 or x @ lu.solve(x) <= 0:
            raise ValueError("matrix is not positive definite")
    return LinOp(n, lu.solve)


def factorized_solve(M):
    """Cached sparse LU solve for a general nonsingular matrix."""
    lu = spla.splu(sp.csc_matrix(M))
    return LinOp(M.shape[0], lu.solve, symmetric=False)


def diagonal_inverse(M):
    d = M.diagonal()
    if np.any(d <= 0):
        raise ValueError("nonpositive diagonal entry")
    return LinOp(M.shape[0], lambda x, d=d: x / d)


def gs_sweep(M):
    """One symmetric Gauss-Seidel sweep as an SPD preconditioner.

    Applies ((D+L) D^{-1} (D+U))^{-1}, the standard symmetric-sweep
    substitute for an exact mass inverse.
    """
    M = sp.csr_matrix(M)
    d = M.diagonal()
    lower = spla.splu(sp.csc_matrix(sp.tril(M)),
                      permc_spec="NATURAL", options={"SymmetricMode": False})
    upper = spla.splu(sp.csc_matrix(sp.triu(M)),
                      permc_spec="NATURAL", options={"SymmetricMode": False})

    def apply(r):
        y = lower.solve(r)
        return upper.solve(d * y)

    return LinOp(M.shape[0], apply)


def _is_diagonal(M):
    return sp.csr_matrix(M).nnz == np.count_nonzero(M.diagonal())


def mass_inverse(M, mode="auto"):
    """Mass-block treatment: exact inverse where the matrix is diagonal,
    otherwise a direct factorization ('exact') or one symmetric
    Gauss-Seidel sweep ('gs').  'auto' picks diagonal-exact when possible
    and the Gauss-Seidel sweep otherwise."""
    if mode not in ("auto", "exact", "gs"):
        raise ValueError("unknown mass mode %r" % (mode,))
    if _is_diagonal(M):
        return diagonal_inverse(M)
    if mode == "exact":
        return direct_inverse(M)
    return gs_sweep(M)


def projected_mass_inverse(W, m):
    """Restrict a mass treatment to the zero-mean pressure subspace.

    Given an SPD operator W approximating M^{-1} and the vector m of basis
    integrals, returns W - (Wm)(Wm)^T / (m.Wm): symmetric, positive
    semidefinite with kernel spanned by m, mapping into {p : m.p = 0} and
    acting as the subspace Riesz inverse there when W is exact.
    """
    Wm = W(np.asarray(m, dtype=float))
    denom = m @ Wm
    if denom <= 0:
        raise ValueError("mean vector has nonpositive W-norm")

    def apply(r):
        y = W(r)
        return y - Wm * ((Wm @ r) / denom)

    return LinOp(W.n, apply)


def block_diag_op(ops):
    """Compose operators into a block-diagonal operator."""
    sizes = [op.n for op in ops]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    n = offs[-1]

    def apply(x):
        out = np.empty(n)
        for op, a, b in zip(ops, offs[:-1], offs[1:]):
            out[a:b] = op(x[a:b])
        return out

    return LinOp(n, apply)


def build_bpx(mats, prolongs):
    """Additive multilevel preconditioner over a nested hierarchy.

    mats[0..L] are the level operators (coarsest first) restricted to free
    DOFs; prolongs[l] maps level l to level l+1.  The coarsest level is
    inverted directly, finer levels are diagonally (Jacobi) scaled.  With a
    single level this is the direct coarse inverse.
    """
    if len(mats) != len(prolongs) + 1:
        raise ValueError("need one prolongation between consecutive levels")
    for l, P in enumerate(prolongs):
        if P.shape != (mats[l + 1].shape[0], mats[l].shape[0]):
            raise ValueError("hierarchy is not nested: prolongation %d has "
                             "shape %s" % (l, (P.shape,)))
    coarse = spla.splu(sp.csc_matrix(mats[0]))
    inv_diags = [1.0 / m.diagonal() for m in mats[1:]]
    L = len(prolongs)

    def apply(r):
        res = [None] * (L + 1)
        res[L] = r
        for l in range(L, 0, -1):
            res[l - 1] = prolongs[l - 1].T @ res[l]
        x = coarse.solve(res[0])
        for l in range(1, L + 1):
            x = prolongs[l - 1] @ x + inv_diags[l - 1] * res[l]
        return x

    return LinOp(mats[-1].shape[0], apply)


class HXTransfer:
    """Transfer matrices and component blocks of the auxiliary-space
    preconditioner for the div-elliptic Darcy velocity block.

    Attributes (all restricted to the homogeneous flux space and to
    zero-boundary nodal spaces):
    C : sparse (nflux, npotential), column l = flux coefficients of the
        rotated gradient (d2 v, -d1 v) of the quadratic stream-function
        basis l (quadratic potentials span every div-free flux field)
    Idiv : sparse (nflux, 2*nnodal), canonical interpolation of the
        vector nodal basis (order of the flux family)
    Sdiv : (nflux,) diagonal of the div-elliptic block
    L : sparse vector nodal matrix (grad, grad) + tau (., .)
    Delta : sparse scalar stiffness of the potential space
    """

    def __init__(self, C, Idiv, Sdiv, L, Delta, tau, nodal_space,
                 potential_space, free_nodal, free_potential):
        self.C = C
        self.Idiv = Idiv
        self.Sdiv = Sdiv
        self.L = L
        self.Delta = Delta
        self.tau = tau
        self.nodal_space = nodal_space
        self.potential_space = potential_space
        self.free_nodal = free_nodal
        self.free_potential = free_potential


def _hx_transfer_matrices(flux, scalar):
    """Curl and canonical-interpolation matrices into the flux space.

    For every local scalar basis function v the rotated gradient
    (d2 v, -d1 v) and the two vector fields v*e_x, v*e_y are reduced to
    their canonical flux DOFs (edge moments, plus interior moments for
    rt1) triangle by triangle; interior-edge contributions coincide from
    both sides and are halved.  Returns (C, Idiv) over all DOFs, C of
    shape (nflux, nscalar) and Idiv of shape (nflux, 2*nscalar).
    """
    mesh = flux.mesh
    if not np.array_equal(flux.tris, scalar.tris):
        raise ValueError("flux and nodal spaces must share the subdomain")
    sq, wq = quadrature.segment_rule(4)
    nq = len(sq)
    rverts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    # reference points for each local edge in both traversal directions
    ref_blocks = []
    for k in range(3):
        a, b = rverts[(k + 1) % 3], rverts[(k + 2) % 3]
        ref_blocks.append(a + sq[:, None] * (b - a))
        ref_blocks.append(b + sq[:, None] * (a - b))
    ref_pts = np.vstack(ref_blocks)
    vals, grads, _ = scalar.tabulate(ref_pts)  # (nloc, np), (nt, nloc, np, 2)

    signs = flux.edge_sign
    tri_eids = mesh.tri_edges[flux.tris]
    edge_mult = np.zeros(len(flux.edge_ids))
    for k in range(3):
        np.add.at(edge_mult, flux.edge_index[tri_eids[:, k]], 1.0)

    nloc = vals.shape[0]
    nt = len(flux.tris)
    rowsC, colsC, valsC = [], [], []
    rowsI, colsI, valsI = [], [], []
    for k in range(3):
        le = flux.edge_index[tri_eids[:, k]]
        ek = tri_eids[:, k]
        a = mesh.vertices[mesh.edges[ek, 0]]
        b = mesh.vertices[mesh.edges[ek, 1]]
        length = np.linalg.norm(b - a, axis=1)
        tang = (b - a) / length[:, None]
        normal = np.column_stack([tang[:, 1], -tang[:, 0]])
        # per-triangle selection of the matching traversal direction
        pos = slice(2 * k * nq, (2 * k + 1) * nq)
        neg = slice((2 * k + 1) * nq, (2 * k + 2) * nq)
        sel = np.where(signs[:, k, None] > 0,
                       np.arange(pos.start, pos.stop)[None, :],
                       np.arange(neg.start, neg.stop)[None, :])
        g = np.take_along_axis(grads, sel[:, None, :, None], axis=2)
        v = vals[:, sel].transpose(1, 0, 2)  # (nt, nloc, nq)
        curl_n = g[:, :, :, 1] * normal[:, None, None, 0] \
            - g[:, :, :, 0] * normal[:, None, None, 1]
        scale = 1.0 / edge_mult[le]
        for dofs, qw in ((2 * le, 1 - sq), (2 * le + 1, sq)):
            momC = np.einsum("q,tlq->tl", wq * qw, curl_n) * scale[:, None]
            rowsC.append(np.repeat(dofs, nloc))
            colsC.append(scalar.cell_dofs.ravel())
            valsC.append(momC.ravel())
            for c in range(2):
                momI = np.einsum("q,tlq->tl", wq * qw,
                                 v * normal[:, None, None, c]) * scale[:, None]
                rowsI.append(np.repeat(dofs, nloc))
                colsI.append(2 * scalar.cell_dofs.ravel() + c)
                valsI.append(momI.ravel())
    if flux.family == "rt1":
        tq, twq = quadrature.triangle_rule(4)
        ivals, igrads, _ = scalar.tabulate(tq)
        base = 2 * len(flux.edge_ids)
        ids = base + 2 * np.arange(nt)
        # (1/|T|) int over T equals twice the reference-rule sum
        curl_int = 2 * np.einsum("q,tlqc->tlc", twq, igrads[:, :, :, ::-1])
        curl_int[:, :, 1] *= -1.0
        v_int = 2 * np.einsum("q,lq->l", twq, ivals)
        for c in range(2):
            rowsC.append(np.repeat(ids + c, nloc))
            colsC.append(scalar.cell_dofs.ravel())
            valsC.append(curl_int[:, :, c].ravel())
            rowsI.append(np.repeat(ids + c, nloc))
            colsI.append(2 * scalar.cell_dofs.ravel() + c)
            valsI.append(np.broadcast_to(v_int, (nt, nloc)).ravel())
    C = sp.coo_matrix((np.concatenate(valsC),
                       (np.concatenate(rowsC), np.concatenate(colsC))),
                      shape=(flux.ndof, scalar.ndof)).tocsr()
    Idiv = sp.coo_matrix((np.concatenate(valsI),
                          (np.concatenate(rowsI), np.concatenate(colsI))),
                         shape=(flux.ndof, 2 * scalar.ndof)).tocsr()
    return C, Idiv


def build_hx_transfers(flux, params, free_flux=None, order=None,
                       operator_matrices=None):
    """Assemble the auxiliary-space transfer data for a flux space.

    The vector nodal space has the order of the flux family (linears for
    bdm1, quadratics for rt1); the scalar stream-function space is
    quadratic for both families, the smallest space whose rotated
    gradients span every divergence-free flux field.  All spaces vanish
    on the whole subdomain boundary, matching the homogeneous flux space
    of the inner problem.  Raises if the rotated-gradient image is not
    represented exactly.
    """
    order = order or (1 if flux.family == "bdm1" else 2)
    nodal = Space(flux.mesh, "p1" if order == 1 else "p2", flux.region)
    potential = Space(flux.mesh, "p2", flux.region)
    _, Idiv = _hx_transfer_matrices(flux, nodal)
    C, _ = _hx_transfer_matrices(flux, potential)

    if operator_matrices is None:
        A_D, D_D = assembly.flux_operator_matrices(flux, params.tau)
    else:
        A_D, D_D = operator_matrices
    if free_flux is None:
        free_flux = np.where(~flux.on_boundary)[0]
    free_nd = np.where(~nodal.on_boundary)[0]
    free_pt = np.where(~potential.on_boundary)[0]
    free_vec = np.stack([2 * free_nd, 2 * free_nd + 1], axis=1).ravel()

    ADD = (A_D + D_D)[np.ix_(free_flux, free_flux)].tocsr()
    C_f = C[free_flux][:, free_pt].tocsr()
    Idiv_f = Idiv[free_flux][:, free_vec].tocsr()

    resid = curl_representation_residual(flux, potential, C)
    if resid > 1e-10:
        raise RuntimeError("rotated-gradient expansion residual %.2e "
                           "signals a basis or orientation bug" % resid)

    K = assembly.scalar_stiffness(nodal)
    M = assembly.scalar_mass(nodal)
    Lsc = (K + params.tau * M)[np.ix_(free_nd, free_nd)].tocsr()
    Delta = assembly.scalar_stiffness(potential)[np.ix_(free_pt,
                                                        free_pt)].tocsr()
    t = HXTransfer(C_f, Idiv_f, ADD.diagonal(), Lsc, Delta, params.tau,
                   nodal, potential, free_nd, free_pt)
    t.curl_residual = resid
    return t


def curl_representation_residual(flux, scalar, C, nprobe=3, seed=7):
    """Pointwise residual of the rotated-gradient expansion.

    For random nodal fields v the rotated gradient is compared against its
    flux expansion C v at interior quadrature points; the expansion is a
    representation (not an approximation), so any nonzero residual beyond
    roundoff flags a construction bug.
    """
    pts, w = quadrature.triangle_rule(3)
    _, grads, _ = scalar.tabulate(pts)
    fvals, _, _ = flux.tabulate(pts)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(nprobe):
        z = rng.standard_normal(scalar.ndof)
        g = np.einsum("tl,tlqc->tqc", z[scalar.cell_dofs], grads)
        curl = np.stack([g[:, :, 1], -g[:, :, 0]], axis=-1)
        cz = np.asarray(C @ z).ravel()
        expansion = np.einsum("tl,tlqc->tqc", cz[flux.cell_dofs], fvals)
        scale = max(np.abs(curl).max(), 1.0)
        worst = max(worst, np.abs(curl - expansion).max() / scale)
    return worst


def build_hx_precond(transfer, mode="direct", hierarchy=None):
    """Three-term additive auxiliary-space preconditioner.

    Applies S^{-1} + Idiv Linv Idiv^T + (1/tau) C Dinv C^T with the nodal
    solves Linv, Dinv realized directly or by BPX over `hierarchy`
    (required for mode 'bpx'; see hx_nodal_hierarchy).
    """
    Sinv = 1.0 / transfer.Sdiv
    C, Idiv = transfer.C, transfer.Idiv
    tau = transfer.tau
    if mode == "direct":
        Linv_sc = direct_inverse(transfer.L)
        Dinv = direct_inverse(transfer.Delta)
    elif mode == "bpx":
        if hierarchy is None:
            raise ValueError("BPX mode needs a nodal hierarchy")
        Linv_sc = build_bpx(hierarchy["L_mats"], hierarchy["L_prolongs"])
        Dinv = build_bpx(hierarchy["D_mats"], hierarchy["D_prolongs"])
    else:
        raise ValueError("unknown mode %r" % (mode,))

    def apply(r):
        x = Sinv * r
        s = Idiv.T @ r
        y = np.empty_like(s)
        y[0::2] = Linv_sc(s[0::2])
        y[1::2] = Linv_sc(s[1::2])
        x = x + Idiv @ y
        x = x + C @ Dinv(C.T @ r) / tau
        return x

    op = LinOp(len(Sinv), apply)
    op.second_order_solves_per_apply = 2
    return op


def _scalar_hierarchy(meshes, family, region, matrix):
    spaces = [Space(m, family, region) for m in meshes]
    frees = [np.where(~s.on_boundary)[0] for s in spaces]
    mats = [matrix(s)[np.ix_(fr, fr)].tocsr()
            for s, fr in zip(spaces, frees)]
    prolongs = [nodal_prolongation(spaces[i], spaces[i + 1])
                [frees[i + 1]][:, frees[i]].tocsr()
                for i in range(len(spaces) - 1)]
    return mats, prolongs


def hx_nodal_hierarchy(n, family, tau, region=REGION_D, n_coarsest=None):
    """Zero-boundary nodal hierarchies for the auxiliary-space BPX solves:
    the vector block on the family of the flux order, the stream-function
    Laplacian on quadratics.

    Floors at the coarsest production mesh: at n = 8 the hierarchy is a
    single directly solved level, so the nodal solves coincide with the
    direct variant there.
    """
    if n_coarsest is None:
        n_coarsest = min(8, n)
    meshes = mesh_hierarchy(n, n_coarsest)
    L_mats, L_prolongs = _scalar_hierarchy(
        meshes, family, region,
        lambda s: assembly.scalar_stiffness(s) + tau * assembly.scalar_mass(s))
    D_mats, D_prolongs = _scalar_hierarchy(
        meshes, "p2", region, assembly.scalar_stiffness)
    return {"L_mats": L_mats, "L_prolongs": L_prolongs,
            "D_mats": D_mats, "D_prolongs": D_prolongs}
