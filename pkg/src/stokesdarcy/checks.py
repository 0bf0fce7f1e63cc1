"""Operator-property battery: the structural identities behind the method,
probed on a small production mesh.  Each check returns a (name, passed,
detail) triple; the CLI prints them, the test suite asserts them."""

import numpy as np

from . import ftp, precond, quadrature
from .krylov import minres
from .mesh import build_unit_square, refine_uniform
from .solver import Problem, SolveConfig, outer_preconditioner


def _spd_probe(op, n, rng, nprobe=20):
    worst = np.inf
    for _ in range(nprobe):
        x = rng.standard_normal(n)
        worst = min(worst, x @ op(x))
    sym_ok, sym_err = op.check_symmetry(rng)
    return worst > 0 and sym_ok, "min <Px,x> = %.2e, asym %.1e" % (worst, sym_err)


def run_all(seed=0, n=8):
    rng = np.random.default_rng(seed)
    out = []
    mesh = build_unit_square(n)

    areas = mesh.triangle_areas()
    ok = (np.all(areas > 0)
          and abs(areas[mesh.tri_region == 0].sum() - 0.5) < 1e-14
          and abs(areas[mesh.tri_region == 1].sum() - 0.5) < 1e-14)
    ref = refine_uniform(mesh)
    ok = ok and len(ref.triangles) == 4 * len(mesh.triangles)
    out.append(("mesh: positive areas, half/half split, red refinement",
                ok, "%d triangles" % mesh.num_triangles))

    pr = Problem("mini", n)
    prt = Problem("th", n)

    # commuting diagram and divergence inclusion, both flux families
    for p in (pr, prt):
        flux, dpres = p.flux, p.dpres
        field = lambda x: np.column_stack([x[:, 0] ** 2 * x[:, 1],
                                           x[:, 1] ** 2 - x[:, 0] * x[:, 1]])
        divf = lambda x: 2 * x[:, 0] * x[:, 1] + 2 * x[:, 1] - x[:, 0]
        ci = flux.canonical_interpolation(field)
        pts, w = quadrature.triangle_rule(8)
        pvals, _, det = dpres.tabulate(pts)
        pp = mesh.vertices[mesh.triangles[dpres.tris]]
        J = np.stack([pp[:, 1] - pp[:, 0], pp[:, 2] - pp[:, 0]], axis=-1)
        _, divs, _ = flux.tabulate(pts)
        dh = np.einsum("tl,tlq->tq", ci[flux.cell_dofs], divs)
        # L2 projection of div(field) onto the pressure space, elementwise
        nloc = pvals.shape[0]
        Mloc = np.einsum("q,lq,mq->lm", w, pvals, pvals)
        rhs = np.zeros((len(dpres.tris), nloc))
        rhs_h = np.zeros((len(dpres.tris), nloc))
        for iq, wq in enumerate(w):
            phys = pp[:, 0] + J[:, :, 0] * pts[iq, 0] + J[:, :, 1] * pts[iq, 1]
            rhs += wq * divf(phys)[:, None] * pvals[None, :, iq]
            rhs_h += wq * dh[:, iq][:, None] * pvals[None, :, iq]
        resid = np.abs(rhs - rhs_h).max()
        out.append(("commuting interpolation (div o interp = proj o div), %s"
                    % flux.family, resid < 1e-12, "residual %.1e" % resid))

        # div H in L: divergence of every flux basis function reproduced
        worst = 0.0
        c = rng.standard_normal(flux.ndof)
        dh = np.einsum("tl,tlq->tq", c[flux.cell_dofs], divs)
        proj = np.linalg.solve(np.broadcast_to(Mloc, (len(dpres.tris), nloc, nloc)),
                               np.einsum("q,tq,lq->tl", w, dh, pvals)[..., None])[..., 0]
        back = np.einsum("tl,lq->tq", proj, pvals)
        worst = np.abs(back - dh).max() / max(np.abs(dh).max(), 1.0)
        out.append(("divergence inclusion div H in L, %s" % flux.family,
                    worst < 1e-12, "residual %.1e" % worst))

    # flux-to-pressure operator: symmetry and positive semidefiniteness
    sub = pr.make_subsolver(mode="exact")
    ndim = pr.trace.ndim
    worst_sym, worst_psd = 0.0, np.inf
    for _ in range(10):
        phi = rng.standard_normal(ndim)
        psi = rng.standard_normal(ndim)
        Fphi = ftp.apply_ftp(sub, phi).functional
        Fpsi = ftp.apply_ftp(sub, psi).functional
        scale = max(np.abs(Fphi).max() * np.abs(psi).max(), 1e-30)
        worst_sym = max(worst_sym, abs(psi @ Fphi - phi @ Fpsi) / scale)
        worst_psd = min(worst_psd, phi @ Fphi)
    out.append(("flux-to-pressure symmetry", worst_sym <= 1e-10,
                "relative asymmetry %.1e" % worst_sym))
    out.append(("flux-to-pressure nonnegativity", worst_psd >= -1e-12,
                "min <F(phi), phi> = %.2e" % worst_psd))

    # rotated-gradient image is divergence free: D_D C = 0 columnwise
    for p in (pr, prt):
        free = np.where(~p.flux.on_boundary)[0]
        t = precond.build_hx_transfers(p.flux, p.params, free_flux=free,
                                       operator_matrices=(p.A_D, p.D_D))
        Dff = p.D_D[np.ix_(free, free)]
        resid = abs(Dff @ t.C).max() if t.C.nnz else 0.0
        out.append(("div o curl = 0 on auxiliary columns, %s" % p.flux.family,
                    resid < 1e-10, "max |D C| = %.1e" % resid))

    # preconditioner variants: SPD probes
    for combo in (("direct", "pd0"), ("bpx", "pd0")):
        P = outer_preconditioner(pr, SolveConfig("mini", n, combo=combo))
        ok, detail = _spd_probe(P, P.n, rng)
        out.append(("outer preconditioner SPD probe, %s" % (combo[0],),
                    ok, detail))
    for kind in ("pd0", "hx", "hxbpx"):
        sub2 = pr.make_subsolver(precond_kind=kind)
        ok, detail = _spd_probe(sub2.velocity_inv, sub2.velocity_inv.n, rng)
        out.append(("inner velocity-block SPD probe, %s" % kind, ok, detail))

    # auxiliary-space application cost: two second-order solves
    sub3 = pr.make_subsolver(precond_kind="hx")
    nsolves = getattr(sub3.velocity_inv, "second_order_solves_per_apply", None)
    out.append(("auxiliary preconditioner uses two nodal solves per apply",
                nsolves == 2, "count %s" % nsolves))

    # Krylov kernel sanity: indefinite diagonal system
    import scipy.sparse as sp
    x, st = minres(sp.diags([1.0, -1.0]).tocsr(), np.array([1.0, 1.0]),
                   rtol=1e-12)
    out.append(("residual-minimizing kernel handles indefiniteness",
                st.converged and np.allclose(x, [1.0, -1.0]),
                "%d iterations" % st.iterations))
    return out
