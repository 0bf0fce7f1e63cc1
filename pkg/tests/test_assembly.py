import numpy as np
import pytest

from stokesdarcy import InvalidCaseError, PhysicalParams
from stokesdarcy import assembly as asm
from stokesdarcy.manufactured import ManufacturedCase, ZeroCase

params = PhysicalParams()


def test_params_validation():
    with pytest.raises(ValueError):
        PhysicalParams(nu=-1)
    with pytest.raises(ValueError):
        PhysicalParams(tau=0)


def test_stokes_symmetry(mini8):
    A = mini8.A_S
    assert abs(A - A.T).max() <= 1e-13


def test_shear_flow_energy(mini8):
    """For u = (y - 1/2, 0): 2 nu int eps:eps = nu/2 on the upper half and
    the interface friction vanishes, so the full form gives exactly 1/2."""
    vel = mini8.vel
    u = vel.interpolate(lambda p: np.column_stack(
        [p[:, 1] - 0.5, np.zeros(len(p))]))
    assert u @ (mini8.A_S @ u) == pytest.approx(0.5, abs=1e-12)


def test_constrained_velocity_block_positive():
    from stokesdarcy import Problem
    pr4 = Problem("mini", 4)
    w = np.linalg.eigvalsh(pr4.A_ff.toarray())
    assert w[0] > 0


def test_divdiv_annihilates_rotated_gradients(th8, rng):
    """Rotated gradients of a smooth scalar are divergence free, so the
    div-div form sends their interpolants to zero."""
    flux = th8.flux
    # curl of s(x, y) = x^2 y + y^3/3 is (x^2 + y^2, -2 x y)
    field = lambda p: np.column_stack([p[:, 0] ** 2 + p[:, 1] ** 2,
                                       -2 * p[:, 0] * p[:, 1]])
    c = flux.canonical_interpolation(field)
    assert np.abs(th8.D_D @ c).max() <= 1e-12


def test_constant_field_energy(mini8):
    c = mini8.flux.canonical_interpolation(
        lambda p: np.tile([0.0, 1.0], (len(p), 1)))
    assert c @ (mini8.A_D @ c) == pytest.approx(0.5, abs=1e-12)


def test_divergence_theorem_on_constrained_flux(mini8, rng):
    """Fields with vanishing normal trace on the whole porous boundary have
    zero total divergence."""
    ones = np.ones(mini8.dpres.ndof)  # the constant function
    free = np.where(~mini8.flux.on_boundary)[0]
    u = np.zeros(mini8.flux.ndof)
    u[free] = rng.standard_normal(len(free))
    assert abs(ones @ (mini8.B_D @ u)) <= 1e-12


def test_interface_projection_conforming(mini8, rng):
    """Linear normal traces are reproduced exactly by the projection."""
    vel = mini8.vel
    f = lambda p: np.column_stack([np.zeros(len(p)),
                                   -(1 + 2 * p[:, 0]) * np.ones(len(p))])
    u = vel.interpolate(f)
    phi = mini8.R @ u
    tr = mini8.trace
    # expected endpoint values of u.n = 1 + 2x, per edge
    a = tr.left_x
    b = tr.left_x + tr.lengths
    want = np.empty(tr.ndim)
    want[0::2] = 1 + 2 * a
    want[1::2] = 1 + 2 * b
    assert np.abs(phi - want).max() < 1e-12


def test_interface_projection_constant(mini8):
    u = mini8.vel.interpolate(lambda p: np.column_stack(
        [np.zeros(len(p)), -np.ones(len(p))]))
    phi = mini8.R @ u
    assert np.abs(phi - 1.0).max() < 1e-12


def test_interface_projection_vs_dense_least_squares(th8):
    """Quadratic trace x(1-x) projected onto linears edge by edge, against
    an independently computed dense least-squares fit."""
    u = th8.vel.interpolate(lambda p: np.column_stack(
        [np.zeros(len(p)), -p[:, 0] * (1 - p[:, 0])]))
    phi = th8.R @ u
    tr = th8.trace
    from scipy.special import roots_legendre
    xg, wg = roots_legendre(12)
    xg = 0.5 * (xg + 1)
    wg = 0.5 * wg
    for k in range(tr.nedges):
        a, L = tr.left_x[k], tr.lengths[k]
        x = a + L * xg
        target = x * (1 - x)
        # least squares in L2(edge) over linears: normal equations
        basis = np.stack([1 - xg, xg])
        G = np.einsum("q,iq,jq->ij", wg, basis, basis)
        rhs = np.einsum("q,iq,q->i", wg, basis, target)
        want = np.linalg.solve(G, rhs)
        got = phi[2 * k:2 * k + 2]
        assert np.abs(got - want).max() < 1e-12


def test_zero_case_zero_loads(mini8):
    F = asm.stokes_load(mini8.vel, ZeroCase(), params)
    G = asm.darcy_load(mini8.dpres, ZeroCase())
    assert not F.any() and not G.any()


def test_load_compatibility(mini8):
    G = asm.darcy_load(mini8.dpres, ManufacturedCase())
    assert abs(G.sum()) < 1e-10


def test_incompatible_source_rejected(mini8):
    class Bad(ZeroCase):
        def f_D(self, p):
            return np.ones(len(p))
    with pytest.raises(InvalidCaseError):
        asm.darcy_load(mini8.dpres, Bad())


def test_quadrature_refinement_invariance(mini8):
    """Doubling the quadrature degree changes no matrix entry."""
    A1, B1, M1 = asm.assemble_stokes(mini8.vel, mini8.pres, params)
    A2, B2, M2 = asm.assemble_stokes(mini8.vel, mini8.pres, params, qdeg=16)
    assert abs(A1 - A2).max() < 1e-12
    assert abs(B1 - B2).max() < 1e-12
    AD1, BD1, DD1, MD1 = asm.assemble_darcy(mini8.flux, mini8.dpres, params)
    AD2, BD2, DD2, MD2 = asm.assemble_darcy(mini8.flux, mini8.dpres, params,
                                            qdeg=10)
    assert abs(AD1 - AD2).max() < 1e-12
    assert abs(DD1 - DD2).max() < 1e-12


def test_deterministic_assembly(mini8):
    A1, B1, M1 = asm.assemble_stokes(mini8.vel, mini8.pres, params)
    A2, B2, M2 = asm.assemble_stokes(mini8.vel, mini8.pres, params)
    assert abs(A1 - A2).max() == 0.0
    assert abs(B1 - B2).max() == 0.0


def test_matrix_dump(tmp_path, mini8):
    path = tmp_path / "m.txt"
    asm.dump_matrix(mini8.M_D, path)
    lines = path.read_text().splitlines()
    i, j, v = lines[0].split()
    assert float(v) != 0


def test_divergence_inclusion(mini8, th8, rng):
    """The divergence of every flux field is reproduced exactly by its
    L2 projection onto the paired pressure space."""
    from stokesdarcy import quadrature as quad
    for pr in (mini8, th8):
        flux, dpres = pr.flux, pr.dpres
        pts, w = quad.triangle_rule(6)
        pvals, _, det = dpres.tabulate(pts)
        _, divs, _ = flux.tabulate(pts)
        c = rng.standard_normal(flux.ndof)
        dh = np.einsum("tl,tlq->tq", c[flux.cell_dofs], divs)
        nloc = pvals.shape[0]
        Mloc = np.einsum("q,lq,mq->lm", w, pvals, pvals)
        rhs = np.einsum("q,tq,lq->tl", w, dh, pvals)
        proj = np.linalg.solve(
            np.broadcast_to(Mloc, (len(flux.tris), nloc, nloc)),
            rhs[..., None])[..., 0]
        back = np.einsum("tl,lq->tq", proj, pvals)
        assert np.abs(back - dh).max() <= 1e-12 * max(np.abs(dh).max(), 1)
