import numpy as np
import pytest

from stokesdarcy import build_unit_square
from stokesdarcy import quadrature as quad
from stokesdarcy.fespace import (REGION_D, REGION_S, FluxSpace, Space,
                                 TraceSpace, VectorSpace, build_space,
                                 locate_triangles, nodal_prolongation,
                                 ref_basis, sigma_flux_maps)


@pytest.fixture(scope="module")
def mesh8():
    return build_unit_square(8)


def test_p1_barycenter():
    vals, _ = ref_basis("p1", [[1 / 3, 1 / 3]])
    assert np.allclose(vals[:, 0], 1 / 3)


def test_p2_partition_of_unity(rng):
    pts = rng.random((20, 2)) * 0.5
    vals, grads = ref_basis("p2", pts)
    assert np.allclose(vals.sum(0), 1.0)
    assert np.allclose(grads.sum(0), 0.0)


def test_bubble_value_at_barycenter():
    vals, _ = ref_basis("p1b", [[1 / 3, 1 / 3]])
    assert np.isclose(vals[3, 0], 1.0)


def test_counts_n8(mesh8):
    bdm = FluxSpace(mesh8, "bdm1")
    assert len(bdm.edge_ids) == 108  # Euler: 45 + 64 - 1
    assert bdm.ndof == 216
    assert FluxSpace(mesh8, "rt1").ndof == 216 + 128
    assert Space(mesh8, "p0dc", REGION_D).ndof == 64
    mini = VectorSpace(Space(mesh8, "p1b", REGION_S))
    assert mini.ndof == 218


def test_p0_mean_zero_dimension(mesh8):
    p0 = Space(mesh8, "p0dc", REGION_D)
    # one linear constraint on 64 unknowns
    from stokesdarcy.assembly import pressure_integral
    m = pressure_integral(p0)
    assert p0.ndof - 1 == 63 and m.sum() == pytest.approx(0.5)


def test_build_space_validation(mesh8):
    with pytest.raises(ValueError):
        build_space(mesh8, "bdm1", REGION_S)
    with pytest.raises(ValueError):
        build_space(mesh8, "mini", REGION_D)
    with pytest.raises(ValueError):
        build_space(mesh8, "p7", REGION_S)
    assert build_space(mesh8, "taylorhood", REGION_S).ndof == 306


def test_bdm1_duality_against_quadrature(mesh8, rng):
    """The six edge moments applied to the six basis fields give the
    identity, with the moments evaluated by independent quadrature."""
    fs = FluxSpace(mesh8, "bdm1")
    tloc = 11
    tg = fs.tris[tloc]
    sq, wq = quad.segment_rule(6)
    gram = np.zeros((6, 6))
    for k in range(3):
        e = mesh8.tri_edges[tg, k]
        a, b = mesh8.vertices[mesh8.edges[e]]
        tang = (b - a) / np.linalg.norm(b - a)
        normal = np.array([tang[1], -tang[0]])
        pts = a[None, :] + sq[:, None] * (b - a)[None, :]
        le = fs.edge_index[e]
        for l in range(6):
            coeffs = np.zeros(fs.ndof)
            coeffs[fs.cell_dofs[tloc, l]] = 1.0
            un = fs.evaluate_at(coeffs, np.full(len(sq), tloc), pts) @ normal
            row1 = np.sum(wq * (1 - sq) * un)
            row2 = np.sum(wq * sq * un)
            i1 = np.where(fs.cell_dofs[tloc] == 2 * le)[0][0]
            i2 = np.where(fs.cell_dofs[tloc] == 2 * le + 1)[0][0]
            gram[i1, l] = row1
            gram[i2, l] = row2
    assert np.allclose(gram, np.eye(6), atol=1e-12)


@pytest.mark.parametrize("family", ["bdm1", "rt1"])
def test_normal_trace_single_valued(mesh8, rng, family):
    fs = FluxSpace(mesh8, family)
    c = rng.standard_normal(fs.ndof)
    adj = {}
    for tloc, tg in enumerate(fs.tris):
        for e in mesh8.tri_edges[tg]:
            adj.setdefault(e, []).append(tloc)
    sq, _ = quad.segment_rule(3)
    worst = 0.0
    for e, owners in adj.items():
        if len(owners) != 2:
            continue
        a, b = mesh8.vertices[mesh8.edges[e]]
        tang = (b - a) / np.linalg.norm(b - a)
        normal = np.array([tang[1], -tang[0]])
        pts = a[None, :] + sq[:, None] * (b - a)[None, :]
        v0 = fs.evaluate_at(c, np.full(len(sq), owners[0]), pts) @ normal
        v1 = fs.evaluate_at(c, np.full(len(sq), owners[1]), pts) @ normal
        worst = max(worst, np.abs(v0 - v1).max())
    assert worst <= 1e-12


@pytest.mark.parametrize("family", ["bdm1", "rt1"])
def test_interpolation_projection_property(mesh8, rng, family):
    fs = FluxSpace(mesh8, family)
    c = rng.standard_normal(fs.ndof)
    gmap = -np.ones(mesh8.num_triangles, dtype=int)
    gmap[fs.tris] = np.arange(len(fs.tris))

    def field(pts):
        tl = gmap[locate_triangles(mesh8, pts, REGION_D)]
        return fs.evaluate_at(c, tl, pts)

    assert np.abs(fs.canonical_interpolation(field) - c).max() < 1e-10


def test_interpolation_of_constant(mesh8):
    fs = FluxSpace(mesh8, "bdm1")
    ci = fs.canonical_interpolation(
        lambda p: np.tile([1.0, 0.0], (len(p), 1)))
    pts, _ = quad.triangle_rule(2)
    vals, divs, _ = fs.tabulate(pts)
    c = ci[fs.cell_dofs]
    field = np.einsum("tl,tlpc->tpc", c, vals)
    assert np.abs(field[..., 0] - 1).max() < 1e-12
    assert np.abs(field[..., 1]).max() < 1e-12
    assert np.abs(np.einsum("tl,tlp->tp", c, divs)).max() < 1e-11


def test_interpolation_edge_moments_quadrature_oracle(mesh8):
    """Interpolating (y^2, 0): the interpolant's edge moments must equal
    the field's, evaluated with an independent high-order rule."""
    fs = FluxSpace(mesh8, "bdm1")
    f = lambda p: np.column_stack([p[:, 1] ** 2, np.zeros(len(p))])
    ci = fs.canonical_interpolation(f)
    sq, wq = quad.segment_rule(8)
    tloc = 5
    tg = fs.tris[tloc]
    for k in range(3):
        e = mesh8.tri_edges[tg, k]
        a, b = mesh8.vertices[mesh8.edges[e]]
        tang = (b - a) / np.linalg.norm(b - a)
        normal = np.array([tang[1], -tang[0]])
        pts = a[None, :] + sq[:, None] * (b - a)[None, :]
        un_exact = f(pts) @ normal
        un_h = fs.evaluate_at(ci, np.full(len(sq), tloc), pts) @ normal
        for qw in ((1 - sq), sq):
            m_exact = np.sum(wq * qw * un_exact)
            m_h = np.sum(wq * qw * un_h)
            assert abs(m_exact - m_h) < 1e-13


def test_iso_velocity_space_is_linears_on_half_mesh():
    coarse = build_unit_square(8)
    fine = build_unit_square(16)
    vel = VectorSpace(Space(fine, "p1", REGION_S))
    assert vel.ndof == 2 * Space(fine, "p1", REGION_S).ndof
    # the fine linear space is exactly the refined coarse one
    P = nodal_prolongation(Space(coarse, "p1", REGION_S),
                           Space(fine, "p1", REGION_S))
    assert P.shape == (153, 45)


def test_constraint_classification(mesh8):
    sc = Space(mesh8, "p1", REGION_S)
    on_sig = sc.nodes[sc.on_sigma]
    assert np.allclose(on_sig[:, 1], 0.5)
    assert np.all((on_sig[:, 0] > 0) & (on_sig[:, 0] < 1))
    assert np.sum(sc.on_sigma) == 7
    corners = np.isclose(sc.nodes[:, 0] * (1 - sc.nodes[:, 0]), 0) \
        & np.isclose(sc.nodes[:, 1], 0.5)
    assert np.all(sc.on_gamma[corners])

    fs = FluxSpace(mesh8, "bdm1")
    assert np.sum(fs.on_sigma) == 16  # two DOFs per interface edge
    assert np.sum(fs.on_gamma) == 32  # 16 outer-boundary edges


def test_trace_space_and_lift(mesh8, rng):
    tr = TraceSpace(mesh8)
    assert tr.ndim == 16
    fs = FluxSpace(mesh8, "bdm1")
    lift, ntrace = sigma_flux_maps(fs, tr)
    phi = rng.standard_normal(tr.ndim)
    assert np.abs(ntrace @ (lift @ phi) - phi).max() < 1e-12
    # piecewise constants are contained: the constant 1 integrates to 1
    ones = np.ones(tr.ndim)
    assert tr.integral(ones) == pytest.approx(1.0)


def test_prolongation_reproduces_polynomials():
    coarse = build_unit_square(4)
    fine = build_unit_square(8)
    for fam, f in (("p1", lambda p: 1 + 2 * p[:, 0] - p[:, 1]),
                   ("p2", lambda p: p[:, 0] * p[:, 1] + p[:, 1] ** 2)):
        cs = Space(coarse, fam, REGION_S)
        fsp = Space(fine, fam, REGION_S)
        P = nodal_prolongation(cs, fsp)
        assert np.abs(P @ cs.interpolate(f) - fsp.interpolate(f)).max() < 1e-12
