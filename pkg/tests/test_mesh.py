import numpy as np
import pytest

from stokesdarcy import build_unit_square, interface_trace, refine_uniform
from stokesdarcy.mesh import GAMMA_D, GAMMA_S, SIGMA, mesh_hierarchy


def test_counts_n2():
    m = build_unit_square(2)
    assert m.num_vertices == 9
    assert m.num_triangles == 8
    assert len(m.sigma_edges) == 2


def test_counts_n8():
    m = build_unit_square(8)
    assert m.num_vertices == 81
    assert m.num_triangles == 128
    assert len(m.sigma_edges) == 8


def test_sigma_edges_on_midline():
    m = build_unit_square(8)
    for e in m.sigma_edges:
        assert np.allclose(m.vertices[m.edges[e], 1], 0.5)


@pytest.mark.parametrize("bad", [1, 3, 0, -2, 7])
def test_odd_or_small_n_rejected(bad):
    with pytest.raises(ValueError):
        build_unit_square(bad)


def test_positive_areas_and_halves():
    for n in (2, 4, 8, 16):
        m = build_unit_square(n)
        a = m.triangle_areas()
        assert np.all(a > 0)
        assert abs(a[m.tri_region == 0].sum() - 0.5) < 1e-14
        assert abs(a[m.tri_region == 1].sum() - 0.5) < 1e-14


def test_sigma_edge_between_both_regions():
    m = build_unit_square(8)
    for e in m.sigma_edges:
        owners = np.where(np.any(m.tri_edges == e, axis=1))[0]
        assert sorted(m.tri_region[owners]) == [0, 1]


def test_refine_counts_and_h():
    m = build_unit_square(2)
    r = refine_uniform(m)
    assert r.num_triangles == 32
    assert r.h == m.h / 2
    assert r.parent is not None and len(r.parent) == 32


def test_refined_mesh_invariants():
    r = refine_uniform(build_unit_square(4))
    a = r.triangle_areas()
    assert np.all(a > 0)
    assert abs(a[r.tri_region == 1].sum() - 0.5) < 1e-14
    assert len(r.sigma_edges) == 8
    for e in r.sigma_edges:
        assert np.allclose(r.vertices[r.edges[e], 1], 0.5)


def test_twice_refined_matches_direct_build():
    rr = refine_uniform(refine_uniform(build_unit_square(8)))
    direct = build_unit_square(32)
    got = set(map(tuple, np.round(rr.vertices, 12)))
    want = set(map(tuple, np.round(direct.vertices, 12)))
    assert got == want


def test_interface_trace():
    m = build_unit_square(8)
    edges, normal = interface_trace(m)
    assert len(edges) == 8
    assert normal @ np.array([0.0, -1.0]) == 1.0
    lengths = np.linalg.norm(m.vertices[edges[:, 1]] - m.vertices[edges[:, 0]],
                             axis=1)
    assert np.allclose(lengths, 1 / 8)
    assert abs(lengths.sum() - 1.0) < 1e-14
    # left endpoint first, ordered left to right
    xs = m.vertices[edges[:, 0], 0]
    assert np.all(np.diff(xs) > 0)


def test_interface_trace_on_refined_mesh():
    r = refine_uniform(build_unit_square(4))
    edges, normal = interface_trace(r)
    assert len(edges) == 8
    assert np.allclose(normal, [0, -1])
    assert np.all(r.vertices[edges[:, 0], 0] < r.vertices[edges[:, 1], 0])


def test_euler_relation_per_subdomain():
    m = build_unit_square(8)
    for region in (0, 1):
        tris = m.region_triangles(region)
        v = len(np.unique(m.triangles[tris]))
        e = len(np.unique(m.tri_edges[tris]))
        assert v - e + len(tris) == 1


def test_edge_signs_pure_function_of_indices():
    m = build_unit_square(4)
    s = m.edge_signs()
    t = m.triangles
    assert np.array_equal(s[:, 0], np.where(t[:, 1] < t[:, 2], 1, -1))
    # each triangle is counterclockwise, so the three signs cannot agree
    assert np.all(np.abs(s.sum(axis=1)) <= 1)


def test_boundary_tags():
    m = build_unit_square(4)
    tags = m.edge_tag
    assert np.sum(tags == SIGMA) == 4
    # each outer side contributes n edges: 3n above, 3n below in total
    assert np.sum(tags == GAMMA_S) == 8
    assert np.sum(tags == GAMMA_D) == 8


def test_hierarchy_nested_sizes():
    hier = mesh_hierarchy(16, 2)
    assert [m.n for m in hier] == [2, 4, 8, 16]
    with pytest.raises(ValueError):
        mesh_hierarchy(12, 2)


def test_dump_format(tmp_path):
    m = build_unit_square(2)
    path = tmp_path / "mesh.txt"
    m.dump(path)
    lines = path.read_text().splitlines()
    v = [l for l in lines if l.startswith("v ")]
    t = [l for l in lines if l.startswith("t ")]
    e = [l for l in lines if l.startswith("e ")]
    assert len(v) == 9 and len(t) == 8 and len(e) == len(m.edges)
    assert t[0].split()[-1] in ("S", "D")
