import pytest

from dlgraphs import cayley_algebra as ca
from dlgraphs.cell_complex import (CellError, OctahedronSpec, cells_at_vertex, cells_in_region,
                                   euler_characteristic, extremal_vertices, is_basic_octahedron,
                                   local_region, make_octahedron, octahedron_complex,
                                   octahedron_report, skeleton_matches_graph, tree_neighbourhood)
from dlgraphs.dl_graph import DLParams, DLVertex
from dlgraphs.tree_core import TreeVertex, ball as tree_ball


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("R", [1, 2, 3])
def test_octahedron_is_a_sphere(d, R):
    cells = octahedron_complex(make_octahedron((2,) * d, R))
    assert euler_characteristic(cells) == 1 + (-1) ** (d - 1)
    assert max(cells.counts()) == d - 1


@pytest.mark.parametrize("qs", [(2, 3), (2, 3, 4), (3, 2, 2, 3)])
def test_non_basic_octahedra_are_spheres(qs):
    d = len(qs)
    words = [((0, 0), (1, 1))] * d
    spec = make_octahedron(qs, 2, words=words, levels=[-1, -1] + [0] * (d - 2))
    assert not is_basic_octahedron(spec)
    assert euler_characteristic(octahedron_complex(spec)) == 1 + (-1) ** (d - 1)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_unit_octahedron_counts(d):
    spec = make_octahedron((3,) * d, 1)
    cells = octahedron_complex(spec)
    assert cells.counts()[0] == 2 * d
    assert set(cells.vertices) == set(extremal_vertices(spec))
    assert len(cells.cells[d - 1]) == 2 ** d


def test_d3_unit_octahedron_has_12_edges_8_triangles():
    counts = octahedron_complex(make_octahedron((2, 2, 2), 1)).counts()
    assert counts == {0: 6, 1: 12, 2: 8}


def test_d2_unit_octahedron_is_a_4_cycle():
    cells = octahedron_complex(make_octahedron((2, 2), 1))
    assert cells.counts() == {0: 4, 1: 4}
    degree = {v: 0 for v in cells.vertices}
    for e in cells.edges():
        for v in e:
            degree[v] += 1
    assert set(degree.values()) == {2}


@pytest.mark.parametrize("R", [1, 2, 3])
def test_d3_faces_subdivide_into_basic_triangles(R):
    cells = octahedron_complex(make_octahedron((2, 2, 2), R))
    assert len(cells.cells[2]) == 8 * R * R
    assert all(len(c.vertices) == 3 for c in cells.cells[2])


def test_d3_two_cells_have_two_kinds():
    params = DLParams((2, 2, 2))
    region, _ = local_region(params, params.origin())
    kinds = {c.kind for c in cells_in_region(region).cells[2]}
    assert kinds == {1, 2}


def test_d4_three_cells_have_three_kinds():
    params = DLParams((2, 2, 2, 2))
    region, _ = local_region(params, params.origin())
    by_kind = {}
    for c in cells_in_region(region).cells[3]:
        by_kind.setdefault(c.kind, set()).add(len(c.vertices))
    assert by_kind == {1: {4}, 2: {6}, 3: {4}}


def test_faces_of_a_triangle_are_its_edges_and_corners():
    params = DLParams((2, 2, 2))
    region, _ = local_region(params, params.origin())
    cells = cells_in_region(region)
    edges = cells.edges()
    for tri in cells.cells[2]:
        faces = tri.faces()
        edge_faces = [frozenset(f.vertices) for f in faces if not isinstance(f, DLVertex)]
        assert len(edge_faces) == 3 and all(e in edges for e in edge_faces)
        corners = {f for f in faces if isinstance(f, DLVertex)}
        assert corners == set(tri.vertices)


@pytest.mark.parametrize("qs", [(2, 2), (2, 3), (2, 2, 2), (2, 3, 2)])
def test_one_skeleton_equals_graph_adjacency(qs):
    params = DLParams(qs)
    region = [tree_ball(TreeVertex(0), 2, q) for q in qs]
    assert skeleton_matches_graph(params, region)


def test_d2_has_no_two_cells():
    params = DLParams((2, 3))
    region = [tree_ball(TreeVertex(0), 2, q) for q in params.qs]
    assert set(cells_in_region(region).cells) == {1}


@pytest.mark.parametrize("d,q", [(3, 2), (3, 3), (4, 2)])
def test_triangles_per_vertex_match_relator_counts(d, q):
    params = DLParams((q,) * d)
    counts = cells_at_vertex(params, params.origin(), 2)
    # every triangle through a vertex gives two oriented relators based there
    assert 2 * counts[1] == d * (d - 1) * (d - 2) * q * q
    assert 2 * counts[2] == d * (d - 1) * (d - 2) * q


def test_triangle_counts_against_presentation():
    ring = ca.zq_ring(3)
    report = ca.relator_check(ring)
    params = DLParams((3, 3, 3))
    counts = cells_at_vertex(params, params.origin(), 2)
    assert report.counts["first"] == 2 * counts[1]
    assert report.counts["second"] == 2 * counts[2]


def test_basic_flag():
    assert is_basic_octahedron(make_octahedron((2, 2, 2), 3))
    spec = make_octahedron((3, 3, 3), 2, words=[((0, 0), (2, 0))] * 3)
    assert not is_basic_octahedron(spec)
    spec = make_octahedron((2, 2, 2), 2, words=[((0, 0), (1, 1))] * 3)
    assert not is_basic_octahedron(spec)


def test_spec_validation():
    b = (TreeVertex(-1), TreeVertex(0), TreeVertex(0))
    t = tuple(TreeVertex(v.h + 1) for v in b)
    tp = tuple(TreeVertex(v.h + 1, (1,)) for v in b)
    OctahedronSpec(b, t, tp, 1)
    with pytest.raises(CellError):
        OctahedronSpec(b, t, tp, 2)
    with pytest.raises(CellError):
        OctahedronSpec(b, t, t, 1)


def test_report_fields():
    report = octahedron_report(make_octahedron((2, 2, 2), 2))
    assert report["euler_characteristic"] == report["sphere_value"] == 2
    assert report["basic"] is True
    assert report["extremal_vertices"] == 6


def test_region_cap():
    with pytest.raises(CellError):
        cells_in_region([tree_neighbourhood(TreeVertex(0), 4)] * 4, cap=100)
