import numpy as np
import pytest
from scipy.spatial import cKDTree

from boundsim.errors import DegeneracyError
from boundsim.groundtruth import (
    Label,
    classify_ground_truth,
    compute_ground_truth,
    extract_faces,
    identify_holes,
    planarize,
)
from boundsim.netmodel import generate_network

from conftest import desk_config, graph


def test_x_crossing_planarizes():
    # two segments crossing at the origin: 1 synthetic vertex, 4 subsegments
    g = graph(4, [(0, 1), (2, 3)],
              positions=[(-1, -1), (1, 1), (-1, 1), (1, -1)])
    arr = planarize(g)
    assert len(arr.vertices) == 5
    assert len(arr.sub_start) == 4
    assert np.allclose(arr.vertices[4], (0.0, 0.0))


def test_planarize_length_conserved(small_network):
    g = small_network
    arr = planarize(g)
    seg = np.linalg.norm(
        arr.vertices[arr.sub_end] - arr.vertices[arr.sub_start], axis=1
    ).sum()
    orig = np.linalg.norm(
        g.positions[g.edges[:, 1]] - g.positions[g.edges[:, 0]], axis=1
    ).sum()
    assert seg == pytest.approx(orig, rel=1e-12)


def test_triangle_faces_signed_areas():
    g = graph(3, [(0, 1), (1, 2), (0, 2)],
              positions=[(0, 0), (1, 0), (0.5, 0.8)])
    faces = extract_faces(planarize(g))
    areas = sorted(f.signed_area for f in faces)
    assert len(faces) == 2
    assert areas[0] == pytest.approx(-0.4)
    assert areas[1] == pytest.approx(0.4)
    assert sum(f.is_outer for f in faces) == 1


def test_euler_formula(small_network):
    arr = planarize(small_network)
    faces = extract_faces(arr)
    v = len(arr.vertices)
    e = len(arr.sub_start)
    f = len(faces)
    n_comp = len(set(arr.components))
    # per connected planar component: V - E + F_bounded = 1; outer faces
    # are counted once per component
    assert v - e + f == 1 + n_comp


def test_unit_square_is_minimal_hole():
    g = graph(4, [(0, 1), (1, 2), (2, 3), (0, 3)],
              positions=[(0, 0), (1, 0), (1, 1), (0, 1)])
    faces = extract_faces(planarize(g))
    holes = identify_holes(faces, h_min=4.0)
    bounded = [h for h in holes if not h.is_outer]
    assert len(bounded) == 1
    assert bounded[0].perimeter == pytest.approx(4.0)
    labels = classify_ground_truth(g, holes).labels
    assert np.all(labels == Label.MANDATORY)  # all four corners sit on walks


def test_small_face_below_h_min_not_hole():
    s = 0.6  # perimeter 2.4 < 4
    g = graph(4, [(0, 1), (1, 2), (2, 3), (0, 3)],
              positions=[(0, 0), (s, 0), (s, s), (0, s)])
    faces = extract_faces(planarize(g))
    holes = identify_holes(faces, h_min=4.0)
    assert all(h.is_outer for h in holes)


def test_concurrent_triple_crossing_degenerate():
    # three segments through one interior point
    g = graph(6, [(0, 1), (2, 3), (4, 5)],
              positions=[(0, 0), (2, 2), (0, 2), (2, 0), (0, 1), (2, 1)])
    with pytest.raises(DegeneracyError):
        planarize(g)


def test_close_but_distinct_crossings_accepted():
    # two crossings 1e-8 apart: distinct and orderable, must not be
    # rejected as concurrent
    g = graph(6, [(0, 1), (2, 3), (4, 5)],
              positions=[(0, 0), (2, 0), (1, -1), (1, 1),
                         (1 + 1e-8, -1), (1 + 1e-8, 1)])
    arr = planarize(g)
    assert len(arr.vertices) == 6 + 2
    assert len(arr.sub_start) == 3 + 2 * 2


def test_coincident_nodes_degenerate():
    g = graph(3, [(0, 1), (1, 2)],
              positions=[(0, 0), (0.5, 0.0), (0.5, 1e-12)])
    with pytest.raises(DegeneracyError):
        planarize(g)


def test_collinear_overlap_degenerate():
    g = graph(4, [(0, 2), (1, 3)],
              positions=[(0, 0), (1, 0), (2, 0), (3, 0)])
    with pytest.raises(DegeneracyError):
        planarize(g)


def test_face_area_monte_carlo(small_network):
    # sampled points land in bounded faces with total area matching the
    # positive signed areas
    g = small_network
    faces = extract_faces(planarize(g))
    bounded_area = sum(f.signed_area for f in faces if not f.is_outer)
    import shapely

    hull = shapely.convex_hull(shapely.MultiPoint(g.positions))
    # bounded faces tile (most of) the hull; allow slack for concavities
    assert 0 < bounded_area <= hull.area + 1e-9


def test_desk_scale_ground_truth_classes():
    g = generate_network(desk_config(seed=0))
    gt = compute_ground_truth(g)
    counts = np.bincount(gt.labels, minlength=3)
    assert counts[Label.MANDATORY] > 100
    assert counts[Label.OPTIONAL] > counts[Label.MANDATORY]
    assert counts[Label.INTERIOR] > counts[Label.OPTIONAL]
    # outer face plus the cross hole at least
    assert sum(1 for h in gt.holes if h.is_outer) >= 1
    assert sum(1 for h in gt.holes if not h.is_outer) >= 1


def test_optional_halo_property():
    g = generate_network(desk_config(seed=1))
    gt = compute_ground_truth(g)
    mand = np.flatnonzero(gt.labels == Label.MANDATORY)
    opt = np.flatnonzero(gt.labels == Label.OPTIONAL)
    tree = cKDTree(g.positions[mand])
    d, _ = tree.query(g.positions[opt])
    assert np.all(d <= 1.0 + 1e-9)
    # interior nodes are farther than 1 from every mandatory node
    inter = np.flatnonzero(gt.labels == Label.INTERIOR)
    d, _ = tree.query(g.positions[inter])
    assert np.all(d > 1.0)


def test_mandatory_on_hole_walks():
    g = generate_network(desk_config(seed=2))
    gt = compute_ground_truth(g)
    on_walk = set()
    for h in gt.holes:
        on_walk.update(int(v) for v in h.walk if v < g.n)
    assert set(np.flatnonzero(gt.labels == Label.MANDATORY)) == on_walk


def test_h_min_monotone():
    g = generate_network(desk_config(seed=3))
    sizes = []
    for h_min in (2.0, 4.0, 8.0):
        gt = compute_ground_truth(g, h_min=h_min)
        sizes.append(int(np.sum(gt.labels == Label.MANDATORY)))
    assert sizes[0] >= sizes[1] >= sizes[2]


def test_ground_truth_json_dump():
    from boundsim.netmodel import hole_preset

    g = generate_network(desk_config(
        seed=4, area_width=12.0, area_height=12.0,
        hole_mask=hole_preset("cross", 12.0, 12.0),
    ))
    gt = compute_ground_truth(g)
    d = gt.to_json_dict()
    assert set(d["labels"].values()) <= {"mandatory", "optional", "interior"}
    assert len(d["labels"]) == g.n
    assert len(d["hole_perimeters"]) == len(gt.holes)
    assert d["h_min"] == 4.0
