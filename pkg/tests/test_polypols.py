"""Tests for polypol construction, side intervals, residual points and
regularity classification."""

from __future__ import annotations

import numpy as np
import pytest

from geomodels import (
    CUBIC_RIGHT,
    ellipse,
    middle_polypol,
    poly3,
    quad_1313_polypol,
    regular_polygon,
    rounded_square_polypol,
)
from polypol.algebra import UniPoly
from polypol.curves import PlaneCurve, ProjectivePoint, line_curve
from polypol.errors import DegenerateInputError, UnsupportedInputError
from polypol.polypols import (
    Polypol,
    classify_regularity,
    mobius_reparameterize,
    param_of_point,
    polygon_polypol,
    residual_count_formula,
    residual_points,
    side_interval,
)

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def circle_curve(cx: float, cy: float, r: float) -> PlaneCurve:
    return ellipse(cx, cy, r, r)


# ----------------------------------------------------------------------
# residual count formula


def test_residual_formula_values():
    assert residual_count_formula([2, 2, 2, 2]) == 20
    assert residual_count_formula([1, 3, 1, 3]) == 20
    assert residual_count_formula([1] * 7) == 14
    assert residual_count_formula([1] * 5) == 5
    assert residual_count_formula([1, 1, 1]) == 0


def test_residual_formula_counts_nodes_of_each_curve():
    # one nodal cubic side adds binom(2, 2) = 1 over the crossing count
    assert residual_count_formula([3, 1]) == 1 + 3 - 2


# ----------------------------------------------------------------------
# parameter location


def test_param_of_point_simple_and_missing():
    c = circle_curve(0.0, 0.0, 1.0)
    for t in (-1.3, 0.0, 0.7):
        q = c.point_at(t)
        ts = param_of_point(c, q)
        assert len(ts) == 1
        assert ts[0] == pytest.approx(t, abs=1e-9)
    assert param_of_point(c, ProjectivePoint([3.0, 0.0, 1.0])) == []


def test_param_of_point_node_has_two_preimages():
    ts = param_of_point(CUBIC_RIGHT, ProjectivePoint([2.0, 0.0, 1.0]))
    assert len(ts) == 2
    for t in ts:
        q = CUBIC_RIGHT.point_at(t)
        assert q.equal(ProjectivePoint([2.0, 0.0, 1.0]), 1e-8)


def test_mobius_reparameterization_keeps_the_curve():
    c = circle_curve(0.25, -0.5, 1.5)
    m = mobius_reparameterize(c, 0.3)
    for tau in np.linspace(-2.0, 2.0, 9):
        if abs(tau) < 1e-9:
            continue
        p = m.point_at(tau)
        v = p.coords / np.linalg.norm(p.coords)
        assert abs(m.form(tuple(v))) < 1e-10
        assert p.equal(c.point_at(0.3 + 1.0 / tau), 1e-8)


# ----------------------------------------------------------------------
# side construction


def test_unit_square_side_interval():
    p = polygon_polypol(UNIT_SQUARE)
    assert side_interval(p, 0) == (pytest.approx(0.0), pytest.approx(1.0), 1)


def test_reversed_traversal_flips_orientation():
    # same bottom edge line, walked from (1,0) to (0,0)
    curves = [line_curve([1.0, 0.0, 0.0]), line_curve([0.0, 1.0, -1.0]),
              line_curve([1.0, 0.0, -1.0]), line_curve([0.0, 1.0, 0.0])]
    verts = [(0.0, 1.0), (1.0, 1.0), (1.0, 0.0), (0.0, 0.0)]
    p = Polypol(curves, verts)
    assert side_interval(p, 3) == (pytest.approx(0.0), pytest.approx(1.0), -1)


def test_side_endpoints_reproduce_vertices_on_conics():
    p = middle_polypol()
    for i in range(4):
        a, b, orient = side_interval(p, i)
        t_prev, t_next = (a, b) if orient == 1 else (b, a)
        prev_v = p.vertices[(i - 1) % 4]
        next_v = p.vertices[i]
        assert p.curves[i].point_at(t_prev).equal(prev_v, 1e-9)
        assert p.curves[i].point_at(t_next).equal(next_v, 1e-9)


def test_side_through_param_infinity_gets_reparameterized():
    # the classic circle parameterization puts (-1, 0) at t = infinity
    x2, y2, z2 = poly3({(2, 0, 0): 1.0}), poly3({(0, 2, 0): 1.0}), poly3({(0, 0, 2): 1.0})
    circle = PlaneCurve(x2 + y2 - z2,
                        (UniPoly([1.0, 0.0, -1.0]), UniPoly([0.0, 2.0]),
                         UniPoly([1.0, 0.0, 1.0])))
    p = Polypol([circle, line_curve([0.0, 1.0, 0.0])],
                [(1.0, 0.0), (-1.0, 0.0)],
                side_markers=[(0.0, 1.0), (0.0, 0.0)])
    pts = p.side_points(0, 64)
    assert np.all(pts[:, 1] > 0)  # marker picked the upper arc
    mid = pts[np.argmin(np.abs(pts[:, 0]))]
    assert mid[1] == pytest.approx(1.0, abs=1e-3)


def test_marker_selects_the_other_arc():
    c = circle_curve(0.0, 0.0, 1.0)
    line = line_curve([0.0, 1.0, 0.0])
    upper = Polypol([c, line], [(1.0, 0.0), (-1.0, 0.0)],
                    side_markers=[(0.0, 1.0), None])
    lower = Polypol([c, line], [(1.0, 0.0), (-1.0, 0.0)],
                    side_markers=[(0.0, -1.0), None])
    assert np.all(upper.side_points(0, 32)[:, 1] > 0)
    assert np.all(lower.side_points(0, 32)[:, 1] < 0)


# ----------------------------------------------------------------------
# vertex validation


def test_vertex_snapping_accepts_tiny_error():
    base = middle_polypol()
    jittered = [tuple(np.real(v.affine()) + 1e-8) for v in base.vertices]
    p = Polypol(list(base.curves), jittered, build_sides=False)
    for v, w in zip(p.vertices, base.vertices):
        assert v.equal(w, 1e-7)


def test_vertex_snapping_rejects_large_error():
    base = middle_polypol()
    verts = [tuple(np.real(v.affine())) for v in base.vertices]
    verts[1] = (verts[1][0] + 1e-3, verts[1][1])
    with pytest.raises(DegenerateInputError, match="not near any intersection"):
        Polypol(list(base.curves), verts, build_sides=False)


def test_tangential_vertex_is_rejected():
    c1 = circle_curve(0.0, 0.0, 1.0)
    c2 = circle_curve(2.0, 0.0, 1.0)
    with pytest.raises(DegenerateInputError, match="tangentially"):
        Polypol([c1, c2], [(1.0, 0.0), (1.0, 0.0)], build_sides=False)


# ----------------------------------------------------------------------
# residual points


def test_heptagon_residuals():
    p = polygon_polypol(regular_polygon(7))
    rs = residual_points(p)
    assert rs.count == residual_count_formula([1] * 7) == 14
    assert not rs.triple_points
    assert all(e.point.is_real() for e in rs.points)
    assert all(e.source.startswith("intersection-of-") for e in rs.points)


def test_triangle_has_no_residual_points():
    p = polygon_polypol(regular_polygon(3))
    rs = residual_points(p)
    assert rs.count == 0


def test_middle_polypol_residual_groups():
    rs = residual_points(middle_polypol())
    assert rs.count == 20
    by_source: dict[str, int] = {}
    for e in rs.points:
        by_source[e.source] = by_source.get(e.source, 0) + 1
    # adjacent pairs lose one crossing to the vertex, opposite pairs keep 4
    assert sorted(by_source.values()) == [3, 3, 3, 3, 4, 4]
    assert by_source["intersection-of-(C1,C3)"] == 4
    assert by_source["intersection-of-(C2,C4)"] == 4


def test_mixed_degree_residuals_include_nodes():
    rs = residual_points(quad_1313_polypol())
    assert rs.count == 20
    nodes = [e for e in rs.points if e.source.startswith("node-of-")]
    assert {e.source for e in nodes} == {"node-of-C2", "node-of-C4"}
    locs = sorted(tuple(np.round(np.real(e.point.affine()), 6)) for e in nodes)
    assert locs == [(-2.0, 0.0), (2.0, 0.0)]


def test_non_transversal_crossing_is_unsupported():
    tangent_a = circle_curve(0.0, 0.0, 1.0)
    tangent_b = circle_curve(2.0, 0.0, 1.0)
    lo = line_curve([0.0, 1.0, 0.5])   # y = -0.5
    hi = line_curve([0.0, 1.0, -0.5])  # y = +0.5
    s3 = np.sqrt(3.0) / 2.0
    p = Polypol([lo, tangent_a, hi, tangent_b],
                [(-s3, -0.5), (s3, 0.5), (2.0 + s3, 0.5), (2.0 + s3, -0.5)],
                build_sides=False)
    with pytest.raises(UnsupportedInputError, match="non-transversally"):
        residual_points(p)


def test_three_curves_through_one_point_are_flagged():
    # both leftover crossings of the circle sit at the lines' own vertex
    circ = PlaneCurve(poly3({(2, 0, 0): 1.0, (0, 2, 0): 1.0,
                             (1, 0, 1): -1.0, (0, 1, 1): -1.0}))
    p = Polypol([line_curve([0.0, 1.0, 0.0]), line_curve([1.0, 0.0, 0.0]), circ],
                [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)], build_sides=False)
    rs = residual_points(p)
    assert rs.count == 2
    assert len(rs.triple_points) == 1
    assert rs.triple_points[0].equal(ProjectivePoint([0.0, 0.0, 1.0]), 1e-9)


# ----------------------------------------------------------------------
# regularity


def test_unit_square_is_regular():
    rep = classify_regularity(polygon_polypol(UNIT_SQUARE))
    assert rep.quasi_regular and rep.regular
    assert rep.witnesses == ()


def test_middle_polypol_is_regular():
    rep = classify_regularity(middle_polypol())
    assert rep.quasi_regular and rep.regular


def test_rounded_square_is_quasi_regular_only():
    rep = classify_regularity(rounded_square_polypol())
    assert rep.quasi_regular
    assert not rep.regular
    assert any("interior" in w or "side" in w for w in rep.witnesses)


def test_regularity_verdict_stable_under_refinement():
    coarse = classify_regularity(middle_polypol(), samples_per_side=64)
    fine = classify_regularity(middle_polypol(), samples_per_side=512)
    assert (coarse.quasi_regular, coarse.regular) == \
        (fine.quasi_regular, fine.regular)


def test_sideless_polypol_cannot_be_classified():
    with pytest.raises(UnsupportedInputError, match="without sides"):
        classify_regularity(quad_1313_polypol())
