"""Shared geometric models for the tests: the four-ellipse square frame
(middle region and rounded-square silhouette), the line/cubic quadrilateral
with two nodal cubic sides, the three-node ampersand quartic, and rotated
three-ellipse arrangements."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from polypol.algebra import MultiPoly, UniPoly
from polypol.curves import PlaneCurve, intersect, line_curve, parameterize_conic
from polypol.polypols import Polypol


def poly3(terms) -> MultiPoly:
    return MultiPoly(3, terms)


def ellipse(cx: float, cy: float, ax: float, ay: float,
            rot: float = 0.0) -> PlaneCurve:
    """((x'/ax)^2 + (y'/ay)^2 - 1) homogenized, where (x', y') are the
    coordinates relative to the center, rotated back by `rot`."""
    c, s = np.cos(rot), np.sin(rot)
    terms: dict = {}

    def add(e, v):
        terms[e] = terms.get(e, 0.0) + v

    for (u1, u2, u0), w in (((c, s, -(c * cx + s * cy)), ax ** -2),
                            ((-s, c, -(-s * cx + c * cy)), ay ** -2)):
        add((2, 0, 0), u1 * u1 * w)
        add((0, 2, 0), u2 * u2 * w)
        add((0, 0, 2), u0 * u0 * w)
        add((1, 1, 0), 2 * u1 * u2 * w)
        add((1, 0, 1), 2 * u1 * u0 * w)
        add((0, 1, 1), 2 * u2 * u0 * w)
    add((0, 0, 2), -1.0)
    return parameterize_conic(PlaneCurve(poly3(terms)))


def regular_polygon(k: int, phase: float = 0.0, radius: float = 1.0) -> np.ndarray:
    th = 2 * np.pi * np.arange(k) / k + phase
    return np.column_stack([radius * np.cos(th), radius * np.sin(th)])


def perturbed_polygon(k: int, seed: int, r_jitter: float = 0.12,
                      a_jitter: float = 0.05) -> np.ndarray:
    """Convex k-gon with jittered radii and angles (stays convex for the
    jitter sizes used here; callers relying on convexity assert it)."""
    rng = np.random.default_rng(seed)
    th = 2 * np.pi * np.arange(k) / k + a_jitter * rng.uniform(-1, 1, k)
    r = 1.0 + r_jitter * rng.uniform(-1, 1, k)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def real_intersection_near(c1: PlaneCurve, c2: PlaneCurve, anchor) -> tuple:
    """The real intersection of two curves closest to the anchor point."""
    ax, ay = anchor
    best, best_d = None, np.inf
    for q, _ in intersect(c1, c2):
        if not q.is_real():
            continue
        x, y = q.affine()
        d = np.hypot(x.real - ax, y.real - ay)
        if d < best_d:
            best, best_d = (x.real, y.real), d
    if best is None:
        raise AssertionError("no real intersection near the anchor")
    return best


# ----------------------------------------------------------------------
# four ellipses framing the unit square


def frame_ellipses() -> tuple[PlaneCurve, ...]:
    return (ellipse(0.5, 0.0, 0.6, 0.25),
            ellipse(1.0, 0.5, 0.25, 0.6),
            ellipse(0.5, 1.0, 0.6, 0.25),
            ellipse(0.0, 0.5, 0.25, 0.6))


@lru_cache(maxsize=1)
def middle_polypol() -> Polypol:
    """The curved quadrilateral between the four frame ellipses."""
    es = frame_ellipses()
    anchors = [(0.8, 0.2), (0.8, 0.8), (0.2, 0.8), (0.2, 0.2)]
    verts = [real_intersection_near(es[i], es[(i + 1) % 4], anchors[i])
             for i in range(4)]
    markers = [(0.5, 0.25), (0.75, 0.5), (0.5, 0.75), (0.25, 0.5)]
    return Polypol(list(es), verts, side_markers=markers)


@lru_cache(maxsize=1)
def rounded_square_polypol() -> Polypol:
    """The outer silhouette of the same four ellipses."""
    es = frame_ellipses()
    anchors = [(1.2, -0.2), (1.2, 1.2), (-0.2, 1.2), (-0.2, -0.2)]
    verts = [real_intersection_near(es[i], es[(i + 1) % 4], anchors[i])
             for i in range(4)]
    markers = [(0.5, -0.25), (1.25, 0.5), (0.5, 1.25), (-0.25, 0.5)]
    return Polypol(list(es), verts, side_markers=markers)


# ----------------------------------------------------------------------
# quadrilateral with two line sides and two nodal cubic sides


CUBIC_RIGHT_FORM = poly3({(3, 0, 0): -1.0, (2, 1, 0): -1.0, (1, 2, 0): 1.0,
                          (0, 3, 0): -1.0, (2, 0, 1): 1.0, (1, 1, 1): 2.0,
                          (0, 2, 1): 3.0, (1, 0, 2): 8.0, (0, 0, 3): -12.0})
# parameterized through the pencil of lines at its node (2, 0)
CUBIC_RIGHT = PlaneCurve(CUBIC_RIGHT_FORM,
                         (UniPoly([3.0, 0.0, -3.0, -2.0]),
                          UniPoly([0.0, 5.0, 2.0, -5.0]),
                          UniPoly([-1.0, -1.0, 1.0, -1.0])))
# mirror image x -> -x, node at (-2, 0)
CUBIC_LEFT_FORM = poly3({(3, 0, 0): 1.0, (2, 1, 0): -1.0, (1, 2, 0): -1.0,
                         (0, 3, 0): -1.0, (2, 0, 1): 1.0, (1, 1, 1): -2.0,
                         (0, 2, 1): 3.0, (1, 0, 2): -8.0, (0, 0, 3): -12.0})
CUBIC_LEFT = PlaneCurve(CUBIC_LEFT_FORM,
                        (UniPoly([-3.0, 0.0, 3.0, 2.0]),
                         UniPoly([0.0, 5.0, 2.0, -5.0]),
                         UniPoly([-1.0, -1.0, 1.0, -1.0])))

# its adjoint quintic, for cross-checking the solver output
QUINTIC_1313 = poly3({(2, 3, 0): 3.0, (0, 5, 0): 5.0, (4, 0, 1): 1.0,
                      (2, 2, 1): -3.0, (0, 4, 1): -14.0, (2, 1, 2): -5.0,
                      (0, 3, 2): 1.0, (2, 0, 3): -16.0, (0, 2, 3): 48.0,
                      (0, 1, 4): 12.0, (0, 0, 5): 48.0})


@lru_cache(maxsize=1)
def quad_1313_polypol() -> Polypol:
    """Degrees (1, 3, 1, 3) around the square [-1, 1]^2: horizontal line
    sides, cubic left/right sides.  Side arcs are not built because the
    cubics pass through their own node preimages between the vertices."""
    curves = [line_curve([0.0, 1.0, 1.0]), CUBIC_RIGHT,
              line_curve([0.0, 1.0, -1.0]), CUBIC_LEFT]
    verts = [(1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0)]
    return Polypol(curves, verts, build_sides=False)


# ----------------------------------------------------------------------
# three-node quartic: (y^2 - x^2)(x - 1)(2x - 3) - 4 (x^2 + y^2 - 2x)^2


@lru_cache(maxsize=1)
def ampersand_curve() -> PlaneCurve:
    x = poly3({(1, 0, 0): 1.0})
    y = poly3({(0, 1, 0): 1.0})
    z = poly3({(0, 0, 1): 1.0})
    f = (y * y - x * x) * (x - z) * (x * 2.0 - z * 3.0) \
        - (x * x + y * y - x * z * 2.0) ** 2 * 4.0
    return PlaneCurve(f)


# ----------------------------------------------------------------------
# rotated three-ellipse arrangements


def rotated_triple(ax: float, ay: float, offset: float) -> tuple[PlaneCurve, ...]:
    """One ellipse displaced from the origin, repeated at 0/120/240 degrees."""
    return tuple(ellipse(-offset * np.sin(th), offset * np.cos(th),
                         ax, ay, rot=th)
                 for th in (0.0, 2 * np.pi / 3, 4 * np.pi / 3))


# ----------------------------------------------------------------------
# image of the triangle x, y >= 0, x + y <= 1 under the rational map
# (x, y) -> 10 * (x(2 + 23y), y(8 + 23x)) / (15 + 2x + 8y + 23xy)


def toric_map(x, y):
    q = 15.0 + 2.0 * x + 8.0 * y + 23.0 * x * y
    return 10.0 * x * (2.0 + 23.0 * y) / q, 10.0 * y * (8.0 + 23.0 * x) / q


TORIC_CONIC_FORM = poly3({(0, 0, 2): -528000.0, (1, 0, 1): 383000.0,
                          (0, 1, 1): -111400.0, (1, 1, 0): -153480.0,
                          (2, 0, 0): 55930.0, (0, 2, 0): 75670.0})


@lru_cache(maxsize=1)
def toric_polypol() -> Polypol:
    """The curved triangle cut out by the two axes and the conic image of
    the line x + y = 1 under `toric_map`.  The vertex cycle runs clockwise;
    that traversal makes the canonical form negative on the interior, which
    is the sign the push-forward of 1/(xy(x + y - 1)) produces."""
    conic = parameterize_conic(PlaneCurve(TORIC_CONIC_FORM))
    marker = toric_map(0.5, 0.5)
    return Polypol([line_curve([0.0, 1.0, 0.0]), line_curve([1.0, 0.0, 0.0]),
                    conic],
                   [(0.0, 0.0), (0.0, 80.0 / 23.0), (20.0 / 17.0, 0.0)],
                   side_markers=[None, None, marker])
