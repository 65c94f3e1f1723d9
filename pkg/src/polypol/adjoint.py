"""Adjoint curves: the vanishing system on degree-(d-3) forms, avoidance
verification, the single-nodal-curve variant, and Warren's dual formula.

The adjoint of a polypol with boundary degrees d_1..d_k is the curve of
degree d - 3 (d the total degree) through all residual points; for the
supported nodal/transversal boundaries each residual point contributes one
simple vanishing row and the solution space is one-dimensional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    MultiPoly,
    grlex_monomials,
    normalize_phase,
    nullspace,
    uni_roots,
)
from .algebra import LinearSolveReport
from .curves import (
    PlaneCurve,
    ProjectivePoint,
    nodes_of_rational_curve,
    singular_points_implicit,
)
from .errors import DegenerateInputError, UnsupportedInputError
from .polypols import Polypol, ResidualSet, residual_points

# Residual incidence certified below this.
INCIDENCE_TOL = 1e-8
# Vertices must stay at least this far from the adjoint.
VERTEX_AVOIDANCE_TOL = 1e-6


@dataclass(frozen=True)
class AdjointResult:
    """Normalized adjoint together with the solve transcript."""

    alpha: MultiPoly  # homogeneous of degree d - 3, unit coefficient norm
    nullspace_dim: int
    report: LinearSolveReport
    incidence: np.ndarray  # |alpha| at each residual point
    residual_set: ResidualSet
    warning: str | None = None

    @property
    def degree(self) -> int:
        return max(self.alpha.degree, 0)


def _vanishing_matrix(points, degree: int) -> np.ndarray:
    monos = grlex_monomials(3, degree)
    rows = []
    for p in points:
        v = p.coords / np.linalg.norm(p.coords)
        rows.append([np.prod(v ** np.array(e)) for e in monos])
    if not rows:
        return np.zeros((0, len(monos)), dtype=complex)
    return np.array(rows, dtype=complex)


def _solve_vanishing(points, degree: int):
    monos = grlex_monomials(3, degree)
    M = _vanishing_matrix(points, degree)
    # complex residual points of a real polypol come in conjugate pairs, so
    # the solution has a real representative; solving the stacked real
    # system keeps it real instead of leaving an arbitrary SVD phase on it
    rep = nullspace(np.vstack([M.real, M.imag]))
    if rep.nullity == 0:
        rep = nullspace(M)
    if rep.nullity == 0:
        raise DegenerateInputError(
            "vanishing system has no solution of the expected degree")
    vec = normalize_phase(rep.nullspace[:, 0])
    return MultiPoly.from_coeff_vector(3, monos, vec), rep


def adjoint(p: Polypol) -> AdjointResult:
    """The adjoint curve of a polypol: unique degree-(d-3) form through the
    residual points, unit coefficient norm, leading graded-lex coefficient
    real positive.  A solution space of dimension >= 2 is reported as a
    warning on the result, not an error."""
    if p.total_degree < 3:
        raise DegenerateInputError(
            f"total degree {p.total_degree} has no adjoint degree")
    rs = residual_points(p)
    alpha, rep = _solve_vanishing([e.point for e in rs.points],
                                  p.total_degree - 3)
    warning = None
    if rep.nullity >= 2:
        warning = (f"adjoint space has dimension {rep.nullity}; "
                   "returning one normalized representative")
    if rs.triple_points:
        extra = "; ".join(repr(t) for t in rs.triple_points)
        warning = ((warning + "; ") if warning else "") + \
            f"triple points among boundaries at {extra}"
    incidence = np.array([abs(alpha(e.point.coords
                                    / np.linalg.norm(e.point.coords)))
                          for e in rs.points])
    return AdjointResult(alpha=alpha, nullspace_dim=rep.nullity, report=rep,
                         incidence=incidence, residual_set=rs, warning=warning)


def adjoint_nodal_region(c: PlaneCurve,
                         boundary_node: ProjectivePoint) -> MultiPoly:
    """Adjoint of a region bounded by a single nodal rational curve: the
    degree-(d-3) form through every node except the one on the boundary."""
    if c.degree < 3:
        raise DegenerateInputError("curve degree below 3 has no adjoint")
    if c.param is not None:
        nodes = nodes_of_rational_curve(c)
    else:
        nodes = singular_points_implicit(c)
    if not any(n.location.equal(boundary_node, 1e-6) for n in nodes):
        raise DegenerateInputError("boundary point is not a node of the curve")
    others = [n.location for n in nodes
              if not n.location.equal(boundary_node, 1e-6)]
    alpha, rep = _solve_vanishing(others, c.degree - 3)
    if rep.nullity != 1:
        raise DegenerateInputError(
            f"nodal-region adjoint space has dimension {rep.nullity}")
    return alpha


# ----------------------------------------------------------------------
# Warren's formula for the dual polytope


def warren_dual_adjoint(vertices, triangulation=None) -> MultiPoly:
    """Adjoint polynomial of the dual polytope: sum over triangulation
    simplices of vol(sigma) times the product of the linear forms
    1 - <v, t> over the vertices outside sigma.  Independent of the chosen
    triangulation (tested, not assumed)."""
    pts = np.asarray(vertices, dtype=float)
    n = pts.shape[0]
    if n < 3:
        raise DegenerateInputError("need at least three vertices")
    if triangulation is None:
        triangulation = [(0, i, i + 1) for i in range(1, n - 1)]
    lin = [MultiPoly(2, {(0, 0): 1.0, (1, 0): -pts[i][0], (0, 1): -pts[i][1]})
           for i in range(n)]
    total = MultiPoly.zero(2)
    for tri in triangulation:
        a, b, c = (pts[i] for i in tri)
        vol = 0.5 * ((b[0] - a[0]) * (c[1] - a[1])
                     - (b[1] - a[1]) * (c[0] - a[0]))
        if abs(vol) <= 1e-14 * max(1.0, np.max(np.abs(pts))) ** 2:
            raise DegenerateInputError("collinear triple in the triangulation")
        term = MultiPoly.constant(2, vol)
        inside = set(tri)
        for i in range(n):
            if i not in inside:
                term = term * lin[i]
        total = total + term
    return total


# ----------------------------------------------------------------------
# avoidance verification


@dataclass(frozen=True)
class CurveAvoidance:
    curve_index: int
    not_identically_zero: bool
    total_multiplicity: int
    expected_multiplicity: int
    roots_matched: bool
    node_multiplicities_ok: bool

    @property
    def ok(self) -> bool:
        return (self.not_identically_zero
                and self.total_multiplicity == self.expected_multiplicity
                and self.roots_matched and self.node_multiplicities_ok)


@dataclass(frozen=True)
class AvoidanceReport:
    per_curve: tuple[CurveAvoidance, ...]
    vertex_margins: np.ndarray
    vertices_avoided: bool

    @property
    def ok(self) -> bool:
        return self.vertices_avoided and all(c.ok for c in self.per_curve)


def verify_avoidance(p: Polypol, a: AdjointResult) -> AvoidanceReport:
    """Checks that the adjoint contains no boundary curve, misses every
    vertex, and that its intersections with each boundary curve are exactly
    the residual points there, with multiplicity 2 at nodes and total
    d_i * (d - 3)."""
    d = p.total_degree
    if a.degree != max(d - 3, 0):
        raise DegenerateInputError(
            f"adjoint of degree {a.degree} does not belong to a polypol of "
            f"total degree {d}")
    margins = np.array([abs(a.alpha(v.coords / np.linalg.norm(v.coords)))
                        for v in p.vertices])
    vertices_avoided = bool(np.min(margins) > VERTEX_AVOIDANCE_TOL) \
        if margins.size else True

    expected_points: dict[int, list[tuple[ProjectivePoint, int]]] = {
        i: [] for i in range(p.k)}
    for entry in a.residual_set.points:
        src = entry.source
        if src.startswith("node-of-C"):
            indices = [int(src.split("C")[1]) - 1]
            want = 2
        else:
            pair = src.split("(C")[1].rstrip(")")
            indices = [int(t) - 1 for t in pair.split(",C")]
            want = 1
        for i in indices:
            if i >= p.k:
                raise DegenerateInputError(
                    "adjoint residual set references curves outside this polypol")
            expected_points[i].append((entry.point, want))

    per_curve = []
    for i, c in enumerate(p.curves):
        if c.param is None:
            raise UnsupportedInputError(
                f"curve {i + 1} has no parameterization to restrict to")
        rest = c.restrict(a.alpha)
        nonzero = rest.norm() > 1e-12 * max(c.form.norm(), 1.0) ** a.degree
        expected = c.degree * max(d - 3, 0)
        if not nonzero or expected == 0:
            per_curve.append(CurveAvoidance(
                curve_index=i, not_identically_zero=nonzero,
                total_multiplicity=0, expected_multiplicity=expected,
                roots_matched=expected == 0,
                node_multiplicities_ok=True))
            continue
        roots = uni_roots(rest) if rest.degree >= 1 else []
        total = sum(m for _, m in roots)
        drop = expected - rest.degree
        located: list[tuple[ProjectivePoint, int]] = \
            [(c.point_at(t), m) for t, m in roots]
        if drop > 0:
            located.append((c.point_at_infinity(), drop))
            total += drop
        matched = True
        node_ok = True
        for q, m in located:
            hit = None
            for pt, want in expected_points[i]:
                if q.equal(pt, 1e-6):
                    hit = want
                    break
            if hit is None:
                matched = False
            elif hit == 2 and m != 2:
                node_ok = False
        per_curve.append(CurveAvoidance(
            curve_index=i, not_identically_zero=nonzero,
            total_multiplicity=total, expected_multiplicity=expected,
            roots_matched=matched, node_multiplicities_ok=node_ok))
    return AvoidanceReport(per_curve=tuple(per_curve),
                           vertex_margins=margins,
                           vertices_avoided=vertices_avoided)
