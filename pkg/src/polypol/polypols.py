"""The polypol data model: boundary curves, vertices, sides, residual points.

A polypol is an ordered cycle of rational boundary curves C_1..C_k with one
marked transversal intersection (vertex) per adjacent pair.  Sides are real
parameter intervals on each curve running from the previous vertex to the
next; everything downstream (canonical forms, adjoints, topology checks)
consumes them through this model.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .algebra import UniPoly
from .curves import (
    POINT_TOL,
    PlaneCurve,
    ProjectivePoint,
    SingularPoint,
    intersect,
    is_transversal,
    line_curve,
    nodes_of_rational_curve,
    parameterize_conic,
)
from .errors import DegenerateInputError, UnsupportedInputError

# Hand-entered vertices snap to the nearest computed intersection below this.
VERTEX_SNAP_TOL = 1e-6
# Side endpoints must reproduce their vertices at least this well.
SIDE_ROUNDTRIP_TOL = 1e-9
DEFAULT_SAMPLES_PER_SIDE = 256


@dataclass(frozen=True)
class Side:
    """Oriented parameter interval [a, b] on one boundary curve."""

    curve_index: int
    a: float
    b: float
    orientation: int  # +1: increasing t runs from previous vertex to next

    def samples(self, n: int) -> np.ndarray:
        """n interior parameter values, endpoints excluded."""
        return self.a + (self.b - self.a) * (np.arange(n) + 0.5) / n


@dataclass(frozen=True)
class ResidualEntry:
    point: ProjectivePoint
    source: str  # "node-of-C3" or "intersection-of-(C1,C3)", 1-based
    delta: int


@dataclass(frozen=True)
class ResidualSet:
    points: tuple[ResidualEntry, ...]
    triple_points: tuple[ProjectivePoint, ...]

    @property
    def count(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class RegularityReport:
    quasi_regular: bool
    regular: bool
    witnesses: tuple[str, ...]


def residual_count_formula(degrees) -> int:
    """Closed count of residual points for nodal transversal boundaries."""
    k = len(degrees)
    nodes = sum(comb(d - 1, 2) for d in degrees)
    crossings = sum(degrees[i] * degrees[j]
                    for i in range(k) for j in range(i + 1, k))
    return nodes + crossings - k


# ----------------------------------------------------------------------
# parameter location on a curve


def param_of_point(curve: PlaneCurve, point: ProjectivePoint,
                   tol: float = 1e-6):
    """All real parameter values whose image is the given point."""
    if curve.param is None:
        raise UnsupportedInputError("curve has no parameterization")
    r, s, h = curve.param
    v = point.coords
    crosses = [
        UniPoly((s * v[2] - h * v[1]).coeffs),
        UniPoly((h * v[0] - r * v[2]).coeffs),
        UniPoly((r * v[1] - s * v[0]).coeffs),
    ]
    lead = max(crosses, key=lambda p: p.norm())
    if lead.degree < 1:
        raise DegenerateInputError("point location system degenerated")
    comps = [r, s, h]
    derivs = [p.deriv() for p in comps]
    found: list[float] = []
    from .algebra import uni_roots

    for t, _ in uni_roots(lead):
        if abs(t.imag) > 1e-6:
            continue
        tv = t
        for _ in range(12):  # Gauss-Newton on the full cross product
            P = np.array([p(tv) for p in comps])
            F = np.cross(P, v)
            if np.linalg.norm(F) < 1e-15 * np.linalg.norm(P):
                break
            J = np.cross(np.array([p(tv) for p in derivs]), v)
            denom = np.vdot(J, J).real
            if denom < 1e-30:
                break
            tv = tv - np.vdot(J, F) / denom
        P = np.array([p(tv) for p in comps])
        resid = np.linalg.norm(np.cross(P, v)) / np.linalg.norm(P)
        if resid <= tol and abs(tv.imag) <= 1e-7:
            t_real = float(tv.real)
            if not any(abs(t_real - u) <= 1e-7 * (1 + abs(u)) for u in found):
                found.append(t_real)
    return found


def _taylor_shift(p: UniPoly, mu: float) -> UniPoly:
    out = UniPoly([0.0])
    lin = UniPoly([mu, 1.0])
    for c in p.coeffs[::-1]:
        out = out * lin + UniPoly([c])
    return out


def mobius_reparameterize(curve: PlaneCurve, mu: float) -> PlaneCurve:
    """Replace the parameterization by t = mu + 1/tau, cleared to polynomials.

    Sends the old parameter value mu to tau = infinity, so an arc wrapping
    through t = infinity becomes a finite tau-interval.
    """
    if curve.param is None:
        raise UnsupportedInputError("curve has no parameterization")
    d = max(p.degree for p in curve.param)
    new = []
    for p in curve.param:
        shifted = _taylor_shift(p, mu)  # p(mu + u)
        rev = np.zeros(d + 1, dtype=complex)
        rev[: shifted.coeffs.size] = shifted.coeffs
        new.append(UniPoly(rev[::-1]))  # tau^d * p(mu + 1/tau)
    return PlaneCurve(curve.form, tuple(new))


# ----------------------------------------------------------------------
# the polypol


class Polypol:
    """Validated polypol; immutable after construction.

    `side_markers[i]`, when given, is an affine point on curve i selecting
    which of the two arcs between its vertices is the side (only conics and
    higher-degree curves are ambiguous).  Curves whose chosen arc wraps
    through t = infinity are silently reparameterized.
    """

    __slots__ = ("curves", "vertices", "sides", "degrees", "total_degree", "k")

    def __init__(self, curves, vertices, side_markers=None,
                 build_sides: bool = True, seed: int = 0) -> None:
        curves = list(curves)

        def as_point(v):
            if isinstance(v, ProjectivePoint):
                return v
            arr = np.asarray(v, dtype=complex).reshape(-1)
            if arr.size == 2:  # affine input
                arr = np.append(arr, 1.0)
            return ProjectivePoint(arr)

        vertices = [as_point(v) for v in vertices]
        k = len(curves)
        if k < 2:
            raise DegenerateInputError("a polypol needs at least two curves")
        if len(vertices) != k:
            raise DegenerateInputError("need exactly one vertex per adjacent pair")
        for i, c in enumerate(curves):
            if c.param is None:
                if c.degree == 1:
                    curves[i] = line_curve([c.form.terms.get(e, 0.0)
                                            for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))])
                elif c.degree == 2:
                    curves[i] = parameterize_conic(c, seed=seed)

        # snap vertices onto computed intersections of their two curves
        snapped: list[ProjectivePoint] = []
        for i, v in enumerate(vertices):
            a, b = curves[i], curves[(i + 1) % k]
            candidates = intersect(a, b)
            best = None
            for p, _ in candidates:
                dist = np.linalg.norm(np.cross(p.coords, v.coords))
                if best is None or dist < best[0]:
                    best = (dist, p)
            if best is None or best[0] > VERTEX_SNAP_TOL:
                raise DegenerateInputError(
                    f"vertex {i + 1} is not near any intersection of its curves")
            snapped.append(best[1])
            if not is_transversal(a, b, best[1]):
                raise DegenerateInputError(
                    f"boundary curves meet tangentially at vertex {i + 1}")

        self.k = k
        self.degrees = tuple(c.degree for c in curves)
        self.total_degree = sum(self.degrees)
        self.vertices = tuple(snapped)

        if build_sides:
            markers = list(side_markers) if side_markers is not None else [None] * k
            if len(markers) != k:
                raise DegenerateInputError("need one side marker slot per curve")
            sides: list[Side] = []
            for i in range(k):
                curve, side = self._build_side(curves[i], i, markers[i])
                curves[i] = curve
                sides.append(side)
            self.sides = tuple(sides)
        else:
            self.sides = None
        self.curves = tuple(curves)

    # ------------------------------------------------------------------

    def _vertex_param(self, curve: PlaneCurve, v: ProjectivePoint,
                      label: str) -> float:
        ts = param_of_point(curve, v)
        if not ts:
            raise DegenerateInputError(
                f"{label} is not hit by any real parameter value")
        if len(ts) > 1:
            raise DegenerateInputError(f"{label} is a singular point of its curve")
        return ts[0]

    def _build_side(self, curve: PlaneCurve, i: int, marker):
        v_prev = self.vertices[(i - 1) % self.k]
        v_next = self.vertices[i]
        if not (v_prev.is_real() and v_next.is_real()):
            raise DegenerateInputError("sides need real vertices")
        # a vertex can sit at the parameterization's t = infinity; shift it
        # to a finite value and retry (the shift constants are arbitrary,
        # just not vertex parameters themselves)
        last_err = None
        for mu in (None, 0.7734, -0.2101, 1.6180):
            cand = curve if mu is None else mobius_reparameterize(curve, mu)
            try:
                t_prev = self._vertex_param(cand, v_prev,
                                            f"vertex before side {i + 1}")
                t_next = self._vertex_param(cand, v_next,
                                            f"vertex after side {i + 1}")
            except DegenerateInputError as err:
                last_err = err
                continue
            curve = cand
            break
        else:
            raise last_err
        if abs(t_prev - t_next) <= 1e-9:
            raise DegenerateInputError(f"side {i + 1} has coincident endpoints")

        wrap = False
        if marker is not None:
            m = np.asarray(marker, dtype=float)
            mpt = ProjectivePoint([m[0], m[1], 1.0])
            tms = param_of_point(curve, mpt)
            if not tms:
                raise DegenerateInputError(
                    f"side marker {i + 1} does not lie on its curve")
            tm = tms[0]
            lo, hi = sorted((t_prev, t_next))
            wrap = not (lo < tm < hi)
        if wrap:
            mu = 0.5 * (t_prev + t_next)
            curve = mobius_reparameterize(curve, mu)
            t_prev = self._vertex_param(curve, v_prev,
                                        f"vertex before side {i + 1}")
            t_next = self._vertex_param(curve, v_next,
                                        f"vertex after side {i + 1}")
        a, b = sorted((t_prev, t_next))
        orientation = 1 if t_prev < t_next else -1
        side = Side(curve_index=i, a=a, b=b, orientation=orientation)
        for t_end, v in ((t_prev, v_prev), (t_next, v_next)):
            if not curve.point_at(t_end).equal(v, SIDE_ROUNDTRIP_TOL):
                raise DegenerateInputError(
                    f"side {i + 1} endpoints do not reproduce the vertices")
        return curve, side

    # ------------------------------------------------------------------

    def side_points(self, i: int, n: int = DEFAULT_SAMPLES_PER_SIDE) -> np.ndarray:
        """n real affine sample points along side i (open interval)."""
        side = self.sides[i]
        pts = []
        for t in side.samples(n):
            p = self.curves[i].point_at(t)
            pts.append(p.affine())
        return np.array([(x.real, y.real) for x, y in pts])

    def vertex_between(self, i: int, j: int) -> ProjectivePoint | None:
        """The marked vertex of curves (i, j) if they are cycle-adjacent."""
        if (i + 1) % self.k == j:
            return self.vertices[i]
        if (j + 1) % self.k == i:
            return self.vertices[j]
        return None

    def __repr__(self) -> str:
        return f"Polypol(degrees={self.degrees}, k={self.k})"


# ----------------------------------------------------------------------
# residual points


def residual_points(p: Polypol) -> ResidualSet:
    """All nodes of the boundary curves plus their pairwise intersections
    minus the k vertices; the count matches the closed formula.

    Tangential pairwise meetings violate the transversality assumption and
    raise; a point shared by three boundary curves is reported in
    `triple_points` (the residual scheme stays well-defined but adjoint
    uniqueness may fail downstream).
    """
    entries: list[ResidualEntry] = []
    for i, c in enumerate(p.curves):
        if c.degree >= 3:
            if c.param is None:
                raise UnsupportedInputError(
                    f"boundary curve {i + 1} of degree {c.degree} has no "
                    "parameterization; its nodes are unknown")
            for node in nodes_of_rational_curve(c):
                entries.append(ResidualEntry(
                    point=node.location, source=f"node-of-C{i + 1}",
                    delta=node.delta))

    # marked vertices per curve pair (a two-sided polypol has both of its
    # vertices on the same pair)
    marked: dict[tuple[int, int], list[ProjectivePoint]] = {}
    for idx in range(p.k):
        pair = tuple(sorted((idx, (idx + 1) % p.k)))
        marked.setdefault(pair, []).append(p.vertices[idx])

    per_pair: dict[tuple[int, int], list[ProjectivePoint]] = {}
    for i in range(p.k):
        for j in range(i + 1, p.k):
            pts = intersect(p.curves[i], p.curves[j])
            unspent = list(marked.get((i, j), []))
            kept: list[ProjectivePoint] = []
            for q, m in pts:
                if m > 1:
                    raise UnsupportedInputError(
                        f"curves {i + 1} and {j + 1} meet non-transversally")
                hit = next((v for v in unspent if q.equal(v)), None)
                if hit is not None:
                    unspent.remove(hit)
                    continue
                kept.append(q)
            if unspent:
                raise DegenerateInputError(
                    f"marked vertex of ({i + 1},{j + 1}) not among intersections")
            per_pair[(i, j)] = kept
            for q in kept:
                entries.append(ResidualEntry(
                    point=q, source=f"intersection-of-(C{i + 1},C{j + 1})",
                    delta=1))

    triples: list[ProjectivePoint] = []
    pairs_list = list(per_pair.items())
    for a in range(len(pairs_list)):
        for b in range(a + 1, len(pairs_list)):
            (i1, j1), pts1 = pairs_list[a]
            (i2, j2), pts2 = pairs_list[b]
            if len({i1, j1, i2, j2}) >= 3:
                for q1 in pts1:
                    for q2 in pts2:
                        if q1.equal(q2) and not any(
                                q1.equal(t) for t in triples):
                            triples.append(q1)

    rs = ResidualSet(points=tuple(entries), triple_points=tuple(triples))
    expected = residual_count_formula(p.degrees)
    if rs.count != expected:
        raise UnsupportedInputError(
            f"found {rs.count} residual points, formula gives {expected}; "
            "boundary is not in the supported nodal/transversal class")
    return rs


# ----------------------------------------------------------------------
# regularity


def side_interval(p: Polypol, i: int) -> tuple[float, float, int]:
    """Parameter endpoints and orientation of side i."""
    if p.sides is None:
        raise UnsupportedInputError("polypol was built without sides")
    s = p.sides[i]
    return (s.a, s.b, s.orientation)


def classify_regularity(p: Polypol,
                        samples_per_side: int = DEFAULT_SAMPLES_PER_SIDE
                        ) -> RegularityReport:
    """Quasi-regular: no side passes through a singular point of its own
    curve.  Regular: additionally no boundary curve crosses any side's
    interior (root location on the restriction, exact in the parameter) and
    none meets the sampled interior of the region.
    """
    if p.sides is None:
        raise UnsupportedInputError("polypol was built without sides")

    witnesses: list[str] = []
    quasi = True
    for i, c in enumerate(p.curves):
        if c.degree < 3:
            continue
        side = p.sides[i]
        for node in nodes_of_rational_curve(c):
            for t in param_of_point(c, node.location):
                if side.a + 1e-9 < t < side.b - 1e-9:
                    quasi = False
                    witnesses.append(
                        f"side {i + 1} passes through a node of C{i + 1} "
                        f"at t={t:.6g}")

    regular = quasi
    from .algebra import uni_roots

    for i in range(p.k):
        side = p.sides[i]
        span = side.b - side.a
        for j in range(p.k):
            if j == i:
                continue
            rest = p.curves[i].restrict(p.curves[j].form)
            if rest.degree < 1:
                continue
            for t, _ in uni_roots(rest):
                if abs(t.imag) > 1e-7:
                    continue
                if side.a + 1e-6 * span < t.real < side.b - 1e-6 * span:
                    regular = False
                    witnesses.append(
                        f"C{j + 1} crosses side {i + 1} at t={t.real:.6g}")

    from .topology import interior_points

    inner = interior_points(p)
    if inner.shape[0] == 0:
        regular = False
        witnesses.append("no interior sample points found")
    else:
        for j, c in enumerate(p.curves):
            g = c.form.dehomogenize()
            vals = g.eval_many(inner).real
            scale = max(np.max(np.abs(vals)), 1e-30)
            if vals.min() < -1e-10 * scale and vals.max() > 1e-10 * scale:
                regular = False
                witnesses.append(f"C{j + 1} meets the interior")

    return RegularityReport(quasi_regular=quasi, regular=regular,
                            witnesses=tuple(witnesses))


# ----------------------------------------------------------------------
# convenience constructors


def polygon_polypol(points) -> Polypol:
    """Polypol whose sides are the edges of the polygon with these affine
    vertices (in boundary order)."""
    pts = np.asarray(points, dtype=float)
    k = pts.shape[0]
    if k < 3:
        raise DegenerateInputError("polygon needs at least three vertices")
    curves = []
    for i in range(k):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % k]
        curves.append(line_curve([y1 - y2, x2 - x1, x1 * y2 - x2 * y1]))
    vertices = [ProjectivePoint([pts[(i + 1) % k][0], pts[(i + 1) % k][1], 1.0])
                for i in range(k)]
    return Polypol(curves, vertices)
