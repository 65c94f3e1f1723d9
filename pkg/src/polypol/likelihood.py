"""Toric statistical models: score equations, critical-point solving for one-
and two-dimensional models, amplitudes as global residue sums over the
critical points, and trace tests comparing those sums with canonical-form
evaluations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adjoint import adjoint
from .algebra import CLUSTER_TOL, MultiPoly, UniPoly, resultant_wrt_last, uni_roots
from .curves import PlaneCurve, line_curve, parameterize_conic
from .errors import DegenerateInputError, PolypolError, UnsupportedInputError
from .forms import canonical_form, interval_form
from .polypols import Polypol, polygon_polypol

SPURIOUS_TOL = 1e-8     # |q| below this times ``q``'s coefficient norm
RESIDUAL_TOL = 1e-8     # acceptance threshold for polished solutions
POLISH_STEPS = 12


@dataclass(frozen=True)
class ToricModel:
    """A statistical model whose state probabilities are the monomials of a
    positive-coefficient polynomial q, normalized by q itself.

    ``exponents`` holds one integer exponent vector per state and
    ``coefficients`` the matching positive weights.
    """

    exponents: tuple[tuple[int, ...], ...]
    coefficients: tuple[float, ...]

    def __post_init__(self):
        exps = tuple(tuple(int(e) for e in a) for a in self.exponents)
        coeffs = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coefficients", coeffs)
        if not exps or len(exps) != len(coeffs):
            raise DegenerateInputError(
                "one exponent vector per coefficient is required")
        d = len(exps[0])
        if d < 1 or any(len(a) != d for a in exps):
            raise DegenerateInputError(
                "exponent vectors must share one positive length")
        if len(set(exps)) != len(exps):
            raise DegenerateInputError("exponent vectors must be distinct")
        if any(e < 0 for a in exps for e in a):
            raise UnsupportedInputError("negative exponents are not supported")
        if any(c <= 0 for c in coeffs):
            raise DegenerateInputError("model coefficients must be positive")
        span = np.array([a for a in exps[1:]], dtype=float) - np.array(exps[0],
                                                                       dtype=float)
        if len(exps) < d + 1 or np.linalg.matrix_rank(span, tol=1e-9) < d:
            raise DegenerateInputError(
                "the exponents span a polytope of lower dimension")

    @property
    def d(self) -> int:
        return len(self.exponents[0])

    def denominator(self) -> MultiPoly:
        """The normalizing polynomial q."""
        return MultiPoly(self.d, {a: c for a, c in
                                  zip(self.exponents, self.coefficients)})


def square_model(c0: float, c1: float, c2: float, c3: float) -> ToricModel:
    """The two-dimensional model with q = c0 + c1*x + c2*y + c3*xy."""
    return ToricModel(((0, 0), (1, 0), (0, 1), (1, 1)), (c0, c1, c2, c3))


@dataclass(frozen=True)
class LikelihoodInstance:
    """Observed counts for a model, with the derived sample size and the
    target point (the count-weighted sum of the exponent vectors)."""

    data: tuple[int, ...]
    sample_size: int
    target: tuple[float, ...]


def likelihood_instance(m: ToricModel, data) -> LikelihoodInstance:
    u = []
    for x in data:
        if int(x) != x or x < 1:
            raise DegenerateInputError("counts must be positive integers")
        u.append(int(x))
    if len(u) != len(m.exponents):
        raise DegenerateInputError("one count per model state is required")
    target = tuple(float(sum(ui * a[j] for ui, a in zip(u, m.exponents)))
                   for j in range(m.d))
    return LikelihoodInstance(tuple(u), sum(u), target)


@dataclass(frozen=True)
class LikelihoodSystem:
    """Cleared score equations; points where ``nonvanishing`` is zero are
    artifacts of the clearing and never genuine critical points."""

    equations: tuple[MultiPoly, ...]
    nonvanishing: MultiPoly


def likelihood_system(m: ToricModel, inst: LikelihoodInstance) -> LikelihoodSystem:
    """The d cleared equations target_j * q = s * x_j * dq/dx_j."""
    if m.d > 2:
        raise UnsupportedInputError(
            "only one- and two-dimensional models are supported")
    q = m.denominator()
    s = float(inst.sample_size)
    eqs = []
    for j in range(m.d):
        xj = MultiPoly(m.d, {tuple(1 if i == j else 0 for i in range(m.d)): 1.0})
        eqs.append(q * inst.target[j] + (xj * q.diff(j)) * (-s))
    return LikelihoodSystem(tuple(eqs), q)


def _to_unipoly(f: MultiPoly) -> UniPoly:
    coeffs = np.zeros(max(f.degree, 0) + 1, dtype=complex)
    for (e,), c in f.terms.items():
        coeffs[e] += c
    return UniPoly(coeffs)


def _slice_in_second(f: MultiPoly, x0: complex) -> UniPoly:
    """f(x0, y) as a polynomial in y."""
    dy = max((e[1] for e in f.terms), default=0)
    coeffs = np.zeros(dy + 1, dtype=complex)
    for (ex, ey), c in f.terms.items():
        coeffs[ey] += c * x0 ** ex
    return UniPoly(coeffs)


def _polish(eqs, pt: tuple[complex, ...]) -> tuple[complex, ...]:
    jac = [[e.diff(j) for j in range(len(pt))] for e in eqs]
    x = np.array(pt, dtype=complex)
    for _ in range(POLISH_STEPS):
        fv = np.array([e(tuple(x)) for e in eqs], dtype=complex)
        jm = np.array([[dij(tuple(x)) for dij in row] for row in jac],
                      dtype=complex)
        try:
            dx = np.linalg.solve(jm, fv)
        except np.linalg.LinAlgError:
            break
        x = x - dx
        if np.max(np.abs(dx)) <= 1e-14 * (1.0 + np.max(np.abs(x))):
            break
    return tuple(x)


def _equation_scale(eqs, pt) -> float:
    grow = max(1.0, float(np.max(np.abs(pt))))
    return max(e.norm() * grow ** max(e.degree, 1) for e in eqs)


def _dedup(points):
    kept: list[tuple[complex, ...]] = []
    for pt in points:
        size = 1.0 + float(np.max(np.abs(pt)))
        if all(max(abs(a - b) for a, b in zip(pt, other)) > CLUSTER_TOL * size
               for other in kept):
            kept.append(pt)
    return kept


def _point_key(pt):
    return tuple(part for z in pt for part in (z.real, z.imag))


def critical_points(m: ToricModel, inst: LikelihoodInstance
                    ) -> list[tuple[complex, ...]]:
    """All isolated complex critical points of the log-likelihood, with
    denominator hits filtered out, sorted by coordinates."""
    system = likelihood_system(m, inst)
    if m.d == 1:
        candidates = _solve_1d(system)
    else:
        candidates = _solve_2d(system)
    q = system.nonvanishing
    good = []
    for pt in candidates:
        if abs(q(pt)) <= SPURIOUS_TOL * q.norm():
            continue
        if max(abs(e(pt)) for e in system.equations) > \
                RESIDUAL_TOL * _equation_scale(system.equations, pt):
            continue
        good.append(pt)
    return sorted(_dedup(good), key=_point_key)


def _solve_1d(system: LikelihoodSystem):
    eq = _to_unipoly(system.equations[0])
    if eq.norm() <= 1e-12 * system.nonvanishing.norm():
        raise PolypolError(
            "the score equation vanishes identically; "
            "the critical set is positive-dimensional")
    return [_polish(system.equations, (r,)) for r, _ in uni_roots(eq)]


def _solve_2d(system: LikelihoodSystem):
    f, g = system.equations
    dy_f = max((e[1] for e in f.terms), default=0)
    dy_g = max((e[1] for e in g.terms), default=0)
    scale = f.norm() * g.norm()
    if dy_f == 0 or dy_g == 0:
        # one equation is free of the second variable: its roots give x
        first, other = (f, g) if dy_f == 0 else (g, f)
        xs = [r for r, _ in uni_roots(_to_unipoly(
            MultiPoly(1, {(e[0],): c for e, c in first.terms.items()})))]
    else:
        res = resultant_wrt_last(f, g)
        if res.norm() <= 1e-10 * scale:
            raise PolypolError("the score equations share a curve of "
                               "solutions; the critical set is "
                               "positive-dimensional")
        xs = [r for r, _ in uni_roots(res)]
        other = g
    candidates = []
    for x0 in xs:
        lead = f if max((e[1] for e in f.terms), default=0) > 0 else g
        fy = _slice_in_second(lead, x0)
        if fy.norm() <= 1e-10 * max(1.0, lead.norm()):
            fy = _slice_in_second(g if lead is f else f, x0)
        for y0, _ in uni_roots(fy):
            check = abs(other((x0, y0)))
            if check <= 1e-5 * _equation_scale([other], (x0, y0)):
                candidates.append(_polish(system.equations, (x0, y0)))
    return candidates


def moment_map(m: ToricModel, inst: LikelihoodInstance, point) -> tuple:
    """The dilated moment map x -> s * x_j * (dq/dx_j) / q; it carries the
    positive orthant onto the interior of the dilated Newton polytope, and
    fixed points of the score equations map to the instance target."""
    q = m.denominator()
    s = float(inst.sample_size)
    qv = q(tuple(point))
    if abs(qv) <= 1e-13 * q.norm():
        raise DegenerateInputError("the map is undefined where q vanishes")
    return tuple(s * point[j] * q.diff(j)(tuple(point)) / qv
                 for j in range(m.d))


def _score_jacobian(m: ToricModel, s: float):
    """Callable evaluating det(d(moment_map)/dx) at a point."""
    q = m.denominator()
    d = m.d
    parts = []
    for j in range(d):
        xj = MultiPoly(d, {tuple(1 if i == j else 0 for i in range(d)): 1.0})
        nj = (xj * q.diff(j)) * s
        parts.append((nj, [nj.diff(i) for i in range(d)]))
    dq = [q.diff(i) for i in range(d)]

    def jac(pt) -> complex:
        qv = q(pt)
        mat = np.empty((d, d), dtype=complex)
        for j, (nj, dnj) in enumerate(parts):
            njv = nj(pt)
            for i in range(d):
                mat[i, j] = (dnj[i](pt) * qv - njv * dq[i](pt)) / qv ** 2
        return complex(np.linalg.det(mat))

    return jac


def _weight_density(d: int, region):
    """The density summed at each critical point: the reciprocal of the
    coordinate product for the polytope route, or of x*y*(x+y-1) for images
    of the standard triangle.  A callable region is used as-is and is
    experimental."""
    if callable(region):
        return region
    if region == "polytope":
        return lambda pt: 1.0 / np.prod(np.asarray(pt, dtype=complex))
    if region == "simplex":
        if d != 2:
            raise UnsupportedInputError(
                "the triangle weight needs a two-dimensional model")
        return lambda pt: 1.0 / (pt[0] * pt[1] * (pt[0] + pt[1] - 1.0))
    raise UnsupportedInputError(f"region {region!r} is not supported")


def amplitude_residue(m: ToricModel, inst: LikelihoodInstance,
                      region="polytope", points=None) -> complex:
    """Global residue sum of the region's density over the critical points.

    The terms are accumulated in sorted point order so the result does not
    depend on how the solver happened to order the solutions.
    """
    if points is None:
        points = critical_points(m, inst)
    if not points:
        raise PolypolError("no critical points to sum over")
    weight = _weight_density(m.d, region)
    jac = _score_jacobian(m, float(inst.sample_size))
    total = 0.0 + 0.0j
    for pt in sorted(points, key=_point_key):
        jv = jac(pt)
        if abs(jv) <= 1e-12 * (1.0 + float(np.max(np.abs(pt)))):
            raise PolypolError(
                "the moment map is singular at a critical point; "
                "the residue sum is undefined")
        total += weight(pt) / jv
    return total


@dataclass(frozen=True)
class TraceReport:
    passed: bool
    residue_value: complex
    reference_value: float
    relative_error: float


def _hull_ccw(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = sorted(set(points))

    def build(seq):
        out: list[tuple[float, float]] = []
        for p in seq:
            while len(out) >= 2:
                (ax, ay), (bx, by) = out[-2], out[-1]
                if (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax) > 1e-12:
                    break
                out.pop()
            out.append(p)
        return out

    lower = build(pts)
    upper = build(reversed(pts))
    return lower[:-1] + upper[:-1]


def _polytope_reference(m: ToricModel, inst: LikelihoodInstance, v) -> float:
    s = float(inst.sample_size)
    if m.d == 1:
        lo = s * min(a[0] for a in m.exponents)
        hi = s * max(a[0] for a in m.exponents)
        return float(interval_form(lo, hi)(v[0]).real)
    corners = _hull_ccw([(s * a[0], s * a[1]) for a in m.exponents])
    p = polygon_polypol(corners)
    return float(canonical_form(p, adjoint(p))(tuple(v)).real)


def trace_test(m: ToricModel, inst: LikelihoodInstance, region="polytope",
               trace_tol: float = 1e-9, points=None) -> TraceReport:
    """Compare the residue sum with an independent canonical-form value at
    the instance target.  Agreement certifies that the critical-point list
    is complete."""
    v = inst.target
    if region == "polytope":
        reference = _polytope_reference(m, inst, v)
    elif region == "simplex":
        p = image_polypol(m, inst)
        reference = float(canonical_form(p, adjoint(p))(tuple(v)).real)
    else:
        raise UnsupportedInputError(f"region {region!r} is not supported")
    residue = amplitude_residue(m, inst, region=region, points=points)
    rel = abs(residue - reference) / abs(reference)
    return TraceReport(bool(rel <= trace_tol), residue, reference, float(rel))


def _square_coefficients(m: ToricModel) -> tuple[float, float, float, float]:
    order = ((0, 0), (1, 0), (0, 1), (1, 1))
    lookup = dict(zip(m.exponents, m.coefficients))
    if m.d != 2 or len(m.exponents) != 4 or set(m.exponents) != set(order):
        raise UnsupportedInputError(
            "the image construction needs the square model "
            "q = c0 + c1*x + c2*y + c3*xy")
    return tuple(lookup[a] for a in order)


def _simplex_image_conic(s: float, c) -> MultiPoly:
    """The conic bounding the moment-map image of the standard triangle,
    expanded in the target coordinates."""
    c0, c1, c2, c3 = c
    const = -s ** 3 * c1 * c2 * (c1 + c2 + c3)
    lin1 = s ** 2 * (c0 * c1 * c2 + 2 * c1 ** 2 * c2 + c0 * c2 ** 2
                     + c1 * c2 ** 2 - c0 * c1 * c3 + c0 * c2 * c3
                     + c1 * c2 * c3)
    lin2 = s ** 2 * (c0 * c1 ** 2 + c0 * c1 * c2 + c1 ** 2 * c2
                     + 2 * c1 * c2 ** 2 + c0 * c1 * c3 - c0 * c2 * c3
                     + c1 * c2 * c3)
    sq1 = -s * (c0 * c1 * c2 + c1 ** 2 * c2 - c0 ** 2 * c3 - c0 * c1 * c3)
    sq2 = -s * (c0 * c1 * c2 + c1 * c2 ** 2 - c0 ** 2 * c3 - c0 * c2 * c3)
    cross = -s * (c0 * c1 ** 2 + c1 ** 2 * c2 + c0 * c2 ** 2 + c1 * c2 ** 2
                  + 2 * c0 ** 2 * c3 + c0 * c1 * c3 + c0 * c2 * c3
                  + c1 * c2 * c3)
    return MultiPoly(2, {(0, 0): const, (1, 0): lin1, (0, 1): lin2,
                         (2, 0): sq1, (0, 2): sq2, (1, 1): cross})


def image_polypol(m: ToricModel, inst: LikelihoodInstance) -> Polypol:
    """The moment-map image of the standard triangle for a square model: a
    curved triangle bounded by the two coordinate axes and a conic.

    The vertex cycle runs clockwise; that orientation makes the normalized
    form agree with the residue sum weighted by the triangle density.
    """
    c0, c1, c2, c3 = _square_coefficients(m)
    s = float(inst.sample_size)
    affine = _simplex_image_conic(s, (c0, c1, c2, c3))
    homog: dict = {}
    for (e1, e2), coeff in affine.terms.items():
        homog[(e1, e2, 2 - e1 - e2)] = coeff
    conic = parameterize_conic(PlaneCurve(MultiPoly(3, homog)))
    corner1 = s * c1 / (c0 + c1)
    corner2 = s * c2 / (c0 + c2)
    marker = tuple(z.real for z in moment_map(m, inst, (0.5, 0.5)))
    return Polypol([line_curve([0.0, 1.0, 0.0]), line_curve([1.0, 0.0, 0.0]),
                    conic],
                   [(0.0, 0.0), (0.0, corner2), (corner1, 0.0)],
                   side_markers=[None, None, marker])
