"""Plane projective curves with rational parameterizations.

Curves are homogeneous forms in (x, y, z); degree >= 3 boundary curves must
arrive with a rational parameterization (r(t), s(t), h(t)), which is the
computational handle for every restriction and intersection below.  Lines
and conics get parameterized here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    MultiPoly,
    UniPoly,
    nullspace,
    resultant_wrt_last,
    uni_roots,
)
from .errors import DegenerateInputError, UnsupportedInputError

# Projective points compare equal when pairwise cross products vanish below
# this (coordinates normalized first).
POINT_TOL = 1e-8
# A normalized coordinate is considered real when |imag| is below this.
REAL_TOL = 1e-7
# Residual bound for "param actually lies on the curve" checks.
PARAM_RESID_TOL = 1e-9


class ProjectivePoint:
    """Point of the projective plane, largest-modulus coordinate scaled to 1."""

    __slots__ = ("coords",)

    def __init__(self, coords) -> None:
        v = np.asarray(coords, dtype=complex).reshape(-1)
        if v.size != 3:
            raise DegenerateInputError("projective plane points have 3 coordinates")
        top = np.max(np.abs(v))
        if top == 0.0:
            raise DegenerateInputError("zero vector is not a projective point")
        v = v / v[int(np.argmax(np.abs(v)))]
        self.coords = v

    def equal(self, other: "ProjectivePoint", tol: float = POINT_TOL) -> bool:
        c = np.cross(self.coords, other.coords)
        return bool(np.linalg.norm(c) <= tol * np.linalg.norm(self.coords)
                    * np.linalg.norm(other.coords))

    def is_real(self, tol: float = REAL_TOL) -> bool:
        return bool(np.max(np.abs(self.coords.imag)) <= tol)

    def real(self) -> np.ndarray:
        return self.coords.real.copy()

    def affine(self, tol: float = POINT_TOL) -> tuple[float, float]:
        """Affine (x, y) in the z = 1 chart; rejects points at infinity."""
        if abs(self.coords[2]) <= tol:
            raise DegenerateInputError("point at infinity has no affine coordinates")
        x = self.coords[0] / self.coords[2]
        y = self.coords[1] / self.coords[2]
        return (complex(x), complex(y))

    def __repr__(self) -> str:
        x, y, z = self.coords
        if self.is_real():
            return f"({x.real:.6g} : {y.real:.6g} : {z.real:.6g})"
        return f"({x:.6g} : {y:.6g} : {z:.6g})"


def merge_points(pairs, tol: float = POINT_TOL):
    """Sum multiplicities of projectively equal points in a (point, m) list."""
    merged: list[list] = []
    for p, m in pairs:
        for entry in merged:
            if entry[0].equal(p, tol):
                entry[1] += m
                break
        else:
            merged.append([p, m])
    return [(p, m) for p, m in merged]


@dataclass(frozen=True)
class SingularPoint:
    """Singular point of a boundary curve together with its genus discrepancy."""

    location: ProjectivePoint
    delta: int
    kind: str  # "node" | "vertex-candidate" | "other"


class PlaneCurve:
    """Irreducible plane curve, optionally with a rational parameterization."""

    __slots__ = ("form", "degree", "param", "is_real")

    def __init__(self, form: MultiPoly, param=None) -> None:
        if form.nvars != 3 or form.is_zero():
            raise DegenerateInputError("curve needs a nonzero form in (x, y, z)")
        if not form.is_homogeneous():
            raise DegenerateInputError("curve form must be homogeneous")
        self.form = form
        self.degree = form.degree
        self.is_real = form.max_imag() <= REAL_TOL * max(
            abs(c) for c in form.terms.values())
        if param is not None:
            r, s, h = param
            param = (UniPoly(r.coeffs), UniPoly(s.coeffs), UniPoly(h.coeffs))
            self._check_param(param)
        self.param = param

    # ------------------------------------------------------------------

    def _check_param(self, param) -> None:
        r, s, h = param
        d = self.degree
        ts = np.exp(2j * np.pi * np.arange(3 * d * d) / (3 * d * d)) * 1.13
        for t in ts:
            v = np.array([r(t), s(t), h(t)])
            nrm = np.linalg.norm(v)
            if nrm == 0.0:
                raise DegenerateInputError("parameterization vanishes at a sample")
            if abs(self.form(v / nrm)) > PARAM_RESID_TOL * self.form.norm():
                raise DegenerateInputError(
                    "parameterization does not satisfy the curve form")
        # no common roots across (r, s, h)
        for comp in (r, s, h):
            if comp.degree < 1:
                continue
            for rho, _ in uni_roots(comp):
                vals = [abs(other(rho)) / max(other.norm(), 1.0)
                        for other in (r, s, h)]
                if max(vals) <= 1e-8:
                    raise DegenerateInputError(
                        "parameterization components share a root")
            break

    def point_at(self, t: complex) -> ProjectivePoint:
        r, s, h = self.param
        return ProjectivePoint([r(t), s(t), h(t)])

    def point_at_infinity(self) -> ProjectivePoint:
        r, s, h = self.param
        d = max(r.degree, s.degree, h.degree)

        def lead(p: UniPoly) -> complex:
            return p.coeffs[d] if p.degree == d else 0.0

        return ProjectivePoint([lead(r), lead(s), lead(h)])

    def restrict(self, other_form: MultiPoly) -> UniPoly:
        """Compose a homogeneous form with this curve's parameterization."""
        if self.param is None:
            raise UnsupportedInputError("curve has no parameterization")
        r, s, h = self.param
        maxdeg = other_form.degree
        powers = {0: [UniPoly([1.0])], 1: [UniPoly([1.0])], 2: [UniPoly([1.0])]}
        comps = (r, s, h)
        for i in range(3):
            for _ in range(maxdeg):
                powers[i].append(powers[i][-1] * comps[i])
        out = UniPoly([0.0])
        for (a, b, c), coef in other_form.terms.items():
            out = out + coef * (powers[0][a] * powers[1][b] * powers[2][c])
        return out

    def gradient_at(self, p: ProjectivePoint) -> np.ndarray:
        return np.array([self.form.diff(i)(p.coords) for i in range(3)])

    def contains(self, p: ProjectivePoint, tol: float = POINT_TOL) -> bool:
        return abs(self.form(p.coords)) <= tol * self.form.norm() * \
            float(np.linalg.norm(p.coords)) ** self.degree

    def __repr__(self) -> str:
        tag = "param" if self.param is not None else "implicit"
        return f"PlaneCurve(degree={self.degree}, {tag})"


# ----------------------------------------------------------------------
# constructors


def line_curve(coeffs) -> PlaneCurve:
    """The line a x + b y + c z = 0, parameterized so that only the point at
    infinity (of the line itself, when it has one) sits at t = infinity."""
    a = np.asarray(coeffs, dtype=complex).reshape(-1)
    if a.size != 3 or np.max(np.abs(a)) == 0.0:
        raise DegenerateInputError("line needs 3 coefficients, not all zero")
    form = MultiPoly(3, {(1, 0, 0): a[0], (0, 1, 0): a[1], (0, 0, 1): a[2]})
    aa, bb, cc = a
    n2 = aa * np.conj(aa) + bb * np.conj(bb)
    if abs(n2) > 1e-14 * np.max(np.abs(a)) ** 2:
        # base point (foot of the perpendicular) plus the direction at infinity
        base = np.array([-np.conj(aa) * cc, -np.conj(bb) * cc, n2])
        direc = np.array([bb, -aa, 0.0])
    else:
        # the line at infinity itself
        base = np.array([1.0, 0.0, 0.0])
        direc = np.array([0.0, 1.0, 0.0])
    base = base / np.max(np.abs(base))
    param = (UniPoly([base[0], direc[0]]), UniPoly([base[1], direc[1]]),
             UniPoly([base[2], direc[2]]))
    return PlaneCurve(form, param)


def conic_matrix(form: MultiPoly) -> np.ndarray:
    """Symmetric 3x3 matrix Q with form = v^T Q v for a degree-2 form."""
    if form.degree != 2 or not form.is_homogeneous():
        raise DegenerateInputError("not a quadratic form")
    Q = np.zeros((3, 3), dtype=complex)
    for e, c in form.terms.items():
        idx = [i for i in range(3) for _ in range(e[i])]
        i, j = idx
        if i == j:
            Q[i, i] = c
        else:
            Q[i, j] = Q[j, i] = c / 2
    return Q


def parameterize_conic(c: PlaneCurve, seed: int = 0) -> PlaneCurve:
    """Degree-2 parameterization by stereographic projection from a point of
    the conic; projection data retried on degenerate draws.  Real conics with
    real points get a real parameterization."""
    if c.degree != 2:
        raise DegenerateInputError("parameterize_conic needs a degree-2 curve")
    Q = conic_matrix(c.form)
    if nullspace(Q).rank <= 2:
        raise DegenerateInputError("singular conic cannot be parameterized")

    rng = np.random.default_rng(seed)

    def quad(v):
        return v @ Q @ v

    def bilin(u, v):
        return u @ Q @ v

    p0 = None
    for attempt in range(64):
        use_real = attempt < 32 and c.is_real
        draw = rng.normal(size=(2, 3))
        if not use_real:
            draw = draw + 1j * rng.normal(size=(2, 3))
        A, B = draw
        # restrict the conic to the pencil A + t B
        qa, qb, qab = quad(A), quad(B), bilin(A, B)
        disc = qab * qab - qa * qb
        if abs(qb) < 1e-12:
            continue
        if use_real and disc.real < 1e-10:
            continue
        t0 = (-qab + np.sqrt(disc)) / qb
        for _ in range(3):  # polish against cancellation in the formula
            val = qa + 2 * qab * t0 + qb * t0 * t0
            dval = 2 * (qab + qb * t0)
            if abs(dval) < 1e-14:
                break
            t0 = t0 - val / dval
        cand = A + t0 * B
        if abs(quad(cand)) <= 1e-10 * np.linalg.norm(Q) * np.linalg.norm(cand) ** 2:
            p0 = cand
            break
    if p0 is None:
        raise DegenerateInputError("no point found on the conic")

    p0 = np.asarray(p0, dtype=complex)
    for _ in range(32):
        A, B = np.asarray(rng.normal(size=(2, 3)), dtype=complex)
        # second intersection of the line through p0 and A + t B
        lam2 = UniPoly([quad(A), 2 * bilin(A, B), quad(B)])  # q(A + t B)
        lam1 = UniPoly([bilin(p0, A), bilin(p0, B)])          # bilinear part
        coords = []
        for i in range(3):
            lin = UniPoly([A[i], B[i]])
            coords.append(lam2 * p0[i] - 2.0 * (lam1 * lin))
        try:
            curve = PlaneCurve(c.form, tuple(coords))
        except DegenerateInputError:
            continue
        if np.max(np.abs(p0.imag)) < 1e-10:
            curve = _balance_real_param(curve)
        return curve
    raise DegenerateInputError("stereographic projection kept degenerating")


def _balance_real_param(curve: PlaneCurve) -> PlaneCurve:
    """Recenter a real degree-2 parameterization so three well-spread real
    points of the conic sit at t = -1, 0, 1.  A raw stereographic chart can
    cram the whole real conic into a tiny parameter band, which ruins the
    conditioning of every restriction computed on it."""
    ts = list(np.tan(np.linspace(-np.pi / 2 + 0.01, np.pi / 2 - 0.01, 181)))
    pts = []
    for t in ts:
        v = np.array([p(t) for p in curve.param])
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            continue
        pts.append((t, v.real / nv if np.max(np.abs(v.imag)) < 1e-9 * nv
                    else None))
    pts = [(t, v) for t, v in pts if v is not None]
    vinf = np.array([p.coeffs[p.degree] if p.degree == 2 else 0.0
                     for p in curve.param])
    if np.linalg.norm(vinf) > 1e-12 and np.max(np.abs(vinf.imag)) < 1e-9 * \
            np.linalg.norm(vinf):
        pts.append((np.inf, vinf.real / np.linalg.norm(vinf)))
    if len(pts) < 3:
        return curve

    def pdist(u, v):
        return np.linalg.norm(np.cross(u, v))

    # greedy: farthest pair, then the point maximizing the min distance
    best = max(((i, j) for i in range(len(pts)) for j in range(i + 1, len(pts))),
               key=lambda ij: pdist(pts[ij[0]][1], pts[ij[1]][1]))
    i1, i2 = best
    i3 = max((i for i in range(len(pts)) if i not in (i1, i2)),
             key=lambda i: min(pdist(pts[i][1], pts[i1][1]),
                               pdist(pts[i][1], pts[i2][1])))
    t1, t2, t3 = pts[i1][0], pts[i2][0], pts[i3][0]

    # Moebius m with m(-1) = t1, m(1) = t2, m(0) = t3
    rows = []
    for tau, target in ((-1.0, t1), (1.0, t2), (0.0, t3)):
        if np.isinf(target):
            rows.append([0.0, 0.0, tau, 1.0])
        else:
            rows.append([tau, 1.0, -target * tau, -target])
    rep = nullspace(np.array(rows, dtype=complex))
    if rep.nullity != 1:
        return curve
    a, b, cc, d = rep.nullspace[:, 0]
    num = UniPoly([b, a])
    den = UniPoly([d, cc])
    new = []
    for p in curve.param:
        # p(m(tau)) * den(tau)^2 for quadratic p
        acc = UniPoly([0.0])
        coeffs = list(p.coeffs) + [0.0] * (3 - p.coeffs.size)
        for power, coef in enumerate(coeffs[:3]):
            term = UniPoly([coef])
            for _ in range(power):
                term = term * num
            for _ in range(2 - power):
                term = term * den
            acc = acc + term
        new.append(acc)
    scale = max(np.max(np.abs(p.coeffs)) for p in new)
    if scale < 1e-12:
        return curve
    new = [UniPoly(p.coeffs / scale) for p in new]
    try:
        return PlaneCurve(curve.form, tuple(new))
    except DegenerateInputError:
        return curve


# ----------------------------------------------------------------------
# intersections


def intersect(a: PlaneCurve, b: PlaneCurve,
              point_tol: float = POINT_TOL) -> list[tuple[ProjectivePoint, int]]:
    """All intersection points with multiplicities; these sum to deg a * deg b.

    Restricts b's form to a's parameterization and reads roots off the
    resulting univariate; the degree drop of that restriction is the
    multiplicity at a's parameter value t = infinity.
    """
    if a.param is None:
        if b.param is None:
            raise UnsupportedInputError("need a parameterization on one side")
        a, b = b, a
    u = a.restrict(b.form)
    r, s, h = a.param
    scale = b.form.norm() * max(p.norm() for p in (r, s, h)) ** b.degree
    if u.norm() <= 1e-10 * scale:
        raise DegenerateInputError("curves share a component")
    total = a.degree * b.degree
    pairs: list[tuple[ProjectivePoint, int]] = []
    if u.degree >= 1:
        for t, m in uni_roots(u):
            pairs.append((a.point_at(t), m))
    drop = total - max(u.degree, 0)
    if drop > 0:
        pairs.append((a.point_at_infinity(), drop))
    merged = merge_points(pairs, point_tol)
    merged.sort(key=lambda pm: (pm[0].coords[0].real, pm[0].coords[0].imag,
                                pm[0].coords[1].real, pm[0].coords[1].imag))
    assert sum(m for _, m in merged) == total
    return merged


def is_transversal(a: PlaneCurve, b: PlaneCurve, p: ProjectivePoint,
                   minor_tol: float = 1e-8) -> bool:
    """True when the two gradients at p are linearly independent (2x3 minors
    above minor_tol, scaled by the gradient norms)."""
    if not (a.contains(p) and b.contains(p)):
        raise DegenerateInputError("point does not lie on both curves")
    ga = a.gradient_at(p)
    gb = b.gradient_at(p)
    scale = np.linalg.norm(ga) * np.linalg.norm(gb)
    if scale == 0.0:
        return False
    minors = np.cross(ga, gb)
    return bool(np.linalg.norm(minors) > minor_tol * scale)


# ----------------------------------------------------------------------
# nodes of rational curves


def _unipoly_in(var: int, p: UniPoly) -> MultiPoly:
    """Embed a univariate as a 2-variable MultiPoly in variable `var`."""
    terms = {}
    for k, c in enumerate(p.coeffs):
        e = [0, 0]
        e[var] = k
        terms[tuple(e)] = c
    return MultiPoly(2, terms)


def _divide_diagonal(M: MultiPoly) -> MultiPoly:
    """Divide an antisymmetric bivariate polynomial M(s, t) by (s - t)."""
    ds = max((e[0] for e in M.terms), default=0)
    rows: list[UniPoly] = []
    for j in range(ds + 1):
        coeffs = {}
        for (es, et), c in M.terms.items():
            if es == j:
                coeffs[et] = c
        rows.append(UniPoly([coeffs.get(k, 0.0) for k in range(
            max(coeffs, default=0) + 1)]))
    t_poly = UniPoly([0.0, 1.0])
    quots: list[UniPoly] = [UniPoly([0.0])] * ds
    acc = rows[ds]
    for j in range(ds - 1, -1, -1):
        quots[j] = acc
        acc = rows[j] + t_poly * acc
    terms: dict[tuple[int, int], complex] = {}
    for j, q in enumerate(quots):
        for k, c in enumerate(q.coeffs):
            if c != 0.0:
                terms[(j, k)] = terms.get((j, k), 0.0) + c
    return MultiPoly(2, terms)


def singular_points_implicit(c: PlaneCurve,
                             point_tol: float = POINT_TOL) -> list[SingularPoint]:
    """Singular points of a curve from its form alone: common zeros of the two
    affine partials (resultant elimination plus Gauss-Newton), restricted to
    the curve.  Points at infinity are caught by checking z = 0 separately.
    Non-nodal singular points (degenerate Hessian) raise."""
    g = c.form.dehomogenize()
    gx, gy = g.diff(0), g.diff(1)
    if gx.is_zero() or gy.is_zero():
        raise UnsupportedInputError("curve has constant partials")
    found: list[tuple[ProjectivePoint, complex, complex]] = []

    def consider(x0: complex, y0: complex) -> None:
        x1, y1 = x0, y0
        for _ in range(16):
            F = np.array([gx((x1, y1)), gy((x1, y1))])
            if np.linalg.norm(F) < 1e-14 * max(gx.norm(), gy.norm()):
                break
            J = np.array([[gx.diff(0)((x1, y1)), gx.diff(1)((x1, y1))],
                          [gy.diff(0)((x1, y1)), gy.diff(1)((x1, y1))]])
            try:
                step = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                return
            x1, y1 = x1 + step[0], y1 + step[1]
        resid = max(abs(gx((x1, y1))), abs(gy((x1, y1))))
        if resid > 1e-8 * max(gx.norm(), gy.norm()):
            return
        if abs(g((x1, y1))) > 1e-8 * g.norm() * max(1.0, abs(x1), abs(y1)) ** g.degree:
            return
        p = ProjectivePoint([x1, y1, 1.0])
        if not any(p.equal(q, 1e-6) for q, _, _ in found):
            found.append((p, x1, y1))

    try:
        res = resultant_wrt_last(gx, gy)
    except DegenerateInputError:
        res = None
    if res is not None and res.degree >= 1:
        for x0, _ in uni_roots(res):
            sliced = gx.set_var(0, x0) if not gx.set_var(0, x0).is_zero() \
                else gy.set_var(0, x0)
            u = UniPoly([sliced.terms.get((k,), 0.0)
                         for k in range(max((e[0] for e in sliced.terms),
                                            default=0) + 1)])
            if u.degree < 1:
                continue
            for y0, _ in uni_roots(u):
                consider(x0, y0)

    out: list[SingularPoint] = []
    for p, x1, y1 in found:
        hess = np.array([[gx.diff(0)((x1, y1)), gx.diff(1)((x1, y1))],
                         [gy.diff(0)((x1, y1)), gy.diff(1)((x1, y1))]])
        if abs(np.linalg.det(hess)) <= 1e-8 * max(np.linalg.norm(hess), 1.0) ** 2:
            raise UnsupportedInputError(
                "degenerate (non-nodal) singular point found")
        out.append(SingularPoint(location=p, delta=1, kind="node"))
    return out


def _diagonal(M: MultiPoly) -> UniPoly:
    """Restrict a bivariate polynomial to the diagonal s = t."""
    dmax = max((e[0] + e[1] for e in M.terms), default=0)
    coeffs = [0.0 + 0.0j] * (dmax + 1)
    for (es, et), c in M.terms.items():
        coeffs[es + et] += c
    return UniPoly(coeffs)


def nodes_of_rational_curve(c: PlaneCurve,
                            point_tol: float = POINT_TOL) -> list[SingularPoint]:
    """Double points of a parameterized curve: parameter pairs s != t with the
    same image, from the divided differences of the pairwise 2x2 minors.

    A general rational nodal curve of degree d has binom(d-1, 2) of these.
    A common zero of the three diagonal Wronskians means the parameterization
    is not an immersion (a cusp), which is out of scope and raises.
    """
    if c.param is None:
        raise UnsupportedInputError("node search needs a parameterization")
    if c.degree < 3:
        return []
    comps = list(c.param)
    divided = []
    for (i, j) in ((0, 1), (0, 2), (1, 2)):
        M = _unipoly_in(0, comps[i]) * _unipoly_in(1, comps[j]) \
            - _unipoly_in(0, comps[j]) * _unipoly_in(1, comps[i])
        divided.append(_divide_diagonal(M))
    d1, d2, d3 = divided

    wrons = [_diagonal(d) for d in divided]
    lead = max(wrons, key=lambda w: w.degree)
    if lead.degree < 1:
        raise UnsupportedInputError("degenerate parameterization")
    for rho, _ in uni_roots(lead):
        if all(abs(w(rho)) <= 1e-7 * max(w.norm(), 1.0) for w in wrons):
            raise UnsupportedInputError(
                "parameterization has a cusp: non-nodal singularity")

    res = resultant_wrt_last(d1, d2)
    if res.is_zero() or res.degree < 1:
        raise UnsupportedInputError("degenerate divided-difference system")

    derivs = [p.deriv() for p in comps]

    def polish(sv: complex, tv: complex) -> tuple[complex, complex, float]:
        for _ in range(16):
            Ps = np.array([p(sv) for p in comps])
            Pt = np.array([p(tv) for p in comps])
            F = np.cross(Ps, Pt)
            scale = np.linalg.norm(Ps) * np.linalg.norm(Pt)
            if np.linalg.norm(F) < 1e-14 * scale:
                break
            dPs = np.array([p(sv) for p in derivs])
            dPt = np.array([p(tv) for p in derivs])
            J = np.stack([np.cross(dPs, Pt), np.cross(Ps, dPt)], axis=1)
            step, *_ = np.linalg.lstsq(J, -F, rcond=None)
            sv, tv = sv + step[0], tv + step[1]
        Ps = np.array([p(sv) for p in comps])
        Pt = np.array([p(tv) for p in comps])
        resid = float(np.linalg.norm(np.cross(Ps, Pt))
                      / (np.linalg.norm(Ps) * np.linalg.norm(Pt)))
        return sv, tv, resid

    seen_pairs: list[tuple[complex, complex]] = []
    for s_val, _ in uni_roots(res):
        sliced = d1.set_var(0, s_val)
        u1 = UniPoly([sliced.terms.get((k,), 0.0)
                      for k in range(max((e[0] for e in sliced.terms),
                                         default=0) + 1)])
        if u1.degree < 1:
            continue
        for t_val, _ in uni_roots(u1):
            nrm = max(d2.norm(), d3.norm(), 1.0)
            if abs(d2((s_val, t_val))) > 1e-4 * nrm or \
               abs(d3((s_val, t_val))) > 1e-4 * nrm:
                continue
            sv, tv, resid = polish(s_val, t_val)
            if resid > 1e-9 or abs(sv - tv) <= 1e-6:
                continue
            if any((abs(sv - a) <= 1e-6 and abs(tv - b) <= 1e-6)
                   or (abs(sv - b) <= 1e-6 and abs(tv - a) <= 1e-6)
                   for a, b in seen_pairs):
                continue
            seen_pairs.append((sv, tv))
    nodes: list[SingularPoint] = []
    for s_val, t_val in seen_pairs:
        loc = c.point_at(s_val)
        if not any(n.location.equal(loc, 1e-6) for n in nodes):
            nodes.append(SingularPoint(location=loc, delta=1, kind="node"))
    return nodes
