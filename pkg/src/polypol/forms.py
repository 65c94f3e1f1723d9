"""Canonical rational differential forms: interval forms on the line, the
vertex-residue-normalized 2-form of a quasi-regular polypol, restrictions
to sides, pencil and additivity constructions, and the one-dimensional
push-forward identity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import MultiPoly, UniPoly, jacobian2, monomials_up_to, uni_roots
from .curves import PlaneCurve, intersect
from .errors import DegenerateInputError, PolypolError, UnsupportedInputError
from .polypols import Polypol

ROOT_MATCH_TOL = 1e-7
RESIDUE_TOL = 1e-8
CHART_RETRIES = 32


# ----------------------------------------------------------------------
# rational 1-forms


@dataclass(frozen=True)
class Form1D:
    """Rational 1-form g(t) dt with g = numerator / denominator.

    The orientation sign records the traversal direction relative to
    increasing t; it does not enter the values of g.
    """

    numerator: UniPoly
    denominator: UniPoly
    orientation: int = 1

    def __call__(self, t: complex) -> complex:
        return self.numerator(t) / self.denominator(t)

    def is_zero(self) -> bool:
        return self.numerator.is_zero()

    def poles(self) -> list[complex]:
        if self.denominator.degree < 1:
            return []
        return [r for r, _ in uni_roots(self.denominator)]

    def residue_at(self, t0: complex) -> complex:
        """Residue at a simple pole t0 of the reduced form."""
        dd = self.denominator.deriv()
        val = dd(t0)
        if abs(val) <= 1e-12 * max(self.denominator.norm(), 1.0):
            raise PolypolError("pole is not simple; residue undefined")
        return self.numerator(t0) / val

    def __neg__(self) -> "Form1D":
        return Form1D(-self.numerator, self.denominator, self.orientation)

    def __add__(self, other: "Form1D") -> "Form1D":
        num = (self.numerator * other.denominator
               + other.numerator * self.denominator)
        den = self.denominator * other.denominator
        num, den = _reduce_1d(num, den)
        return Form1D(num, den, self.orientation)

    def matches(self, other: "Form1D", tol: float = 1e-8,
                samples: int = 17) -> bool:
        """Value agreement on a pole-avoiding complex sample circle."""
        ts = 1.37 * np.exp(2j * np.pi * (np.arange(samples) + 0.31) / samples)
        ref = max(np.max(np.abs([self(t) for t in ts])),
                  np.max(np.abs([other(t) for t in ts])), 1e-30)
        diff = np.max(np.abs([self(t) - other(t) for t in ts]))
        return bool(diff <= tol * ref)


def _reduce_1d(num: UniPoly, den: UniPoly,
               tol: float = ROOT_MATCH_TOL) -> tuple[UniPoly, UniPoly]:
    """Cancel matched root clusters of numerator and denominator."""
    if den.is_zero():
        raise DegenerateInputError("zero denominator in a 1-form")
    if num.is_zero():
        return UniPoly([0.0]), UniPoly([1.0])
    nroots: list[complex] = []
    for r, m in uni_roots(num):
        nroots.extend([r] * m)
    droots: list[complex] = []
    for r, m in uni_roots(den):
        droots.extend([r] * m)
    keep_d = []
    for r in droots:
        hit = next((j for j, q in enumerate(nroots)
                    if abs(q - r) <= tol * max(1.0, abs(r))), None)
        if hit is None:
            keep_d.append(r)
        else:
            del nroots[hit]
    lead_n = num.coeffs[-1]
    lead_d = den.coeffs[-1]
    return (UniPoly.from_roots(nroots, lead_n),
            UniPoly.from_roots(keep_d, lead_d))


def interval_form(a: float, b: float) -> Form1D:
    """Canonical form of the segment from a to b on the affine line,
    (b-a)/((t-a)(b-t)) dt, with residue +1 at a and -1 at b."""
    if a == b:
        raise DegenerateInputError("interval endpoints coincide")
    num = UniPoly([b - a])
    den = UniPoly([-a * b, a + b, -1.0])
    return Form1D(num, den, 1 if b > a else -1)


# ----------------------------------------------------------------------
# rational 2-forms


@dataclass(frozen=True)
class CanonicalForm2D:
    """Normalized 2-form scale * numerator / (factors[0] ... factors[k-1])
    dx dy in the affine chart sending the third row of `chart` to infinity.

    residue_table[m] is the double residue at vertex m, taken first along
    the side that ends there; entry 0 is -1 by normalization and every
    entry is +1 or -1.
    """

    numerator: MultiPoly
    factors: tuple[MultiPoly, ...]
    scale: complex
    residue_table: dict[int, float]
    vertices: tuple[tuple[float, float], ...]
    chart: np.ndarray

    def __call__(self, xy) -> complex:
        den = 1.0 + 0.0j
        for f in self.factors:
            den *= f(xy)
        return self.scale * self.numerator(xy) / den


@dataclass(frozen=True)
class Form2D:
    """Plain rational 2-form numerator / (factors...) dx dy; sums and
    differences of canonical forms live here, with no residue contract."""

    numerator: MultiPoly
    factors: tuple[MultiPoly, ...]
    chart: np.ndarray

    def __call__(self, xy) -> complex:
        den = 1.0 + 0.0j
        for f in self.factors:
            den *= f(xy)
        return self.numerator(xy) / den

    def is_zero(self) -> bool:
        return self.numerator.is_zero()

    def __neg__(self) -> "Form2D":
        return Form2D(self.numerator * (-1.0), self.factors, self.chart)


def _as_form2d(f) -> Form2D:
    if isinstance(f, Form2D):
        return f
    if isinstance(f, CanonicalForm2D):
        return Form2D(f.numerator * f.scale, f.factors, f.chart)
    raise UnsupportedInputError("expected a 2-form")


# ----------------------------------------------------------------------
# chart handling


def _chart_matrix(line) -> np.ndarray:
    """Real change of coordinates u = M (x, y, z) whose last coordinate
    vanishes exactly on the given line."""
    n = np.asarray(line, dtype=float)
    if n.shape != (3,) or not np.any(n):
        raise DegenerateInputError("chart line needs three real coefficients")
    n = n / np.linalg.norm(n)
    # complete the normal to an orthonormal basis
    _, _, vt = np.linalg.svd(n.reshape(1, 3))
    return np.vstack([vt[1], vt[2], n])


def _vertex_on_line(p: Polypol, line: np.ndarray) -> bool:
    n = np.asarray(line, dtype=float)
    for v in p.vertices:
        c = v.coords
        if abs(n @ c) <= 1e-7 * np.linalg.norm(n) * np.linalg.norm(c):
            return True
    return False


def _pick_chart(p: Polypol, chart, seed: int = 0) -> np.ndarray:
    if chart is not None:
        line = np.asarray(chart, dtype=float)
        if _vertex_on_line(p, line):
            raise DegenerateInputError("chart line passes through a vertex")
        if np.allclose(line / np.linalg.norm(line), (0.0, 0.0, 1.0)):
            return np.eye(3)
        return _chart_matrix(line)
    if not _vertex_on_line(p, np.array([0.0, 0.0, 1.0])):
        return np.eye(3)
    rng = np.random.default_rng(seed)
    for _ in range(CHART_RETRIES):
        line = rng.normal(size=3)
        if not _vertex_on_line(p, line):
            return _chart_matrix(line)
    raise DegenerateInputError("no admissible chart line found")


def _transform_affine(form3: MultiPoly, M: np.ndarray) -> MultiPoly:
    """Dehomogenized form in the chart coordinates u = M (x, y, z)."""
    moved = form3.substitute_linear(np.linalg.inv(M))
    return moved.dehomogenize()


def _transform_vertex(v, M: np.ndarray) -> tuple[float, float]:
    c = M @ v.coords
    if abs(c[2]) <= 1e-12 * np.linalg.norm(c):
        raise DegenerateInputError("vertex lands at infinity in this chart")
    return (float((c[0] / c[2]).real), float((c[1] / c[2]).real))


# ----------------------------------------------------------------------
# the canonical 2-form of a polypol


def _vertex_residue_constant(alpha: MultiPoly, factors, verts, m: int,
                             k: int) -> complex:
    """Double residue of alpha/(f_1...f_k) at vertex m, first taken along
    the side that ends there."""
    i, j = m, (m + 1) % k
    v = verts[m]
    others = 1.0 + 0.0j
    for idx in range(k):
        if idx in (i, j):
            continue
        others *= factors[idx](v)
    jac = jacobian2(factors[i], factors[j])(v)
    den = others * jac
    scale_ref = abs(alpha(v)) + sum(abs(f(v)) for f in factors) + abs(jac)
    if abs(den) <= 1e-13 * max(scale_ref, 1.0):
        raise PolypolError(
            f"vertex {m + 1} residue is singular; curves may be tangent "
            "or the chart is inadmissible")
    return -alpha(v) / den


def canonical_form(p: Polypol, adj, chart=None, seed: int = 0
                   ) -> CanonicalForm2D:
    """The 2-form scale * alpha / (f_1...f_k) dx dy whose residue at the
    last vertex of the first side is -1; quasi-regularity makes every
    vertex residue come out as +1 or -1."""
    if adj.nullspace_dim != 1:
        raise DegenerateInputError(
            "adjoint is not unique; the form cannot be normalized")
    if p.sides is not None:
        from .polypols import classify_regularity

        reg = classify_regularity(p)
        if not reg.quasi_regular:
            raise DegenerateInputError(
                "canonical form needs a quasi-regular polypol: "
                + "; ".join(reg.witnesses))
    M = _pick_chart(p, chart, seed=seed)
    factors = tuple(_transform_affine(c.form.real_part(), M)
                    for c in p.curves)
    alpha = _transform_affine(adj.alpha, M)
    verts = tuple(_transform_vertex(v, M) for v in p.vertices)

    consts = [_vertex_residue_constant(alpha, factors, verts, m, p.k)
              for m in range(p.k)]
    scale = -1.0 / consts[0]
    table: dict[int, float] = {}
    for m, c in enumerate(consts):
        res = scale * c
        if abs(res.imag) > RESIDUE_TOL or abs(abs(res.real) - 1.0) > RESIDUE_TOL:
            raise PolypolError(
                f"residue {res:.6g} at vertex {m + 1} is not a sign; "
                "the input is not a coherently oriented quasi-regular polypol")
        table[m] = float(np.sign(res.real))
    return CanonicalForm2D(numerator=alpha, factors=factors, scale=scale,
                           residue_table=table, vertices=verts, chart=M)


# ----------------------------------------------------------------------
# restriction to a side


def _compose_rational(g: MultiPoly, R: UniPoly, S: UniPoly,
                      H: UniPoly) -> tuple[UniPoly, int]:
    """g(R/H, S/H) cleared of denominators: returns (numerator, D) with
    g(R/H, S/H) = numerator / H^D and D the affine degree of g."""
    D = max(g.degree, 0)
    out = UniPoly([0.0])
    for exps, c in g.terms.items():
        a, b = exps
        piece = UniPoly([c])
        for _ in range(a):
            piece = piece * R
        for _ in range(b):
            piece = piece * S
        for _ in range(D - a - b):
            piece = piece * H
        out = out + piece
    return out, D


def restrict_to_side(f: CanonicalForm2D, p: Polypol, i: int) -> Form1D:
    """Residue 1-form of the canonical form along side i, reduced by root
    matching; equals the interval form of the side's parameter segment."""
    if p.sides is None:
        raise UnsupportedInputError("polypol was built without sides")
    side = p.sides[i]
    curve = p.curves[i]
    if curve.param is None:
        raise UnsupportedInputError("side curve has no parameterization")
    r, s, h = curve.param
    M = f.chart

    def combo(row: np.ndarray) -> UniPoly:
        return r * row[0] + s * row[1] + h * row[2]

    R, S, H = combo(M[0]), combo(M[1]), combo(M[2])

    num_a, deg_a = _compose_rational(f.numerator, R, S, H)
    dens: list[tuple[UniPoly, int]] = []
    for j in range(p.k):
        if j == i:
            continue
        dens.append(_compose_rational(f.factors[j], R, S, H))

    # residue along f_i: alpha x'(t) / (prod_j f_j * df_i/dy), or the
    # mirrored version when the y-partial degenerates along the side
    fx = f.factors[i].diff(0)
    fy = f.factors[i].diff(1)
    gy, dgy = _compose_rational(fy, R, S, H) if not fy.is_zero() else (
        UniPoly([0.0]), 0)
    gx, dgx = _compose_rational(fx, R, S, H) if not fx.is_zero() else (
        UniPoly([0.0]), 0)
    use_y = gy.norm() >= gx.norm()
    if use_y:
        partial, dpartial = gy, dgy
        coord_num = R.deriv() * H - R * H.deriv()
        sign = 1.0
    else:
        partial, dpartial = gx, dgx
        coord_num = S.deriv() * H - S * H.deriv()
        sign = -1.0
    if partial.is_zero():
        raise DegenerateInputError("side curve has a constant gradient of zero")

    num = num_a * coord_num * (sign * f.scale)
    den = partial
    for piece, _ in dens:
        den = den * piece
    # clear the parameterization denominator exactly
    net = sum(d for _, d in dens) + dpartial - deg_a - 2
    for _ in range(max(net, 0)):
        num = num * H
    for _ in range(max(-net, 0)):
        den = den * H

    rnum, rden = _reduce_1d(num, den)
    a, b = side.a, side.b
    start, end = (a, b) if side.orientation > 0 else (b, a)
    expected = sorted([start, end])
    got = sorted(x.real for x, _ in uni_roots(rden)) if rden.degree > 0 else []
    ok = (rnum.degree == 0 and rden.degree == 2 and len(got) == 2
          and all(abs(g - e) <= 1e-6 * max(1.0, abs(e))
                  for g, e in zip(got, expected)))
    if not ok:
        raise PolypolError(
            f"restriction to side {i + 1} keeps an uncancelled spurious "
            "pole; the polypol or its adjoint is inconsistent")
    return Form1D(rnum, rden, side.orientation)


# ----------------------------------------------------------------------
# the two-conic pencil construction


def _line_through(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.cross(p, q)


def pencil_form(c1: PlaneCurve, c2: PlaneCurve) -> CanonicalForm2D:
    """Canonical form of the four-sided region cut out by two conics
    meeting in four real points; the numerator is the unique line lying
    in both pencils spanned by opposite vertex-pair lines."""
    for c in (c1, c2):
        if c.degree != 2:
            raise DegenerateInputError("pencil form needs two conics")
        if not c.is_real:
            raise DegenerateInputError("pencil form needs real conics")
    pts = intersect(c1, c2)
    if any(m > 1 for _, m in pts):
        raise DegenerateInputError("conics are tangent")
    if len(pts) != 4 or any(not q.is_real() for q, _ in pts):
        raise DegenerateInputError("conics do not meet in four real points")
    aff = []
    for q, _ in pts:
        x, y = q.affine()
        aff.append((complex(x).real, complex(y).real))
    aff = np.array(aff)
    center = aff.mean(axis=0)
    order = np.argsort(np.arctan2(aff[:, 1] - center[1],
                                  aff[:, 0] - center[0]))
    verts = [np.array([aff[j][0], aff[j][1], 1.0]) for j in order]

    l01 = _line_through(verts[0], verts[1])
    l12 = _line_through(verts[1], verts[2])
    l23 = _line_through(verts[2], verts[3])
    l30 = _line_through(verts[3], verts[0])
    r1 = np.cross(l01, l23)
    r2 = np.cross(l12, l30)
    line = np.cross(r1, r2)
    # same line from the other pencil: the member of (l01, l23) through r2
    other = l01 * (l23 @ r2) - l23 * (l01 @ r2)
    cosang = abs(line @ other) / (np.linalg.norm(line) * np.linalg.norm(other))
    if cosang < 1.0 - 1e-9:
        raise PolypolError("the two pencil constructions disagree")
    line = line / np.linalg.norm(line)

    numerator = MultiPoly(2, {(1, 0): line[0], (0, 1): line[1],
                              (0, 0): line[2]})
    factors = (c1.form.real_part().dehomogenize(),
               c2.form.real_part().dehomogenize())
    consts = []
    jac = jacobian2(factors[0], factors[1])
    for m in range(4):
        v = (verts[m][0], verts[m][1])
        parity = 1.0 if m % 2 == 0 else -1.0
        consts.append(-numerator(v) / (parity * jac(v)))
    scale = -1.0 / consts[0]
    table: dict[int, float] = {}
    for m, c in enumerate(consts):
        res = scale * c
        if abs(res.imag) > RESIDUE_TOL or abs(abs(res.real) - 1.0) > RESIDUE_TOL:
            raise PolypolError(
                f"residue {res:.6g} at quadrangle vertex {m + 1} is not a sign")
        table[m] = float(np.sign(res.real))
    return CanonicalForm2D(
        numerator=numerator, factors=factors, scale=scale,
        residue_table=table,
        vertices=tuple((float(v[0]), float(v[1])) for v in verts),
        chart=np.eye(3))


# ----------------------------------------------------------------------
# sums of 2-forms


def _proportional_ratio(f: MultiPoly, g: MultiPoly,
                        tol: float = 1e-9) -> complex | None:
    """c with g = c * f, or None."""
    monos = sorted(set(f.terms) | set(g.terms))
    vf = f.coeff_vector(monos)
    vg = g.coeff_vector(monos)
    i = int(np.argmax(np.abs(vf)))
    if abs(vf[i]) == 0.0:
        return None
    c = vg[i] / vf[i]
    if np.max(np.abs(vg - c * vf)) <= tol * max(np.max(np.abs(vg)), 1e-30):
        return c
    return None


def _divide_out(num: MultiPoly, factor: MultiPoly) -> MultiPoly | None:
    """num / factor if the division is exact (checked in coefficients)."""
    if num.is_zero():
        return num
    qdeg = num.degree - factor.degree
    if qdeg < 0:
        return None
    qmonos = monomials_up_to(2, qdeg)
    nmonos = monomials_up_to(2, num.degree)
    cols = []
    for e in qmonos:
        cols.append((MultiPoly(2, {e: 1.0}) * factor).coeff_vector(nmonos))
    A = np.array(cols).T
    b = num.coeff_vector(nmonos)
    q, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.max(np.abs(A @ q - b)) > 1e-10 * max(np.max(np.abs(b)), 1e-30):
        return None
    return MultiPoly(2, dict(zip(qmonos, q)))


def form_sum(f, g) -> Form2D:
    """Sum over the common denominator, with shared boundary factors
    merged and factors dividing the summed numerator cancelled."""
    F, G = _as_form2d(f), _as_form2d(g)
    if not np.allclose(F.chart, G.chart):
        raise DegenerateInputError("forms live in different charts")

    g_left = list(G.factors)
    shared: list[MultiPoly] = []
    ratio = 1.0 + 0.0j
    f_only: list[MultiPoly] = []
    for phi in F.factors:
        hit = None
        for j, psi in enumerate(g_left):
            c = _proportional_ratio(phi, psi)
            if c is not None:
                hit = j
                ratio *= c
                break
        if hit is None:
            f_only.append(phi)
        else:
            shared.append(phi)
            del g_left[hit]
    g_only = g_left

    def product(polys) -> MultiPoly:
        out = MultiPoly.constant(2, 1.0)
        for q in polys:
            out = out * q
        return out

    num = (F.numerator * product(g_only)
           + G.numerator * product(f_only) * (1.0 / ratio))
    den_factors = shared + f_only + g_only
    scale_ref = max(F.numerator.norm() * max(product(g_only).norm(), 1.0),
                    G.numerator.norm() * max(product(f_only).norm(), 1.0),
                    1e-30)
    if num.norm() <= 1e-11 * scale_ref:
        return Form2D(MultiPoly.zero(2), (), F.chart)

    reduced = True
    while reduced and den_factors:
        reduced = False
        for j, phi in enumerate(den_factors):
            q = _divide_out(num, phi)
            if q is not None:
                num = q
                del den_factors[j]
                reduced = True
                break
    return Form2D(num, tuple(den_factors), F.chart)


# ----------------------------------------------------------------------
# one-dimensional push-forward


@dataclass(frozen=True)
class PushforwardReport:
    form: Form1D
    max_deviation: float
    samples: int


def pushforward_1d(phi: UniPoly, a: float, b: float, samples: int = 50,
                   rng_seed: int = 11) -> PushforwardReport:
    """Push the interval form of [a, b] through the polynomial map phi by
    summing residues over all preimages of sampled target values, then fit
    the samples to a rational function of interval-form shape.

    The report's deviation compares the residue sums against the interval
    form of [phi(a), phi(b)] at the sampled values.
    """
    if phi.degree < 1:
        raise DegenerateInputError("push-forward needs a non-constant map")
    if a == b:
        raise DegenerateInputError("interval endpoints coincide")
    A = complex(phi(a)).real
    B = complex(phi(b)).real
    if abs(A - B) <= 1e-12 * max(abs(A), abs(B), 1.0):
        raise DegenerateInputError("interval collapses under the map")
    lo, hi = sorted((A, B))
    ts = np.linspace(a, b, 512)
    vals = np.array([complex(phi(t)).real for t in ts])
    slack = 1e-9 * (hi - lo)
    if vals.min() < lo - slack or vals.max() > hi + slack:
        raise DegenerateInputError(
            "the image of the interval is larger than the segment between "
            "the endpoint images")

    dphi = phi.deriv()
    lhs = interval_form(A, B)
    rng = np.random.default_rng(rng_seed)
    ys: list[float] = []
    ws: list[complex] = []
    attempts = 0
    while len(ys) < samples and attempts < 20 * samples:
        attempts += 1
        y = float(rng.uniform(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo)))
        shifted = phi - UniPoly([y])
        roots = uni_roots(shifted)
        if any(m > 1 for _, m in roots):
            continue
        if any(abs(dphi(x)) <= 1e-8 * max(dphi.norm(), 1.0)
               for x, _ in roots):
            continue
        w = 0.0 + 0.0j
        for x, _ in roots:
            w += (b - a) / ((x - a) * (b - x)) / dphi(x)
        ys.append(y)
        ws.append(w)
    if len(ys) < samples:
        raise DegenerateInputError("could not sample enough regular values")

    dev = 0.0
    for y, w in zip(ys, ws):
        ref = lhs(y)
        dev = max(dev, abs(w - ref) / max(1.0, abs(ref)))

    # interval-form shape: constant numerator over a quadratic denominator
    rows = []
    for y, w in zip(ys, ws):
        rows.append([1.0, -w, -w * y, -w * y * y])
    _, _, vt = np.linalg.svd(np.array(rows))
    p0, q0, q1, q2 = vt[-1]
    form = Form1D(UniPoly([p0]), UniPoly([q0, q1, q2]),
                  1 if B > A else -1)
    return PushforwardReport(form=form, max_deviation=float(dev),
                             samples=len(ys))
