"""Fiber systems of the adjoint map: square polynomial systems whose unknowns
are the boundary curves, vertices and residual points of a polypol with a
prescribed adjoint, plus Newton/SVD certification of isolated solutions and
monodromy loops in adjoint-coefficient space for finding further fibers."""

from __future__ import annotations

import itertools
import math
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .adjoint import adjoint
from .algebra import MultiPoly, grlex_monomials, monomials_up_to, nullspace
from .curves import (PlaneCurve, ProjectivePoint, intersect,
                     parameterize_conic, singular_points_implicit)
from .errors import DegenerateInputError, PolypolError, UnsupportedInputError
from .polypols import Polypol

CERT_RESIDUAL_TOL = 1e-10   # relative residual for a regular-isolated verdict
CERT_SV_RATIO = 1e-6        # smallest/largest singular value cutoff
CERT_CONTRACTION = 0.25     # Newton step-ratio cutoff over three steps
DEDUP_TOL = 1e-4            # canonical-state distance below which states merge
TRACK_TOL = 1e-9            # corrector convergence target while tracking
MIN_STEP = 1e-12            # tracking step underflow: give up, report partial

QUAD_SIGNATURES = ((2, 2, 2, 2), (1, 2, 2, 3), (1, 2, 3, 2), (1, 1, 3, 3),
                   (1, 1, 2, 4), (1, 2, 1, 4), (1, 1, 1, 5), (1, 3, 1, 3))
HEPTAGON = (1, 1, 1, 1, 1, 1, 1)
QUARTIC_MONOS = tuple(monomials_up_to(2, 4))


def _necklace(signature: tuple[int, ...]) -> tuple[int, ...]:
    """Least rotation of the tuple or its reversal: label-free signature."""
    ring = list(signature)
    images = [tuple(ring[i:] + ring[:i]) for i in range(len(ring))]
    ring.reverse()
    images += [tuple(ring[i:] + ring[:i]) for i in range(len(ring))]
    return min(images)


_SUPPORTED = {_necklace(s) for s in QUAD_SIGNATURES}


# ----------------------------------------------------------------------
# unknown layout


@dataclass(frozen=True)
class Block:
    """One unknown of the system: a projective point or a curve coefficient
    vector, stored without its pinned chart coordinate.

    ``name`` is ("curve", i), ("vertex", i), ("res", i, j, m), ("node", i, m)
    or ("scale",); ``chart`` is the pinned index (None for affine blocks)."""

    name: tuple
    length: int
    chart: int | None
    offset: int

    @property
    def free(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.length) if i != self.chart)

    @property
    def nfree(self) -> int:
        return self.length - (0 if self.chart is None else 1)


def _consecutive(i: int, j: int, k: int) -> bool:
    return j - i == 1 or (i == 0 and j == k - 1)


class FiberSystem:
    """A square polynomial system in the curves, vertices and residual points
    of a polypol type, parameterized by the coefficients of the adjoint.

    Two kinds exist: incidence systems for the four-sided types, where the
    equations say each residual point lies on its two curves (or is a node)
    and the adjoint vanishes there, and the heptagon system, which equates
    the dual-polygon adjoint of seven vertices with a multiple of a target
    quartic.  ``residual`` and ``jacobian`` share one calling convention:
    a packed complex unknown vector plus a parameter vector."""

    def __init__(self, signature, blocks, equations, kind, adjoint_degree,
                 param_monos):
        self.signature = tuple(signature)
        self.blocks = list(blocks)
        self.index = {b.name: b for b in self.blocks}
        self.equations = list(equations)
        self.kind = kind
        self.adjoint_degree = adjoint_degree
        self.param_monos = list(param_monos)
        self.n_unknowns = sum(b.nfree for b in self.blocks)
        self.k = len(self.signature)
        self._curve_monos = [np.array(grlex_monomials(3, d), dtype=int)
                             for d in self.signature]
        self._adjoint_monos = np.array(grlex_monomials(3, adjoint_degree),
                                       dtype=int) if kind == "incidence" else None

    @property
    def n_equations(self) -> int:
        if self.kind == "dual-adjoint":
            return len(QUARTIC_MONOS)
        return len(self.equations)

    @property
    def n_params(self) -> int:
        return len(self.param_monos)

    def residual_groups(self) -> list[list[tuple]]:
        """Block names of the permutable residual points, one list per group
        (pairwise intersection groups, then each curve's nodes)."""
        groups: dict[tuple, list[tuple]] = {}
        for b in self.blocks:
            if b.name[0] == "res":
                groups.setdefault(b.name[:3], []).append(b.name)
            elif b.name[0] == "node":
                groups.setdefault(b.name[:2], []).append(b.name)
        return [groups[key] for key in sorted(groups)]

    # ------------------------------------------------------------------
    # packing

    def embed(self, u: np.ndarray) -> dict[tuple, np.ndarray]:
        """Full coordinate vectors per block, chart coordinate restored."""
        u = np.asarray(u, dtype=complex)
        if u.shape != (self.n_unknowns,):
            raise DegenerateInputError(
                f"unknown vector has length {u.size}, expected {self.n_unknowns}")
        out: dict[tuple, np.ndarray] = {}
        for b in self.blocks:
            v = np.empty(b.length, dtype=complex)
            if b.chart is not None:
                v[b.chart] = 1.0
            v[list(b.free)] = u[b.offset:b.offset + b.nfree]
            out[b.name] = v
        return out

    def pack(self, values: dict[tuple, np.ndarray]) -> np.ndarray:
        """Inverse of ``embed``: rescale each block so its chart coordinate
        is 1 and drop it."""
        u = np.empty(self.n_unknowns, dtype=complex)
        for b in self.blocks:
            v = np.asarray(values[b.name], dtype=complex)
            if b.chart is not None:
                if abs(v[b.chart]) < 1e-12 * np.max(np.abs(v)):
                    raise DegenerateInputError(
                        f"block {b.name} vanishes at its chart coordinate")
                v = v / v[b.chart]
            u[b.offset:b.offset + b.nfree] = v[list(b.free)]
        return u

    # ------------------------------------------------------------------
    # evaluation

    def residual(self, u, params) -> tuple[np.ndarray, np.ndarray]:
        """Equation values and their natural scales (sums of term moduli)."""
        params = np.asarray(params, dtype=complex)
        if self.kind == "dual-adjoint":
            return self._dual_residual(u, params)
        vals = self.embed(u)
        F = np.empty(self.n_equations, dtype=complex)
        S = np.empty(self.n_equations)
        for row, eq in enumerate(self.equations):
            F[row], S[row] = self._eval_equation(eq, vals, params)
        return F, S

    def jacobian(self, u, params) -> np.ndarray:
        params = np.asarray(params, dtype=complex)
        if self.kind == "dual-adjoint":
            return self._dual_jacobian(u, params)
        vals = self.embed(u)
        J = np.zeros((self.n_equations, self.n_unknowns), dtype=complex)
        for row, eq in enumerate(self.equations):
            for bname, grad in self._grad_equation(eq, vals, params):
                b = self.index[bname]
                J[row, b.offset:b.offset + b.nfree] += grad[list(b.free)]
        return J

    def relative_residual(self, u, params) -> float:
        F, S = self.residual(u, params)
        floor = max(1e-14 * float(np.max(S, initial=0.0)), 1e-300)
        return float(np.max(np.abs(F) / np.maximum(S, floor)))

    def scaled(self, u, params) -> tuple[np.ndarray, np.ndarray, float]:
        """Equilibrated residual and Jacobian plus the natural relative
        residual (max |F_i| over the equation's own scale).

        Rows are first divided by their natural scales, then by the resulting
        gradient norms.  Newton steps are unchanged in exact arithmetic, but
        solves stop amplifying rounding noise and the singular-value ratio
        becomes a fair conditioning measure; no row scaling can hide a true
        null vector."""
        F, S = self.residual(u, params)
        S = np.maximum(S, max(1e-14 * float(np.max(S, initial=0.0)), 1e-300))
        G = F / S
        rel = float(np.max(np.abs(G)))
        Jg = self.jacobian(u, params) / S[:, None]
        rn = np.linalg.norm(Jg, axis=1)
        rn = np.maximum(rn, 1e-14 * float(np.max(rn, initial=0.0)) + 1e-300)
        return G / rn, Jg / rn[:, None], rel

    def _coeffs_of(self, eq, vals, params):
        """Coefficient vector and exponent array of the polynomial an
        incidence equation evaluates, plus its source block (None for the
        adjoint, whose coefficients are parameters)."""
        if eq[0] == "adjoint":
            return params, self._adjoint_monos, None
        ci = eq[1]
        E = self._curve_monos[ci]
        c = vals[("curve", ci)]
        if eq[0] == "partial":
            ax = eq[3]
            mask = E[:, ax] > 0
            Ed = E[mask].copy()
            Ed[:, ax] -= 1
            return c[mask] * E[mask, ax], Ed, (ci, mask)
        return c, E, (ci, None)

    def _eval_equation(self, eq, vals, params):
        coeffs, E, _ = self._coeffs_of(eq, vals, params)
        pt = vals[eq[2] if eq[0] != "adjoint" else eq[1]]
        monos = np.prod(pt[None, :] ** E, axis=1)
        # Scale floor: structural cancellations (a symmetric instance whose
        # adjoint has no z-free terms, say) can make the term-sum scale
        # collapse even though the equation is honestly satisfied; the
        # generic magnitude for data of this size is the right yardstick.
        deg = int(E.sum(axis=1).max(initial=0))
        floor = float(np.max(np.abs(coeffs), initial=0.0)) \
            * float(max(1.0, np.max(np.abs(pt)))) ** deg
        return coeffs @ monos, max(float(np.abs(coeffs) @ np.abs(monos)), floor)

    def _grad_equation(self, eq, vals, params):
        coeffs, E, source = self._coeffs_of(eq, vals, params)
        pname = eq[2] if eq[0] != "adjoint" else eq[1]
        pt = vals[pname]
        monos = np.prod(pt[None, :] ** E, axis=1)
        grads = [(pname, _point_gradient(coeffs, E, pt))]
        if source is not None:
            ci, mask = source
            full = np.zeros(self._curve_monos[ci].shape[0], dtype=complex)
            if mask is None:
                full[:] = monos
            else:
                full[mask] = monos * self._curve_monos[ci][mask, eq[3]]
            grads.append((("curve", ci), full))
        return grads

    # ------------------------------------------------------------------
    # heptagon: Warren coefficients minus a multiple of the target quartic

    def _dual_state(self, u):
        vals = self.embed(u)
        verts = np.array([vals[("vertex", i)] for i in range(7)])
        return verts, vals[("scale",)][0]

    def _dual_residual(self, u, params):
        verts, lam = self._dual_state(u)
        W = _warren_coeff_vector(verts)
        F = W - lam * params
        scale = max(float(np.max(np.abs(W))),
                    float(abs(lam) * np.max(np.abs(params))), 1e-30)
        return F, np.full(F.size, scale)

    def _dual_jacobian(self, u, params):
        u = np.asarray(u, dtype=complex)
        n = self.n_unknowns
        J = np.empty((self.n_equations, n), dtype=complex)
        for j in range(n):
            h = 1e-6 * (1.0 + abs(u[j]))
            up, um = u.copy(), u.copy()
            up[j] += h
            um[j] -= h
            J[:, j] = (self._dual_residual(up, params)[0]
                       - self._dual_residual(um, params)[0]) / (2.0 * h)
        return J


def _point_gradient(coeffs, E, pt) -> np.ndarray:
    g = np.zeros(3, dtype=complex)
    for ax in range(3):
        mask = E[:, ax] > 0
        if mask.any():
            Ed = E[mask].copy()
            Ed[:, ax] -= 1
            monos = np.prod(pt[None, :] ** Ed, axis=1)
            g[ax] = (coeffs[mask] * E[mask, ax]) @ monos
    return g


def _warren_coeff_vector(verts: np.ndarray) -> np.ndarray:
    """Coefficients (quartic graded-lex) of the dual-polygon adjoint of seven
    vertices, fan triangulation, signed areas; valid for complex vertices."""
    lin = [MultiPoly(2, {(0, 0): 1.0, (1, 0): -v[0], (0, 1): -v[1]})
           for v in verts]
    total = MultiPoly.zero(2)
    for j in range(1, 6):
        a, b, c = verts[0], verts[j], verts[j + 1]
        vol = 0.5 * ((b[0] - a[0]) * (c[1] - a[1])
                     - (b[1] - a[1]) * (c[0] - a[0]))
        term = MultiPoly.constant(2, vol)
        for i in range(7):
            if i not in (0, j, j + 1):
                term = term * lin[i]
        total = total + term
    return total.coeff_vector(QUARTIC_MONOS)


# ----------------------------------------------------------------------
# system construction


def build_fiber_system(signature, charts: dict | None = None) -> FiberSystem:
    """Square fiber system for one of the seven four-sided types, the
    heptagon, or the non-dominant (1, 3, 1, 3) experiment.

    ``charts`` maps block names to pinned coordinate indices; unspecified
    blocks pin their last coordinate (points) or first coefficient (curves).
    """
    signature = tuple(int(d) for d in signature)
    if signature == HEPTAGON:
        return _build_heptagon_system()
    if len(signature) != 4 or _necklace(signature) not in _SUPPORTED:
        raise UnsupportedInputError(
            f"no finite fiber system for boundary degrees {signature}")
    charts = dict(charts or {})
    k = 4
    blocks: list[Block] = []
    offset = 0

    def add(name, length, default_chart):
        nonlocal offset
        chart = charts.get(name, default_chart)
        b = Block(name, length, chart, offset)
        blocks.append(b)
        offset += b.nfree
        return b

    for i, d in enumerate(signature):
        add(("curve", i), len(grlex_monomials(3, d)), 0)
    for i in range(k):
        add(("vertex", i), 3, 2)
    for i, j in itertools.combinations(range(k), 2):
        size = signature[i] * signature[j]
        if _consecutive(i, j, k):
            size -= 1
        for m in range(size):
            add(("res", i, j, m), 3, 2)
    for i, d in enumerate(signature):
        for m in range(math.comb(d - 1, 2)):
            add(("node", i, m), 3, 2)

    equations: list[tuple] = []
    for i in range(k):
        equations.append(("curve", i, ("vertex", i)))
        equations.append(("curve", (i + 1) % k, ("vertex", i)))
    for b in blocks:
        if b.name[0] == "res":
            _, i, j, _ = b.name
            equations.append(("curve", i, b.name))
            equations.append(("curve", j, b.name))
            equations.append(("adjoint", b.name))
        elif b.name[0] == "node":
            _, i, _ = b.name
            for ax in range(3):
                equations.append(("partial", i, b.name, ax))
            equations.append(("adjoint", b.name))

    d = sum(signature)
    system = FiberSystem(signature, blocks, equations, "incidence",
                         d - 3, grlex_monomials(3, d - 3))
    if system.n_equations != system.n_unknowns:
        raise PolypolError(
            f"fiber system for {signature} is not square: "
            f"{system.n_equations} equations, {system.n_unknowns} unknowns")
    return system


def _build_heptagon_system() -> FiberSystem:
    blocks = [Block(("vertex", i), 2, None, 2 * i) for i in range(7)]
    blocks.append(Block(("scale",), 1, None, 14))
    return FiberSystem(HEPTAGON, blocks, [], "dual-adjoint", 4, QUARTIC_MONOS)


# ----------------------------------------------------------------------
# seeding from a polypol


def seed_from_polypol(p: Polypol):
    """Fill a fiber system from an explicit polypol: returns the system built
    with charts taken from the largest seed coordinates, the packed unknown
    vector, and the adjoint coefficient parameters."""
    signature = tuple(p.degrees)
    if signature == HEPTAGON:
        return _seed_heptagon(p)
    if len(signature) != 4 or _necklace(signature) not in _SUPPORTED:
        raise UnsupportedInputError(
            f"no finite fiber system for boundary degrees {signature}")

    values: dict[tuple, np.ndarray] = {}
    charts: dict[tuple, int] = {}

    def put(name, vec):
        vec = np.asarray(vec, dtype=complex)
        charts[name] = int(np.argmax(np.abs(vec)))
        values[name] = vec

    for i, c in enumerate(p.curves):
        monos = grlex_monomials(3, signature[i])
        put(("curve", i), c.form.coeff_vector(monos))
    for i, v in enumerate(p.vertices):
        put(("vertex", i), v.coords)

    for (i, j), pts in _grouped_residuals(p).items():
        for m, q in enumerate(pts):
            put(("res", i, j, m), q.coords)
    for i, nodes in _curve_nodes(p).items():
        for m, q in enumerate(nodes):
            put(("node", i, m), q.coords)

    a = adjoint(p)
    params = a.alpha.coeff_vector(grlex_monomials(3, sum(signature) - 3))
    params = params / params[int(np.argmax(np.abs(params)))]

    system = build_fiber_system(signature, charts)
    u = system.pack(values)
    return system, u, params


def _grouped_residuals(p: Polypol) -> dict[tuple, list[ProjectivePoint]]:
    """Non-vertex pairwise intersection points keyed by curve index pair."""
    k = p.k
    groups: dict[tuple, list[ProjectivePoint]] = {}
    for i, j in itertools.combinations(range(k), 2):
        pairs = intersect(p.curves[i], p.curves[j])
        if any(m > 1 for _, m in pairs):
            raise DegenerateInputError(
                f"curves {i} and {j} meet non-transversally; the residual "
                "points of this polypol do not fill a fiber system")
        pts = [q for q, _ in pairs]
        if _consecutive(i, j, k):
            vertex = p.vertices[i if j == i + 1 else k - 1]
            hits = [m for m, q in enumerate(pts) if q.equal(vertex, 1e-6)]
            if len(hits) != 1:
                raise DegenerateInputError(
                    f"vertex of curves {i} and {j} matches {len(hits)} "
                    "intersection points; group assignment is ambiguous")
            pts.pop(hits[0])
        groups[(i, j)] = sorted(pts, key=_point_sort_key)
    return groups


def _curve_nodes(p: Polypol) -> dict[int, list[ProjectivePoint]]:
    out: dict[int, list[ProjectivePoint]] = {}
    for i, c in enumerate(p.curves):
        expected = math.comb(c.degree - 1, 2)
        if expected == 0:
            continue
        sing = singular_points_implicit(c)
        if len(sing) != expected:
            raise DegenerateInputError(
                f"curve {i} shows {len(sing)} nodes where {expected} were "
                "expected; it is not a general rational curve of its degree")
        out[i] = sorted((s.location for s in sing), key=_point_sort_key)
    return out


def _point_sort_key(q: ProjectivePoint) -> tuple:
    v = q.coords
    return tuple(np.round([v[0].real, v[0].imag, v[1].real, v[1].imag,
                           v[2].real, v[2].imag], 9))


def _seed_heptagon(p: Polypol):
    system = _build_heptagon_system()
    verts = []
    for v in p.vertices:
        x, y = v.affine()
        verts.append([complex(x), complex(y)])
    verts = np.array(verts, dtype=complex)
    params = _warren_coeff_vector(verts)
    top = params[int(np.argmax(np.abs(params)))]
    params = params / top
    u = np.concatenate([verts.reshape(-1), [top]])
    return system, u, params


# ----------------------------------------------------------------------
# certification


@dataclass(frozen=True)
class CertificationResult:
    """Outcome of Newton refinement plus a spectral look at the Jacobian.

    ``verdict`` is "regular-isolated" only when the refined residual, the
    singular-value ratio and the Newton contraction all pass; anything else
    is "inconclusive" (never a claimed negative), with ``note`` saying which
    gate failed."""

    verdict: str
    solution: np.ndarray
    residual: float
    sv_smallest: float
    sv_ratio: float
    contraction: float
    note: str = ""


def certify_regular(system: FiberSystem, seed, params) -> CertificationResult:
    """Refine a seed with three Newton steps and judge regularity from the
    refined residual, the Jacobian SVD and the step contraction."""
    u = np.asarray(seed, dtype=complex).copy()
    params = np.asarray(params, dtype=complex)
    scale0 = 1.0 + float(np.max(np.abs(u)))
    deltas: list[float] = []
    for _ in range(3):
        G, Jg, rel = system.scaled(u, params)
        if rel <= 1e-13:
            # at the attainable floor; any further step is rounding noise
            break
        step = np.linalg.lstsq(Jg, -G, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            return CertificationResult("inconclusive", u, float("inf"),
                                       0.0, 0.0, float("inf"),
                                       "newton step diverged")
        u = u + step
        deltas.append(float(np.linalg.norm(step)))

    noise = 1e-12 * scale0
    ratios = [deltas[m + 1] / deltas[m] for m in range(len(deltas) - 1)
              if deltas[m] > noise]
    contraction = max(ratios, default=0.0)

    _, Jg, rel = system.scaled(u, params)
    sv = np.linalg.svd(Jg, compute_uv=False)
    sv_ratio = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0

    if rel <= CERT_RESIDUAL_TOL and sv_ratio >= CERT_SV_RATIO \
            and contraction <= CERT_CONTRACTION:
        return CertificationResult("regular-isolated", u, rel,
                                   float(sv[-1]), sv_ratio, contraction)
    if rel <= CERT_RESIDUAL_TOL and sv_ratio < CERT_SV_RATIO:
        note = "positive-dimensional fiber suspected"
    elif rel > CERT_RESIDUAL_TOL:
        note = "residual did not reach certification tolerance"
    else:
        note = "newton steps did not contract"
    return CertificationResult("inconclusive", u, rel, float(sv[-1]),
                               sv_ratio, contraction, note)


def solution_adjoint(system: FiberSystem, u) -> np.ndarray:
    """Adjoint coefficients recomputed from a solution's own residual points:
    the nullspace of the vanishing conditions, independent of the parameters
    the solution was tracked with."""
    if system.kind == "dual-adjoint":
        verts, _ = system._dual_state(u)
        vec = _warren_coeff_vector(verts)
        return vec / vec[int(np.argmax(np.abs(vec)))]
    vals = system.embed(u)
    rows = []
    for group in system.residual_groups():
        for name in group:
            pt = vals[name]
            rows.append(np.prod(pt[None, :] ** system._adjoint_monos, axis=1))
    report = nullspace(np.array(rows))
    if report.nullity != 1:
        raise PolypolError(
            f"residual points of the solution impose a rank-deficient "
            f"vanishing system (nullity {report.nullity})")
    vec = report.nullspace[:, 0]
    return vec / vec[int(np.argmax(np.abs(vec)))]


# ----------------------------------------------------------------------
# symmetry-group canonicalization and the solution store


def canonical_state(system: FiberSystem, u) -> np.ndarray:
    """Chart-free flattened state, sorted within each residual group, so two
    unknown vectors describing the same fiber point compare equal."""
    if system.kind == "dual-adjoint":
        return _canonical_heptagon(system, u)
    vals = system.embed(u)
    grouped = {name for g in system.residual_groups() for name in g}
    parts: list[np.ndarray] = []
    for b in system.blocks:
        if b.name in grouped:
            continue
        parts.append(_normalize_vec(vals[b.name]))
    for group in system.residual_groups():
        normed = sorted((_normalize_vec(vals[name]) for name in group),
                        key=lambda v: tuple(np.round(
                            np.concatenate([v.real, v.imag]), 9)))
        parts.extend(normed)
    flat = np.concatenate(parts)
    return np.concatenate([flat.real, flat.imag])


def _normalize_vec(v: np.ndarray) -> np.ndarray:
    return v / v[int(np.argmax(np.abs(v)))]


def _canonical_heptagon(system: FiberSystem, u) -> np.ndarray:
    verts, lam = system._dual_state(np.asarray(u, dtype=complex))
    best = None
    for flip in (1, -1):
        order = verts[::flip]
        for r in range(7):
            cand = np.roll(order, -r, axis=0).reshape(-1)
            key = tuple(np.round(np.concatenate([cand.real, cand.imag]), 9))
            if best is None or key < best[0]:
                best = (key, cand)
    flat = np.concatenate([best[1], [lam]])
    return np.concatenate([flat.real, flat.imag])


def state_distance(system: FiberSystem, u1, u2) -> float:
    s1 = canonical_state(system, u1)
    s2 = canonical_state(system, u2)
    return float(np.max(np.abs(s1 - s2)))


class SolutionStore:
    """Append-only set of fiber points modulo residual-group permutations.

    ``add`` is thread-safe and returns True only for states at canonical
    distance >= DEDUP_TOL from everything already held, so concurrent
    monodromy loops can share one store."""

    def __init__(self, system: FiberSystem):
        self._system = system
        self._states: list[np.ndarray] = []
        self._solutions: list[np.ndarray] = []
        self._lock = threading.Lock()

    def add(self, u) -> bool:
        state = canonical_state(self._system, u)
        with self._lock:
            for s in self._states:
                if float(np.max(np.abs(s - state))) < DEDUP_TOL:
                    return False
            self._states.append(state)
            self._solutions.append(np.asarray(u, dtype=complex).copy())
            return True

    @property
    def solutions(self) -> list[np.ndarray]:
        with self._lock:
            return list(self._solutions)

    def __len__(self) -> int:
        with self._lock:
            return len(self._states)


# ----------------------------------------------------------------------
# monodromy


@dataclass
class MonodromyResult:
    """One loop's outcome.  ``new_solutions`` holds only endpoints that moved
    by >= DEDUP_TOL and re-certified; ``completed`` is False when tracking
    underflowed or the budget ran out, making this a partial result."""

    new_solutions: list[np.ndarray] = field(default_factory=list)
    endpoint: np.ndarray | None = None
    completed: bool = False
    distance_from_seed: float = 0.0
    note: str = ""


def monodromy_loop(system: FiberSystem, seed, params, loop=None,
                   steps: int = 32, rng_seed: int = 0,
                   budget_seconds: float | None = None,
                   store: SolutionStore | None = None) -> MonodromyResult:
    """Track the seed around a closed loop of adjoint parameters and report
    any genuinely new fiber point at the far end.

    ``loop`` is a sequence of parameter waypoints starting and ending at
    ``params``; by default two random complex waypoints are drawn.  Tracking
    uses a tangent/Hermite predictor with a Newton corrector and adaptive
    halving; underflow or an expired budget returns a partial result."""
    u = np.asarray(seed, dtype=complex).copy()
    params = np.asarray(params, dtype=complex)
    if loop is None:
        rng = np.random.default_rng(rng_seed)
        spread = 0.4 * float(np.max(np.abs(params)))
        waypoints = [params]
        for _ in range(2):
            jitter = spread * (rng.standard_normal(params.size)
                               + 1j * rng.standard_normal(params.size))
            waypoints.append(params + jitter)
        waypoints.append(params)
    else:
        waypoints = [np.asarray(w, dtype=complex) for w in loop]
        if len(waypoints) < 2:
            raise UnsupportedInputError("a parameter loop needs at least two "
                                        "waypoints")
        if np.max(np.abs(waypoints[0] - params)) > 1e-12 * np.max(np.abs(params)):
            raise UnsupportedInputError("the parameter path must start at "
                                        "the seed's parameters")
        if np.max(np.abs(waypoints[-1] - waypoints[0])) \
                > 1e-12 * np.max(np.abs(params)):
            raise UnsupportedInputError("the parameter path must close up")

    deadline = None if budget_seconds is None \
        else time.monotonic() + budget_seconds
    result = MonodromyResult()
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        if np.max(np.abs(b - a)) == 0.0:
            continue
        u, note = _track_segment(system, u, a, b, steps, deadline)
        if u is None:
            result.note = note
            return result
    result.endpoint = u
    result.completed = True
    result.distance_from_seed = state_distance(system, seed, u)
    if result.distance_from_seed >= DEDUP_TOL:
        cert = certify_regular(system, u, params)
        if cert.verdict != "regular-isolated":
            result.note = f"endpoint moved but did not re-certify: {cert.note}"
        elif store is None or store.add(cert.solution):
            result.new_solutions.append(cert.solution)
    return result


def _track_segment(system, u, a, b, steps, deadline):
    """Continuation along params = (1-t) a + t b; returns (endpoint, note),
    with endpoint None on underflow or an expired budget."""
    t = 0.0
    h = 1.0 / steps
    prev = None  # (t, u, tangent) behind the current point, for Hermite
    tangent = _tangent(system, u, a, b, t)
    successes = 0
    while t < 1.0 - 1e-14:
        if deadline is not None and time.monotonic() > deadline:
            return None, f"budget exhausted at t = {t:.4f}"
        h = min(h, 1.0 - t)
        t_new = t + h
        if prev is not None and tangent is not None:
            u_pred = _hermite(prev, (t, u, tangent), t_new)
        elif tangent is not None:
            u_pred = u + h * tangent
        else:
            u_pred = u
        ok, u_corr = _newton_correct(system, u_pred,
                                     _path_point(a, b, t_new))
        if ok:
            prev = (t, u, tangent)
            t, u = t_new, u_corr
            tangent = _tangent(system, u, a, b, t)
            successes += 1
            if successes >= 3:
                h = min(2.0 * h, 0.25)
                successes = 0
        else:
            successes = 0
            h /= 2.0
            if h < MIN_STEP:
                return None, f"tracking step underflow at t = {t:.6f}"
    return u, ""


def _path_point(a, b, t):
    return (1.0 - t) * a + t * b


def _tangent(system, u, a, b, t):
    """du/dt from J du/dt = -dF/dt; the parameters enter every equation
    linearly, so dF/dt is exactly F(u, b) - F(u, a)."""
    Ft = system.residual(u, b)[0] - system.residual(u, a)[0]
    _, S = system.residual(u, _path_point(a, b, t))
    S = np.maximum(S, max(1e-14 * float(np.max(S, initial=0.0)), 1e-300))
    Jg = system.jacobian(u, _path_point(a, b, t)) / S[:, None]
    rn = np.linalg.norm(Jg, axis=1)
    rn = np.maximum(rn, 1e-14 * float(np.max(rn, initial=0.0)) + 1e-300)
    try:
        return np.linalg.solve(Jg / rn[:, None], -Ft / S / rn)
    except np.linalg.LinAlgError:
        return None


def _hermite(node0, node1, t_new):
    t0, u0, m0 = node0
    t1, u1, m1 = node1
    dt = t1 - t0
    s = (t_new - t0) / dt
    h00 = 2 * s ** 3 - 3 * s ** 2 + 1
    h10 = s ** 3 - 2 * s ** 2 + s
    h01 = -2 * s ** 3 + 3 * s ** 2
    h11 = s ** 3 - s ** 2
    return h00 * u0 + h10 * dt * m0 + h01 * u1 + h11 * dt * m1


def _newton_correct(system, u, params, iters: int = 6):
    last = None
    for _ in range(iters):
        G, Jg, rel = system.scaled(u, params)
        if rel <= TRACK_TOL:
            return True, u
        try:
            step = np.linalg.solve(Jg, -G)
        except np.linalg.LinAlgError:
            return False, u
        norm = float(np.linalg.norm(step))
        if not np.isfinite(norm) or (last is not None and norm > 2.0 * last):
            return False, u
        u = u + step
        last = norm
    return system.relative_residual(u, params) <= TRACK_TOL, u


# ----------------------------------------------------------------------
# explicit (2,2,2,2) instances


def conic_quadrilateral(rng_seed: int = 0, attempts: int = 50) -> Polypol:
    """Random polypol with four conic sides: three shared points glue the
    first and fourth conics, three more glue the second and third, and four
    random vertices close the chain.  Conics come from nullspaces of the
    five-point interpolation matrix; draws are retried until the boundary is
    everywhere transversal and the adjoint is unique."""
    rng = np.random.default_rng(rng_seed)
    monos = grlex_monomials(3, 2)
    last = None
    for _ in range(attempts):
        pts = rng.uniform(-1.5, 1.5, size=(10, 2))
        r = pts[:6]
        v12, v23, v34, v41 = pts[6:]
        try:
            c1 = _conic_through([r[0], r[1], r[2], v12, v41], monos)
            c4 = _conic_through([r[0], r[1], r[2], v34, v41], monos)
            c2 = _conic_through([r[3], r[4], r[5], v12, v23], monos)
            c3 = _conic_through([r[3], r[4], r[5], v23, v34], monos)
            p = Polypol([c1, c2, c3, c4], [v12, v23, v34, v41],
                        build_sides=False)
            if adjoint(p).nullspace_dim != 1:
                raise DegenerateInputError("adjoint not unique")
            _grouped_residuals(p)
            return p
        except (DegenerateInputError, UnsupportedInputError) as exc:
            last = exc
    raise PolypolError(
        f"no transversal conic quadrilateral in {attempts} draws "
        f"(last failure: {last})")


def _conic_through(points, monos) -> PlaneCurve:
    rows = []
    for x, y in points:
        pt = np.array([x, y, 1.0])
        rows.append([np.prod(pt ** np.array(m)) for m in monos])
    report = nullspace(np.array(rows))
    if report.nullity != 1:
        raise DegenerateInputError("five points do not span a unique conic")
    vec = report.nullspace[:, 0]
    vec = vec / vec[int(np.argmax(np.abs(vec)))]
    form = MultiPoly(3, {m: c for m, c in zip(monos, vec.real)})
    return parameterize_conic(PlaneCurve(form))
