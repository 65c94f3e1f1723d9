"""Real-geometric verification: interior sampling, polygon adjoint ovals,
line-arrangement census, sign sequences, three-ellipse classification and
hyperbolicity certificates.

Everything here works on the real picture in an affine chart: contour
extraction by marching squares (center-refined at ambiguous saddles),
ray-casting membership tests, and exact root counts along restricted lines
as the independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .algebra import MultiPoly, UniPoly, uni_roots
from .curves import (
    PlaneCurve,
    ProjectivePoint,
    conic_matrix,
    intersect,
    line_curve,
    parameterize_conic,
)
from .errors import DegenerateInputError, PolypolError, UnsupportedInputError
from .polypols import Polypol, param_of_point, polygon_polypol

# Base marching-squares resolution; ambiguous cells re-sampled 4x finer.
CONTOUR_BASE_RES = 512
# Dense polyline sampling used for ray casting against the boundary.
BOUNDARY_SAMPLES_PER_SIDE = 1024
# Boundary cycle must close this well (relative to its diameter).
CYCLE_CLOSE_TOL = 1e-7


# ----------------------------------------------------------------------
# marching squares


def _eval_chart(form3: MultiPoly, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    g = form3.dehomogenize() if form3.nvars == 3 else form3
    return g.eval_grid(X, Y)


def marching_squares(form3: MultiPoly, window, res: int = CONTOUR_BASE_RES):
    """Zero-level polylines of a (real) form on a rectangular window.

    Returns a list of (points, closed) with points an (m, 2) array.  Saddle
    cells (both diagonals crossing) are disambiguated by evaluating the
    function on a 4x refined sub-grid of the cell.
    """
    xmin, xmax, ymin, ymax = window
    xs = np.linspace(xmin, xmax, res + 1)
    ys = np.linspace(ymin, ymax, res + 1)
    X, Y = np.meshgrid(xs, ys)
    g = form3.dehomogenize() if form3.nvars == 3 else form3
    V = g.eval_grid(X, Y)
    scale = np.max(np.abs(V)) or 1.0
    V = np.where(V == 0.0, 1e-14 * scale, V)  # zeros count as positive
    pos = V > 0

    cell = (pos[:-1, :-1].astype(int)
            + 2 * pos[:-1, 1:].astype(int)
            + 4 * pos[1:, 1:].astype(int)
            + 8 * pos[1:, :-1].astype(int))
    active = np.argwhere((cell != 0) & (cell != 15))

    def lerp(x1, y1, v1, x2, y2, v2):
        t = v1 / (v1 - v2)
        return (x1 + t * (x2 - x1), y1 + t * (y2 - y1))

    segments: list[tuple[tuple, tuple]] = []
    for j, i in active:
        x0, x1 = xs[i], xs[i + 1]
        y0, y1 = ys[j], ys[j + 1]
        v = (V[j, i], V[j, i + 1], V[j + 1, i + 1], V[j + 1, i])
        idx = cell[j, i]
        # edge crossings: bottom, right, top, left
        pts = {}
        if (v[0] > 0) != (v[1] > 0):
            pts["b"] = lerp(x0, y0, v[0], x1, y0, v[1])
        if (v[1] > 0) != (v[2] > 0):
            pts["r"] = lerp(x1, y0, v[1], x1, y1, v[2])
        if (v[3] > 0) != (v[2] > 0):
            pts["t"] = lerp(x0, y1, v[3], x1, y1, v[2])
        if (v[0] > 0) != (v[3] > 0):
            pts["l"] = lerp(x0, y0, v[0], x0, y1, v[3])
        if idx in (5, 10):
            # saddle: sample the cell 4x finer and let the refined center
            # pick the pairing
            fx, fy = np.meshgrid(np.linspace(x0, x1, 5), np.linspace(y0, y1, 5))
            center = float(np.mean(g.eval_grid(fx, fy)[1:4, 1:4]))
            if idx == 5:  # corners 0 and 2 positive
                if center > 0:
                    segments += [(pts["l"], pts["t"]), (pts["b"], pts["r"])]
                else:
                    segments += [(pts["l"], pts["b"]), (pts["t"], pts["r"])]
            else:  # corners 1 and 3 positive
                if center > 0:
                    segments += [(pts["b"], pts["l"]), (pts["r"], pts["t"])]
                else:
                    segments += [(pts["l"], pts["t"]), (pts["b"], pts["r"])]
            continue
        keys = sorted(pts)
        if len(keys) == 2:
            segments.append((pts[keys[0]], pts[keys[1]]))

    return _stitch(segments, snap=1e-9 * max(xmax - xmin, ymax - ymin))


def _stitch(segments, snap: float):
    def key(pt):
        return (round(pt[0] / snap), round(pt[1] / snap))

    adj: dict = {}
    for si, (a, b) in enumerate(segments):
        adj.setdefault(key(a), []).append((si, 0))
        adj.setdefault(key(b), []).append((si, 1))

    used = [False] * len(segments)
    chains = []
    # open chains first (endpoints of degree 1), then closed loops
    endpoints = [k for k, v in adj.items() if len(v) == 1]
    for start_key in endpoints:
        si, end = adj[start_key][0]
        if used[si]:
            continue
        chain = _walk(segments, adj, used, si, end, key)
        chains.append((np.array(chain), False))
    for si in range(len(segments)):
        if used[si]:
            continue
        chain = _walk(segments, adj, used, si, 0, key)
        closed = key(tuple(chain[0])) == key(tuple(chain[-1]))
        chains.append((np.array(chain), closed))
    return chains


def _walk(segments, adj, used, si, end, key):
    a, b = segments[si]
    chain = [a, b] if end == 0 else [b, a]
    used[si] = True
    while True:
        k = key(chain[-1])
        nxt = [(sj, e) for sj, e in adj.get(k, []) if not used[sj]]
        if not nxt:
            break
        sj, e = nxt[0]
        a, b = segments[sj]
        chain.append(b if e == 0 else a)
        used[sj] = True
    return chain


def point_in_loop(pt, loop: np.ndarray) -> bool:
    """Even-odd ray casting against a closed polyline."""
    x, y = pt
    xs, ys = loop[:, 0], loop[:, 1]
    x2, y2 = np.roll(xs, -1), np.roll(ys, -1)
    cond = (ys > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = xs + (y - ys) / (y2 - ys) * (x2 - xs)
    hits = cond & (x < xint)
    return bool(np.count_nonzero(hits) % 2)


# ----------------------------------------------------------------------
# interior sampling


def boundary_polyline(p: Polypol,
                      samples_per_side: int = BOUNDARY_SAMPLES_PER_SIDE
                      ) -> np.ndarray:
    """Closed polyline tracing the side cycle; raises if it does not close."""
    if p.sides is None:
        raise UnsupportedInputError("polypol was built without sides")
    pieces = []
    for i in range(p.k):
        side = p.sides[i]
        ts = np.linspace(side.a, side.b, samples_per_side + 1)
        pts = []
        for t in ts:
            x, y = p.curves[i].point_at(t).affine()
            pts.append((x.real, y.real))
        pts = np.array(pts)
        if side.orientation < 0:
            pts = pts[::-1]
        pieces.append(pts)
    diam = max(np.ptp(np.vstack(pieces)[:, 0]), np.ptp(np.vstack(pieces)[:, 1]))
    for i in range(len(pieces)):
        gap = np.linalg.norm(pieces[i][-1] - pieces[(i + 1) % len(pieces)][0])
        if gap > CYCLE_CLOSE_TOL * diam:
            raise DegenerateInputError(
                f"boundary cycle does not close between sides {i + 1} and "
                f"{(i + 1) % len(pieces) + 1} (gap {gap:.3g})")
    return np.vstack([piece[:-1] for piece in pieces])


def interior_points(p: Polypol, grid: int = 64) -> np.ndarray:
    """Lattice points strictly inside the region bounded by the side cycle.

    The lattice subdivides the bounding box into `grid` intervals per axis;
    membership is ray casting against a dense sampling of the sides.
    """
    loop = boundary_polyline(p)
    xmin, ymin = loop.min(axis=0)
    xmax, ymax = loop.max(axis=0)
    xs = xmin + (xmax - xmin) * np.arange(1, grid) / grid
    ys = ymin + (ymax - ymin) * np.arange(1, grid) / grid
    X, Y = np.meshgrid(xs, ys)
    cand = np.column_stack([X.ravel(), Y.ravel()])

    lx, ly = loop[:, 0], loop[:, 1]
    lx2, ly2 = np.roll(lx, -1), np.roll(ly, -1)
    inside = np.zeros(len(cand), dtype=bool)
    for idx, (x, y) in enumerate(cand):
        cond = (ly > y) != (ly2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = lx + (y - ly) / (ly2 - ly) * (lx2 - lx)
        inside[idx] = bool(np.count_nonzero(cond & (x < xint)) % 2)
    return cand[inside]


# ----------------------------------------------------------------------
# interior-avoidance check


@dataclass(frozen=True)
class WachspressReport:
    passed: bool
    sign: int
    min_abs: float
    grid: int
    checked: int


def wachspress_check(p: Polypol, a, grid: int = 64) -> WachspressReport:
    """Constant interior sign of the adjoint over the interior lattice.

    Requires a regular polypol and a real adjoint; together with
    verify_avoidance (no side crossings) a constant sign at this resolution
    certifies interior avoidance at grid scale.
    """
    from .polypols import classify_regularity

    reg = classify_regularity(p)
    if not reg.regular:
        raise DegenerateInputError(
            "interior-avoidance check needs a regular polypol: "
            + "; ".join(reg.witnesses))
    alpha = a.alpha
    if alpha.max_imag() > 1e-7 * max(abs(c) for c in alpha.terms.values()):
        raise DegenerateInputError("adjoint is not real")
    pts = interior_points(p, grid)
    if pts.shape[0] == 0:
        raise DegenerateInputError("no interior points at this resolution")
    g = alpha.real_part().dehomogenize()
    vals = g.eval_many(pts).real
    sign = 1 if np.median(vals) > 0 else -1
    passed = bool(np.all(sign * vals > 0))
    return WachspressReport(passed=passed, sign=sign,
                            min_abs=float(np.min(np.abs(vals))),
                            grid=grid, checked=len(pts))


# ----------------------------------------------------------------------
# line arrangement census for convex polygons


@dataclass(frozen=True)
class Region:
    kind: str  # "interior" | "triangle" | "crossing"
    negative_lines: tuple[int, ...]  # canonical representative, 0-based
    glued: bool
    adjacent_crossings: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class RegionCensus:
    k: int
    regions: tuple[Region, ...]

    @property
    def counts(self) -> dict:
        out = {"interior": 0, "triangle": 0, "crossing": 0}
        for r in self.regions:
            out[r.kind] += 1
        return out


def _convexity_check(pts: np.ndarray) -> None:
    k = len(pts)
    crosses = []
    for i in range(k):
        a, b, c = pts[i], pts[(i + 1) % k], pts[(i + 2) % k]
        u, v = b - a, c - b
        crosses.append(u[0] * v[1] - u[1] * v[0])
    crosses = np.array(crosses)
    if np.any(crosses == 0) or (np.any(crosses > 0) and np.any(crosses < 0)):
        raise DegenerateInputError("vertices are not in strictly convex position")


def polygon_region_census(polygon_points) -> RegionCensus:
    """Connected components of the projective plane minus the k edge lines
    of a convex polygon, enumerated by exact sign vectors.

    Components: the interior, one triangle across each edge, and one region
    per remaining crossing pattern; counts are checked against the closed
    formulas (1 + k + k(k-3)/2 in total).
    """
    pts = np.asarray(polygon_points, dtype=float)
    k = len(pts)
    if k < 4:
        raise DegenerateInputError("census needs at least four lines")
    _convexity_check(pts)
    centroid = pts.mean(axis=0)

    # interior-positive normalized lines and unit directions
    lines = []
    dirs = []
    bases = []
    for i in range(k):
        a, b = pts[i], pts[(i + 1) % k]
        n = np.array([a[1] - b[1], b[0] - a[0]])
        c = -n @ a
        if n @ centroid + c < 0:
            n, c = -n, -c
        lines.append((n, c))
        d = (b - a) / np.linalg.norm(b - a)
        dirs.append(d)
        bases.append(a)

    def sign_vec(q) -> tuple[int, ...]:
        return tuple(1 if (n @ q + c) > 0 else -1 for n, c in lines)

    # pairwise crossings
    crossing: dict[tuple[int, int], np.ndarray] = {}
    for i in range(k):
        for j in range(i + 1, k):
            A = np.array([lines[i][0], lines[j][0]])
            rhs = -np.array([lines[i][1], lines[j][1]])
            if abs(np.linalg.det(A)) < 1e-12 * np.linalg.norm(A):
                raise DegenerateInputError(
                    f"edge lines {i + 1} and {j + 1} meet at infinity")
            crossing[(i, j)] = np.linalg.solve(A, rhs)

    spread = max(np.ptp(np.array(list(crossing.values())), axis=0).max(),
                 np.ptp(pts, axis=0).max())
    eps_gap = min(
        abs((crossing[p1] - bases[i]) @ dirs[i] - (crossing[p2] - bases[i]) @ dirs[i])
        for i in range(k)
        for p1 in crossing if i in p1
        for p2 in crossing if i in p2 and p1 < p2)
    eps = 1e-4 * max(eps_gap, 1e-9 * spread)

    samples: list[np.ndarray] = [centroid]
    far_samples: list[np.ndarray] = []
    for i in range(k):
        n, c = lines[i]
        nu = n / np.linalg.norm(n)
        ts = sorted((crossing[p] - bases[i]) @ dirs[i]
                    for p in crossing if i in p)
        mids = [(ts[a] + ts[a + 1]) / 2 for a in range(len(ts) - 1)]
        near = [ts[0] - 0.5 * spread, ts[-1] + 0.5 * spread]
        far = [ts[0] - 1e6 * spread, ts[-1] + 1e6 * spread]
        for t in mids + near:
            base = bases[i] + t * dirs[i]
            samples.append(base + eps * nu)
            samples.append(base - eps * nu)
        for t in far:
            base = bases[i] + t * dirs[i]
            far_samples.append(base + spread * nu)
            far_samples.append(base - spread * nu)

    cells = {}
    for q in samples + far_samples:
        cells.setdefault(sign_vec(q), q)
    far_sigs = {sign_vec(q) for q in far_samples}

    expected_affine = 1 + k + comb(k, 2)
    if len(cells) != expected_affine:
        raise DegenerateInputError(
            f"found {len(cells)} affine cells, expected {expected_affine}: "
            "degenerate arrangement")

    # glue unbounded antipodal pairs
    handled: set = set()
    regions: list[Region] = []
    quad_samples = {}
    for (i, j), x in crossing.items():
        for s1 in (1, -1):
            for s2 in (1, -1):
                q = x + eps * (s1 * dirs[i] + s2 * dirs[j])
                quad_samples.setdefault(sign_vec(q), []).append((i, j))

    def adjacency(sigs) -> tuple[tuple[int, int], ...]:
        pairs = set()
        for s in sigs:
            for pr in quad_samples.get(s, []):
                pairs.add(pr)
        return tuple(sorted(pairs))

    for sig in sorted(cells):
        if sig in handled:
            continue
        anti = tuple(-s for s in sig)
        if sig in far_sigs:
            if anti not in far_sigs or anti not in cells:
                raise DegenerateInputError(
                    "unbounded cell without antipodal partner")
            handled.update({sig, anti})
            reps = [sig, anti]
            glued = True
        else:
            handled.add(sig)
            reps = [sig]
            glued = False
        canonical = min(reps, key=lambda s: (s.count(-1), s))
        negs = tuple(i for i, s in enumerate(canonical) if s < 0)
        if len(negs) == 0:
            kind = "interior"
        elif len(negs) == 1:
            kind = "triangle"
        else:
            kind = "crossing"
        regions.append(Region(kind=kind, negative_lines=negs, glued=glued,
                              adjacent_crossings=adjacency(reps)))

    census = RegionCensus(k=k, regions=tuple(regions))
    expected_total = 1 + comb(k, 2)
    if len(regions) != expected_total:
        raise DegenerateInputError(
            f"census found {len(regions)} projective regions, "
            f"expected {expected_total}")
    return census


# ----------------------------------------------------------------------
# polygon adjoint topology


@dataclass(frozen=True)
class OvalReport:
    oval_count: int
    nesting: tuple[int, ...]  # oval indices sorted inside-out
    pseudoline: bool
    assignments: tuple[tuple[int, int, str], ...]  # (i, j, oval m / "pseudoline")
    line_root_counts: tuple[int, ...]
    min_gradient_on_locus: float


def _loops_and_arcs(alpha: MultiPoly, window, res: int = CONTOUR_BASE_RES):
    chains = marching_squares(alpha.real_part(), window, res)
    span = max(window[1] - window[0], window[3] - window[2])
    loops = [c for c, closed in chains if closed and len(c) >= 8]
    opens = [c for c, closed in chains if not closed and len(c) >= 2]
    # open chains whose endpoints both reach the window border are
    # unbounded branches in this chart
    def on_border(pt):
        return (min(pt[0] - window[0], window[1] - pt[0],
                    pt[1] - window[2], window[3] - pt[1]) < 1e-3 * span)
    branches = [c for c in opens if on_border(c[0]) and on_border(c[-1])]
    return loops, branches


def polygon_adjoint_topology(polygon_points,
                             res: int = CONTOUR_BASE_RES,
                             rng_seed: int = 2) -> OvalReport:
    """Oval structure of a convex polygon's adjoint curve, verified two ways:
    contour extraction on a window containing all residual points, and real
    root counts along random interior lines (which must see k - 3 points).
    Disagreement between the routes raises."""
    from .adjoint import adjoint

    pts = np.asarray(polygon_points, dtype=float)
    k = len(pts)
    if k < 4:
        raise DegenerateInputError("adjoint topology needs k >= 4")
    _convexity_check(pts)
    # work in a chart with the polygon centered in [-1, 1]^2; every quantity
    # reported is invariant under this affine change
    center = pts.mean(axis=0)
    pts = (pts - center) / np.max(np.abs(pts - center))
    poly = polygon_polypol(pts)
    adj = adjoint(poly)
    alpha = adj.alpha

    residuals = [e.point for e in adj.residual_set.points]
    res_xy = np.array([[q.coords[0].real / q.coords[2].real,
                        q.coords[1].real / q.coords[2].real]
                       for q in residuals if abs(q.coords[2]) > 1e-8])
    allpts = np.vstack([pts, res_xy]) if len(res_xy) else pts
    cx, cy = allpts.mean(axis=0)
    half = 1.6 * max(np.max(np.abs(allpts[:, 0] - cx)),
                     np.max(np.abs(allpts[:, 1] - cy)), 1e-6)
    window = (cx - half, cx + half, cy - half, cy + half)

    loops, branches = _loops_and_arcs(alpha, window, res)
    expected_ovals = (k - 3) // 2
    expect_pseudoline = k % 2 == 0

    # nesting by area, innermost first
    def loop_area(c):
        x, y = c[:, 0], c[:, 1]
        return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    order = sorted(range(len(loops)), key=lambda i: loop_area(loops[i]))
    for a_i in range(len(order) - 1):
        inner = loops[order[a_i]][0]
        if not point_in_loop(inner, loops[order[a_i + 1]]):
            raise UnsupportedInputError("contour ovals are not nested")

    # independent count: random interior lines must meet the curve in k-3
    # real points
    rng = np.random.default_rng(rng_seed)
    inner_pts = interior_points(poly, grid=16)
    counts = []
    for _ in range(20):
        i1, i2 = rng.integers(0, len(inner_pts), size=2)
        if i1 == i2:
            continue
        p1, p2 = inner_pts[i1], inner_pts[i2]
        if np.linalg.norm(p1 - p2) < 1e-9:
            continue
        ln = line_curve([p1[1] - p2[1], p2[0] - p1[0],
                         p1[0] * p2[1] - p2[0] * p1[1]])
        rest = ln.restrict(alpha)
        # a degree drop is a crossing at the parameter's infinity, which for
        # an affine line is its (real) direction point
        at_inf = (k - 3) - max(rest.degree, 0)
        finite = 0
        if rest.degree >= 1:
            finite = sum(1 for r, m in uni_roots(rest) if abs(r.imag) <= 1e-7)
        counts.append(finite + at_inf)

    if len(loops) != expected_ovals:
        raise UnsupportedInputError(
            f"contour extraction found {len(loops)} ovals, "
            f"expected {expected_ovals}")
    if expect_pseudoline:
        # the odd branch may be invisible in this chart; corroborate at the
        # line at infinity when no window branch was seen
        if not branches:
            deg = alpha.degree
            inf_rest = UniPoly([alpha.terms.get((d, deg - d, 0), 0.0)
                                for d in range(deg + 1)])
            ok = (inf_rest.degree < deg  # vanishes at (1:0:0) or identically
                  or any(abs(r.imag) <= 1e-7 for r, _ in uni_roots(inf_rest)))
            if not ok:
                raise UnsupportedInputError(
                    "no unbounded branch found but the degree is odd")
    elif branches:
        raise UnsupportedInputError(
            "unbounded branches found where only ovals were expected")
    if any(c != k - 3 for c in counts):
        raise UnsupportedInputError(
            f"line root counts {sorted(set(counts))} disagree with k-3={k - 3}")

    # residual point assignment to ovals (inside-out index, 1-based)
    assignments = []
    for e in adj.residual_set.points:
        src = e.source
        if not src.startswith("intersection"):
            continue
        pair = src.split("(C")[1].rstrip(")")
        i1, i2 = (int(t) for t in pair.split(",C"))
        q = e.point
        if abs(q.coords[2]) < 1e-8:
            continue
        xy = (q.coords[0].real / q.coords[2].real,
              q.coords[1].real / q.coords[2].real)
        best = None
        for m, li in enumerate(order):
            d = np.min(np.linalg.norm(loops[li] - np.array(xy), axis=1))
            if best is None or d < best[1]:
                best = (f"oval {m + 1}", d)
        for br in branches:
            d = np.min(np.linalg.norm(br - np.array(xy), axis=1))
            if best is None or d < best[1]:
                best = ("pseudoline", d)
        span = window[1] - window[0]
        if best is None or best[1] > 0.02 * span:
            raise UnsupportedInputError(
                f"residual point of (C{i1},C{i2}) not on any extracted contour")
        assignments.append((i1, i2, best[0]))

    # hyperbolicity margin: gradient along sampled locus
    gx = alpha.diff(0)
    gy = alpha.diff(1)
    gz = alpha.diff(2)
    min_grad = np.inf
    scale = alpha.norm()
    for c in loops + branches:
        for x, y in c[:: max(1, len(c) // 200)]:
            v = np.array([x, y, 1.0])
            v = v / np.linalg.norm(v)
            gnorm = np.linalg.norm([gx(v), gy(v), gz(v)])
            min_grad = min(min_grad, gnorm)
    if not loops and not branches:
        min_grad = float("nan")

    return OvalReport(
        oval_count=len(loops),
        nesting=tuple(order),
        pseudoline=expect_pseudoline,
        assignments=tuple(assignments),
        line_root_counts=tuple(counts),
        min_gradient_on_locus=float(min_grad / scale) if scale else 0.0,
    )


# ----------------------------------------------------------------------
# sign sequences along polygon edges


def edge_sign_sequence(polygon_points, a, i: int) -> str:
    """Sign word of the adjoint along edge line i of the polygon, one letter
    per arc of the projective line cut by the other k-1 lines and the
    chart's point at infinity; adjoint normalized positive at the centroid."""
    pts = np.asarray(polygon_points, dtype=float)
    k = len(pts)
    _convexity_check(pts)
    centroid = pts.mean(axis=0)
    alpha = a.alpha.real_part()
    cval = alpha((centroid[0], centroid[1], 1.0)).real
    if cval == 0.0:
        raise PolypolError("adjoint vanishes at the centroid")
    if cval < 0:
        alpha = alpha * (-1.0)

    base = pts[i]
    d = pts[(i + 1) % k] - pts[i]
    d = d / np.linalg.norm(d)

    cuts = []
    for j in range(k):
        if j == i:
            continue
        a2, b2 = pts[j], pts[(j + 1) % k]
        n = np.array([a2[1] - b2[1], b2[0] - a2[0]])
        c = -n @ a2
        denom = n @ d
        if abs(denom) < 1e-12:
            raise DegenerateInputError("edge lines meet at infinity")
        cuts.append(-(n @ base + c) / denom)
    cuts = np.sort(np.array(cuts))
    span = cuts[-1] - cuts[0]
    mids = [cuts[0] - 0.5 * span - 1.0]
    mids += [(cuts[a2] + cuts[a2 + 1]) / 2 for a2 in range(len(cuts) - 1)]
    mids += [cuts[-1] + 0.5 * span + 1.0]

    word = []
    scale = alpha.norm()
    for t in mids:
        q = base + t * d
        val = alpha((q[0], q[1], 1.0)).real
        if abs(val) <= 1e-10 * scale * max(1.0, np.linalg.norm(q)) ** max(
                alpha.degree, 0):
            raise PolypolError(
                "adjoint vanishes on an arc interior: sign word undefined")
        word.append("+" if val > 0 else "-")
    return "".join(word)


def cyclic_equal(word1: str, word2: str) -> bool:
    return len(word1) == len(word2) and word1 in word2 + word2


# ----------------------------------------------------------------------
# three-ellipse configurations


@dataclass(frozen=True)
class PolyconFace:
    """One three-sided face of the arrangement, in boundary-cycle order:
    side i lies on ellipse ``ellipses[i]`` and runs from corner i-1 to
    corner i; ``markers[i]`` is an interior point of that arc and
    ``pairs[i]`` the ellipse pair meeting at corner i.  Feed ``ellipses``,
    ``corners`` and ``markers`` straight into a Polypol to rebuild the face."""

    ellipses: tuple[int, int, int]
    pairs: tuple[tuple[int, int], ...]
    corners: tuple[tuple[float, float], ...]
    markers: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class EllipseConfigClass:
    intersection_type: str  # e.g. "(224)"
    outer_arc_type: str     # sorted descending, e.g. "221"
    polycon_count: int
    large_face_count: int
    face_profile: tuple[int, ...]
    polycons: tuple[tuple[tuple[int, int], ...], ...]  # corner pair tags
    polycon_faces: tuple[PolyconFace, ...] = ()

    @property
    def label(self) -> str:
        return f"{self.intersection_type}-{self.outer_arc_type}"


def _ellipse_normalize(curve: PlaneCurve) -> tuple[PlaneCurve, np.ndarray]:
    """Check the conic is a real ellipse; scale the form negative inside.
    Returns the normalized curve and the center."""
    form = curve.form.real_part() if curve.is_real else None
    if form is None:
        raise DegenerateInputError("ellipse form must be real")
    Q = conic_matrix(form).real
    A = Q[:2, :2]
    evs = np.linalg.eigvalsh(A)
    if evs[0] * evs[1] <= 0 or abs(np.linalg.det(Q)) < 1e-12 * np.linalg.norm(Q) ** 3:
        raise DegenerateInputError("conic is not a nondegenerate ellipse")
    center = np.linalg.solve(A, -Q[:2, 2])
    val = form((center[0], center[1], 1.0)).real
    if val == 0.0:
        raise DegenerateInputError("degenerate ellipse (vanishes at center)")
    if val > 0:
        form = form * (-1.0)
    out = PlaneCurve(form, curve.param)
    if out.param is None:
        out = parameterize_conic(out)
    return out, center


def classify_three_ellipses(e1: PlaneCurve, e2: PlaneCurve,
                            e3: PlaneCurve) -> EllipseConfigClass:
    """Topological labels of a three-ellipse arrangement: pairwise real
    intersection counts, outer-arc counts per ellipse (arcs whose points lie
    outside both other ellipses), and a census of the arrangement faces via
    arc-adjacency traversal, keeping the three-sided faces that use all
    three ellipses with one corner per pair (the polycon candidates)."""
    curves = []
    centers = []
    for e in (e1, e2, e3):
        c, ctr = _ellipse_normalize(e)
        curves.append(c)
        centers.append(ctr)

    inter: dict[tuple[int, int], list[ProjectivePoint]] = {}
    for i in range(3):
        for j in range(i + 1, 3):
            pts = intersect(curves[i], curves[j])
            real_pts = []
            for q, m in pts:
                if m > 1:
                    raise DegenerateInputError(
                        f"ellipses {i + 1} and {j + 1} are tangent")
                if q.is_real():
                    real_pts.append(q)
            if len(real_pts) < 2:
                raise DegenerateInputError(
                    f"ellipses {i + 1} and {j + 1} meet in fewer than two "
                    "real points")
            inter[(i, j)] = real_pts
    for q in inter[(0, 1)]:
        if not q.is_real():
            continue
        if any(q.equal(w, 1e-7) for w in inter[(0, 2)]) or \
           any(q.equal(w, 1e-7) for w in inter[(1, 2)]):
            raise DegenerateInputError("three ellipses share a common real point")

    counts = sorted(len(v) for v in inter.values())
    itype = "(" + "".join(str(c) for c in counts) + ")"

    # Every ellipse is star-shaped about its own center, so the angle around
    # the center orders its boundary points cyclically and every angle has a
    # unique boundary point (the positive root of the radial quadratic).
    forms = [c.form.real_part() for c in curves]

    def point_at_angle(b: int, theta: float) -> np.ndarray:
        cx, cy = centers[b]
        ux, uy = np.cos(theta), np.sin(theta)
        a2 = forms[b]((ux, uy, 0.0)).real
        c0 = forms[b]((cx, cy, 1.0)).real
        b1 = forms[b]((cx + ux, cy + uy, 1.0)).real - a2 - c0
        r = (-b1 + np.sqrt(b1 * b1 - 4.0 * a2 * c0)) / (2.0 * a2)
        return np.array([cx + r * ux, cy + r * uy])

    def ccw_tangent(b: int, xy: np.ndarray) -> np.ndarray:
        gx = forms[b].diff(0)((xy[0], xy[1], 1.0)).real
        gy = forms[b].diff(1)((xy[0], xy[1], 1.0)).real
        t = np.array([-gy, gx])
        return t / np.linalg.norm(t)

    verts = []
    for key, qs in inter.items():
        for q in qs:
            x, y = q.affine()
            xy = np.array([x.real, y.real])
            ang = {b: np.arctan2(xy[1] - centers[b][1], xy[0] - centers[b][0])
                   for b in key}
            verts.append((key, xy, ang))

    # arcs per ellipse: consecutive crossings in cyclic angle order
    arcs = []  # (ellipse, v_from, v_to, theta_from, theta_to) with to > from
    outer_counts = []
    for b in range(3):
        on_b = sorted((ang[b], idx) for idx, (key, _, ang) in enumerate(verts)
                      if b in key)
        n_outer = 0
        others = [j for j in range(3) if j != b]
        for a, (th0, i0) in enumerate(on_b):
            th1, i1 = on_b[(a + 1) % len(on_b)]
            dth = (th1 - th0) % (2.0 * np.pi)
            if dth == 0.0:
                dth = 2.0 * np.pi
            arcs.append((b, i0, i1, th0, th0 + dth))
            mid = point_at_angle(b, th0 + dth / 2.0)
            if all(forms[j]((mid[0], mid[1], 1.0)).real > 0 for j in others):
                n_outer += 1
        outer_counts.append(n_outer)
    oat = "".join(str(c) for c in sorted(outer_counts, reverse=True))

    # half-edges 2a (forward, increasing angle) and 2a+1 (reversed); faces
    # are traced with interior on the left, so next(h) is the outgoing
    # half-edge one step clockwise from h's own twin
    n_arcs = len(arcs)
    head = {}
    out_dir = {}
    outgoing: dict[int, list[int]] = {idx: [] for idx in range(len(verts))}
    for a, (b, i0, i1, th0, th1) in enumerate(arcs):
        p0, p1 = verts[i0][1], verts[i1][1]
        head[2 * a] = i1
        head[2 * a + 1] = i0
        out_dir[2 * a] = ccw_tangent(b, p0)
        out_dir[2 * a + 1] = -ccw_tangent(b, p1)
        outgoing[i0].append(2 * a)
        outgoing[i1].append(2 * a + 1)

    order_at = {}
    for idx, hs in outgoing.items():
        if len(hs) != 4:
            raise PolypolError("arrangement crossing is not a plain node")
        order_at[idx] = sorted(hs, key=lambda h: np.arctan2(out_dir[h][1],
                                                            out_dir[h][0]))

    def next_half_edge(h: int) -> int:
        v = head[h]
        twin = h ^ 1
        ring = order_at[v]
        return ring[(ring.index(twin) - 1) % 4]

    seen = [False] * (2 * n_arcs)
    face_profile = []
    polycons = []
    polycon_faces = []
    large = 0
    n_bounded = 0
    unbounded = 0
    for h0 in range(2 * n_arcs):
        if seen[h0]:
            continue
        cycle = []
        h = h0
        while not seen[h]:
            seen[h] = True
            cycle.append(h)
            h = next_half_edge(h)
        if h != h0:
            raise PolypolError("arrangement face traversal inconsistent")
        pts = []
        for he in cycle:
            b, i0, i1, th0, th1 = arcs[he // 2]
            thetas = np.linspace(th0, th1, 24, endpoint=False)
            if he % 2:
                thetas = (th0 + th1) - thetas
            pts.extend(point_at_angle(b, th) for th in thetas)
        P = np.array(pts)
        area = 0.5 * np.sum(P[:, 0] * np.roll(P[:, 1], -1)
                            - P[:, 1] * np.roll(P[:, 0], -1))
        if area < 0:
            unbounded += 1
            continue
        n_bounded += 1
        ncorners = len(cycle)
        face_profile.append(ncorners)
        if ncorners >= 4:
            large += 1
        corner_keys = sorted(verts[head[he]][0] for he in cycle)
        used = sorted({arcs[he // 2][0] for he in cycle})
        if ncorners == 3 and used == [0, 1, 2] \
                and corner_keys == [(0, 1), (0, 2), (1, 2)]:
            polycons.append(tuple(corner_keys))
            corners = []
            markers = []
            for he in cycle:
                b, i0, i1, th0, th1 = arcs[he // 2]
                m = point_at_angle(b, (th0 + th1) / 2.0)
                markers.append((float(m[0]), float(m[1])))
                xy = verts[head[he]][1]
                corners.append((float(xy[0]), float(xy[1])))
            polycon_faces.append(PolyconFace(
                ellipses=tuple(arcs[he // 2][0] for he in cycle),
                pairs=tuple(verts[head[he]][0] for he in cycle),
                corners=tuple(corners),
                markers=tuple(markers),
            ))

    # Euler check for the traversal: V - E + F = 2 on the sphere-like
    # closure (one unbounded face for a connected union of crossing ovals)
    if unbounded != 1 or len(verts) - n_arcs + n_bounded + 1 != 2:
        raise PolypolError("arrangement face traversal inconsistent")

    return EllipseConfigClass(
        intersection_type=itype,
        outer_arc_type=oat,
        polycon_count=len(polycons),
        large_face_count=large,
        face_profile=tuple(sorted(face_profile, reverse=True)),
        polycons=tuple(polycons),
        polycon_faces=tuple(polycon_faces),
    )


# ----------------------------------------------------------------------
# hyperbolicity certificate for polycons


@dataclass(frozen=True)
class PolyconCertificate:
    certified: bool
    oval_present: bool
    polar_real_count: int
    uncovered: tuple[tuple[float, float], ...]
    note: str


def polycon_hyperbolicity_check(p: Polypol, a, grid: int = 8,
                                directions: int = 32,
                                rng_seed: int = 5) -> PolyconCertificate:
    """Witness-line certificate of interior avoidance: every interior grid
    point must admit a line meeting the adjoint's real locus at least twice
    outside the closed polycon.  "certified" is a proof at this sampling;
    "uncertified" is not a refutation.  Also records whether the real
    adjoint locus shows an oval near the polycon, with the count of real
    adjoint/polar intersections as supporting evidence."""
    alpha = a.alpha.real_part()
    loop = boundary_polyline(p, samples_per_side=512)
    inner = interior_points(p, grid=grid)
    rng = np.random.default_rng(rng_seed)

    res_pts = []
    for e in a.residual_set.points:
        q = e.point
        if q.is_real() and abs(q.coords[2]) > 1e-8:
            res_pts.append((q.coords[0].real / q.coords[2].real,
                            q.coords[1].real / q.coords[2].real))

    diam = max(np.ptp(loop[:, 0]), np.ptp(loop[:, 1]))

    def outside(pt) -> bool:
        d = np.min(np.linalg.norm(loop - pt, axis=1))
        if d < 2e-3 * diam:
            return False
        return not point_in_loop(pt, loop)

    def witness(px, py) -> bool:
        targets = [np.array(rp) for rp in res_pts]
        for _ in range(directions):
            ang = rng.uniform(0, np.pi)
            targets.append(np.array([px + np.cos(ang), py + np.sin(ang)]))
        for q in targets:
            if np.linalg.norm(q - (px, py)) < 1e-9:
                continue
            ln = line_curve([py - q[1], q[0] - px,
                             px * q[1] - q[0] * py])
            rest = ln.restrict(alpha)
            if rest.degree < 1:
                continue
            hits = 0
            for t, m in uni_roots(rest):
                if abs(t.imag) > 1e-7:
                    continue
                try:
                    x, y = ln.point_at(t.real).affine()
                except DegenerateInputError:
                    continue
                if outside(np.array([x.real, y.real])):
                    hits += m
            if hits >= 2:
                return True
        return False

    uncovered = [(float(px), float(py)) for px, py in inner
                 if not witness(px, py)]

    # oval detection near the polycon
    cx, cy = loop.mean(axis=0)
    half = 2.5 * max(np.ptp(loop[:, 0]), np.ptp(loop[:, 1]))
    loops, _ = _loops_and_arcs(alpha, (cx - half, cx + half,
                                       cy - half, cy + half), res=512)
    oval_present = len(loops) > 0

    # polar curve evidence: real intersections of the adjoint with a generic
    # polar (no real solutions strongly suggests no oval)
    from .algebra import resultant_wrt_last

    e = rng.normal(size=3)
    polar3 = alpha.diff(0) * e[0] + alpha.diff(1) * e[1] + alpha.diff(2) * e[2]
    g = alpha.dehomogenize()
    pg = polar3.dehomogenize()
    polar_real = 0
    try:
        res = resultant_wrt_last(g, pg)
        if res.degree >= 1:
            for x0, _ in uni_roots(res):
                if abs(x0.imag) > 1e-7:
                    continue
                sl = g.set_var(0, x0.real)
                u = UniPoly([sl.terms.get((kk,), 0.0)
                             for kk in range(max((ee[0] for ee in sl.terms),
                                                 default=0) + 1)])
                if u.degree < 1:
                    continue
                for y0, _ in uni_roots(u):
                    if abs(y0.imag) > 1e-7 and \
                            abs(pg((x0.real, y0))) < 1e-6 * pg.norm():
                        continue
                    if abs(y0.imag) <= 1e-7 and \
                            abs(pg((x0.real, y0.real))) < 1e-6 * max(pg.norm(), 1.0):
                        polar_real += 1
    except DegenerateInputError:
        polar_real = -1  # elimination degenerated; contour evidence stands

    note = "oval found" if oval_present else "pseudoline only"
    return PolyconCertificate(
        certified=len(uncovered) == 0,
        oval_present=oval_present,
        polar_real_count=polar_real,
        uncovered=tuple(uncovered),
        note=note,
    )
