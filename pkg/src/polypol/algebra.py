"""Polynomial arithmetic and the dense linear algebra everything else uses.

Coefficients are complex doubles throughout; exact rational input is converted
at load time.  Multivariate monomials are ordered graded-lexicographically,
highest total degree first and, within a degree, lexicographically with the
first variable largest (so for a quintic in (x, y, z): x^5, x^4 y, ..., z^5).
Coefficient vectors produced under this order are reproducible across runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateInputError

# Relative tolerance for SVD rank decisions.
RANK_TOL = 1e-10
# Absolute tolerance for merging root clusters (polynomial scaled to unit
# max-coefficient first).
CLUSTER_TOL = 1e-8
# Coefficients below this times the largest one are dropped on normalization.
COEFF_EPS = 1e-14


def grlex_monomials(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of total degree == degree, graded-lex order."""
    combos = [e for e in itertools.product(range(degree + 1), repeat=nvars)
              if sum(e) == degree]
    combos.sort(reverse=True)
    return combos


def monomials_up_to(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of total degree <= degree, graded-lex order."""
    out: list[tuple[int, ...]] = []
    for d in range(degree, -1, -1):
        out.extend(grlex_monomials(nvars, d))
    return out


def _grlex_key(exp: tuple[int, ...]) -> tuple:
    return (sum(exp), exp)


class MultiPoly:
    """Sparse polynomial in 2, 3 or 4 variables over complex doubles.

    Immutable by convention: no method mutates self, arithmetic returns new
    instances.  Terms with negligible coefficients (relative to the largest)
    are dropped on construction.
    """

    __slots__ = ("nvars", "terms", "_degree")

    def __init__(self, nvars: int, terms: Mapping[tuple[int, ...], complex]):
        if nvars not in (1, 2, 3, 4):
            raise DegenerateInputError(f"unsupported variable count {nvars}")
        cleaned: dict[tuple[int, ...], complex] = {}
        if terms:
            top = max(abs(c) for c in terms.values())
            if top > 0.0:
                for e, c in terms.items():
                    if len(e) != nvars:
                        raise DegenerateInputError(
                            f"exponent {e} has wrong length for {nvars} variables")
                    if abs(c) > COEFF_EPS * top:
                        cleaned[tuple(int(k) for k in e)] = complex(c)
        self.nvars = nvars
        self.terms = cleaned
        self._degree = max((sum(e) for e in cleaned), default=-1)

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c: complex) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "MultiPoly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1.0})

    @classmethod
    def from_coeff_vector(cls, nvars: int, monos: Sequence[tuple[int, ...]],
                          vec: Sequence[complex]) -> "MultiPoly":
        return cls(nvars, {m: v for m, v in zip(monos, vec)})

    # ------------------------------------------------------------------
    # basic queries

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return self._degree

    def is_zero(self) -> bool:
        return not self.terms

    def is_homogeneous(self) -> bool:
        degs = {sum(e) for e in self.terms}
        return len(degs) <= 1

    def norm(self) -> float:
        """Euclidean norm of the coefficient vector."""
        if not self.terms:
            return 0.0
        return float(np.linalg.norm(list(self.terms.values())))

    def monomials(self) -> list[tuple[int, ...]]:
        return sorted(self.terms, key=_grlex_key, reverse=True)

    def coeff_vector(self, monos: Sequence[tuple[int, ...]]) -> np.ndarray:
        return np.array([self.terms.get(m, 0.0) for m in monos], dtype=complex)

    # ------------------------------------------------------------------
    # arithmetic

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        if self.nvars != other.nvars:
            raise DegenerateInputError("variable count mismatch")
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return MultiPoly(self.nvars, terms)

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + (-other)

    def __mul__(self, other) -> "MultiPoly":
        if isinstance(other, (int, float, complex)):
            return MultiPoly(self.nvars,
                             {e: c * other for e, c in self.terms.items()})
        if self.nvars != other.nvars:
            raise DegenerateInputError("variable count mismatch")
        terms: dict[tuple[int, ...], complex] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0.0) + c1 * c2
        return MultiPoly(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiPoly":
        if k < 0:
            raise DegenerateInputError("negative power")
        out = MultiPoly.constant(self.nvars, 1.0)
        for _ in range(k):
            out = out * self
        return out

    # ------------------------------------------------------------------
    # calculus and evaluation

    def diff(self, var: int) -> "MultiPoly":
        """Formal partial derivative with respect to variable `var`."""
        if var >= self.nvars:
            raise DegenerateInputError(f"variable index {var} out of range")
        terms: dict[tuple[int, ...], complex] = {}
        for e, c in self.terms.items():
            if e[var] == 0:
                continue
            e2 = list(e)
            e2[var] -= 1
            terms[tuple(e2)] = c * e[var]
        return MultiPoly(self.nvars, terms)

    def __call__(self, pt: Sequence[complex]) -> complex:
        if len(pt) != self.nvars:
            raise DegenerateInputError(
                f"point has {len(pt)} coordinates, polynomial has {self.nvars}")
        val = 0.0 + 0.0j
        for e, c in self.terms.items():
            term = c
            for xi, ei in zip(pt, e):
                if ei:
                    term *= xi ** ei
            val += term
        return val

    def eval_many(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate at an (N, nvars) array of points; returns shape (N,)."""
        pts = np.asarray(pts)
        out = np.zeros(pts.shape[0], dtype=complex)
        for e, c in self.terms.items():
            term = np.full(pts.shape[0], c, dtype=complex)
            for i, ei in enumerate(e):
                if ei:
                    term = term * pts[:, i] ** ei
            out += term
        return out

    def eval_grid(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Evaluate a 2-variable polynomial on a meshgrid (real arithmetic)."""
        if self.nvars != 2:
            raise DegenerateInputError("eval_grid needs a 2-variable polynomial")
        out = np.zeros_like(X, dtype=float)
        for (ex, ey), c in self.terms.items():
            out += c.real * X ** ex * Y ** ey
        return out

    # ------------------------------------------------------------------
    # substitutions

    def substitute_linear(self, M: np.ndarray) -> "MultiPoly":
        """Return p(M x): each variable replaced by a linear form (rows of M)."""
        M = np.asarray(M, dtype=complex)
        if M.shape != (self.nvars, self.nvars):
            raise DegenerateInputError("substitution matrix has wrong shape")
        lin = [MultiPoly(self.nvars,
                         {tuple(int(i == j) for j in range(self.nvars)): M[r, i]
                          for i in range(self.nvars)})
               for r in range(self.nvars)]
        # cache powers of each linear form up to the largest exponent used
        maxexp = [0] * self.nvars
        for e in self.terms:
            for i, ei in enumerate(e):
                maxexp[i] = max(maxexp[i], ei)
        powers = []
        for i in range(self.nvars):
            ps = [MultiPoly.constant(self.nvars, 1.0)]
            for _ in range(maxexp[i]):
                ps.append(ps[-1] * lin[i])
            powers.append(ps)
        out = MultiPoly.zero(self.nvars)
        for e, c in self.terms.items():
            term = MultiPoly.constant(self.nvars, c)
            for i, ei in enumerate(e):
                if ei:
                    term = term * powers[i][ei]
            out = out + term
        return out

    def set_var(self, var: int, value: complex) -> "MultiPoly":
        """Substitute a constant for one variable; result has nvars-1 variables."""
        terms: dict[tuple[int, ...], complex] = {}
        for e, c in self.terms.items():
            e2 = e[:var] + e[var + 1:]
            terms[e2] = terms.get(e2, 0.0) + c * value ** e[var]
        return MultiPoly(self.nvars - 1, terms)

    def dehomogenize(self) -> "MultiPoly":
        """Set the last variable to 1 (chart at the last coordinate)."""
        return self.set_var(self.nvars - 1, 1.0)

    def homogenize(self, degree: int | None = None) -> "MultiPoly":
        """Pad every term with powers of a new last variable up to `degree`."""
        d = self.degree if degree is None else degree
        if d < self.degree:
            raise DegenerateInputError("homogenization degree below total degree")
        terms = {e + (d - sum(e),): c for e, c in self.terms.items()}
        return MultiPoly(self.nvars + 1, terms)

    def real_part(self) -> "MultiPoly":
        return MultiPoly(self.nvars, {e: c.real for e, c in self.terms.items()})

    def max_imag(self) -> float:
        if not self.terms:
            return 0.0
        return max(abs(c.imag) for c in self.terms.values())

    def __repr__(self) -> str:
        names = "xyzw"[: self.nvars]
        if not self.terms:
            return "MultiPoly(0)"
        bits = []
        for e in self.monomials():
            c = self.terms[e]
            mono = "".join(f"{names[i]}^{k}" if k > 1 else names[i]
                           for i, k in enumerate(e) if k)
            cs = f"{c.real:.6g}" if abs(c.imag) < 1e-12 else f"({c:.6g})"
            bits.append(f"{cs}{mono}" if mono else cs)
        return "MultiPoly(" + " + ".join(bits) + ")"


def jacobian2(f: MultiPoly, g: MultiPoly) -> MultiPoly:
    """f_x g_y - g_x f_y for polynomials in affine (x, y)."""
    return f.diff(0) * g.diff(1) - g.diff(0) * f.diff(1)


# ----------------------------------------------------------------------
# univariate polynomials


class UniPoly:
    """Dense univariate polynomial, coefficients ascending by degree."""

    __slots__ = ("coeffs",)

    TRIM_EPS = 1e-13

    def __init__(self, coeffs: Iterable[complex]):
        c = np.atleast_1d(np.asarray(list(coeffs), dtype=complex))
        top = np.max(np.abs(c)) if c.size else 0.0
        if top > 0.0:
            k = c.size - 1
            while k > 0 and abs(c[k]) <= self.TRIM_EPS * top:
                k -= 1
            c = c[: k + 1]
        else:
            c = np.zeros(1, dtype=complex)
        self.coeffs = c

    @classmethod
    def from_roots(cls, roots: Sequence[complex], lead: complex = 1.0) -> "UniPoly":
        c = np.array([lead], dtype=complex)
        for r in roots:
            c = np.convolve(c, np.array([-r, 1.0], dtype=complex))
        return cls(c)

    @property
    def degree(self) -> int:
        if self.is_zero():
            return -1
        return self.coeffs.size - 1

    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    def __call__(self, t: complex) -> complex:
        val = 0.0 + 0.0j
        for c in self.coeffs[::-1]:
            val = val * t + c
        return val

    def eval_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=complex)
        val = np.zeros_like(ts)
        for c in self.coeffs[::-1]:
            val = val * ts + c
        return val

    def deriv(self) -> "UniPoly":
        if self.coeffs.size == 1:
            return UniPoly([0.0])
        n = np.arange(1, self.coeffs.size)
        return UniPoly(self.coeffs[1:] * n)

    def __add__(self, other: "UniPoly") -> "UniPoly":
        n = max(self.coeffs.size, other.coeffs.size)
        a = np.zeros(n, dtype=complex)
        a[: self.coeffs.size] += self.coeffs
        a[: other.coeffs.size] += other.coeffs
        return UniPoly(a)

    def __neg__(self) -> "UniPoly":
        return UniPoly(-self.coeffs)

    def __sub__(self, other: "UniPoly") -> "UniPoly":
        return self + (-other)

    def __mul__(self, other) -> "UniPoly":
        if isinstance(other, (int, float, complex)):
            return UniPoly(self.coeffs * other)
        return UniPoly(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __repr__(self) -> str:
        return f"UniPoly({np.array2string(self.coeffs, precision=6)})"


def uni_roots(p: UniPoly, cluster_tol: float = CLUSTER_TOL) -> list[tuple[complex, int]]:
    """All complex roots of p with multiplicities from cluster merging.

    Companion-matrix eigenvalues polished by a few Newton steps, then roots
    within `cluster_tol` of each other (after scaling p to unit max
    coefficient) are merged into a single root with summed multiplicity.
    A second pass catches true double roots whose ~sqrt(eps) eigenvalue
    scatter exceeds the cluster window: for any remaining close pair, the
    derivative's root is polished from the pair midpoint and the pair is
    merged only if p itself vanishes there to evaluation precision.  Triple
    and higher multiplicities may come back split, which no caller in this
    package depends on.
    """
    if p.is_zero():
        raise DegenerateInputError("zero polynomial has no well-defined roots")
    if p.degree == 0:
        return []
    c = p.coeffs / np.max(np.abs(p.coeffs))
    raw = np.roots(c[::-1])
    q = UniPoly(c)
    dq = q.deriv()
    polished = []
    for r in raw:
        x = r
        for _ in range(8):
            d = dq(x)
            if abs(d) < 1e-14:
                break
            step = q(x) / d
            if abs(step) > 1.0 + abs(x):
                break
            x_new = x - step
            if abs(q(x_new)) >= abs(q(x)):
                break
            x = x_new
        polished.append(x)
    # greedy clustering
    used = [False] * len(polished)
    out: list[tuple[complex, int]] = []
    for i in range(len(polished)):
        if used[i]:
            continue
        cluster = [polished[i]]
        used[i] = True
        grew = True
        while grew:
            grew = False
            for j in range(len(polished)):
                if used[j]:
                    continue
                if any(abs(polished[j] - z) <= cluster_tol for z in cluster):
                    cluster.append(polished[j])
                    used[j] = True
                    grew = True
        out.append((complex(np.mean(cluster)), len(cluster)))

    # derivative-certified merge of split double roots
    def eval_scale(poly: UniPoly, x: complex) -> float:
        return float(np.sum(np.abs(poly.coeffs)
                            * np.abs(x) ** np.arange(poly.coeffs.size)))

    ddq = dq.deriv()
    i = 0
    while i < len(out):
        j = i + 1
        while j < len(out):
            zi, mi = out[i]
            zj, mj = out[j]
            window = 1e-5 * max(1.0, abs(zi))
            if abs(zi - zj) <= window:
                x = 0.5 * (zi + zj)
                for _ in range(40):
                    d2 = ddq(x)
                    if abs(d2) == 0.0:
                        break
                    step = dq(x) / d2
                    x -= step
                    if abs(step) <= 1e-15 * max(1.0, abs(x)):
                        break
                if abs(x - zi) <= 2.0 * window \
                        and abs(q(x)) <= 1e-12 * eval_scale(q, x):
                    out[i] = (x, mi + mj)
                    del out[j]
                    continue
            j += 1
        i += 1
    out.sort(key=lambda rm: (rm[0].real, rm[0].imag))
    return out


# ----------------------------------------------------------------------
# linear algebra


@dataclass(frozen=True)
class LinearSolveReport:
    """SVD-based rank/nullspace report for a complex matrix."""

    shape: tuple[int, int]
    singular_values: np.ndarray
    rank: int
    nullspace: np.ndarray  # (cols, nullity), orthonormal columns
    tol: float

    @property
    def nullity(self) -> int:
        return self.nullspace.shape[1]


def nullspace(M: np.ndarray, tol: float = RANK_TOL) -> LinearSolveReport:
    """Numerical rank and orthonormal nullspace basis of M.

    Rank counts singular values above tol times the largest one; the
    nullspace basis consists of the trailing right singular vectors.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if M.shape[1] == 0:
        raise DegenerateInputError("matrix has no columns")
    if M.shape[0] == 0:
        n = M.shape[1]
        return LinearSolveReport(shape=(0, n), singular_values=np.zeros(0),
                                 rank=0, nullspace=np.eye(n, dtype=complex),
                                 tol=tol)
    _, s, vh = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    ns = vh[rank:].conj().T
    return LinearSolveReport(shape=M.shape, singular_values=s, rank=rank,
                             nullspace=ns, tol=tol)


def normalize_phase(vec: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Unit 2-norm with the first sufficiently large entry made real positive."""
    v = np.asarray(vec, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        return v
    v = v / nrm
    idx = int(np.argmax(np.abs(v) > eps)) if np.any(np.abs(v) > eps) else 0
    lead = v[idx]
    if abs(lead) > 0:
        v = v * (abs(lead) / lead)
    return v


def resultant_wrt_last(f: MultiPoly, g: MultiPoly) -> UniPoly:
    """Resultant of two 2-variable polynomials with respect to the second
    variable, as a univariate polynomial in the first.

    Computed by sampled Sylvester determinants and interpolation; degrees in
    this package stay small enough that the Vandermonde solve is benign.
    """
    if f.nvars != 2 or g.nvars != 2:
        raise DegenerateInputError("resultant needs 2-variable polynomials")
    dyf = max((e[1] for e in f.terms), default=0)
    dyg = max((e[1] for e in g.terms), default=0)
    if dyf == 0 or dyg == 0:
        raise DegenerateInputError("one input is constant in the eliminated variable")
    dbound = f.degree * g.degree
    n = dbound + 1
    # sample on a circle to keep the Vandermonde system well conditioned
    ts = np.exp(2j * np.pi * np.arange(n) / n) * 1.07
    vals = np.empty(n, dtype=complex)
    for k, t in enumerate(ts):
        fc = np.zeros(dyf + 1, dtype=complex)
        gc = np.zeros(dyg + 1, dtype=complex)
        for (ex, ey), c in f.terms.items():
            fc[ey] += c * t ** ex
        for (ex, ey), c in g.terms.items():
            gc[ey] += c * t ** ex
        vals[k] = _sylvester_det(fc, gc)
    V = np.vander(ts, n, increasing=True)
    coeffs = np.linalg.solve(V, vals)
    return UniPoly(coeffs)


def _sylvester_det(fc: np.ndarray, gc: np.ndarray) -> complex:
    m = fc.size - 1
    n = gc.size - 1
    size = m + n
    S = np.zeros((size, size), dtype=complex)
    for i in range(n):
        S[i, i: i + m + 1] = fc[::-1]
    for i in range(m):
        S[n + i, i: i + n + 1] = gc[::-1]
    return complex(np.linalg.det(S))
