"""Exact-rational Perron-Frobenius engine.

Matrices are square, nonnegative and integer; vectors and scalars are
``fractions.Fraction``.  Nothing in here touches floating point, so every
inequality reported is exact.

Indices are 0-based throughout the Python API.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import networkx as nx

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    LemmaViolation,
    NotIrreducible,
    PreconditionFailed,
    SubmatrixNotIrreducible,
)

Rational = Fraction

DEFAULT_MAX_ITERATIONS = 500
DEFAULT_TARGET_WIDTH = Fraction(1, 10**9)


def rational(x) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings. Floats are refused."""
    if isinstance(x, bool) or isinstance(x, float):
        raise TypeError(f"refusing to build an exact rational from {x!r}")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(operator.index(x))


@dataclass(frozen=True)
class IncidenceMatrix:
    """Square nonnegative integer matrix, stored as a tuple of row tuples."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(_nonneg_int(x) for x in row) for row in self.rows)
        n = len(rows)
        if n == 0:
            raise DimensionMismatch("incidence matrix must have dimension >= 1")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise DimensionMismatch(
                    f"row {i} has length {len(row)}, expected {n} (matrix must be square)"
                )
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __len__(self):
        return len(self.rows)

    def __matmul__(self, other: "IncidenceMatrix") -> "IncidenceMatrix":
        other = as_matrix(other)
        _same_dim(self.n, other.n)
        cols = list(zip(*other.rows))
        return IncidenceMatrix(
            tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in self.rows
        )

    def apply(self, v: Sequence) -> tuple:
        """Matrix-vector product ``M v``."""
        _same_dim(self.n, len(v))
        return tuple(sum(a * x for a, x in zip(row, v) if a) for row in self.rows)

    def left_apply(self, r: Sequence) -> tuple:
        """Row-vector product ``r M``."""
        _same_dim(self.n, len(r))
        out = [0] * self.n
        for k, rk in enumerate(r):
            if rk:
                for j, a in enumerate(self.rows[k]):
                    if a:
                        out[j] += rk * a
        return tuple(out)

    def power(self, p: int) -> "IncidenceMatrix":
        if p < 0:
            raise ValueError("negative power")
        result = identity(self.n)
        base = self
        while p:
            if p & 1:
                result = result @ base
            base = base @ base
            p >>= 1
        return result

    def tolist(self) -> list:
        return [list(row) for row in self.rows]

    def __repr__(self):
        return f"IncidenceMatrix({self.tolist()!r})"


def _nonneg_int(x) -> int:
    if isinstance(x, bool):
        raise TypeError("booleans are not matrix entries")
    x = operator.index(x)
    if x < 0:
        raise ValueError(f"negative entry {x}")
    return x


def _same_dim(n, m):
    if n != m:
        raise DimensionMismatch(f"dimension {n} does not match {m}")


def as_matrix(m) -> IncidenceMatrix:
    return m if isinstance(m, IncidenceMatrix) else IncidenceMatrix(m)


def identity(n: int) -> IncidenceMatrix:
    return IncidenceMatrix(tuple(int(i == j) for j in range(n)) for i in range(n))


def zeros(n: int) -> IncidenceMatrix:
    return IncidenceMatrix(((0,) * n for _ in range(n)))


def weight_vector(v: Iterable, n: int | None = None) -> tuple:
    """Validate a nonnegative, nonzero rational vector (optionally of length n)."""
    out = tuple(rational(x) for x in v)
    if n is not None and len(out) != n:
        raise DimensionMismatch(f"weight vector has length {len(out)}, expected {n}")
    if any(x < 0 for x in out):
        raise ValueError("weight vector has a negative entry")
    if not any(out):
        raise ValueError("weight vector is identically zero")
    return out


def index_subset(indices: Iterable[int], n: int) -> tuple:
    out = tuple(operator.index(i) for i in indices)
    if not out:
        raise IndexOutOfRange("index subset must be nonempty")
    for a, b in zip(out, out[1:]):
        if a >= b:
            raise IndexOutOfRange(f"index subset {out} is not strictly increasing")
    if out[0] < 0 or out[-1] >= n:
        raise IndexOutOfRange(f"index subset {out} not within 0..{n - 1}")
    return out


def _check_index(i: int, n: int) -> int:
    i = operator.index(i)
    if not 0 <= i < n:
        raise IndexOutOfRange(f"index {i} not within 0..{n - 1}")
    return i


# --------------------------------------------------------------------------
# Graph structure


def incidence_digraph(m) -> nx.DiGraph:
    m = as_matrix(m)
    g = nx.DiGraph()
    g.add_nodes_from(range(m.n))
    g.add_edges_from((i, j) for i, row in enumerate(m.rows) for j, a in enumerate(row) if a)
    return g


def is_irreducible(m) -> bool:
    """True iff every ordered pair (i, j) is joined by a walk of length >= 1.

    For n >= 2 this is strong connectivity of the digraph with an edge
    i -> j whenever M[i, j] > 0.  A 1x1 matrix is irreducible iff its entry
    is positive.
    """
    m = as_matrix(m)
    if m.n == 1:
        return m.rows[0][0] > 0
    return nx.is_strongly_connected(incidence_digraph(m))


def scc_decompose(m) -> list:
    """Strongly connected components, each sorted, ordered by smallest member."""
    comps = nx.strongly_connected_components(incidence_digraph(m))
    return sorted((tuple(sorted(c)) for c in comps), key=lambda c: c[0])


def first_reach(m, j: int, target: int = 0) -> int:
    """Smallest q >= 1 with (M^q)[j, target] > 0.

    The search is capped at n steps; a longer search means M is not
    irreducible.
    """
    m = as_matrix(m)
    j = _check_index(j, m.n)
    target = _check_index(target, m.n)
    frontier = {k for k, a in enumerate(m.rows[j]) if a}
    for q in range(1, m.n + 1):
        if target in frontier:
            return q
        frontier = {l for k in frontier for l, a in enumerate(m.rows[k]) if a}
    raise NotIrreducible(f"no walk of length <= {m.n} from {j} to {target}")


# --------------------------------------------------------------------------
# Collatz-Wielandt bracketing


@dataclass(frozen=True)
class PerronCertificate:
    """Certified bracket ``lower <= lambda(M) <= upper``.

    ``lower`` and ``upper`` are the min and max of (M w)_i / w_i over the
    stored witness w, so the certificate can be re-checked with
    :meth:`verify` without redoing the iteration.
    """

    lower: Fraction
    upper: Fraction
    witness: tuple
    iterations: int
    converged: bool = True

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def verify(self, m) -> bool:
        m = as_matrix(m)
        w = self.witness
        if len(w) != m.n or any(x <= 0 for x in w):
            return False
        ratios = [Fraction(y) / x for y, x in zip(m.apply(w), w)]
        return min(ratios) == self.lower and max(ratios) == self.upper

    def contains(self, x) -> bool:
        return self.lower <= x <= self.upper


class _Iterate:
    """Integer state of power iteration on M + I.

    Only integers are stored; ratios are compared by cross-multiplication,
    and Fractions are built only when a certificate is requested.
    """

    __slots__ = ("m", "w", "mw", "lo", "hi", "iterations")

    def __init__(self, m: IncidenceMatrix, w: list):
        self.m = m
        self.w = w
        self.iterations = 0
        self._bracket()

    def _bracket(self):
        w = self.w
        mw = list(self.m.apply(w))
        lo = hi = 0
        for i in range(1, len(w)):
            if mw[i] * w[lo] < mw[lo] * w[i]:
                lo = i
            if mw[i] * w[hi] > mw[hi] * w[i]:
                hi = i
        self.mw, self.lo, self.hi = mw, lo, hi

    def step(self):
        self.w = [a + b for a, b in zip(self.mw, self.w)]
        self.iterations += 1
        self._bracket()

    def width_below(self, target: Fraction) -> bool:
        w, mw, lo, hi = self.w, self.mw, self.lo, self.hi
        diff = mw[hi] * w[lo] - mw[lo] * w[hi]
        return target.denominator * diff < target.numerator * w[hi] * w[lo]

    def upper_below(self, x: Fraction) -> bool:
        return self.mw[self.hi] * x.denominator < x.numerator * self.w[self.hi]

    def lower_at_least(self, x: Fraction) -> bool:
        return self.mw[self.lo] * x.denominator >= x.numerator * self.w[self.lo]

    def upper_below_lower_of(self, other: "_Iterate") -> bool:
        return self.mw[self.hi] * other.w[other.lo] < other.mw[other.lo] * self.w[self.hi]

    def lower_at_least_upper_of(self, other: "_Iterate") -> bool:
        return self.mw[self.lo] * other.w[other.hi] >= other.mw[other.hi] * self.w[self.lo]

    def certificate(self, converged=True) -> PerronCertificate:
        g = 0
        for x in self.w:
            g = _gcd(g, x)
        w = tuple(Fraction(x // g) for x in self.w)
        return PerronCertificate(
            lower=Fraction(self.mw[self.lo], self.w[self.lo]),
            upper=Fraction(self.mw[self.hi], self.w[self.hi]),
            witness=w,
            iterations=self.iterations,
            converged=converged,
        )


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _start(m: IncidenceMatrix, start) -> _Iterate:
    if start is None:
        return _Iterate(m, [1] * m.n)
    v = weight_vector(start, m.n)
    den = 1
    for x in v:
        den = den * x.denominator // _gcd(den, x.denominator)
    w = [int(x * den) for x in v]
    # M + I is primitive, so at most n - 1 steps make the vector positive.
    steps = 0
    while any(x == 0 for x in w):
        if steps >= m.n:
            raise NotIrreducible("start vector never became positive")
        mw = m.apply(w)
        w = [a + b for a, b in zip(mw, w)]
        steps += 1
    it = _Iterate(m, w)
    it.iterations = steps
    return it


def _require_irreducible(m, exc=NotIrreducible):
    if not is_irreducible(m):
        raise exc(f"matrix {m.tolist()} is not irreducible")


def iter_perron(m, start=None) -> Iterator[PerronCertificate]:
    """Yield the certificate of every iterate, starting with the start vector."""
    m = as_matrix(m)
    _require_irreducible(m)
    it = _start(m, start)
    while True:
        yield it.certificate()
        it.step()


def perron_bounds(
    m,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    target_width=DEFAULT_TARGET_WIDTH,
    start=None,
) -> PerronCertificate:
    """Bracket the spectral radius of an irreducible matrix.

    Power iteration runs on M + I (which is primitive, so periodic inputs
    converge too) and the Collatz-Wielandt ratios of M itself are reported.
    Iteration stops once ``upper - lower < target_width``; if that does not
    happen within ``max_iterations`` the returned certificate is still valid
    but has ``converged=False``.
    """
    m = as_matrix(m)
    _require_irreducible(m)
    target = rational(target_width)
    it = _start(m, start)
    while not it.width_below(target):
        if it.iterations >= max_iterations:
            return it.certificate(converged=False)
        it.step()
    return it.certificate()


def certify_below(m, lam, start=None, max_iterations: int = 10_000):
    """Iterate until the upper bound drops strictly below ``lam``.

    Returns the certificate, or None if the cap is hit or the lower bound
    reaches ``lam`` first (in which case no strict separation exists).
    """
    m = as_matrix(m)
    _require_irreducible(m)
    lam = rational(lam)
    it = _start(m, start)
    while not it.upper_below(lam):
        if it.lower_at_least(lam) or it.iterations >= max_iterations:
            return None
        it.step()
    return it.certificate()


def zero_certificate() -> PerronCertificate:
    """Certificate for the 1x1 zero matrix (spectral radius 0)."""
    return PerronCertificate(Fraction(0), Fraction(0), (Fraction(1),), 0)


# --------------------------------------------------------------------------
# Subinvariance


@dataclass(frozen=True)
class SubinvarianceReport:
    holds: bool
    strict_indices: tuple = ()
    violated_indices: tuple = ()


@dataclass(frozen=True)
class DominationReport(SubinvarianceReport):
    """Adds the indices where the dominated product itself is strict."""

    dominated_strict: tuple = field(default=())


def _compare(lhs, rhs) -> SubinvarianceReport:
    strict = tuple(i for i, (a, b) in enumerate(zip(lhs, rhs)) if a < b)
    violated = tuple(i for i, (a, b) in enumerate(zip(lhs, rhs)) if a > b)
    return SubinvarianceReport(not violated, strict, violated)


def _power_apply(m: IncidenceMatrix, v, p: int):
    for _ in range(p):
        v = m.apply(v)
    return v


def check_subinvariance(m, v, lam) -> SubinvarianceReport:
    """Compare ``M v`` with ``lam * v`` entrywise."""
    m = as_matrix(m)
    v = weight_vector(v, m.n)
    lam = rational(lam)
    return _compare(m.apply(v), [lam * x for x in v])


def power_subinvariance(m, v, lam, p: int) -> SubinvarianceReport:
    """Report for ``M^p v`` against ``lam^p v`` given ``M v <= lam v``."""
    m = as_matrix(m)
    v = weight_vector(v, m.n)
    lam = rational(lam)
    if p < 1:
        raise ValueError("power must be >= 1")
    if not _compare(m.apply(v), [lam * x for x in v]).holds:
        raise PreconditionFailed("M v <= lam v does not hold")
    report = _compare(_power_apply(m, v, p), [lam**p * x for x in v])
    if not report.holds:
        raise LemmaViolation(
            f"M^{p} v exceeds lam^{p} v at {report.violated_indices} although M v <= lam v"
        )
    return report


def dominated_power_check(n_mat, m, v, lam, p: int) -> DominationReport:
    """Check ``N^p v <= M^p v <= lam^p v`` given ``N v <= M v <= lam v``.

    ``strict_indices`` are those with ``(M^p v)_i < lam^p v_i``;
    ``dominated_strict`` those with ``(N^p v)_i < lam^p v_i``.
    """
    n_mat, m = as_matrix(n_mat), as_matrix(m)
    _same_dim(n_mat.n, m.n)
    v = weight_vector(v, m.n)
    lam = rational(lam)
    if p < 1:
        raise ValueError("power must be >= 1")
    mv = m.apply(v)
    if not _compare(n_mat.apply(v), mv).holds:
        raise PreconditionFailed("N v <= M v does not hold")
    if not _compare(mv, [lam * x for x in v]).holds:
        raise PreconditionFailed("M v <= lam v does not hold")
    npv = _power_apply(n_mat, v, p)
    mpv = _power_apply(m, v, p)
    bound = [lam**p * x for x in v]
    upper = _compare(mpv, bound)
    lower = _compare(npv, mpv)
    if not (upper.holds and lower.holds):
        raise LemmaViolation(f"N^{p} v <= M^{p} v <= lam^{p} v fails")
    n_strict = _compare(npv, bound).strict_indices
    if not set(upper.strict_indices) <= set(n_strict):
        raise LemmaViolation("strictness of M^p v did not pass to N^p v")
    return DominationReport(True, upper.strict_indices, (), n_strict)


# --------------------------------------------------------------------------
# Submatrices and row moves


def submatrix(m, indices) -> IncidenceMatrix:
    """Keep the rows and columns listed in ``indices``."""
    m = as_matrix(m)
    idx = index_subset(indices, m.n)
    return IncidenceMatrix(tuple(m.rows[a][b] for b in idx) for a in idx)


def extract(v, indices) -> tuple:
    v = tuple(rational(x) for x in v)
    idx = index_subset(indices, len(v))
    return tuple(v[a] for a in idx)


def submatrix_strict_drop(m, indices, v, lam, p_max: int):
    """Find the least p <= p_max and an index i in ``indices`` with
    ``(M^p v)_i < lam^p v_i``.

    Such a witness proves that the (irreducible) submatrix on ``indices`` has
    spectral radius strictly below ``lam``.  Returns ``(p, i)`` or None.
    """
    m = as_matrix(m)
    v = weight_vector(v, m.n)
    lam = rational(lam)
    idx = index_subset(indices, m.n)
    if not _compare(m.apply(v), [lam * x for x in v]).holds:
        raise PreconditionFailed("M v <= lam v does not hold")
    if not is_irreducible(submatrix(m, idx)):
        raise SubmatrixNotIrreducible(f"submatrix on {idx} is not irreducible")
    cur = v
    scale = Fraction(1)
    for p in range(1, p_max + 1):
        cur = m.apply(cur)
        scale *= lam
        for i in idx:
            if cur[i] < scale * v[i]:
                return p, i
    return None


def row_copy(m, src: int, dst: int) -> IncidenceMatrix:
    """Replace row ``dst`` by a copy of row ``src``."""
    m = as_matrix(m)
    src = _check_index(src, m.n)
    dst = _check_index(dst, m.n)
    rows = list(m.rows)
    rows[dst] = rows[src]
    return IncidenceMatrix(tuple(rows))


def propagation_check(m, mbar) -> bool:
    """For M irreducible and Mbar differing from M only in row 0, check that
    row j of Mbar^p equals row j of M^p for every j >= 1 and every
    1 <= p <= first_reach(M, j).
    """
    m, mbar = as_matrix(m), as_matrix(mbar)
    _same_dim(m.n, mbar.n)
    _require_irreducible(m)
    for j in range(1, m.n):
        if m.rows[j] != mbar.rows[j]:
            raise PreconditionFailed(f"row {j} differs; only row 0 may change")
    for j in range(1, m.n):
        q = first_reach(m, j)
        rm = rb = tuple(int(k == j) for k in range(m.n))
        for _ in range(q):
            rm = m.left_apply(rm)
            rb = mbar.left_apply(rb)
            if rm != rb:
                return False
    return True
