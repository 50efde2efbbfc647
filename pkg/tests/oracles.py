"""Independent oracles used to freeze expected values and check the engine.

Nothing here imports lamcert; each oracle takes a different route from the
code it checks.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import sympy


def charpoly(rows):
    """Integer coefficients of det(xI - M), leading first (sympy Berkowitz)."""
    return [int(c) for c in sympy.Matrix(rows).charpoly().all_coeffs()]


def _horner(coeffs, x):
    acc = Fraction(0)
    for c in coeffs:
        acc = acc * x + c
    return acc


def _polyrem(a, b):
    a = [Fraction(c) for c in a]
    while len(a) >= len(b) and any(a):
        f = a[0] / b[0]
        for i in range(len(b)):
            a[i] -= f * b[i]
        a.pop(0)
    while a and a[0] == 0:
        a.pop(0)
    return a


def sturm_chain(coeffs):
    p0 = [Fraction(c) for c in coeffs]
    deg = len(p0) - 1
    p1 = [c * (deg - i) for i, c in enumerate(p0[:-1])]
    chain = [p0, p1]
    while len(chain[-1]) > 1:
        r = _polyrem(chain[-2], chain[-1])
        if not r:
            break
        chain.append([-c for c in r])
    return chain


def _sign_changes(chain, x):
    signs = [s for s in (_horner(p, x) for p in chain) if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def largest_root_bracket(rows, tol=Fraction(1, 10**12)):
    """Bisect on the characteristic polynomial to bracket its largest real root.

    Sturm counts keep the invariant "a root lies in (lo, hi] and none above
    hi".  Returns (lo, hi) with hi - lo < tol.
    """
    coeffs = charpoly(rows)
    chain = sturm_chain(coeffs)
    hi = Fraction(max(sum(r) for r in rows) + 1)
    # rational roots of a monic integer polynomial are integers, and the
    # Perron root of an irreducible integer matrix is >= 1
    lo = Fraction(1, 2)
    v_hi = _sign_changes(chain, hi)
    assert _sign_changes(chain, lo) - v_hi >= 1
    while hi - lo >= tol:
        mid = (lo + hi) / 2
        if _sign_changes(chain, mid) - v_hi >= 1:
            lo = mid
        else:
            hi = mid
            v_hi = _sign_changes(chain, hi)
    return lo, hi


def perron_root_float(rows):
    lo, hi = largest_root_bracket(rows, Fraction(1, 10**14))
    return float((lo + hi) / 2)


def irreducible_bruteforce(rows):
    """Every (i, j) reachable by a walk of length 1..n, via boolean powers."""
    n = len(rows)
    adj = [[bool(x) for x in r] for r in rows]
    reach = [r[:] for r in adj]
    cur = [r[:] for r in adj]
    for _ in range(n - 1):
        cur = [[any(cur[i][k] and adj[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        reach = [[reach[i][j] or cur[i][j] for j in range(n)] for i in range(n)]
    return all(all(r) for r in reach)


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def matpow(a, p):
    n = len(a)
    out = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(p):
        out = matmul(out, a)
    return out


def matvec(a, v):
    return [sum(a[i][k] * v[k] for k in range(len(v))) for i in range(len(a))]


def all_subsets(n):
    for size in range(1, n + 1):
        yield from combinations(range(n), size)


def weighted_sum_oracle(counts, weights, lam, level):
    """Expand the multiset into components and add each weight separately."""
    components = [i for i, c in enumerate(counts) for _ in range(c)]
    total = Fraction(0)
    for i in components:
        total += Fraction(lam) ** level * Fraction(weights[i])
    return total


def largest_root_in(rows, lo, hi):
    """Exact: the largest real root of det(xI - M) lies in [lo, hi]."""
    lo, hi = Fraction(lo), Fraction(hi)
    coeffs = charpoly(rows)
    chain = sturm_chain(coeffs)
    top = Fraction(max(sum(r) for r in rows) + 1)
    v_hi = _sign_changes(chain, hi)
    if hi < top and v_hi - _sign_changes(chain, top) > 0:
        return False
    return _horner(coeffs, lo) == 0 or _sign_changes(chain, lo) - v_hi >= 1
