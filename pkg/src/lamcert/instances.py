"""Seeded random instances within documented size envelopes.

Every generator takes a ``random.Random`` so runs are reproducible.
"""
from __future__ import annotations

import random
from fractions import Fraction

from . import pfcore
from .discs import DiscSystem, Enlargement, LayeredFamily, incidence_matrix
from .documents import LayeredCase, SubinvarianceCase
from .pfcore import IncidenceMatrix


def irreducible_matrix(rng: random.Random, n_max: int = 6, entry_max: int = 3,
                       n_min: int = 1) -> IncidenceMatrix:
    """Random irreducible matrix; a random Hamiltonian cycle guarantees irreducibility."""
    n = rng.randint(n_min, n_max)
    rows = [[rng.randint(0, entry_max) if rng.random() < 0.4 else 0 for _ in range(n)]
            for _ in range(n)]
    perm = list(range(n))
    rng.shuffle(perm)
    for a, b in zip(perm, perm[1:] + perm[:1]):
        if rows[a][b] == 0:
            rows[a][b] = rng.randint(1, entry_max)
    return IncidenceMatrix(rows)


def positive_vector(rng, n, denom: int = 6) -> tuple:
    return tuple(Fraction(rng.randint(1, 3 * denom), denom) for _ in range(n))


def subinvariant_case(rng, n_max: int = 6, entry_max: int = 3, slack: bool = False):
    """(M, v, lam) with M v <= lam v and equality at some index.

    With ``slack`` the bound is raised by a random positive amount, so every
    index is strict.
    """
    m = irreducible_matrix(rng, n_max, entry_max)
    v = positive_vector(rng, m.n)
    lam = max(Fraction(y) / x for y, x in zip(m.apply(v), v))
    if slack:
        lam += Fraction(rng.randint(1, 4), 8)
    return SubinvarianceCase(m, v, lam)


def dominated(rng, m: IncidenceMatrix) -> IncidenceMatrix:
    """Entrywise 0 <= N <= M."""
    return IncidenceMatrix([[rng.randint(0, a) for a in row] for row in m.rows])


def replace_first_row(rng, m: IncidenceMatrix, entry_max: int = 3) -> IncidenceMatrix:
    rows = m.tolist()
    rows[0] = [rng.randint(0, entry_max) if rng.random() < 0.5 else 0 for _ in range(m.n)]
    return IncidenceMatrix(rows)


def submatrix_case(rng, n_max: int = 6, entry_max: int = 3, p_max: int = 64, tries: int = 200):
    """Subinvariant (M, v, lam) with an irreducible principal submatrix and a strict drop.

    Returns (case, indices, (p, i)); raises RuntimeError if nothing is found.
    """
    for _ in range(tries):
        case = subinvariant_case(rng, n_max, entry_max)
        n = case.matrix.n
        if n < 2:
            continue
        size = rng.randint(1, n - 1)
        idx = tuple(sorted(rng.sample(range(n), size)))
        if not pfcore.is_irreducible(pfcore.submatrix(case.matrix, idx)):
            continue
        drop = pfcore.submatrix_strict_drop(case.matrix, idx, case.v, case.lam, p_max)
        if drop is not None:
            return case, idx, drop
    raise RuntimeError("no submatrix instance found")


# -- disc systems ------------------------------------------------------------


def regular_base(rng, k_max: int = 4, row_sum_max: int = 3) -> DiscSystem:
    """Irreducible base system whose rows all sum to r >= 2, with v = 1 and lam = r."""
    k = rng.randint(1, k_max)
    r = rng.randint(2, row_sum_max)
    labels = tuple(f"E{i + 1}" for i in range(k))
    while True:
        perm = list(range(k))
        rng.shuffle(perm)
        nxt = {a: b for a, b in zip(perm, perm[1:] + perm[:1])}
        incidence = {}
        for i, x in enumerate(labels):
            targets = [labels[nxt[i]]] + [labels[rng.randrange(k)] for _ in range(r - 1)]
            incidence[x] = targets
        system = DiscSystem(labels, incidence, (1,) * k, r)
        if pfcore.is_irreducible(incidence_matrix(system)):
            return system


def _pick(rng, pool, budget, weights):
    """Random multiset from ``pool`` whose weighted sum stays within ``budget``."""
    out, total = [], Fraction(0)
    for _ in range(rng.randint(0, 3)):
        x = rng.choice(pool)
        if total + weights[x] <= budget:
            out.append(x)
            total += weights[x]
    return out, total


def enlargement(rng, k_max: int = 4, new_max: int = 3) -> Enlargement:
    """Random valid enlargement with exact equality in every non-tightening row.

    Each new disc is carried by at least one base disc and by earlier new
    discs; its weight is the carried total divided by lam.  The tightening
    disc is carried by a single base disc and weighs 1/lam < 1.
    """
    base = regular_base(rng, k_max)
    lam = base.lam
    weights = dict(zip(base.labels, base.weights))
    new, new_w, incidence = [], [], {}
    for i in range(rng.randint(0, new_max - 1)):
        label = f"X{i + 1}"
        first = rng.choice(base.labels)
        extra = [rng.choice(base.labels + tuple(new)) for _ in range(rng.randint(0, 2))]
        carried = [first] + extra
        w = sum(weights[x] for x in carried) / lam
        new.append(label)
        new_w.append(w)
        weights[label] = w
        incidence[label] = carried
    new.append("D")
    new_w.append(Fraction(1) / lam)
    incidence["D"] = [rng.choice(base.labels)]
    e = Enlargement(base, tuple(new), tuple(new_w), incidence)
    e.validate()
    return e


def layered_case(rng, k_max: int = 3, height_max: int = 3, width_max: int = 2) -> LayeredCase:
    """Random layered family satisfying W u = lam u, plus a non-increasing update."""
    base = regular_base(rng, k_max)
    lam = base.lam
    weights = dict(zip(base.labels, base.weights))
    h = rng.randint(1, height_max)
    layers, carried = [], {}
    above = ()
    for level in range(h, 0, -1):
        size = rng.randint(1, width_max)
        layer = []
        for j in range(size):
            is_delta = level == 1 and j == size - 1
            label = "D" if is_delta else f"S{level - 1}_{j + 1}"
            if is_delta:
                targets = [rng.choice(base.labels)]
            else:
                targets = [rng.choice(base.labels)] + [
                    rng.choice(base.labels + above) for _ in range(rng.randint(0, 2))
                ]
            carried[label] = targets
            weights[label] = sum(weights[x] for x in targets) / lam
            layer.append(label)
        layers.append(tuple(layer))
        above = tuple(layer)
    family = LayeredFamily(base, tuple(layers), carried, {s: weights[s] for s in carried})
    bottom = layers[-1]
    pool = base.labels + bottom
    d_update = {}
    for s in bottom:
        budget = lam * weights[s]
        first = rng.choice(base.labels)
        rest, _ = _pick(rng, pool, budget - weights[first], weights)
        d_update[s] = [first] + rest
    return LayeredCase(family, d_update)
