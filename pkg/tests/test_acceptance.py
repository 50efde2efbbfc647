"""Acceptance suite: nine criteria, each checked against an independent oracle.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints one
PASS/FAIL line per criterion.
"""
import random
import time
from fractions import Fraction

import pytest

from lamcert import discs, instances, pfcore, pushaway
from lamcert.discs import DiscSystem, Enlargement, weighted_intersection

import oracles

WIDTH_1 = Fraction(1, 10**9)
WIDTH_5 = Fraction(1, 10**6)


def _report(number, ok, detail):
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


# 1 -----------------------------------------------------------------------------


@pytest.mark.acceptance(1, "Perron oracle agreement (1000 matrices, width < 1e-9, <= 500 its, < 30 s)")
def test_perron_oracle_agreement():
    rng = random.Random(1001)
    mats = [instances.irreducible_matrix(rng, 6, 3) for _ in range(1000)]
    t0 = time.perf_counter()
    certs = [pfcore.perron_bounds(m, max_iterations=500, target_width=WIDTH_1) for m in mats]
    elapsed = time.perf_counter() - t0
    bad = []
    for m, c in zip(mats, certs):
        ok = (
            c.converged
            and c.iterations <= 500
            and c.width < WIDTH_1
            and c.verify(m)
            and oracles.largest_root_in(m.tolist(), c.lower, c.upper)
        )
        if not ok:
            bad.append((m.tolist(), c))
    _report(1, not bad and elapsed < 30, f"{len(bad)} failures, engine time {elapsed:.2f}s")
    assert not bad, bad[:3]
    assert elapsed < 30


# 2 -----------------------------------------------------------------------------


def _subinvariance_instances():
    rng = random.Random(2002)
    out = []
    for i in range(500):
        if i % 10 == 0:
            # exact eigenvector: no strict index
            base = instances.regular_base(rng, 5)
            out.append((discs.incidence_matrix(base), base.weights, base.lam))
        else:
            c = instances.subinvariant_case(rng, slack=i % 3 == 0)
            out.append((c.matrix, c.v, c.lam))
    return out


@pytest.mark.acceptance(2, "Subinvariance: certified upper <= lambda, < lambda with a strict index")
def test_subinvariance():
    bad = []
    strict_count = 0
    for m, v, lam in _subinvariance_instances():
        rep = pfcore.check_subinvariance(m, v, lam)
        assert rep.holds
        cert = pfcore.perron_bounds(m, start=v)
        # Sturm oracle: lambda(M) <= lam
        oracle_ok = oracles.largest_root_in(m.tolist(), 0, lam)
        if not (cert.upper <= lam and cert.verify(m) and oracle_ok):
            bad.append(("upper", m.tolist(), v, lam))
        if rep.strict_indices:
            strict_count += 1
            below = pfcore.certify_below(m, lam, start=v)
            if below is None or not below.upper < lam or not below.verify(m):
                bad.append(("strict", m.tolist(), v, lam))
    _report(2, not bad, f"{len(bad)} failures over 500 instances ({strict_count} with a strict index)")
    assert strict_count > 300
    assert not bad, bad[:3]


# 3 -----------------------------------------------------------------------------


@pytest.mark.acceptance(3, "Power lemmas for all p <= 8 (500 instances)")
def test_power_lemmas():
    rng = random.Random(3003)
    violations = []
    for _ in range(500):
        c = instances.subinvariant_case(rng)
        n_mat = instances.dominated(rng, c.matrix)
        rows, nrows = c.matrix.tolist(), n_mat.tolist()
        for p in range(1, 9):
            rep = pfcore.power_subinvariance(c.matrix, c.v, c.lam, p)
            dom = pfcore.dominated_power_check(n_mat, c.matrix, c.v, c.lam, p)
            mp = oracles.matvec(oracles.matpow(rows, p), list(c.v))
            np_ = oracles.matvec(oracles.matpow(nrows, p), list(c.v))
            bound = [c.lam**p * x for x in c.v]
            expected_strict = tuple(i for i, (a, b) in enumerate(zip(mp, bound)) if a < b)
            if not (
                rep.holds
                and dom.holds
                and all(a <= b for a, b in zip(mp, bound))
                and all(a <= b for a, b in zip(np_, mp))
                and rep.strict_indices == expected_strict
            ):
                violations.append((rows, nrows, c.v, c.lam, p))
    _report(3, not violations, f"{len(violations)} violations over 500 x 8 checks")
    assert not violations, violations[:3]


# 4 -----------------------------------------------------------------------------


def _first_reach_oracle(rows, j):
    n = len(rows)
    for q in range(1, n + 1):
        if oracles.matpow(rows, q)[j][0] > 0:
            return q
    raise AssertionError("not irreducible")


@pytest.mark.acceptance(4, "Propagation lemma (500 matrices, n <= 8)")
def test_propagation():
    rng = random.Random(4004)
    failures = []
    for _ in range(500):
        m = instances.irreducible_matrix(rng, 8, 3)
        mbar = instances.replace_first_row(rng, m)
        ok = pfcore.propagation_check(m, mbar)
        rows, brows = m.tolist(), mbar.tolist()
        for j in range(1, m.n):
            q = _first_reach_oracle(rows, j)
            for p in range(1, q + 1):
                if oracles.matpow(rows, p)[j] != oracles.matpow(brows, p)[j]:
                    ok = False
        if not ok:
            failures.append((rows, brows))
    _report(4, not failures, f"{len(failures)} failures over 500 instances")
    assert not failures, failures[:3]


# 5 -----------------------------------------------------------------------------


@pytest.mark.acceptance(5, "Submatrix corollary: separation at width 1e-6 (200 instances)")
def test_submatrix_corollary():
    rng = random.Random(5005)
    unseparated, reached = [], 0
    for _ in range(200):
        case, idx, (p, i) = instances.submatrix_case(rng)
        assert i in idx
        sub = pfcore.submatrix(case.matrix, idx)
        cert = pfcore.perron_bounds(sub, max_iterations=100_000, target_width=WIDTH_5,
                                    start=pfcore.extract(case.v, idx))
        if not cert.converged:
            continue
        reached += 1
        rows = sub.tolist()
        if not (cert.upper < case.lam and oracles.largest_root_in(rows, cert.lower, cert.upper)):
            unseparated.append((case.matrix.tolist(), idx, case.v, case.lam))
    _report(5, not unseparated and reached == 200,
            f"{len(unseparated)} unseparated, {reached}/200 reached width 1e-6")
    assert reached == 200
    assert not unseparated, unseparated[:3]


# 6 -----------------------------------------------------------------------------


def _least_strict_oracle(rows, v, lam, j, p_max):
    for p in range(1, p_max + 1):
        if oracles.matvec(oracles.matpow(rows, p), list(v))[j] < lam**p * v[j]:
            return p
    return None


@pytest.mark.acceptance(6, "End-to-end claim: worked schedule and 200 enlargements in < 60 s")
def test_end_to_end_claim():
    ones = DiscSystem(("E1", "E2"), {"E1": ["E1", "E2"], "E2": ["E1", "E2"]}, (1, 1), 2)
    worked = Enlargement(ones, ("D",), (Fraction(3, 4),), {"D": ["E1"]})
    res = discs.tighten(worked)
    worked_ok = res.certificate.strict_schedule == {0: 1, 1: 2, 2: 1} and res.certificate.verdict

    rng = random.Random(6006)
    enls = [instances.enlargement(rng) for _ in range(200)]
    t0 = time.perf_counter()
    results = [discs.tighten(e) for e in enls]
    elapsed = time.perf_counter() - t0
    bad = []
    for e, r in zip(enls, results):
        cert = r.certificate
        rows = r.mhat.tolist()
        lam_m = e.lam  # row sums of the base are all lam
        ok = (
            not cert.missing
            and sorted(cert.strict_schedule) == list(range(r.mhat.n))
            and all(p <= cert.p_max for p in cert.strict_schedule.values())
            and cert.verdict
            and cert.after.upper < cert.before.lower
            and cert.before.contains(lam_m)
        )
        for j, p in cert.strict_schedule.items():
            ok = ok and _least_strict_oracle(rows, e.weights, e.lam, j, cert.p_max) == p
        for rep in cert.sccs:
            sub = pfcore.submatrix(r.mhat, rep.indices).tolist()
            if sub == [[0]]:
                continue
            lo, hi = oracles.largest_root_bracket(sub)
            ok = ok and hi < lam_m and rep.separated
        if not ok:
            bad.append(e)
    _report(6, worked_ok and not bad and elapsed < 60,
            f"worked schedule {'ok' if worked_ok else 'WRONG'}, {len(bad)}/200 failures, {elapsed:.2f}s")
    assert worked_ok
    assert not bad, bad[:2]
    assert elapsed < 60


# 7 -----------------------------------------------------------------------------


def _zero_pattern_oracle(w, fam):
    """Recompute the allowed nonzero columns of every row from the layer lists."""
    k = fam.base.k
    col = {s: i for i, s in enumerate(fam.surfaces)}
    allowed = {i: set(range(k)) for i in range(k)}
    for depth, layer in enumerate(fam.layers):
        up = set(range(k)) | ({col[s] for s in fam.layers[depth - 1]} if depth else set())
        for s in layer:
            allowed[col[s]] = up
    return all(
        w.rows[i][j] == 0 for i in range(w.n) for j in range(w.n) if j not in allowed[i]
    )


@pytest.mark.acceptance(7, "Block structure of W; T1 changes only D-rows; T0/T2 only row 1")
def test_block_structure():
    rng = random.Random(7007)
    bad = []
    for _ in range(300):
        case = instances.layered_case(rng)
        fam = case.family
        res = discs.pipeline(fam, case.d_update)
        d_rows = {fam.surfaces.index(s) for s in fam.bottom}
        t1_changed = {i for i, (a, b) in enumerate(zip(res.T0.rows, res.T1.rows)) if a != b}
        ok = (
            discs.layer_zero_pattern_ok(res.W, fam)
            and _zero_pattern_oracle(res.W, fam)
            and res.T0.rows[1:] == res.W.rows[1:]
            and res.T2.rows[1:] == res.T1.rows[1:]
            and t1_changed <= d_rows
        )
        if not ok:
            bad.append(case)
    _report(7, not bad, f"{len(bad)} failures over 300 layered families")
    assert not bad


# 8 -----------------------------------------------------------------------------


@pytest.mark.acceptance(8, "Push-away confluence on the <= 6-curve corpus (<= 5000 patterns, < 120 s)")
def test_confluence_corpus():
    t0 = time.perf_counter()
    corpus = pushaway.pattern_corpus(max_curves=6, cap=5000)
    failures = []
    for p in corpus:
        results = pushaway.enumerate_all_orders(p, memoize=False)
        full = pushaway.push_away(p)
        ok = (
            len(results) == 1
            and not any(p.is_s_descendant(a, b) for a in full.glued for b in full.glued)
            # independent prediction: exactly the outermost curves of S survive
            and full.glued == p.s_roots()
            and all(
                pushaway.project(full, p, k)
                == pushaway.push_away(pushaway.component_restrict(p, k)).normalized
                for k in p.components
            )
        )
        if not ok:
            failures.append(p)
    elapsed = time.perf_counter() - t0
    sizes = {len(p.curves) for p in corpus}
    _report(8, not failures and elapsed < 120,
            f"{len(corpus)} patterns (sizes {min(sizes)}..{max(sizes)}), "
            f"{len(failures)} failures, {elapsed:.1f}s")
    assert len(corpus) == 5000 and max(sizes) == 6
    assert not failures
    assert elapsed < 120


# 9 -----------------------------------------------------------------------------


@pytest.mark.acceptance(9, "Weighted intersection arithmetic (example + 50 random triples)")
def test_weighted_intersection():
    example = weighted_intersection(
        (2, 0, 1), (Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)), 2, 1
    ) == Fraction(5, 2)
    rng = random.Random(9009)
    mismatches = 0
    for _ in range(50):
        n = rng.randint(1, 6)
        counts = [rng.randint(0, 4) for _ in range(n)]
        weights = [Fraction(rng.randint(0, 20), rng.randint(1, 12)) for _ in range(n)]
        lam = Fraction(rng.randint(1, 30), rng.randint(1, 7))
        level = rng.randint(-3, 4)
        got = weighted_intersection(counts, weights, lam, level)
        if not (isinstance(got, Fraction)
                and got == oracles.weighted_sum_oracle(counts, weights, lam, level)):
            mismatches += 1
    _report(9, example and not mismatches, f"example {'ok' if example else 'WRONG'}, "
            f"{mismatches}/50 mismatches")
    assert example
    assert mismatches == 0
