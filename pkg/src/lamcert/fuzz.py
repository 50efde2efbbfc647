"""Seeded fuzz suites with greedy counterexample shrinking.

Every suite checks a theorem-backed property, so the tolerated failure
count is zero.  A failing instance is shrunk greedily (drop rows, curves or
targets; lower entries) before it is reported.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

from . import discs, documents, instances, pfcore, pushaway
from .errors import UnknownSuite
from .pfcore import IncidenceMatrix
from .report import Report

# size envelopes
PF_N, PF_ENTRY = 6, 3
PROPAGATION_N = 8
CONFLUENCE_CURVES = 6


@dataclass(frozen=True)
class Suite:
    name: str
    generate: Callable  # rng -> instance
    check: Callable  # instance -> list of failure messages
    shrink: Callable  # instance -> iterable of smaller instances
    document: Callable  # instance -> JSON-able counterexample


def shrink(instance, fails: Callable, candidates: Callable, max_steps: int = 1000):
    """Greedy shrinking: move to the first smaller candidate that still fails."""
    for _ in range(max_steps):
        for c in candidates(instance):
            if fails(c):
                instance = c
                break
        else:
            return instance
    return instance


def _guard(check):
    def run(instance):
        try:
            return check(instance)
        except Exception as exc:  # a crash on a valid instance is a failure too
            return [f"{type(exc).__name__}: {exc}"]

    return run


def _matrix_candidates(m: IncidenceMatrix, keep_irreducible=True) -> Iterable[IncidenceMatrix]:
    if m.n > 1:
        for i in range(m.n):
            idx = tuple(j for j in range(m.n) if j != i)
            sub = pfcore.submatrix(m, idx)
            if not keep_irreducible or pfcore.is_irreducible(sub):
                yield sub
    for i in range(m.n):
        for j in range(m.n):
            if m.rows[i][j]:
                rows = m.tolist()
                rows[i][j] -= 1
                cand = IncidenceMatrix(rows)
                if not keep_irreducible or pfcore.is_irreducible(cand):
                    yield cand


# -- pf ------------------------------------------------------------------------


def _pf_generate(rng):
    m = instances.irreducible_matrix(rng, PF_N, PF_ENTRY)
    return m, instances.positive_vector(rng, m.n)


def _pf_check(inst):
    m, x = inst
    out = []
    cert = pfcore.perron_bounds(m)
    if not cert.converged:
        out.append(f"width {cert.width} not below 10^-9 within 500 iterations")
    if not cert.verify(m):
        out.append("certificate does not re-verify")
    ratios = [Fraction(y) / xi for y, xi in zip(m.apply(x), x)]
    # Collatz-Wielandt: min ratio <= lambda <= max ratio for any positive x
    if min(ratios) > cert.upper or max(ratios) < cert.lower:
        out.append("bracket contradicts a Collatz-Wielandt bound")
    return out


def _pf_shrink(inst):
    m, x = inst
    for c in _matrix_candidates(m):
        yield c, x[: c.n]


def _pf_doc(inst):
    return documents.to_json("matrix", inst[0])


# -- propagation -------------------------------------------------------------


def _prop_generate(rng):
    m = instances.irreducible_matrix(rng, PROPAGATION_N, 3)
    return m, instances.replace_first_row(rng, m)


def _prop_check(inst):
    m, mbar = inst
    return [] if pfcore.propagation_check(m, mbar) else ["a row j >= 1 of Mbar^p differs from M^p"]


def _prop_shrink(inst):
    m, mbar = inst
    for i in range(1, m.n):
        idx = tuple(j for j in range(m.n) if j != i)
        sub = pfcore.submatrix(m, idx)
        if pfcore.is_irreducible(sub):
            yield sub, pfcore.submatrix(mbar, idx)
    for j in range(m.n):
        if mbar.rows[0][j]:
            rows = mbar.tolist()
            rows[0][j] -= 1
            yield m, IncidenceMatrix(rows)


def _prop_doc(inst):
    return {"M": documents.to_json("matrix", inst[0]), "Mbar": documents.to_json("matrix", inst[1])}


# -- pipeline ------------------------------------------------------------------


def _pipe_generate(rng):
    return instances.layered_case(rng)


def pipeline_failures(case: documents.LayeredCase, res: discs.PipelineResult) -> list:
    """Structural and spectral checks on one pipeline run."""
    fam = case.family
    out = []
    if not discs.layer_zero_pattern_ok(res.W, fam):
        out.append("W fails the zero-pattern predicate")
    d_rows = {fam.surfaces.index(s) for s in fam.bottom}
    if res.T0.rows[1:] != res.W.rows[1:]:
        out.append("T0 changes a row other than row 1")
    if res.T2.rows[1:] != res.T1.rows[1:]:
        out.append("T2 changes a row other than row 1")
    changed = {i for i, (a, b) in enumerate(zip(res.T0.rows, res.T1.rows)) if a != b}
    if not changed <= d_rows:
        out.append(f"T1 changes non-D rows {sorted(i + 1 for i in changed - d_rows)}")
    cert = res.certificate
    if cert.missing:
        out.append(f"no strict power for rows {[i + 1 for i in cert.missing]}")
    if not cert.verdict:
        out.append("spectral radius not certified below lambda")
    return out


def _pipe_check(case):
    return pipeline_failures(case, discs.pipeline(case.family, case.d_update))


def _pipe_shrink(case):
    for s, targets in case.d_update.items():
        for i in range(1, len(targets)):
            rows = dict(case.d_update)
            rows[s] = targets[:i] + targets[i + 1:]
            yield documents.LayeredCase(case.family, rows, case.u, case.lam)


def _pipe_doc(case):
    return documents.to_json("layered-family", case)


# -- confluence ----------------------------------------------------------------


def _conf_generate(rng):
    return pushaway.random_pattern(rng, rng.randint(1, CONFLUENCE_CURVES))


def confluence_failures(p: pushaway.IntersectionPattern) -> list:
    out = []
    results = pushaway.enumerate_all_orders(p, memoize=False)
    if len(results) != 1:
        out.append(f"{len(results)} distinct normalized results")
    full = pushaway.push_away(p)
    if any(p.is_s_descendant(a, b) for a in full.glued for b in full.glued):
        out.append("glued set is not an s-antichain")
    if dict(full.final_weights) != pushaway.closed_form_weights(p, full.glued):
        out.append("final weights disagree with the closed form")
    for k in p.components:
        sub = pushaway.push_away(pushaway.component_restrict(p, k)).normalized
        if sub != pushaway.project(full, p, k):
            out.append(f"restriction to {k} does not commute with push-away")
    return out


def _conf_shrink(p):
    for c in p.order:
        yield pushaway.drop_curve(p, c)


def _conf_doc(p):
    return documents.to_json("pattern", p)


SUITES = {
    "pf": Suite("pf", _pf_generate, _pf_check, _pf_shrink, _pf_doc),
    "propagation": Suite("propagation", _prop_generate, _prop_check, _prop_shrink, _prop_doc),
    "pipeline": Suite("pipeline", _pipe_generate, _pipe_check, _pipe_shrink, _pipe_doc),
    "confluence": Suite("confluence", _conf_generate, confluence_failures, _conf_shrink, _conf_doc),
}


def trial_rng(suite: str, seed: int, trial: int) -> random.Random:
    return random.Random(f"{suite}:{seed}:{trial}")


def fuzz_suite(name: str, trials: int, seed: int, suites=None) -> Report:
    """Run ``trials`` seeded cases of a suite. Deterministic given the seed."""
    suites = SUITES if suites is None else suites
    if name not in suites:
        raise UnknownSuite(f"unknown suite {name!r}; choose from {sorted(suites)}")
    suite = suites[name]
    check = _guard(suite.check)
    report = Report(command=f"fuzz {name}", seed=seed)
    failures = 0
    for t in range(trials):
        inst = suite.generate(trial_rng(name, seed, t))
        problems = check(inst)
        if not problems:
            continue
        failures += 1
        small = shrink(inst, lambda c: bool(check(c)), suite.shrink)
        report.note(
            f"fuzz {name}",
            f"trial {t}",
            problems[0],
            problems=problems,
            counterexample=suite.document(small),
            shrunk_problems=check(small),
        )
    report.certificates.append(
        {"suite": name, "trials": trials, "seed": seed, "failures": failures}
    )
    report.verdict = "violated" if failures else "verified"
    return report
