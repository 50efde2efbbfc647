"""Disc systems, their enlargements and layered surface families.

This is where incidence data becomes matrices: the incidence matrix M of
a disc system, the enlarged matrix Mbar (with its zero block), the
tightened matrix Mhat obtained by copying the tightening disc's row over
the row of the disc it is parallel to, and the layered block matrix W
together with the T0 -> T3 sequence that tracks growth through the
tightening.

Geometric moves are not simulated.  Their consequences (weights do not
increase, the enlarged system is admissible) arrive as input data and are
checked here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import pfcore
from .errors import (
    InvariantViolation,
    LayerRuleViolation,
    LemmaViolation,
    NonIncreaseViolation,
    NotIrreducible,
    NotSeparable,
    PropagationTimeout,
    SubmatrixNotIrreducible,
    SurrogateViolation,
    UnknownLabel,
)
from .pfcore import IncidenceMatrix, PerronCertificate, rational

DEFAULT_SEPARATION_CAP = 5000


def _multiset(targets) -> tuple:
    if isinstance(targets, Mapping):
        out = []
        for label, count in targets.items():
            out.extend([label] * int(count))
        targets = out
    return tuple(sorted(targets))


def _unique(labels, what):
    labels = tuple(labels)
    seen = set()
    for x in labels:
        if x in seen:
            raise InvariantViolation(f"duplicate {what} label {x!r}", row=x)
        seen.add(x)
    return labels


def _row(targets, columns: Mapping[str, int], n: int, owner) -> tuple:
    row = [0] * n
    for t in targets:
        if t not in columns:
            raise UnknownLabel(f"{owner!r} is carried by unknown label {t!r}")
        row[columns[t]] += 1
    return tuple(row)


# --------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class DiscSystem:
    """Discs E_1..E_k with the multiset of discs carrying each image f(E_i) in H_0.

    ``weights`` is a rational surrogate for the transverse measures of the
    discs and ``lam`` a rational surrogate for the growth rate.
    """

    labels: tuple
    incidence: dict
    weights: tuple
    lam: Fraction

    def __post_init__(self):
        labels = _unique(self.labels, "disc")
        incidence = {}
        for label in labels:
            if label not in self.incidence:
                raise InvariantViolation(f"disc {label!r} has no incidence row", row=label)
            incidence[label] = _multiset(self.incidence[label])
        for extra in set(self.incidence) - set(labels):
            raise UnknownLabel(f"incidence row for unknown disc {extra!r}")
        known = set(labels)
        for label, targets in incidence.items():
            for t in targets:
                if t not in known:
                    raise UnknownLabel(f"image of {label!r} is carried by unknown disc {t!r}")
        weights = pfcore.weight_vector(self.weights, len(labels))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "incidence", incidence)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "lam", rational(self.lam))

    @property
    def k(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(f"unknown disc {label!r}") from None

    def validate(self):
        """Raise InvariantViolation unless the system is a valid admissible system."""
        for label in self.labels:
            if not self.incidence[label]:
                raise InvariantViolation(f"image of disc {label!r} misses H_0", row=label)
        m = incidence_matrix(self)
        if not pfcore.is_irreducible(m):
            raise InvariantViolation("incidence matrix is not irreducible")
        report = pfcore.check_subinvariance(m, self.weights, self.lam)
        if not report.holds:
            bad = self.labels[report.violated_indices[0]]
            raise InvariantViolation(f"M v <= lam v fails at disc {bad!r}", row=bad)


@dataclass(frozen=True)
class Enlargement:
    """A base system together with new discs D_{k+1}..D_{k+l}.

    The last new disc is the tightening disc, parallel to the first base
    disc.  ``new_incidence`` records which discs of the enlarged system
    carry the image of each new disc.
    """

    base: DiscSystem
    new_discs: tuple
    new_weights: tuple
    new_incidence: dict
    delta: str | None = None
    parallel_to: str | None = None

    def __post_init__(self):
        new = _unique(self.new_discs, "new disc")
        clash = set(new) & set(self.base.labels)
        if clash:
            raise InvariantViolation(f"new discs reuse base labels {sorted(clash)}")
        weights = tuple(rational(x) for x in self.new_weights)
        if len(weights) != len(new):
            raise InvariantViolation("new_weights must have one entry per new disc")
        if any(w < 0 for w in weights):
            raise InvariantViolation("negative weight on a new disc")
        known = set(self.base.labels) | set(new)
        incidence = {}
        for label in new:
            if label not in self.new_incidence:
                raise InvariantViolation(f"new disc {label!r} has no incidence row", row=label)
            incidence[label] = _multiset(self.new_incidence[label])
            for t in incidence[label]:
                if t not in known:
                    raise UnknownLabel(f"image of {label!r} is carried by unknown disc {t!r}")
        for extra in set(self.new_incidence) - set(new):
            raise UnknownLabel(f"incidence row for unknown disc {extra!r}")
        delta = self.delta if self.delta is not None else (new[-1] if new else None)
        parallel = self.parallel_to if self.parallel_to is not None else self.base.labels[0]
        if new and delta != new[-1]:
            raise InvariantViolation(f"tightening disc {delta!r} must be the last new disc")
        if parallel != self.base.labels[0]:
            raise InvariantViolation(f"{parallel!r} must be the first base disc")
        object.__setattr__(self, "new_discs", new)
        object.__setattr__(self, "new_weights", weights)
        object.__setattr__(self, "new_incidence", incidence)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "parallel_to", parallel)

    @property
    def labels(self) -> tuple:
        return self.base.labels + self.new_discs

    @property
    def weights(self) -> tuple:
        return self.base.weights + self.new_weights

    @property
    def lam(self) -> Fraction:
        return self.base.lam

    def validate(self):
        self.base.validate()
        if self.new_discs and not self.new_weights[-1] < self.base.weights[0]:
            raise InvariantViolation(
                f"tightening disc {self.delta!r} is not lighter than {self.parallel_to!r}",
                row=self.delta,
            )
        mbar = _assemble_bar(incidence_matrix(self.base), self._new_rows())
        report = pfcore.check_subinvariance(mbar, self.weights, self.lam)
        if not report.holds:
            bad = self.labels[report.violated_indices[0]]
            raise InvariantViolation(f"Mbar v <= lam v fails at row {bad!r}", row=bad)

    def _new_rows(self):
        cols = {x: i for i, x in enumerate(self.labels)}
        n = len(cols)
        return [_row(self.new_incidence[d], cols, n, d) for d in self.new_discs]


@dataclass(frozen=True)
class LayeredFamily:
    """Surfaces S^{h0} (the base discs), S^{h0-1}, ..., S^0.

    ``layers`` lists the non-base layers in decreasing order, so
    ``layers[-1]`` is S^0 and its last surface is the tightening disc.
    ``carried`` gives, for every non-base surface, the multiset of base
    discs and next-layer-up surfaces carrying its image.
    """

    base: DiscSystem
    layers: tuple
    carried: dict
    weights: dict

    def __post_init__(self):
        layers = tuple(tuple(layer) for layer in self.layers)
        if not layers:
            raise InvariantViolation("a layered family needs height >= 1")
        if any(not layer for layer in layers):
            raise InvariantViolation("empty layer")
        surfaces = _unique(self.base.labels + tuple(s for layer in layers for s in layer), "surface")
        known = set(surfaces)
        carried, weights = {}, {}
        for s in surfaces[self.base.k:]:
            if s not in self.carried:
                raise InvariantViolation(f"surface {s!r} has no carried data", row=s)
            if s not in self.weights:
                raise InvariantViolation(f"surface {s!r} has no weight", row=s)
            carried[s] = _multiset(self.carried[s])
            for t in carried[s]:
                if t not in known:
                    raise UnknownLabel(f"image of {s!r} is carried by unknown surface {t!r}")
            weights[s] = rational(self.weights[s])
            if weights[s] < 0:
                raise InvariantViolation(f"negative weight on {s!r}", row=s)
        for extra in (set(self.carried) | set(self.weights)) - set(surfaces[self.base.k:]):
            raise UnknownLabel(f"data for unknown surface {extra!r}")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "carried", carried)
        object.__setattr__(self, "weights", weights)

    @property
    def height(self) -> int:
        return len(self.layers)

    @property
    def surfaces(self) -> tuple:
        return self.base.labels + tuple(s for layer in self.layers for s in layer)

    @property
    def bottom(self) -> tuple:
        """The disc system S^0."""
        return self.layers[-1]

    def layer_rule_targets(self, surface) -> set:
        """Labels allowed to carry the image of a non-base surface."""
        allowed = set(self.base.labels)
        for i, layer in enumerate(self.layers):
            if surface in layer:
                if i > 0:
                    allowed |= set(self.layers[i - 1])
                return allowed
        raise UnknownLabel(f"{surface!r} is not a non-base surface")

    def weight_vector(self) -> tuple:
        return self.base.weights + tuple(self.weights[s] for s in self.surfaces[self.base.k:])


@dataclass(frozen=True)
class TraceDisc:
    label: str
    parallel_class: str
    weight: Fraction
    transverse: bool = False

    def __post_init__(self):
        object.__setattr__(self, "weight", rational(self.weight))


@dataclass(frozen=True)
class StabilizationTrace:
    systems: tuple
    J: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "systems", tuple(tuple(s) for s in self.systems))


@dataclass(frozen=True)
class StabilizationResult:
    ok: bool
    J: int | None
    diagnostics: tuple = ()

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class SccReport:
    indices: tuple
    certificate: PerronCertificate
    separated: bool | None  # None: inconclusive at the iteration cap


@dataclass(frozen=True)
class TighteningCertificate:
    strict_schedule: dict
    scc_used: tuple
    before: PerronCertificate
    after: PerronCertificate
    verdict: bool
    missing: tuple = ()
    sccs: tuple = ()
    p_max: int | None = None

    @property
    def inconclusive(self) -> bool:
        return any(r.separated is None for r in self.sccs)


@dataclass(frozen=True)
class TightenResult:
    mbar: IncidenceMatrix
    mhat: IncidenceMatrix
    certificate: TighteningCertificate


@dataclass(frozen=True)
class PipelineResult:
    W: IncidenceMatrix
    T0: IncidenceMatrix
    T1: IncidenceMatrix
    T2: IncidenceMatrix
    T3: IncidenceMatrix
    certificate: TighteningCertificate
    t0_schedule: dict = field(default_factory=dict)
    kept: tuple = ()


# --------------------------------------------------------------------------
# Matrices


def incidence_matrix(system: DiscSystem) -> IncidenceMatrix:
    """M[i][j] = multiplicity of E_j among the discs carrying f(E_i)."""
    cols = {x: i for i, x in enumerate(system.labels)}
    k = len(cols)
    return IncidenceMatrix(tuple(_row(system.incidence[x], cols, k, x) for x in system.labels))


def weighted_intersection(counts, weights, lam, level: int = 0) -> Fraction:
    """Weighted count of components: the sum of lam**level * weight over components.

    ``counts`` is either a sequence aligned with ``weights`` or a mapping
    from keys of ``weights`` (labels or indices) to multiplicities.
    """
    lam = rational(lam)
    if isinstance(counts, Mapping):
        items = counts.items()
        lookup = weights if isinstance(weights, Mapping) else dict(enumerate(weights))
    else:
        if len(counts) > len(weights):
            raise UnknownLabel(f"counts refer to disc {len(weights)} beyond the weight vector")
        items = enumerate(counts)
        lookup = weights
    total = Fraction(0)
    for key, c in items:
        if c < 0:
            raise ValueError("negative multiplicity")
        if c:
            try:
                w = lookup[key]
            except (KeyError, IndexError):
                raise UnknownLabel(f"unknown disc {key!r}") from None
            total += c * rational(w)
    return lam**level * total


def _assemble_bar(m: IncidenceMatrix, new_rows) -> IncidenceMatrix:
    l = len(new_rows)
    rows = [row + (0,) * l for row in m.rows]
    rows.extend(new_rows)
    return IncidenceMatrix(tuple(rows))


def build_bar_matrix(e: Enlargement) -> IncidenceMatrix:
    """Mbar: M in the upper left, zeros to its right, new rows below."""
    e.validate()
    mbar = _assemble_bar(incidence_matrix(e.base), e._new_rows())
    if not has_zero_block(mbar, e.base.k):
        raise InvariantViolation("base rows reach new discs")  # pragma: no cover
    return mbar


def has_zero_block(m, k: int) -> bool:
    m = pfcore.as_matrix(m)
    return all(m.rows[i][j] == 0 for i in range(k) for j in range(k, m.n))


def apply_tightening(mbar, delta: int | None = None, target: int = 0) -> IncidenceMatrix:
    """Mhat: copy the tightening disc's row (default: last) over ``target``."""
    mbar = pfcore.as_matrix(mbar)
    return pfcore.row_copy(mbar, mbar.n - 1 if delta is None else delta, target)


def build_layer_matrix(family: LayeredFamily) -> IncidenceMatrix:
    """The block matrix W of the whole family in lexicographic order."""
    surfaces = family.surfaces
    cols = {s: i for i, s in enumerate(surfaces)}
    n = len(surfaces)
    m = incidence_matrix(family.base)
    rows = [row + (0,) * (n - family.base.k) for row in m.rows]
    for s in surfaces[family.base.k:]:
        allowed = family.layer_rule_targets(s)
        for t in family.carried[s]:
            if t not in allowed:
                raise LayerRuleViolation(s, t)
        rows.append(_row(family.carried[s], cols, n, s))
    return IncidenceMatrix(tuple(rows))


def layer_zero_pattern_ok(w, family: LayeredFamily) -> bool:
    """W's block pattern: base rows are M then zeros; a layer-i row only hits
    base columns and layer-(i+1) columns."""
    w = pfcore.as_matrix(w)
    k = family.base.k
    if tuple(row[:k] for row in w.rows[:k]) != incidence_matrix(family.base).rows:
        return False
    if not has_zero_block(w, k):
        return False
    cols = {s: i for i, s in enumerate(family.surfaces)}
    for s in family.surfaces[k:]:
        allowed = {cols[t] for t in family.layer_rule_targets(s)}
        if any(a and j not in allowed for j, a in enumerate(w.rows[cols[s]])):
            return False
    return True


# --------------------------------------------------------------------------
# Strict schedules and certification


def strict_schedule(m, v, lam, p_max: int):
    """Least p <= p_max with (M^p v)_j < lam^p v_j, for every index j.

    Returns ``(schedule, missing)`` where ``schedule`` maps indices to
    powers and ``missing`` lists indices with no strict drop by ``p_max``.
    """
    m = pfcore.as_matrix(m)
    v = pfcore.weight_vector(v, m.n)
    lam = rational(lam)
    schedule = {}
    cur, scale = v, Fraction(1)
    for p in range(1, p_max + 1):
        cur = m.apply(cur)
        scale *= lam
        for j in range(m.n):
            if j not in schedule and cur[j] < scale * v[j]:
                schedule[j] = p
        if len(schedule) == m.n:
            break
    missing = tuple(j for j in range(m.n) if j not in schedule)
    return dict(sorted(schedule.items())), missing


def _separate(before: IncidenceMatrix, after: IncidenceMatrix, cap: int):
    """Refine both brackets until after.upper < before.lower (True),
    after.lower >= before.upper (False) or the cap is hit (None)."""
    a = pfcore._start(before, None)
    b = pfcore._start(after, None)
    while True:
        if b.upper_below_lower_of(a):
            return True, a.certificate(), b.certificate()
        if b.lower_at_least_upper_of(a):
            return False, a.certificate(), b.certificate()
        if a.iterations >= cap and b.iterations >= cap:
            return None, a.certificate(False), b.certificate(False)
        if a.iterations < cap:
            a.step()
        if b.iterations < cap:
            b.step()


def certify_improvement(
    before: DiscSystem, after_matrix, scc, max_iterations: int = DEFAULT_SEPARATION_CAP
) -> TighteningCertificate:
    """Certify that the growth on ``scc`` of ``after_matrix`` is strictly
    below the growth of ``before``.

    Returns a certificate whose verdict is False when the new bracket lies
    at or above the old one; raises NotSeparable when the brackets still
    overlap after ``max_iterations`` refinements.
    """
    m = incidence_matrix(before)
    sub = pfcore.submatrix(after_matrix, scc)
    if not pfcore.is_irreducible(sub):
        raise SubmatrixNotIrreducible(f"submatrix on {tuple(scc)} is not irreducible")
    verdict, cb, ca = _separate(m, sub, max_iterations)
    if verdict is None:
        raise NotSeparable(
            f"intervals [{ca.lower}, {ca.upper}] and [{cb.lower}, {cb.upper}] "
            f"still overlap after {max_iterations} iterations"
        )
    scc = tuple(scc)
    return TighteningCertificate(
        strict_schedule={},
        scc_used=scc,
        before=cb,
        after=ca,
        verdict=verdict,
        sccs=(SccReport(scc, ca, verdict),),
    )


def _certify_sccs(base_matrix: IncidenceMatrix, after: IncidenceMatrix, cap: int):
    """Certify every SCC of ``after`` against the growth of ``base_matrix``."""
    before = pfcore.perron_bounds(base_matrix)
    reports = []
    for comp in pfcore.scc_decompose(after):
        sub = pfcore.submatrix(after, comp)
        if not pfcore.is_irreducible(sub):
            reports.append(SccReport(comp, pfcore.zero_certificate(), True))
            continue
        verdict, cb, ca = _separate(base_matrix, sub, cap)
        if cb.iterations > before.iterations:
            before = cb
        reports.append(SccReport(comp, ca, verdict))
    # growth of the new map is the maximum over SCCs
    used = max(reports, key=lambda r: (r.certificate.lower, -r.indices[0]))
    return before, tuple(reports), used


def tighten(
    e: Enlargement, p_max: int | None = None, max_iterations: int = DEFAULT_SEPARATION_CAP
) -> TightenResult:
    """Mbar, Mhat, the strict schedule of Mhat and the SCC certification."""
    mbar = build_bar_matrix(e)
    mhat = apply_tightening(mbar)
    n = mhat.n
    p_max = n * (n + 1) if p_max is None else p_max
    schedule, missing = strict_schedule(mhat, e.weights, e.lam, p_max)
    before, reports, used = _certify_sccs(incidence_matrix(e.base), mhat, max_iterations)
    verdict = not missing and all(r.separated for r in reports)
    cert = TighteningCertificate(
        strict_schedule=schedule,
        scc_used=used.indices,
        before=before,
        after=used.certificate,
        verdict=verdict,
        missing=missing,
        sccs=reports,
        p_max=p_max,
    )
    return TightenResult(mbar, mhat, cert)


def _check_propagation(t: IncidenceMatrix, u, lam, schedule, p_max):
    """If T u <= lam u with strictness at index 0 and (T^q)[j, 0] > 0, then
    (T^{q+1} u)_j < lam^{q+1} u_j.  Checked exactly; failure is a defect."""
    if not pfcore.check_subinvariance(t, u, lam).holds:
        return
    if not t.apply(u)[0] < lam * u[0]:
        return
    powers = [tuple(u)]
    for _ in range(t.n + 1):
        powers.append(t.apply(powers[-1]))
    for j in range(t.n):
        try:
            q = pfcore.first_reach(t, j)
        except NotIrreducible:
            continue
        if not powers[q + 1][j] < lam ** (q + 1) * u[j]:
            raise LemmaViolation(f"strictness did not propagate to index {j} at power {q + 1}")
        if q + 1 <= p_max and schedule.get(j, q + 2) > q + 1:
            raise LemmaViolation(f"schedule missed index {j} at power {q + 1}")


def pipeline(
    family: LayeredFamily,
    d_update: Mapping,
    u: Sequence | None = None,
    lam=None,
    p_max: int | None = None,
    max_iterations: int = DEFAULT_SEPARATION_CAP,
    require_schedule: bool = False,
) -> PipelineResult:
    """Run W -> T0 -> T1 -> T2 -> T3 and certify the growth drop.

    T0 copies the tightening row over row 0 of W; T1 replaces the rows of
    S^0 by ``d_update`` (their images after the adjusting isotopy, carried
    by base discs and S^0); T2 copies the new tightening row over row 0;
    T3 keeps only base discs and S^0.
    """
    w = build_layer_matrix(family)
    m = w.n
    base = family.base
    u = family.weight_vector() if u is None else pfcore.weight_vector(u, m)
    lam = base.lam if lam is None else rational(lam)
    p_max = m * (m + 1) if p_max is None else p_max

    report = pfcore.check_subinvariance(w, u, lam)
    if not report.holds:
        bad = [family.surfaces[i] for i in report.violated_indices]
        raise SurrogateViolation(f"W u <= lam u fails at {bad}")

    t0 = pfcore.row_copy(w, m - 1, 0)

    bottom = family.bottom
    kept = tuple(range(base.k)) + tuple(range(m - len(bottom), m))
    kept_labels = [family.surfaces[i] for i in kept]
    if set(d_update) != set(bottom):
        raise InvariantViolation(
            f"d_update must give one row per disc of S^0 {list(bottom)}, got {sorted(d_update)}"
        )
    cols = {s: i for i, s in enumerate(family.surfaces)}
    allowed = {s: cols[s] for s in kept_labels}
    rows = list(t0.rows)
    for d in bottom:
        rows[cols[d]] = _row(_multiset(d_update[d]), allowed, m, d)
    t1 = IncidenceMatrix(tuple(rows))

    t0u, t1u = t0.apply(u), t1.apply(u)
    for d in bottom:
        j = cols[d]
        if t1u[j] > t0u[j]:
            raise NonIncreaseViolation(f"updated image of {d!r} is heavier: {t1u[j]} > {t0u[j]}")

    t2 = pfcore.row_copy(t1, m - 1, 0)
    t3 = pfcore.submatrix(t2, kept)

    d_rows = [tuple(t1.rows[cols[d]][i] for i in kept) for d in bottom]
    expected = apply_tightening(_assemble_bar(incidence_matrix(base), d_rows))
    if t3 != expected:
        raise LemmaViolation("T3 differs from the tightened enlargement matrix")  # pragma: no cover

    t0_schedule, _ = strict_schedule(t0, u, lam, p_max)
    schedule, missing = strict_schedule(t2, u, lam, p_max)
    _check_propagation(t0, u, lam, t0_schedule, p_max)
    _check_propagation(t2, u, lam, schedule, p_max)
    if missing and require_schedule:
        raise PropagationTimeout(missing, p_max)

    before, reports, used = _certify_sccs(incidence_matrix(base), t3, max_iterations)
    verdict = not missing and all(r.separated for r in reports)
    cert = TighteningCertificate(
        strict_schedule=schedule,
        scc_used=tuple(kept[i] for i in used.indices),
        before=before,
        after=used.certificate,
        verdict=verdict,
        missing=missing,
        sccs=reports,
        p_max=p_max,
    )
    return PipelineResult(w, t0, t1, t2, t3, cert, t0_schedule, kept)


# --------------------------------------------------------------------------
# Stabilization


def validate_stabilization(trace: StabilizationTrace) -> StabilizationResult:
    """Check nesting and find (or confirm) a stabilizing index J.

    J stabilizes when every disc of system J+1 is transverse or has a
    parallel disc in system J that is no heavier.
    """
    systems = trace.systems
    diags = []
    for i in range(len(systems) - 1):
        cur = {d.label for d in systems[i]}
        nxt = {d.label for d in systems[i + 1]}
        if not cur <= nxt:
            missing = sorted(cur - nxt)
            return StabilizationResult(
                False, None, (f"system {i + 1} drops discs {missing} of system {i}",)
            )
    if len(systems) < 2:
        return StabilizationResult(False, None, ("trace needs at least two systems",))

    def failure(j):
        lightest = {}
        for d in systems[j]:
            c = d.parallel_class
            lightest[c] = min(lightest.get(c, d.weight), d.weight)
        for d in systems[j + 1]:
            if d.transverse:
                continue
            if d.parallel_class not in lightest:
                return f"disc {d.label!r} of system {j + 1} starts new class {d.parallel_class!r}"
            if lightest[d.parallel_class] > d.weight:
                return f"disc {d.label!r} of system {j + 1} is lighter than its class in system {j}"
        return None

    candidates = [trace.J] if trace.J is not None else range(len(systems) - 1)
    for j in candidates:
        if not 0 <= j < len(systems) - 1:
            return StabilizationResult(False, None, (f"J={j} outside the trace",))
        why = failure(j)
        if why is None:
            return StabilizationResult(True, j, tuple(diags))
        diags.append(f"J={j}: {why}")
    return StabilizationResult(False, None, tuple(diags))

