"""Push-away surgery on intersection patterns, as a finite rewriting system.

A pattern records the curves of ``Δ ∩ S`` with two nesting forests: one
inside the disc Δ (``delta_parent``) and one inside each disc component of S
(``s_parent``).  Surgering a curve γ replaces the current S-subdisc bounded
by γ with a pushed-off copy of the Δ-subdisc bounded by γ.  Δ itself never
changes.

Curve and component ids are strings.  "Lowest id" means lexicographic order.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import (
    EnumerationCapExceeded,
    InvariantViolation,
    LemmaViolation,
    NotAlive,
    NotInnermost,
    PreconditionFailed,
    UnknownComponent,
    UnknownLabel,
)
from .pfcore import rational

ALIVE = "alive"
GLUED = "glued"
REMOVED = "removed"
DISCARDED = "discarded-glued"
STATUSES = (ALIVE, GLUED, REMOVED, DISCARDED)


def _frozen(d):
    return MappingProxyType(dict(d))


def _ancestors(parent, c):
    p = parent.get(c)
    while p is not None:
        yield p
        p = parent.get(p)


def _check_forest(curves, parent, name):
    for c, p in parent.items():
        if c not in curves:
            raise UnknownLabel(f"{name}: unknown curve {c!r}")
        if p is not None and p not in curves:
            raise UnknownLabel(f"{name}: parent {p!r} of {c!r} is not a curve")
    for c in curves:
        seen = {c}
        for a in _ancestors(parent, c):
            if a in seen:
                raise InvariantViolation(f"{name} has a cycle through {c!r}", row=c)
            seen.add(a)


@dataclass(frozen=True)
class IntersectionPattern:
    curves: frozenset
    delta_parent: Mapping
    s_component: Mapping
    s_parent: Mapping
    w_delta: Mapping
    w_s: Mapping
    w_component: Mapping

    def __post_init__(self):
        curves = frozenset(self.curves)
        for c in curves:
            if not isinstance(c, str):
                raise TypeError(f"curve ids must be strings, got {c!r}")
        dp = {c: self.delta_parent.get(c) for c in curves}
        sp = {c: self.s_parent.get(c) for c in curves}
        for extra in (set(self.delta_parent) | set(self.s_parent)) - curves:
            raise UnknownLabel(f"parent map names unknown curve {extra!r}")
        _check_forest(curves, dp, "delta_parent")
        _check_forest(curves, sp, "s_parent")
        wc = {k: rational(x) for k, x in self.w_component.items()}
        comp = {}
        for c in curves:
            if c not in self.s_component:
                raise InvariantViolation(f"curve {c!r} has no S component", row=c)
            k = self.s_component[c]
            if k not in wc:
                raise UnknownComponent(f"component {k!r} of curve {c!r} has no weight")
            comp[c] = k
        for c, p in sp.items():
            if p is not None and comp[p] != comp[c]:
                raise InvariantViolation(
                    f"s_parent of {c!r} lies in another component", row=c
                )
        wd, ws = {}, {}
        for name, src, dst in (("w_delta", self.w_delta, wd), ("w_s", self.w_s, ws)):
            for c in curves:
                if c not in src:
                    raise InvariantViolation(f"{name} missing for {c!r}", row=c)
                dst[c] = rational(src[c])
                if dst[c] < 0:
                    raise InvariantViolation(f"{name}({c!r}) is negative", row=c)
        for k, x in wc.items():
            if x < 0:
                raise InvariantViolation(f"w_component({k!r}) is negative", row=k)
        for c in curves:
            if dp[c] is not None and wd[c] > wd[dp[c]]:
                raise InvariantViolation(f"w_delta({c!r}) exceeds its parent's", row=c)
            if sp[c] is not None and ws[c] > ws[sp[c]]:
                raise InvariantViolation(f"w_s({c!r}) exceeds its parent's", row=c)
            if ws[c] > wc[comp[c]]:
                raise InvariantViolation(f"w_s({c!r}) exceeds its component weight", row=c)
        set_ = object.__setattr__
        set_(self, "curves", curves)
        set_(self, "delta_parent", _frozen(dp))
        set_(self, "s_parent", _frozen(sp))
        set_(self, "s_component", _frozen(comp))
        set_(self, "w_delta", _frozen(wd))
        set_(self, "w_s", _frozen(ws))
        set_(self, "w_component", _frozen(wc))

    @property
    def order(self) -> tuple:
        return tuple(sorted(self.curves))

    @property
    def components(self) -> tuple:
        return tuple(sorted(self.w_component, key=str))

    def is_s_descendant(self, c, ancestor) -> bool:
        return ancestor in _ancestors(self.s_parent, c)

    def is_delta_descendant(self, c, ancestor) -> bool:
        return ancestor in _ancestors(self.delta_parent, c)

    def s_roots(self) -> frozenset:
        return frozenset(c for c in self.curves if self.s_parent[c] is None)


def empty_pattern(components: Mapping = None) -> IntersectionPattern:
    return IntersectionPattern(frozenset(), {}, {}, {}, {}, {}, components or {})


@dataclass(frozen=True)
class SurgeryEvent:
    curve: str
    removed: tuple
    discarded: tuple
    weight_change: Fraction


@dataclass(frozen=True)
class RewriteState:
    pattern: IntersectionPattern
    status: Mapping
    event_log: tuple = ()
    weights: Mapping = field(default=None)

    @classmethod
    def initial(cls, pattern: IntersectionPattern) -> "RewriteState":
        return cls(
            pattern,
            _frozen({c: ALIVE for c in pattern.curves}),
            (),
            _frozen(pattern.w_component),
        )

    def alive(self) -> tuple:
        return tuple(c for c in self.pattern.order if self.status[c] == ALIVE)

    def innermost_alive(self) -> tuple:
        """Alive curves with no alive strict Δ-descendant, in id order."""
        alive = set(self.alive())
        blocked = set()
        for c in alive:
            blocked.update(a for a in _ancestors(self.pattern.delta_parent, c))
        return tuple(c for c in self.pattern.order if c in alive and c not in blocked)

    @property
    def done(self) -> bool:
        return all(s != ALIVE for s in self.status.values())

    def key(self):
        return (
            tuple(self.status[c] for c in self.pattern.order),
            tuple(sorted(self.weights.items(), key=lambda kv: str(kv[0]))),
        )


def surger(state: RewriteState, gamma: str) -> RewriteState:
    """Surgery along Δ on the curve ``gamma``; returns a new state."""
    pat = state.pattern
    if gamma not in pat.curves:
        raise UnknownLabel(f"unknown curve {gamma!r}")
    if state.status[gamma] != ALIVE:
        raise NotAlive(f"curve {gamma!r} is {state.status[gamma]}")
    for c in pat.order:
        if state.status[c] == ALIVE and pat.is_delta_descendant(c, gamma):
            raise NotInnermost(gamma, c)
    status = dict(state.status)
    removed, discarded = [], []
    # the S-subdisc bounded by gamma currently carries w_s(gamma) adjusted by
    # the glued patches inside it; all of that is replaced by the Δ-subdisc
    current = pat.w_s[gamma]
    for c in pat.order:
        if not pat.is_s_descendant(c, gamma):
            continue
        if status[c] == ALIVE:
            status[c] = REMOVED
            removed.append(c)
        elif status[c] == GLUED:
            status[c] = DISCARDED
            discarded.append(c)
            current += pat.w_delta[c] - pat.w_s[c]
    status[gamma] = GLUED
    change = pat.w_delta[gamma] - current
    k = pat.s_component[gamma]
    weights = dict(state.weights)
    weights[k] = weights[k] + change
    event = SurgeryEvent(gamma, tuple(removed), tuple(discarded), change)
    return RewriteState(pat, _frozen(status), state.event_log + (event,), _frozen(weights))


@dataclass(frozen=True)
class PushAwayResult:
    glued: frozenset
    removed: frozenset
    discarded: frozenset
    final_weights: Mapping
    events: tuple = ()

    @property
    def normalized(self) -> tuple:
        # removed and discarded-glued depend on the order; both mean "gone"
        return (
            tuple(sorted(self.glued)),
            tuple(sorted(self.removed | self.discarded)),
            tuple(sorted(self.final_weights.items(), key=lambda kv: str(kv[0]))),
        )

    @classmethod
    def from_state(cls, state: RewriteState) -> "PushAwayResult":
        by = {s: frozenset(c for c, t in state.status.items() if t == s) for s in STATUSES}
        if by[ALIVE]:
            raise PreconditionFailed("run is not finished")
        return cls(by[GLUED], by[REMOVED], by[DISCARDED], state.weights, state.event_log)


def closed_form_weights(pattern: IntersectionPattern, glued: Iterable) -> dict:
    out = dict(pattern.w_component)
    for c in glued:
        k = pattern.s_component[c]
        out[k] += pattern.w_delta[c] - pattern.w_s[c]
    return out


def _finish(pattern, state) -> PushAwayResult:
    res = PushAwayResult.from_state(state)
    if dict(res.final_weights) != closed_form_weights(pattern, res.glued):
        raise LemmaViolation("event-log weights disagree with the closed form")
    return res


def push_away(pattern: IntersectionPattern, strategy="lowest-id") -> PushAwayResult:
    """Surger until nothing is alive.

    ``strategy`` is ``"lowest-id"`` or a sequence of curve ids used as a
    priority list: each step surgers the first listed curve that is alive and
    innermost.
    """
    if isinstance(strategy, str):
        if strategy != "lowest-id":
            raise PreconditionFailed(f"unknown strategy {strategy!r}")
        priority = pattern.order
    else:
        priority = tuple(strategy)
        if sorted(priority) != list(pattern.order):
            raise PreconditionFailed("supplied order must list every curve exactly once")
    state = RewriteState.initial(pattern)
    while not state.done:
        ready = set(state.innermost_alive())
        gamma = next(c for c in priority if c in ready)
        state = surger(state, gamma)
    return _finish(pattern, state)


def enumerate_all_orders(pattern: IntersectionPattern, cap: int = 100_000,
                         memoize: bool = True) -> set:
    """Normalized results of every maximal surgery sequence.

    Raises EnumerationCapExceeded if there are more than ``cap`` sequences.
    With ``memoize`` the sequences are explored as paths through the
    (finite) graph of states, so shared suffixes are executed once.
    """
    memo = {}

    def explore(state):
        key = state.key() if memoize else None
        if memoize and key in memo:
            return memo[key]
        if state.done:
            out = ({_finish(pattern, state).normalized}, 1)
        else:
            results, count = set(), 0
            for gamma in state.innermost_alive():
                r, n = explore(surger(state, gamma))
                results |= r
                count += n
                if count > cap:
                    raise EnumerationCapExceeded(
                        f"more than {cap} maximal surgery sequences"
                    )
            out = (results, count)
        if memoize:
            memo[key] = out
        return out

    results, _ = explore(RewriteState.initial(pattern))
    return results


def count_sequences(pattern: IntersectionPattern) -> int:
    memo = {}

    def go(state):
        k = state.key()
        if k not in memo:
            memo[k] = 1 if state.done else sum(go(surger(state, g)) for g in state.innermost_alive())
        return memo[k]

    return go(RewriteState.initial(pattern))


def component_restrict(pattern: IntersectionPattern, component) -> IntersectionPattern:
    if component not in pattern.w_component:
        raise UnknownComponent(f"no component {component!r}")
    keep = frozenset(c for c in pattern.curves if pattern.s_component[c] == component)

    def induced(c):
        return next((a for a in _ancestors(pattern.delta_parent, c) if a in keep), None)

    return IntersectionPattern(
        keep,
        {c: induced(c) for c in keep},
        {c: component for c in keep},
        {c: pattern.s_parent[c] for c in keep},
        {c: pattern.w_delta[c] for c in keep},
        {c: pattern.w_s[c] for c in keep},
        {component: pattern.w_component[component]},
    )


def project(result: PushAwayResult, pattern: IntersectionPattern, component) -> tuple:
    """Normalized form of ``result`` seen from one component."""
    def mine(cs):
        return frozenset(c for c in cs if pattern.s_component[c] == component)

    return PushAwayResult(
        mine(result.glued), mine(result.removed), mine(result.discarded),
        {component: result.final_weights[component]},
    ).normalized


def weight_delta(pattern: IntersectionPattern, result: PushAwayResult) -> dict:
    """Per-component change in weight. A diagnostic: positive values are allowed."""
    return {k: result.final_weights[k] - pattern.w_component[k] for k in pattern.components}


# -- corpus ------------------------------------------------------------------


def _labeled_forests(nodes):
    """Every parent map on ``nodes`` that is a forest."""
    nodes = list(nodes)
    for choice in product([None] + nodes, repeat=len(nodes)):
        parent = dict(zip(nodes, choice))
        if any(p == c for c, p in parent.items()):
            continue
        try:
            _check_forest(set(nodes), parent, "s")
        except InvariantViolation:
            continue
        yield parent


def _random_forest(rng, nodes):
    # attach in a random order to an earlier node or make a root
    order = list(nodes)
    rng.shuffle(order)
    parent = {}
    for i, c in enumerate(order):
        parent[c] = None if i == 0 or rng.random() < 0.3 else rng.choice(order[:i])
    return parent


def _monotone_weights(rng, curves, parent, top):
    out = {}

    def w(c):
        if c not in out:
            above = top if parent[c] is None else w(parent[c])
            out[c] = above * Fraction(rng.randint(1, 8), 8)
        return out[c]

    for c in sorted(curves):
        w(c)
    return out


def _build(rng, names, dparent, comp, sparent):
    wc = {k: Fraction(rng.randint(4, 16), 4) for k in sorted(set(comp.values()) | {"C0"})}
    ws = {}
    for k in wc:
        mine = [c for c in names if comp[c] == k]
        ws.update(_monotone_weights(rng, mine, {c: sparent[c] for c in mine}, wc[k]))
    wd = _monotone_weights(rng, names, dparent, Fraction(rng.randint(1, 12), 4))
    return IntersectionPattern(frozenset(names), dparent, comp, sparent, wd, ws, wc)


def pattern_corpus(max_curves: int = 6, cap: int = 5000, exhaustive_up_to: int = 3,
                   seed: int = 0, components: int = 2):
    """Deterministic list of patterns.

    Every combination of Δ-forest shape, component split and S-forest is
    produced for up to ``exhaustive_up_to`` curves.  Δ-forests are taken with
    parents of lower index, which covers every shape once relabelled.  Larger
    sizes are filled with seeded random draws until ``cap`` patterns exist.
    Curve ids are ``g0, g1, ...``; component ids ``C0, C1``.
    """
    rng = random.Random(seed)
    out = [empty_pattern({"C0": Fraction(1)})]
    for n in range(1, min(exhaustive_up_to, max_curves) + 1):
        names = [f"g{i}" for i in range(n)]
        dshapes = product(*[[None] + names[:i] for i in range(n)])
        for dchoice in dshapes:
            dparent = dict(zip(names, dchoice))
            # first curve always in C0; others free among the components
            for rest in product(range(components), repeat=n - 1):
                comp = dict(zip(names, ("C0",) + tuple(f"C{k}" for k in rest)))
                groups = {}
                for c in names:
                    groups.setdefault(comp[c], []).append(c)
                for parts in product(*[list(_labeled_forests(g)) for g in groups.values()]):
                    sparent = {}
                    for p in parts:
                        sparent.update(p)
                    out.append(_build(rng, names, dparent, comp, sparent))
                    if len(out) >= cap:
                        return out
    sizes = list(range(exhaustive_up_to + 1, max_curves + 1))
    while sizes and len(out) < cap:
        out.append(random_pattern(rng, sizes[len(out) % len(sizes)], components))
    return out


def random_pattern(rng: random.Random, n: int, components: int = 2) -> IntersectionPattern:
    """Random pattern with exactly ``n`` curves over at most ``components`` components."""
    names = [f"g{i}" for i in range(n)]
    dparent = _random_forest(rng, names)
    comp = {c: f"C{rng.randrange(components)}" for c in names}
    sparent = {}
    for k in sorted(set(comp.values())):
        sparent.update(_random_forest(rng, [c for c in names if comp[c] == k]))
    return _build(rng, names, dparent, comp, sparent)


def drop_curve(pattern: IntersectionPattern, gamma: str) -> IntersectionPattern:
    """Delete one curve; its children move up to its parents in both forests."""
    keep = pattern.curves - {gamma}

    def lift(parent):
        return {c: (parent[gamma] if parent[c] == gamma else parent[c]) for c in keep}

    return IntersectionPattern(
        keep,
        lift(pattern.delta_parent),
        {c: pattern.s_component[c] for c in keep},
        lift(pattern.s_parent),
        {c: pattern.w_delta[c] for c in keep},
        {c: pattern.w_s[c] for c in keep},
        dict(pattern.w_component),
    )
