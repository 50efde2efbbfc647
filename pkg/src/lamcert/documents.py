"""Versioned JSON documents.

Every document is an envelope::

    {"format_version": "1", "kind": "<kind>", "payload": {...}}

Rationals are always strings ``"p"`` or ``"p/q"``.  Indices inside documents
(``submatrix``) are 1-based, as in printed reports.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping

import jsonschema

from . import pfcore
from .discs import DiscSystem, Enlargement, LayeredFamily, StabilizationTrace, TraceDisc
from .errors import LamcertError, SchemaError, VersionUnsupported
from .pfcore import IncidenceMatrix
from .pushaway import IntersectionPattern

FORMAT_VERSION = "1"
KINDS = (
    "matrix",
    "subinvariance-case",
    "disc-system",
    "enlargement",
    "layered-family",
    "pattern",
    "trace",
)

# -- schemas -----------------------------------------------------------------

RATIONAL = {"type": "string", "pattern": r"^[0-9]+(/0*[1-9][0-9]*)?$"}
LABEL = {"type": "string", "minLength": 1}
COUNT = {"type": "integer", "minimum": 0}
ENTRIES = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": COUNT},
}
MULTISET = {
    "oneOf": [
        {"type": "array", "items": LABEL},
        {"type": "object", "additionalProperties": COUNT},
    ]
}
LABEL_MAP = {"type": "object", "additionalProperties": MULTISET}
WEIGHT_MAP = {"type": "object", "additionalProperties": RATIONAL}
LABELS = {"type": "array", "items": LABEL, "minItems": 1}


def _obj(required, **props):
    return {
        "type": "object",
        "required": list(required),
        "properties": props,
        "additionalProperties": False,
    }


DISC_SYSTEM = _obj(
    ["labels", "incidence", "weights", "lambda"],
    labels=LABELS, incidence=LABEL_MAP, weights=WEIGHT_MAP, **{"lambda": RATIONAL},
)

PAYLOADS = {
    "matrix": _obj(["entries"], entries=ENTRIES),
    "subinvariance-case": _obj(
        ["matrix", "v", "lambda"],
        matrix=ENTRIES,
        v={"type": "array", "minItems": 1, "items": RATIONAL},
        power={"type": "integer", "minimum": 1},
        dominated=ENTRIES,
        submatrix={"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        p_max={"type": "integer", "minimum": 1},
        **{"lambda": RATIONAL},
    ),
    "disc-system": DISC_SYSTEM,
    "enlargement": _obj(
        ["base", "new_discs", "weights", "incidence"],
        base=DISC_SYSTEM,
        new_discs={"type": "array", "items": LABEL},
        weights=WEIGHT_MAP,
        incidence=LABEL_MAP,
    ),
    "layered-family": _obj(
        ["base", "layers", "carried", "weights", "d_update"],
        base=DISC_SYSTEM,
        layers={"type": "array", "minItems": 1, "items": LABELS},
        carried=LABEL_MAP,
        weights=WEIGHT_MAP,
        d_update=LABEL_MAP,
        u=WEIGHT_MAP,
        **{"lambda": RATIONAL},
    ),
    "pattern": _obj(
        ["curves", "delta_parent", "s_component", "s_parent", "w_delta", "w_s", "w_component"],
        curves={"type": "array", "items": LABEL, "uniqueItems": True},
        delta_parent={"type": "object", "additionalProperties": {"type": ["string", "null"]}},
        s_component={"type": "object", "additionalProperties": LABEL},
        s_parent={"type": "object", "additionalProperties": {"type": ["string", "null"]}},
        w_delta=WEIGHT_MAP,
        w_s=WEIGHT_MAP,
        w_component=WEIGHT_MAP,
    ),
    "trace": _obj(
        ["systems"],
        systems={
            "type": "array",
            "items": {
                "type": "array",
                "items": _obj(
                    ["label", "class", "weight"],
                    label=LABEL,
                    weight=RATIONAL,
                    transverse={"type": "boolean"},
                    **{"class": LABEL},
                ),
            },
        },
        J={"type": ["integer", "null"], "minimum": 0},
    ),
}

ENVELOPE = _obj(
    ["format_version", "kind", "payload"],
    format_version={"type": "string"},
    kind={"enum": list(KINDS)},
    payload={"type": "object"},
)


def _strict_integer(checker, instance):
    # JSON 2.0 is a float and never a matrix entry
    return isinstance(instance, int) and not isinstance(instance, bool)


_Validator = jsonschema.validators.extend(
    jsonschema.Draft202012Validator,
    type_checker=jsonschema.Draft202012Validator.TYPE_CHECKER.redefine(
        "integer", _strict_integer
    ),
)


def schema_for(kind: str) -> dict:
    """Full JSON schema of an envelope of the given kind."""
    env = json.loads(json.dumps(ENVELOPE))
    env["properties"]["kind"] = {"const": kind}
    env["properties"]["payload"] = PAYLOADS[kind]
    return env


# -- payload objects without a home elsewhere --------------------------------


@dataclass(frozen=True)
class SubinvarianceCase:
    matrix: IncidenceMatrix
    v: tuple
    lam: Fraction
    power: int | None = None
    dominated: IncidenceMatrix | None = None
    submatrix: tuple | None = None  # 0-based
    p_max: int | None = None


@dataclass(frozen=True)
class LayeredCase:
    family: LayeredFamily
    d_update: Mapping
    u: Mapping | None = None
    lam: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "d_update", {k: tuple(sorted(_expand(v))) for k, v in self.d_update.items()}
        )
        if self.u is not None:
            object.__setattr__(self, "u", {k: pfcore.rational(x) for k, x in self.u.items()})
        if self.lam is not None:
            object.__setattr__(self, "lam", pfcore.rational(self.lam))

    def u_vector(self):
        if self.u is None:
            return None
        return tuple(self.u[s] for s in self.family.surfaces)


def _expand(ms):
    if isinstance(ms, Mapping):
        return [k for k, c in ms.items() for _ in range(c)]
    return list(ms)


@dataclass(frozen=True)
class Envelope:
    kind: str
    payload: Any
    format_version: str = FORMAT_VERSION


# -- decoding ----------------------------------------------------------------


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "$"


def _r(s) -> Fraction:
    return Fraction(s)


def _disc_system(p) -> DiscSystem:
    labels = tuple(p["labels"])
    missing = [x for x in labels if x not in p["weights"]]
    if missing:
        raise SchemaError([("payload.weights", f"no weight for {missing[0]!r}")])
    return DiscSystem(
        labels, p["incidence"], tuple(_r(p["weights"][x]) for x in labels), _r(p["lambda"])
    )


def _decode(kind, p):
    if kind == "matrix":
        return IncidenceMatrix(p["entries"])
    if kind == "subinvariance-case":
        m = IncidenceMatrix(p["matrix"])
        sub = p.get("submatrix")
        return SubinvarianceCase(
            m,
            tuple(_r(x) for x in p["v"]),
            _r(p["lambda"]),
            p.get("power"),
            IncidenceMatrix(p["dominated"]) if "dominated" in p else None,
            tuple(i - 1 for i in sub) if sub is not None else None,
            p.get("p_max"),
        )
    if kind == "disc-system":
        return _disc_system(p)
    if kind == "enlargement":
        new = tuple(p["new_discs"])
        missing = [x for x in new if x not in p["weights"]]
        if missing:
            raise SchemaError([("payload.weights", f"no weight for {missing[0]!r}")])
        return Enlargement(
            _disc_system(p["base"]), new, tuple(_r(p["weights"][x]) for x in new), p["incidence"]
        )
    if kind == "layered-family":
        fam = LayeredFamily(
            _disc_system(p["base"]),
            tuple(tuple(layer) for layer in p["layers"]),
            p["carried"],
            {k: _r(x) for k, x in p["weights"].items()},
        )
        return LayeredCase(
            fam,
            p["d_update"],
            {k: _r(x) for k, x in p["u"].items()} if "u" in p else None,
            _r(p["lambda"]) if "lambda" in p else None,
        )
    if kind == "pattern":
        return IntersectionPattern(
            frozenset(p["curves"]),
            p["delta_parent"],
            p["s_component"],
            p["s_parent"],
            {k: _r(x) for k, x in p["w_delta"].items()},
            {k: _r(x) for k, x in p["w_s"].items()},
            {k: _r(x) for k, x in p["w_component"].items()},
        )
    if kind == "trace":
        systems = tuple(
            tuple(
                TraceDisc(d["label"], d["class"], _r(d["weight"]), d.get("transverse", False))
                for d in s
            )
            for s in p["systems"]
        )
        return StabilizationTrace(systems, p.get("J"))
    raise AssertionError(kind)


def from_json(doc) -> Envelope:
    """Validate an already-decoded JSON value."""
    if isinstance(doc, Mapping) and "format_version" in doc:
        if doc["format_version"] != FORMAT_VERSION:
            raise VersionUnsupported(
                f"format_version {doc['format_version']!r} is not supported "
                f"(expected {FORMAT_VERSION!r})"
            )
    errors = sorted(_Validator(ENVELOPE).iter_errors(doc), key=_error_key)
    if not errors:
        kind = doc["kind"]
        errors = sorted(
            _Validator(PAYLOADS[kind]).iter_errors(doc["payload"]),
            key=_error_key,
        )
        errors = [_prefixed(e) for e in errors]
    else:
        errors = [(_path(e.absolute_path), e.message) for e in errors]
    if errors:
        raise SchemaError(errors)
    try:
        return Envelope(kind, _decode(kind, doc["payload"]))
    except SchemaError:
        raise
    except (LamcertError, ValueError, TypeError, KeyError, ZeroDivisionError) as exc:
        raise SchemaError([("payload", f"{type(exc).__name__}: {exc}")]) from exc


def _error_key(e):
    return [str(x) for x in e.absolute_path]


def _prefixed(e):
    return (_path(["payload", *e.absolute_path]), e.message)


def parse(text: str | bytes) -> Envelope:
    """Parse a document. Raises SchemaError or VersionUnsupported on bad input."""
    try:
        doc = json.loads(text)
    except (ValueError, UnicodeDecodeError) as exc:
        raise SchemaError([("$", f"not valid JSON: {exc}")]) from exc
    return from_json(doc)


# -- encoding ----------------------------------------------------------------


def fmt(x) -> str:
    return str(pfcore.rational(x))


def _disc_system_json(s: DiscSystem) -> dict:
    return {
        "labels": list(s.labels),
        "incidence": {k: list(v) for k, v in s.incidence.items()},
        "weights": {k: fmt(w) for k, w in zip(s.labels, s.weights)},
        "lambda": fmt(s.lam),
    }


def _encode(kind, obj) -> dict:
    if kind == "matrix":
        return {"entries": pfcore.as_matrix(obj).tolist()}
    if kind == "subinvariance-case":
        out = {"matrix": obj.matrix.tolist(), "v": [fmt(x) for x in obj.v], "lambda": fmt(obj.lam)}
        if obj.power is not None:
            out["power"] = obj.power
        if obj.dominated is not None:
            out["dominated"] = obj.dominated.tolist()
        if obj.submatrix is not None:
            out["submatrix"] = [i + 1 for i in obj.submatrix]
        if obj.p_max is not None:
            out["p_max"] = obj.p_max
        return out
    if kind == "disc-system":
        return _disc_system_json(obj)
    if kind == "enlargement":
        return {
            "base": _disc_system_json(obj.base),
            "new_discs": list(obj.new_discs),
            "weights": {k: fmt(w) for k, w in zip(obj.new_discs, obj.new_weights)},
            "incidence": {k: list(v) for k, v in obj.new_incidence.items()},
        }
    if kind == "layered-family":
        fam = obj.family
        out = {
            "base": _disc_system_json(fam.base),
            "layers": [list(layer) for layer in fam.layers],
            "carried": {k: list(v) for k, v in fam.carried.items()},
            "weights": {k: fmt(w) for k, w in fam.weights.items()},
            "d_update": {k: list(v) for k, v in obj.d_update.items()},
        }
        if obj.u is not None:
            out["u"] = {k: fmt(x) for k, x in obj.u.items()}
        if obj.lam is not None:
            out["lambda"] = fmt(obj.lam)
        return out
    if kind == "pattern":
        return {
            "curves": list(obj.order),
            "delta_parent": dict(obj.delta_parent),
            "s_component": dict(obj.s_component),
            "s_parent": dict(obj.s_parent),
            "w_delta": {k: fmt(x) for k, x in obj.w_delta.items()},
            "w_s": {k: fmt(x) for k, x in obj.w_s.items()},
            "w_component": {k: fmt(x) for k, x in obj.w_component.items()},
        }
    if kind == "trace":
        out = {
            "systems": [
                [
                    {"label": d.label, "class": d.parallel_class, "weight": fmt(d.weight),
                     "transverse": d.transverse}
                    for d in s
                ]
                for s in obj.systems
            ]
        }
        if obj.J is not None:
            out["J"] = obj.J
        return out
    raise ValueError(f"unknown kind {kind!r}")


def to_json(kind: str, obj) -> dict:
    return {"format_version": FORMAT_VERSION, "kind": kind, "payload": _encode(kind, obj)}


def dumps(kind: str, obj) -> str:
    return json.dumps(to_json(kind, obj), sort_keys=True, indent=2)


def emit(env: Envelope) -> str:
    return dumps(env.kind, env.payload)
