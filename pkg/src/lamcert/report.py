"""Certification reports and their text / machine renderings."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction

from . import __version__
from .pfcore import PerronCertificate

VERDICTS = ("verified", "violated", "invalid-input", "inconclusive")
EXIT_CODES = {"verified": 0, "violated": 1, "invalid-input": 2, "inconclusive": 3}
REPORT_SCHEMA_VERSION = "1"


@dataclass
class Report:
    command: str
    verdict: str = "verified"
    certificates: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    seed: int | None = None

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def note(self, operation: str, location: str, message: str, **extra):
        self.diagnostics.append(
            {"operation": operation, "location": location, "message": message, **extra}
        )

    def to_json(self) -> dict:
        return {
            "report_version": REPORT_SCHEMA_VERSION,
            "command": self.command,
            "verdict": self.verdict,
            "certificates": self.certificates,
            "diagnostics": self.diagnostics,
            "reproduction": {"seed": self.seed, "version": __version__},
        }


def interval(cert: PerronCertificate) -> dict:
    return {
        "lower": str(cert.lower),
        "upper": str(cert.upper),
        "iterations": cert.iterations,
        "converged": cert.converged,
    }


def decimal(x, digits: int = 12) -> str:
    x = Fraction(x)
    with localcontext() as ctx:
        ctx.prec = digits
        return format(Decimal(x.numerator) / Decimal(x.denominator), "f")


def _is_rational_text(s) -> bool:
    if not isinstance(s, str):
        return False
    try:
        Fraction(s)
    except ValueError:
        return False
    return "/" in s


def _text_lines(value, indent):
    pad = "  " * indent
    if isinstance(value, dict):
        for k in sorted(value):
            v = value[k]
            if isinstance(v, (dict, list)) and v and not _flat(v):
                yield f"{pad}{k}:"
                yield from _text_lines(v, indent + 1)
            else:
                yield f"{pad}{k}: {_scalar(v)}"
    elif isinstance(value, list):
        for v in value:
            if isinstance(v, (dict, list)) and not _flat(v):
                yield f"{pad}-"
                yield from _text_lines(v, indent + 1)
            else:
                yield f"{pad}- {_scalar(v)}"
    else:
        yield f"{pad}{_scalar(value)}"


def _flat(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v) or (
        isinstance(v, list) and all(isinstance(x, list) and _flat(x) for x in v)
    )


def _scalar(v) -> str:
    if _is_rational_text(v):
        return f"{v}  (~ {decimal(v)}, approximate, non-normative)"
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    if v is None:
        return "-"
    return str(v).lower() if isinstance(v, bool) else str(v)


def emit_report(report: Report, mode: str = "text") -> str:
    """Render a report. ``machine`` mode is sorted JSON; ``text`` is for people."""
    doc = report.to_json()
    if mode == "machine":
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if mode != "text":
        raise ValueError(f"unknown mode {mode!r}")
    lines = [
        f"lamcert {doc['reproduction']['version']}  {report.command}",
        f"verdict: {report.verdict} (exit {report.exit_code})",
    ]
    if report.seed is not None:
        lines.append(f"seed: {report.seed}")
    for i, cert in enumerate(report.certificates, 1):
        lines.append(f"certificate {i}:")
        lines.extend(_text_lines(cert, 1))
    for d in report.diagnostics:
        lines.append(f"[{d['operation']} @ {d['location']}] {d['message']}")
        extra = {k: v for k, v in d.items() if k not in ("operation", "location", "message")}
        if extra:
            lines.extend(_text_lines(extra, 1))
    lines.append(
        "Decimals are approximate and non-normative; the certificates are the exact rationals."
    )
    return "\n".join(lines) + "\n"
