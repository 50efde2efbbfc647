"""Exception hierarchy shared by all lamcert modules."""


class LamcertError(ValueError):
    """Base class for every error raised by lamcert."""


class DimensionMismatch(LamcertError):
    pass


class IndexOutOfRange(LamcertError):
    pass


class NotIrreducible(LamcertError):
    pass


class SubmatrixNotIrreducible(NotIrreducible):
    pass


class PreconditionFailed(LamcertError):
    pass


class LemmaViolation(AssertionError):
    """A theorem-backed inequality failed. Always an implementation defect."""


class UnknownLabel(LamcertError):
    pass


class InvariantViolation(LamcertError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class LayerRuleViolation(InvariantViolation):
    def __init__(self, surface, target):
        super().__init__(
            f"surface {surface!r} is carried by {target!r}, which is neither a "
            "base disc nor a surface of the next layer up",
            row=surface,
        )
        self.surface = surface
        self.target = target


class SurrogateViolation(PreconditionFailed):
    pass


class NonIncreaseViolation(PreconditionFailed):
    pass


class PropagationTimeout(LamcertError):
    def __init__(self, indices, p_max):
        super().__init__(
            f"no strict drop within p_max={p_max} at indices {sorted(indices)}"
        )
        self.indices = tuple(sorted(indices))
        self.p_max = p_max


class NotSeparable(LamcertError):
    """Intervals still overlap at the iteration cap (inconclusive)."""


class NotInnermost(LamcertError):
    def __init__(self, curve, blocker):
        super().__init__(f"curve {curve!r} has alive delta-descendant {blocker!r}")
        self.curve = curve
        self.blocker = blocker


class NotAlive(LamcertError):
    pass


class EnumerationCapExceeded(LamcertError):
    pass


class UnknownComponent(LamcertError):
    pass


class UnknownSuite(LamcertError):
    pass


class SchemaError(LamcertError):
    """A document failed validation. ``errors`` is a list of (path, message)."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.errors))


class VersionUnsupported(LamcertError):
    pass
