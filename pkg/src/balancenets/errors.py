"""Exception hierarchy shared across the toolkit.

Every error raised on purpose derives from BalanceNetsError so the CLI can
map failures to machine-readable JSON without guessing.
"""


class BalanceNetsError(Exception):
    """Base class for all toolkit errors."""

    code = "error"


class ValidationError(BalanceNetsError, ValueError):
    """Malformed input: bad JSON payloads, broken invariants, bad arguments."""

    code = "validation"


class GroupMismatchError(ValidationError):
    """Two elements from different groups were combined."""

    code = "group-mismatch"


class BoundExceededError(BalanceNetsError):
    """A configured size bound (states, group order, node count) was exceeded."""

    code = "bound-exceeded"


class NonPotentialError(BalanceNetsError):
    """An operation that requires a potential marking received one that is not."""

    code = "non-potential"


class SingularSeedError(ValidationError):
    """Seed matrix construction produced a singular matrix."""

    code = "singular-seed"


class DegeneratePlaneError(BalanceNetsError):
    """The requested plane cuts the involution quadric in a degenerate conic."""

    code = "degenerate-plane"


class FieldDomainError(BalanceNetsError):
    """A smooth field was evaluated outside its valid domain."""

    code = "field-domain"


class ParityError(ValidationError):
    """Quadrature parity tags are inconsistent with the cycle structure."""

    code = "parity"
