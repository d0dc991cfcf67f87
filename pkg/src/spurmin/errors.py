"""Exception hierarchy shared by all spurmin modules."""


class SpurminError(Exception):
    """Base class for all package errors."""


class PreconditionViolated(SpurminError):
    """An operation was called on input that breaks its stated preconditions."""


class ShapeViolation(PreconditionViolated):
    """Matrix or vector shapes are inconsistent with the declared dimensions."""


class WidthViolation(PreconditionViolated):
    """Layer widths do not satisfy the width requirements of a construction."""


class InvalidLabels(PreconditionViolated):
    """Cross-entropy loss was given label columns that are not one-hot."""


class NoAdmissibleTurningPoint(SpurminError):
    """Every breakpoint of the activation has adjacent slopes summing to zero
    (or the activation is linear), so the standard construction routes do not
    apply; callers should fall back to the balanced-slope route."""


class AllRowsZero(SpurminError):
    """The linear baseline fits the data exactly, so no nonzero residual row
    exists to seed a descent construction."""


class NonConvergence(SpurminError):
    """An iterative fit did not reach its gradient tolerance within budget."""


class SizingFailed(SpurminError):
    """The halving search for the descent constants exhausted its budget."""


class StrictDecreaseNotAchieved(SpurminError):
    """A descent witness could not be made strictly better than the baseline
    within the halving budget (numerically degenerate input)."""


class ConstructionError(SpurminError):
    """A construction violated one of its own postconditions (internal check)."""


class BoundaryCell(SpurminError):
    """A cell operation was asked to run on a point sitting on a cell boundary."""


class NotEquivalent(SpurminError):
    """Valley-path endpoints are not in the same rescaling equivalence class."""


class GenerationFailed(SpurminError):
    """A random dataset generator failed to satisfy its constraints after retries."""


class ParseError(SpurminError):
    """A data or network file could not be parsed (maps to the io exit code)."""
