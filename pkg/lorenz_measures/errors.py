"""Exception types raised across lorenz-measures.

Every error derives from ``LorenzMeasuresError`` so that pipelines can turn
module failures into report entries with a single ``except`` clause.
"""

from typing import Optional, Tuple


class LorenzMeasuresError(Exception):
    """Base class for all toolkit errors."""


# lorenz_map


class SingularityError(LorenzMeasuresError):
    """Raised when a map is evaluated at c without a side tag."""


class DomainError(LorenzMeasuresError, ValueError):
    """Raised for coordinates outside [0, 1]."""


class NoPreimageError(LorenzMeasuresError):
    """Raised when a point lies outside the image of the requested branch."""


class IncompatibleFamilyError(LorenzMeasuresError):
    """Raised when two maps do not share (c, alpha, beta)."""


class InvalidMapError(LorenzMeasuresError):
    """Raised when a map violates an endpoint or expansion invariant."""


# orbit_engine


class BudgetExhaustedError(LorenzMeasuresError):
    """Raised when the forward error budget is spent before a decision.

    Attributes:
        step: Orbit step at which the budget ran out
        budget: Accumulated error bound at that step
    """

    def __init__(self, step: int, budget: float, message: Optional[str] = None):
        self.step = step
        self.budget = budget
        super().__init__(message or f"Error budget {budget:.3e} exhausted at step {step}")


class NoPeriodicPointError(LorenzMeasuresError):
    """Raised when an itinerary word admits no periodic point."""

    def __init__(self, word: str):
        self.word = word
        super().__init__(f"Word {word!r} is inadmissible: empty bracket after pullback")


# recurrence


class PreconditionError(LorenzMeasuresError):
    """Raised when the distortion precondition fails.

    Attributes:
        step: First orbit step at which the precondition is violated
    """

    def __init__(self, step: int, message: str):
        self.step = step
        super().__init__(f"Precondition violated at step {step}: {message}")


class FastRecurrenceError(LorenzMeasuresError):
    """Raised when a singular orbit falls into c, so M is unbounded."""


# induced_markov


class InapplicableError(LorenzMeasuresError):
    """Raised when a map fails a hypothesis of the induced construction.

    Attributes:
        clause: Name of the violated hypothesis clause
    """

    def __init__(self, clause: str, message: str):
        self.clause = clause
        super().__init__(f"Hypothesis '{clause}' fails: {message}")


class SearchExhaustedError(LorenzMeasuresError):
    """Raised when no admissible periodic endpoint is found."""


class MarkovViolationError(LorenzMeasuresError):
    """Raised when a return image covers only part of the base interval."""

    def __init__(self, word: str, image: Tuple[float, float]):
        self.word = word
        self.image = image
        super().__init__(
            f"Return word {word!r} has image ({image[0]:.12g}, {image[1]:.12g}) "
            "that meets J without covering it"
        )


# measures


class MassDistributionError(LorenzMeasuresError, ValueError):
    """Raised for invalid mass-distribution parameters."""


class EmptyTowerError(LorenzMeasuresError):
    """Raised when a tower carries no atoms."""


# perturbation


class ChainNotFoundError(LorenzMeasuresError):
    """Raised when a preimage chain does not approach its target."""


class InfeasibleTuningError(LorenzMeasuresError):
    """Raised when no chain point is admissible at the requested epsilon."""


class BracketError(LorenzMeasuresError):
    """Raised when a shooting bracket has no usable sign change.

    Attributes:
        location: Index of the first itinerary symbol that differs across the
            bracket, or None when the itineraries agree
    """

    def __init__(self, message: str, location: Optional[int] = None):
        self.location = location
        super().__init__(message)


# cli


class ConfigSchemaError(LorenzMeasuresError):
    """Raised for malformed experiment configs.

    Attributes:
        path: Dotted location of the first offending field
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"Config error at '{path}': {message}")
