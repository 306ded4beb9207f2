"""Exception types raised by the toolkit."""


class BurgerError(Exception):
    """Base class for all errors raised by hcburger."""


class UnmatchedFlexible(BurgerError):
    def __init__(self, index: int):
        super().__init__(f"flexible order at index {index} has no match")
        self.index = index


class NotReached(BurgerError):
    """A backward stopping time does not occur within the supplied word."""


class OutOfRange(BurgerError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class Exhausted(BurgerError):
    """A rejection sampler used up its trial budget."""

    def __init__(self, max_trials: int, accepted: int = 0, detail: str = ""):
        rate = accepted / max_trials if max_trials else 0.0
        msg = f"no acceptance within {max_trials} trials (measured rate {rate:.3g})"
        if detail:
            msg += f"; {detail}"
        super().__init__(msg)
        self.max_trials = max_trials
        self.accepted = accepted


class FlexiblePresent(BurgerError, ValueError):
    """A word that should be flexible-free still contains flexible orders."""


class OutOfCone(BurgerError, ValueError):
    """A point lies outside the closed first quadrant."""


class DegenerateSurvival(BurgerError):
    """Estimated survival probability fell below the usable floor."""


class NotClosed(BurgerError):
    """A word whose reduction should be empty is not."""


class InsufficientHits(BurgerError):
    """Too few events or grid points to produce an estimate."""


class CodecError(BurgerError, ValueError):
    """Malformed word text."""
