"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An input lies outside the domain of the requested operation."""


class NumericalFailure(ArithmeticError):
    """A root could not be bracketed or resolved.

    ``trace`` holds the last evaluated ``(t, value)`` pairs for diagnosis.
    """

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class SamplingAbort(RuntimeError):
    """Rejection sampling accepted too few candidates to continue."""

    def __init__(self, message, candidates=0, accepted=0):
        super().__init__(message)
        self.candidates = candidates
        self.accepted = accepted
