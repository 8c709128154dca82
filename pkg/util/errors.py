"""Exceptions raised by the library. Only ``main.run`` turns them into exit codes."""


class SelfSimError(Exception):
    exit_code = 1


class InputError(SelfSimError, ValueError):
    """Malformed document, unknown symbol, bad parameter."""
    exit_code = 2


class DimensionError(InputError):
    pass


class HypothesisError(SelfSimError):
    """A mathematical precondition of the requested computation fails."""
    exit_code = 3

    def __init__(self, message, hypothesis=None):
        if hypothesis:
            message = "{} [hypothesis: {}]".format(message, hypothesis)
        super().__init__(message)
        self.hypothesis = hypothesis


class IntegralityError(HypothesisError):
    pass


class IllDefinedMapError(HypothesisError):
    def __init__(self, message, witness=None, hypothesis="homomorphism is well defined"):
        super().__init__(message, hypothesis)
        self.witness = witness


class NotTransitiveError(HypothesisError):
    pass


class ConsistencyError(SelfSimError):
    """Two independent computations of the same quantity disagree."""
    exit_code = 1
