"""Exception types raised across the package."""


class NNTKError(Exception):
    """Base class for all package errors."""


class InputError(NNTKError, ValueError):
    """Malformed or out-of-range input (shapes, counts, non-finite values)."""


class SolveError(NNTKError, ArithmeticError):
    """A linear system was singular to working precision."""

    def __init__(self, message, smallest=None):
        super().__init__(message)
        self.smallest = smallest


class SizeGuardError(NNTKError):
    """Refusal to materialize a dense matrix above the oracle size limit."""


class DefinitenessError(NNTKError, ArithmeticError):
    """A matrix required to be positive definite is not.

    Carries the offending neuron index (if any), the eigenvalue found and,
    for training runs, the step index at which it happened.
    """

    def __init__(self, message, neuron=None, eigenvalue=None, step=None):
        super().__init__(message)
        self.neuron = neuron
        self.eigenvalue = eigenvalue
        self.step = step
