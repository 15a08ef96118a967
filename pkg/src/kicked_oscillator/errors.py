"""Exception types raised by the simulator."""


class KickedOscillatorError(Exception):
    """Base class for all package errors."""


class TruncationError(KickedOscillatorError):
    """The finite Fock basis is too small for the requested evolution.

    ``required_basis`` carries a suggested basis size when one can be
    estimated, ``where`` the (sigma, realization, t) coordinates of the
    first failure when raised from an ensemble run.
    """

    def __init__(self, message, required_basis=None, where=None):
        super().__init__(message)
        self.required_basis = required_basis
        self.where = where


class ConvergenceError(KickedOscillatorError):
    """The Hermitian eigensolver failed to converge."""


class FitError(KickedOscillatorError):
    """Not enough usable data points for a fit."""


class DegenerateInput(KickedOscillatorError, ValueError):
    """Input for which the requested quantity is undefined or infinite."""


class InsufficientRealizations(KickedOscillatorError, ValueError):
    """Monte Carlo estimate requested with fewer than two realizations."""
