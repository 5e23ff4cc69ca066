"""Exception hierarchy shared by the package."""


class NonlocalPopError(Exception):
    """Base class for all errors raised by nonlocal_pop."""


class ConfigurationError(NonlocalPopError, ValueError):
    """Invalid parameters, grids, schemes or incompatible option combinations."""


class UnsupportedOperationError(NonlocalPopError, TypeError):
    """The requested operation is not defined for this kernel shape."""


class ScanRangeError(NonlocalPopError, ValueError):
    """The dispersion scan does not reach the diffusion-dominated regime."""


class InvalidBranchError(NonlocalPopError, ValueError):
    """Critical-curve branch index is not a positive odd integer."""


class SingularInputError(NonlocalPopError, ZeroDivisionError):
    """Input sits on a singularity of the formula (e.g. zero frequency)."""


class PhaseSingularityError(NonlocalPopError, ArithmeticError):
    """Phase-plane orbit crossed the line where the effective diffusion vanishes."""


class NonClosureError(NonlocalPopError, ArithmeticError):
    """Phase-plane orbit did not return to its start within the step budget."""


class NoFrontError(NonlocalPopError, ValueError):
    """No level crossing was found in too many snapshots."""


class BlowUpError(NonlocalPopError, FloatingPointError):
    """Non-finite values appeared during time stepping.

    ``record`` holds the partial run up to the last finite snapshot and
    ``time`` the simulation time of the offending step.
    """

    def __init__(self, message, time=None, record=None):
        super().__init__(message)
        self.time = time
        self.record = record
