"""Exception hierarchy shared by all modules."""


class SurfelastError(Exception):
    """Base class for every error raised by the package."""


class InputError(SurfelastError, ValueError):
    """Invalid user input (non-unit normal, bad mesh counts, schema violation)."""


class SingularityError(SurfelastError):
    """A quantity needed by the operation is singular or undefined.

    Parameters
    ----------
    message : str
        Human readable description.
    value : float, optional
        The offending quantity, e.g. the second singular value.
    """

    def __init__(self, message, value=None, where=None):
        super().__init__(message)
        self.value = value
        self.where = where


class InadmissibleDeformationError(SurfelastError):
    """Bulk deformation with det F <= 0."""

    def __init__(self, message, detF=None):
        super().__init__(message)
        self.detF = detF


class InvertedElementError(SurfelastError):
    """An element whose isoparametric map has non-positive determinant."""

    def __init__(self, message, elements=()):
        super().__init__(message)
        self.elements = tuple(int(e) for e in elements)


class NonConvergenceError(SurfelastError):
    """An iteration did not reach its tolerance."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class LineSearchError(SurfelastError):
    """The projected residual equation could not be solved."""

    def __init__(self, message, profile=()):
        super().__init__(message)
        self.profile = list(profile)


class ExistenceError(SurfelastError):
    """A reference solution does not exist for the given data."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class DeflationError(SurfelastError):
    """State coincides with a deflated (known) solution."""


class BranchSwitchError(SurfelastError):
    """Branch switching failed or was called with a stable state."""


class SolverFailure(SurfelastError):
    """Continuation failure tagged with the step index."""

    def __init__(self, message, step=None, cause=None):
        super().__init__(message)
        self.step = step
        self.cause = cause
