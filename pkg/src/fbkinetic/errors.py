"""Exception types raised across the package."""


class FBKineticError(Exception):
    """Base class for all package errors."""


# problem_def
class NoSignChange(FBKineticError):
    """The weight keeps a constant sign; the problem is plainly parabolic."""


class AmbiguousSign(FBKineticError):
    """The weight changes sign more often than allowed."""


class FitFailure(FBKineticError):
    """A one-sided power-law fit did not converge; the weight is not simple."""


class NonzeroPotential(FBKineticError):
    pass


class TailDivergence(FBKineticError):
    pass


# discretize
class GridError(FBKineticError):
    pass


class BadGrading(GridError):
    pass


class SingularWeight(FBKineticError):
    pass


# krein
class NearZeroEigenvalue(FBKineticError):
    pass


class EndpointOnSpectrum(FBKineticError):
    pass


# halfrange
class IllConditionedRestriction(FBKineticError):
    pass


class ContractionViolated(FBKineticError):
    pass


class NeumannStall(FBKineticError):
    pass


class SolverDisagreement(FBKineticError):
    """Two independent routes to the same quantity disagree beyond tolerance."""


class OutOfSlab(FBKineticError):
    pass


class BoundaryDataError(FBKineticError):
    pass


# duhamel
class TailNotIntegrable(FBKineticError):
    pass


# abstract_kinetic
class ZeroTEntry(FBKineticError):
    pass


class NotPositive(FBKineticError):
    pass


class NotSymmetric(FBKineticError):
    pass


# oracle
class SingularSystem(FBKineticError):
    pass


# cli
class ConfigError(FBKineticError):
    pass
