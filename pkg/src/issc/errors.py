"""Exception types raised across the toolkit."""


class IsscError(Exception):
    """Base class for all toolkit errors."""


class DegenerateGeometry(IsscError):
    """Coincident nodes or non-positive distances."""


class InvalidBer(IsscError, ValueError):
    pass


class FitDataInsufficient(IsscError, ValueError):
    pass


class FitDiverged(IsscError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class UnobservableTarget(IsscError):
    """Position block of the FIM is singular."""


class InconsistentFim(IsscError):
    """Schur complement of the delay-nuisance block is not positive."""


class InvalidLmi(IsscError, ValueError):
    pass


class ConicError(IsscError):
    def __init__(self, msg, solution=None):
        super().__init__(msg)
        self.solution = solution


class RateInfeasible(IsscError):
    pass


class MaxIter(IsscError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class HcrbInfeasible(IsscError):
    pass


class ZfDegenerate(IsscError):
    pass


class AllModelsInfeasible(IsscError):
    def __init__(self, msg, failures=None):
        super().__init__(msg)
        self.failures = failures or {}


class ConfigError(IsscError, ValueError):
    pass
