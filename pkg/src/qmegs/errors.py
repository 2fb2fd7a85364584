"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class RankError(ValueError):
    def __init__(self, message, rank):
        super().__init__(f"{message} (numerical rank {rank})")
        self.rank = rank


class ModelConditionError(ValueError):
    """The overlaps violate p_min > p_tail."""


class ExhaustionError(RuntimeError):
    def __init__(self, message, found):
        super().__init__(f"{message} (found {len(found)} peaks)")
        self.found = list(found)
