"""Exception hierarchy shared by all beamflow modules."""


class BeamflowError(Exception):
    """Base class for every error raised by the package."""


class ScenarioError(BeamflowError, ValueError):
    """A scenario violates one of its invariants.

    ``field`` names the first offending field so loaders can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class CommodityError(BeamflowError, ValueError):
    pass


class DivergenceError(BeamflowError, ArithmeticError):
    def __init__(self, iteration, message="non-finite value encountered"):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


class LineSearchError(BeamflowError, ArithmeticError):
    """Armijo backtracking ran out of trials."""

    def __init__(self, message, node=None):
        if node is not None:
            message = f"node {node}: {message}"
        super().__init__(message)
        self.node = node


class NoRouteError(BeamflowError):
    def __init__(self, commodities):
        self.commodities = list(commodities)
        desc = ", ".join(f"{s}->{t}" for s, t in self.commodities)
        super().__init__(f"no route for commodity {desc}")


class OracleTooLargeError(BeamflowError):
    pass
