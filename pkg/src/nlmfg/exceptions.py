class ConfigurationError(ValueError):
    """Raised for invalid grids, bases, problem data or run configurations."""


class DivergenceError(RuntimeError):
    """Raised when the PDHG iteration produces a non-finite iterate."""

    def __init__(self, variable: str, iteration: int):
        self.variable = variable
        self.iteration = iteration
        super().__init__(f"non-finite values in {variable!r} at iteration {iteration}")
