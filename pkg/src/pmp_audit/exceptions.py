class ShapeError(ValueError):
    """Inputs disagree in shape, dimension or outcome alphabet."""


class ContractError(ValueError):
    """A precondition on the relationship between arguments is violated."""


class CalibrationError(RuntimeError):
    """A bracketing search could not locate the requested parameter."""


class UnsupportedDimensionError(ValueError):
    pass
