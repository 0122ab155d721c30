"""Exception hierarchy shared across the package."""


class FlatDseError(Exception):
    pass


class ConfigError(FlatDseError, ValueError):
    """Malformed or inconsistent user configuration."""


class DegenerateOperator(FlatDseError, ValueError):
    pass


class DataflowViolation(FlatDseError):
    """Base class for legality violations reported by ``dataflow.validate``."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __eq__(self, other):
        return type(self) is type(other) and self.message == other.message

    def __hash__(self):
        return hash((type(self).__name__, self.message))


class RowSplitViolation(DataflowViolation):
    """A fused tile would split the softmax reduction over the key dimension."""


class TileExceedsDims(DataflowViolation):
    pass


class EmptyTile(DataflowViolation):
    pass


class IllegalGranularity(DataflowViolation):
    pass


class InvalidDataflow(FlatDseError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{type(v).__name__}: {v.message}" for v in self.violations))


class CapacityError(FlatDseError):
    """The scratchpad cannot hold the minimal working set of a config."""


class EmptySpace(FlatDseError):
    pass


class UnreachableTarget(FlatDseError):
    def __init__(self, target, best_util):
        self.target = target
        self.best_util = best_util
        super().__init__(
            f"util target {target} unreachable; saturates at {best_util:.6f} with unbounded bandwidth"
        )
