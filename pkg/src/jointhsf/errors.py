"""Exception types raised across the package."""

from __future__ import annotations


class CircuitError(ValueError):
    """Invalid gate or circuit construction."""


class ParseError(CircuitError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.message = message

    def __reduce__(self):
        return type(self), (self.line_no, self.message)


class BlockTooLarge(ValueError):
    """A gate block exceeds the configured qubit cap for dense assembly."""


class PathBudgetExceeded(RuntimeError):
    def __init__(self, n_paths: int, budget: int):
        super().__init__(f"plan needs {n_paths} paths, budget is {budget}")
        self.n_paths = n_paths
        self.budget = budget

    def __reduce__(self):
        return type(self), (self.n_paths, self.budget)


class MemoryCapExceeded(MemoryError):
    """Requested state size is above the configured qubit cap."""
