"""Exception types shared across the package."""


class CftwinError(Exception):
    """Base class for errors raised by cftwin."""


class StructuralError(CftwinError, ValueError):
    """A causal diagram is malformed (cycle, dangling edge, bad name)."""

    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class ModelError(CftwinError, ValueError):
    """An SCM, regime, or policy violates its invariants."""


class BudgetExceeded(CftwinError, RuntimeError):
    """An exact enumeration or policy search would exceed its budget."""

    def __init__(self, needed, budget, what="enumeration"):
        super().__init__(f"{what} needs {needed} terms, budget is {budget}")
        self.needed = needed
        self.budget = budget


class UndefinedQuantity(CftwinError, ArithmeticError):
    """A conditional probability has a zero-probability conditioning event."""
