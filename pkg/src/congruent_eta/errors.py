"""Exception types. The CLI maps these onto exit codes."""


class BudgetError(RuntimeError):
    """A configured memory/time/depth budget would be exceeded."""


class DepthError(BudgetError):
    """Canonical-height evaluation needs more doublings than allowed."""
