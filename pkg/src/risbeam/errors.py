"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Malformed or inconsistent configuration input (JSON files, CLI args)."""


class ZeroElementError(ArithmeticError):
    """Retraction hit a (numerically) zero element; the step is degenerate.

    Callers recover by increasing the diagonal loading and recomputing the
    direction.
    """


class MonotonicityViolation(RuntimeError):
    """A solver step increased the objective beyond the allowed slack.

    This signals a numerical pathology (the convergence conditions guarantee
    monotone decrease); it is surfaced instead of being silently swallowed.
    """


class BudgetExceededError(RuntimeError):
    """An exhaustive-enumeration request exceeds the allowed budget."""
