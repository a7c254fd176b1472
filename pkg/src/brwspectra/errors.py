"""Exception types shared across the package.

Each carries a short machine-readable ``code`` that the CLI reports on stderr.
"""
from __future__ import annotations


class BRWError(Exception):
    code = "error"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


class ConfigError(BRWError):
    code = "config_error"


class NoSampler(BRWError):
    code = "no_sampler"


class QuadratureFailure(BRWError):
    code = "quadrature_failure"


class OutsideDomain(BRWError):
    code = "outside_domain"


class SubcriticalTruncation(BRWError):
    code = "subcritical_truncation"


class NotNormalizable(BRWError):
    code = "not_normalizable"


class DegenerateLaw(BRWError):
    """Increments lie in an affine hyperplane almost surely."""

    code = "degenerate_law"


class DomainMiss(BRWError):
    code = "domain_miss"


class EverywhereInfinite(BRWError):
    code = "everywhere_infinite"


class InconclusiveScan(BRWError):
    code = "inconclusive_scan"


class BudgetExceeded(BRWError):
    code = "budget_exceeded"

    def __init__(self, attempted: int, budget: int):
        super().__init__(
            f"level expansion needs {attempted} nodes, budget is {budget}",
            attempted=attempted,
            budget=budget,
        )
        self.attempted = attempted
        self.budget = budget


class RejectionStall(BRWError):
    code = "rejection_stall"


class GradientInversionFailure(BRWError):
    code = "gradient_inversion_failure"
