"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class TypolexError(Exception):
    """Base class; ``stage`` is filled in by the pipeline when a stage aborts."""

    kind = "error"
    stage: str | None = None

    def to_dict(self):
        d = {"error": self.kind, "message": str(self)}
        if self.stage:
            d["stage"] = self.stage
        return d


class SchemaError(TypolexError):
    kind = "schema_error"


class EmptyInputError(TypolexError):
    kind = "empty_input"


class UndefinedStatisticError(TypolexError):
    kind = "undefined_statistic"


class ConfigurationError(TypolexError):
    kind = "configuration_error"


class InfeasibleInventoryError(TypolexError):
    kind = "infeasible_inventory"


class RepairFailureError(TypolexError):
    kind = "repair_failure"


class InfeasibleFillError(TypolexError):
    kind = "infeasible_fill"


class FeatureLookupError(TypolexError, KeyError):
    kind = "feature_lookup"

    def __str__(self):
        return Exception.__str__(self)


class CapacityError(TypolexError):
    kind = "capacity_error"

    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved

    def to_dict(self):
        d = super().to_dict()
        d["achieved"] = self.achieved
        return d


class StructuralError(TypolexError):
    kind = "structural_error"


class CoverageError(TypolexError):
    kind = "coverage_error"


class InputError(TypolexError, ValueError):
    kind = "input_error"
