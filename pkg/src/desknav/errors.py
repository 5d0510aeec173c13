"""Exception types shared across the package."""


class DesknavError(Exception):
    pass


class ConfigError(DesknavError, ValueError):
    """Scenario document does not match the schema; ``key`` names the offender."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


class ValidationError(DesknavError, ValueError):
    pass


class DomainError(DesknavError, ValueError):
    """Input lies outside the region an operation is defined on."""


class ContractError(DesknavError, ValueError):
    """Precondition of an operation violated by the caller."""


class MapFormatError(DesknavError, ValueError):
    pass


class TraceParseError(DesknavError, ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class PlanningError(DesknavError):
    pass


class NoPath(PlanningError):
    pass


class InvalidStart(PlanningError):
    pass


class InvalidGoal(PlanningError):
    pass
