"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid scenario, lane geometry or weight configuration."""


class InvariantViolation(RuntimeError):
    """An internal guarantee was broken (search failed to reach a goal, bad parent chain, ...)."""
