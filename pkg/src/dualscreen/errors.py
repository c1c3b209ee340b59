"""Exception types shared across the package."""


class DualScreenError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(DualScreenError):
    """A configuration file or value is malformed."""


class ParseError(DualScreenError):
    """A menu or report file could not be parsed."""


class GridMismatch(DualScreenError):
    """A menu's grids do not match the scenario's grids."""


class InvalidSlope(DualScreenError):
    """A marginal retention value lies outside [0, 1]."""


class DegenerateSurvival(DualScreenError):
    """Hazard rate requested at a point where the survival function vanishes."""


class DegenerateDensity(DualScreenError):
    """A density is non-positive where positivity is required."""


class AssumptionViolated(DualScreenError):
    """A structural assumption required by the synthesis rule failed."""


class InstanceTooLarge(DualScreenError):
    """A brute-force instance exceeds the enumeration cap."""
