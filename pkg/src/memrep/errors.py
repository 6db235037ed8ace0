"""Exception hierarchy shared across the package."""


class MemrepError(Exception):
    """Base class for all memrep-specific errors."""


class ConfigurationError(MemrepError):
    """Invalid configuration: incompatible grids, bad fields, missing data."""


class DegenerateGameError(MemrepError):
    """2x2 game with a - b - c + d = 0: no generic interior root."""


class RegimeError(MemrepError):
    """Operation requires the snowdrift regime (b > d and c > a)."""


class PayoffScaleError(MemrepError):
    """Imitation probabilities could exceed total mass 1 for this payoff scale."""


class InvalidHistoryError(MemrepError):
    """Initial history moves faster than one imitation per step allows."""


class InstabilityError(MemrepError):
    """Euler integration left the simplex beyond tolerance; reduce the step."""


class RootFindingError(MemrepError):
    """Characteristic-root continuation failed to converge."""
