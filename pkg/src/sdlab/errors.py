"""Exception types raised across the package."""


class SDLError(ValueError):
    """Base class for invalid inputs and failed constructions."""


class ScheduleError(SDLError):
    """A schedule is malformed or would exceed the coefficient cap."""


class ConstructionError(SDLError):
    """An adversarial construction could not satisfy its selection conditions."""


class DomainError(SDLError):
    """An evaluation point lies outside the trusted domain."""
