"""Exception types shared across the package."""

from __future__ import annotations


class SimulationDiverged(RuntimeError):
    """Raised when the integrator produces non-finite state.

    ``tick`` carries the physics-step index when known; the run aborts.
    """

    def __init__(self, message: str, tick: int | None = None):
        super().__init__(message if tick is None else f"{message} (tick {tick})")
        self.tick = tick


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem with field paths."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)
