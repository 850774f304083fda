"""Numerical settings shared by library and command line.

Settings may be stored in a JSON file, e.g.
    ```json
    {"divergence_bound": 1000.0, "plan_samples": 8192}
    ```
    and loaded with `Settings.from_file(path)`.
"""

# Standard library modules
import dataclasses
import logging
import os

# Project modules
from stagrover.errors import ConfigurationError
from stagrover.utilities import json_read


@dataclasses.dataclass(frozen=True)
class Settings:
    """Tolerances, grid sizes and bounds used throughout the package."""

    gap_floor: float = 1e-15
    quadrature_points: int = 1024
    action_samples: int = 2048
    plan_samples: int = 4096
    divergence_bound: float = 1e4
    # Endpoint offset of plan extraction, as a fraction of t_f
    endpoint_offset: float = 1e-4
    min_steps: int = 2000
    steps_per_radian: float = 40.0
    resolution_guard: float = 0.1
    # Dense oracle bound
    max_full_size: int = 4096

    def __post_init__(self):
        if self.gap_floor <= 0:
            raise ConfigurationError("gap_floor must be positive")
        if self.quadrature_points < 64:
            raise ConfigurationError("quadrature_points must be at least 64")
        if self.action_samples < 16:
            raise ConfigurationError("action_samples must be at least 16")
        if self.min_steps < 100:
            raise ConfigurationError("min_steps must be at least 100")
        if not 0 < self.endpoint_offset < 0.01:
            raise ConfigurationError("endpoint_offset must be in (0, 0.01)")

    @classmethod
    def from_file(cls, file_):
        """Return settings stored in JSON `file_`.

        Missing keys keep their default value, unknown keys are an error.
        """
        if not os.path.isfile(file_):
            raise ConfigurationError(f"Settings file `{file_}` not found")
        try:
            stored = json_read(file_)
        except ValueError as e:
            raise ConfigurationError(
                f"Settings file `{file_}` is not valid JSON: {e}"
            )
        if not isinstance(stored, dict):
            raise ConfigurationError(
                f"Settings file `{file_}` must contain a JSON object"
            )
        known = {field.name for field in dataclasses.fields(cls)}
        unknown = sorted(set(stored) - known)
        if unknown:
            raise ConfigurationError(
                f"Unknown settings in `{file_}`: {', '.join(unknown)}"
            )
        logging.debug(f"Loaded settings from `{file_}`: {stored}")
        try:
            return cls(**stored)
        except TypeError as e:
            raise ConfigurationError(f"Invalid settings in `{file_}`: {e}")


DEFAULT_SETTINGS = Settings()
