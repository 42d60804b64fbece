"""
Configuration management for the harmonic dynamics toolkit.
Loads defaults from environment variables and optional dotenv files.
"""
import logging
import os
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Optional

from dotenv import dotenv_values, load_dotenv

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)


class Config:
    """Process-wide defaults read from the environment."""

    # Truncation order N of every series and operator matrix
    HARMONIC_TRUNC: int = int(os.getenv("HARMONIC_TRUNC", "32"))

    # Convergence tolerance of orbits and characterization checks
    HARMONIC_TOL: float = float(os.getenv("HARMONIC_TOL", "1e-9"))

    # Iteration cap and escape radius of orbits and basins
    HARMONIC_N_MAX: int = int(os.getenv("HARMONIC_N_MAX", "1000"))
    HARMONIC_ESCAPE_RADIUS: float = float(os.getenv("HARMONIC_ESCAPE_RADIUS", "1e6"))

    # Seed of randomized checks (selftest corpora, power iteration starts)
    HARMONIC_SEED: int = int(os.getenv("HARMONIC_SEED", "20240229"))

    # Output file (empty = stdout)
    HARMONIC_OUTPUT: str = os.getenv("HARMONIC_OUTPUT", "")

    # Logging
    HARMONIC_LOG_LEVEL: str = os.getenv("HARMONIC_LOG_LEVEL", "INFO")
    HARMONIC_LOG_FILE: str = os.getenv("HARMONIC_LOG_FILE", "")

    @classmethod
    def validate(cls) -> None:
        """Validate the environment defaults."""
        errors = _check(
            cls.HARMONIC_TRUNC, cls.HARMONIC_TOL, cls.HARMONIC_N_MAX, cls.HARMONIC_ESCAPE_RADIUS
        )
        if logging.getLevelName(cls.HARMONIC_LOG_LEVEL.upper()) == f"Level {cls.HARMONIC_LOG_LEVEL.upper()}":
            errors.append(f"HARMONIC_LOG_LEVEL {cls.HARMONIC_LOG_LEVEL!r} is not a logging level")
        if errors:
            raise ValueError(
                "Configuration validation failed:\n" + "\n".join(f"  - {e}" for e in errors)
            )

    @classmethod
    def display(cls) -> None:
        """Log the current configuration (for debugging)."""
        logger.debug("=" * 60)
        logger.debug("🔧 Harmonic toolkit configuration")
        logger.debug(f"HARMONIC_TRUNC: {cls.HARMONIC_TRUNC}")
        logger.debug(f"HARMONIC_TOL: {cls.HARMONIC_TOL}")
        logger.debug(f"HARMONIC_N_MAX: {cls.HARMONIC_N_MAX}")
        logger.debug(f"HARMONIC_ESCAPE_RADIUS: {cls.HARMONIC_ESCAPE_RADIUS}")
        logger.debug(f"HARMONIC_SEED: {cls.HARMONIC_SEED}")
        logger.debug(f"HARMONIC_OUTPUT: {cls.HARMONIC_OUTPUT or '(stdout)'}")
        logger.debug("=" * 60)


def _check(trunc: int, tol: float, n_max: int, escape_radius: float) -> list:
    errors = []
    if trunc < 1:
        errors.append(f"truncation order must be at least 1 (got {trunc})")
    if not tol > 0:
        errors.append(f"tolerance must be positive (got {tol})")
    if n_max < 1:
        errors.append(f"n_max must be at least 1 (got {n_max})")
    if not escape_radius > 0:
        errors.append(f"escape radius must be positive (got {escape_radius})")
    return errors


# Keys accepted in a structured config file and the RunConfig field they set
_FILE_KEYS = {
    "HARMONIC_TRUNC": ("trunc", int),
    "HARMONIC_TOL": ("tol", float),
    "HARMONIC_N_MAX": ("n_max", int),
    "HARMONIC_ESCAPE_RADIUS": ("escape_radius", float),
    "HARMONIC_SEED": ("seed", int),
    "HARMONIC_OUTPUT": ("output", str),
}


@dataclass(frozen=True)
class RunConfig:
    """
    Settings of one command-line run.

    Precedence: Config defaults < config file < explicit overrides.
    """

    trunc: int = 32
    tol: float = 1e-9
    n_max: int = 1000
    escape_radius: float = 1e6
    seed: int = 20240229
    output: str = ""

    @classmethod
    def from_env(cls) -> "RunConfig":
        return cls(
            trunc=Config.HARMONIC_TRUNC,
            tol=Config.HARMONIC_TOL,
            n_max=Config.HARMONIC_N_MAX,
            escape_radius=Config.HARMONIC_ESCAPE_RADIUS,
            seed=Config.HARMONIC_SEED,
            output=Config.HARMONIC_OUTPUT,
        )

    @classmethod
    def load(cls, config_file: Optional[str] = None, **overrides: Any) -> "RunConfig":
        """
        Build and validate the run configuration.

        Args:
            config_file: Optional KEY=VALUE file with HARMONIC_* keys
            **overrides: Explicit values (None entries are ignored)

        Returns:
            Validated RunConfig

        Raises:
            ValueError: unreadable file, unknown key or invalid value
        """
        config = cls.from_env()
        if config_file:
            config = replace(config, **_read_config_file(config_file))
        explicit = {k: v for k, v in overrides.items() if v is not None}
        config = replace(config, **explicit)
        config.validate()
        return config

    def validate(self) -> None:
        errors = _check(self.trunc, self.tol, self.n_max, self.escape_radius)
        if errors:
            raise ValueError(
                "Configuration validation failed:\n" + "\n".join(f"  - {e}" for e in errors)
            )

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _read_config_file(path: str) -> Dict[str, Any]:
    if not os.path.isfile(path):
        raise ValueError(f"Configuration validation failed:\n  - config file {path!r} not found")
    values = {}
    errors = []
    for key, raw in dotenv_values(path).items():
        if key not in _FILE_KEYS:
            errors.append(f"unknown key {key!r} in {path}")
            continue
        field, kind = _FILE_KEYS[key]
        try:
            values[field] = kind(raw if raw is not None else "")
        except ValueError:
            errors.append(f"{key}={raw!r} is not a valid {kind.__name__}")
    if errors:
        raise ValueError("Configuration validation failed:\n" + "\n".join(f"  - {e}" for e in errors))
    logger.debug(f"📄 loaded {len(values)} setting(s) from {path}")
    return values
