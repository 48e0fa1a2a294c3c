"""
Configuration module for Sparse Forge.
Centralizes all configuration settings with environment variable support.
"""
import logging
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from errors import ConfigError

logger = logging.getLogger(__name__)

REGIMES = ("rational", "tower")
PRECISION_ENV = "SPARSE_FORGE_PRECISION"


def parse_fraction(text: Union[str, int, Fraction]) -> Fraction:
    """Parse an exact rational from `p/q`, a decimal, or a power `b^e`.

    Args:
        text: Value such as "2^-256", "1/3", "1e-30" or an int

    Returns:
        Exact Fraction
    """
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    raw = str(text).strip().replace("**", "^")
    try:
        if "^" in raw:
            base, exponent = raw.split("^", 1)
            return Fraction(base.strip()) ** int(exponent.strip())
        return Fraction(raw)
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"Invalid rational value: {text!r}") from e


def parse_precision(text: Union[str, Fraction]) -> Fraction:
    """Parse a precision ceiling; it must lie strictly between 0 and 1."""
    value = parse_fraction(text)
    if not 0 < value < 1:
        raise ConfigError(f"Precision must lie in (0, 1), got {text!r}")
    return value


def precision_bits(precision: Fraction) -> int:
    """Number of binary digits needed to reach the given precision."""
    return max(1, math.ceil(math.log2(precision.denominator) - math.log2(precision.numerator)))


@dataclass
class Config:
    """Application configuration with environment variable support."""

    # Arithmetic
    REGIME: str = os.getenv('SPARSE_FORGE_REGIME', 'rational')
    PRECISION_CEILING: Fraction = parse_precision(os.getenv(PRECISION_ENV, '2^-256'))
    EXP_CEILING: int = int(os.getenv('SPARSE_FORGE_EXP_CEILING', '4096'))

    # Construction depth
    KMAX: int = int(os.getenv('SPARSE_FORGE_KMAX', '8'))

    # Audit budgets
    MAX_PAIRS: int = int(os.getenv('SPARSE_FORGE_MAX_PAIRS', '2000000'))
    MAX_REFINE: int = int(os.getenv('SPARSE_FORGE_MAX_REFINE', '4'))
    SEED: int = int(os.getenv('SPARSE_FORGE_SEED', '20240115'))
    WORKERS: int = int(os.getenv('SPARSE_FORGE_WORKERS', '1'))

    # Output
    OUTPUT_DIR: str = os.getenv('SPARSE_FORGE_OUTPUT_DIR', '.')
    METRICS_DIR: str = os.getenv('METRICS_DIR', 'metrics')

    # Logging
    LOG_LEVEL: str = os.getenv('LOG_LEVEL', 'INFO')
    LOG_DIR: str = os.getenv('LOG_DIR', 'logs')
    LOG_FILE: Optional[str] = os.getenv('LOG_FILE') or None
    LOG_FORMAT: str = os.getenv('LOG_FORMAT', 'text')


# Global config instance
config = Config()


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for a single CLI run; embedded in every report."""

    regime: str = config.REGIME
    precision_ceiling: Fraction = config.PRECISION_CEILING
    kmax: int = config.KMAX
    exp_ceiling: int = config.EXP_CEILING
    max_pairs: int = config.MAX_PAIRS
    max_refine: int = config.MAX_REFINE
    seed: int = config.SEED
    workers: int = config.WORKERS
    output_dir: str = config.OUTPUT_DIR

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """Check bounds; raises ConfigError on the first violation."""
        if self.regime not in REGIMES:
            raise ConfigError(f"Unknown regime {self.regime!r}; expected one of {', '.join(REGIMES)}")
        if not 0 < self.precision_ceiling < 1:
            raise ConfigError(f"precision_ceiling must lie in (0, 1), got {self.precision_ceiling}")
        for name in ("kmax", "exp_ceiling", "max_pairs", "workers"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_refine < 0:
            raise ConfigError(f"max_refine must be non-negative, got {self.max_refine}")

    @property
    def bits(self) -> int:
        """Binary precision matching the ceiling."""
        return precision_bits(self.precision_ceiling)

    def to_dict(self) -> Dict[str, Any]:
        """Provenance record with exact values as strings."""
        data = asdict(self)
        data['precision_ceiling'] = str(self.precision_ceiling)
        return data


_INT_KEYS = {"kmax", "exp_ceiling", "max_pairs", "max_refine", "seed", "workers"}


def _coerce(key: str, value: Any) -> Any:
    if key not in {f.name for f in fields(RunConfig)}:
        raise ConfigError(f"Unknown configuration key: {key}")
    if value is None:
        return None
    try:
        if key in _INT_KEYS:
            return int(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid integer for {key}: {value!r}") from e
    if key == "precision_ceiling":
        return parse_precision(value)
    if key == "regime":
        return str(value).strip().lower().replace("-fast", "")
    return str(value)


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a plain `key = value` configuration file.

    Blank lines and lines starting with `#` are ignored.

    Args:
        path: Configuration file path

    Returns:
        Mapping of coerced values
    """
    values: Dict[str, Any] = {}
    file_path = Path(path)
    try:
        lines = file_path.read_text(encoding='utf-8').splitlines()
    except OSError as e:
        raise ConfigError(f"Cannot read configuration file {file_path}: {e}") from e

    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        if '=' not in stripped:
            raise ConfigError(f"{file_path}:{lineno}: expected key=value, got {stripped!r}")
        key, value = (part.strip() for part in stripped.split('=', 1))
        values[key] = _coerce(key, value)
    return values


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None
) -> RunConfig:
    """Resolve a RunConfig: defaults, then file, then environment, then flags.

    Args:
        path: Optional configuration file
        overrides: Values from command-line flags (None entries are ignored)
        environ: Environment mapping (default: os.environ)

    Returns:
        Validated RunConfig
    """
    environ = os.environ if environ is None else environ
    run_config = RunConfig()

    if path is not None:
        run_config = replace(run_config, **read_config_file(path))
        logger.debug(f"Loaded configuration file {path}")

    if environ.get(PRECISION_ENV):
        run_config = replace(run_config, precision_ceiling=parse_precision(environ[PRECISION_ENV]))

    if overrides:
        flags = {key: _coerce(key, value) for key, value in overrides.items() if value is not None}
        run_config = replace(run_config, **flags)

    return run_config


def apply_run_config(run_config: RunConfig) -> None:
    """Make the resolved run settings the process-wide defaults read by the library."""
    config.REGIME = run_config.regime
    config.PRECISION_CEILING = run_config.precision_ceiling
    config.KMAX = run_config.kmax
    config.EXP_CEILING = run_config.exp_ceiling
    config.MAX_PAIRS = run_config.max_pairs
    config.MAX_REFINE = run_config.max_refine
    config.SEED = run_config.seed
    config.WORKERS = run_config.workers
    config.OUTPUT_DIR = run_config.output_dir
