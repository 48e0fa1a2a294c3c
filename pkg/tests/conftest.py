"""
Pytest configuration and shared fixtures for Sparse Forge tests.
"""
import os
import sys
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cantor.system import CantorSystem, GapRule
from config import RunConfig, apply_run_config, config


@pytest.fixture
def rational_system():
    """Theorem-B construction in the rational regime, depth 8."""
    return CantorSystem(GapRule.THEOREM_B, "rational", depth=8)


@pytest.fixture
def tower_system():
    """Theorem-B construction in the tower regime, depth 8."""
    return CantorSystem(GapRule.THEOREM_B, "tower", depth=8)


@pytest.fixture
def middle_thirds():
    """Middle-thirds control construction, depth 12."""
    return CantorSystem(GapRule.MIDDLE_THIRDS, depth=12)


@pytest.fixture
def e1_rational(rational_system):
    """E_1 = [0, 1/16] ∪ [15/16, 1]."""
    return rational_system.level_set(1)


@pytest.fixture
def factorial_lengths_with_decoys():
    """Gap lengths carrying 1/2, 1/6, 1/24 plus a non-factorial decoy."""
    return [Fraction(1, 2), Fraction(1, 5), Fraction(1, 6), Fraction(1, 24)]


@pytest.fixture
def output_dir(tmp_path):
    """Isolated output directory for reports and set documents."""
    path = tmp_path / "out"
    path.mkdir()
    return path


@pytest.fixture(autouse=True)
def default_run_config():
    """Restore the process-wide defaults the CLI may have overwritten."""
    saved = RunConfig(
        regime=config.REGIME, precision_ceiling=config.PRECISION_CEILING, kmax=config.KMAX,
        exp_ceiling=config.EXP_CEILING, max_pairs=config.MAX_PAIRS, max_refine=config.MAX_REFINE,
        seed=config.SEED, workers=config.WORKERS, output_dir=config.OUTPUT_DIR,
    )
    yield
    apply_run_config(saved)
