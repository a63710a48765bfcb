"""
Tunable defaults for HN computations.

Values can be overridden through environment variables (a .env file is read
if present). Nothing is required: every setting has a default.
"""

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from dotenv import load_dotenv

from ..core.errors import ValidationError

load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    return int(raw) if raw else default


# Fields
DEFAULT_PRIME = _env_int('HNP_PRIME', 2)
DEFAULT_CROSS_CHECK_PRIME = _env_int('HNP_CROSS_CHECK_PRIME', 32749)

# Budgets
ORACLE_DIM_BUDGET = _env_int('HNP_ORACLE_DIM_BUDGET', 8)  # sum of dims
ENGINE_TUPLE_BUDGET = _env_int('HNP_ENGINE_TUPLE_BUDGET', 200_000)  # subspace tuples visited
SUBSPACE_ENUMERATION_BUDGET = 100_000  # q^ambient_dim
WALL_BUDGET = 4096  # product of (dim + 1)

# Default beta: window padded around the data, constant 1, geometric tails
DEFAULT_TAIL_RATIO = Fraction(1, 2)
DEFAULT_WINDOW_PADDING = 1

# Sampling
DEFAULT_RESOLUTION = Fraction(1, 8)
DEFAULT_TOLERANCE = Fraction(1, 64)
DEFAULT_SEED = 0
DENSE_SAMPLING_STEP = Fraction(1, 64)

LOG_LEVEL = os.getenv('HNP_LOG_LEVEL', 'INFO')
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Harness sizes: (full, quick) instance counts per suite
HARNESS_SIZES = {
    'oracle_equivalence': (300, 40),
    'commuting_diagram': (100, 15),
    'semistability_transfer': (100, 15),
    'example_a': (200, 40),
    'theta_min': (50, 8),
    'rank_stability': (50, 6),
    'hn_stability': (50, 6),
    'functoriality': (200, 30),
    'landscape_chain': (50, 4),
    'chambers_1d': (30, 5),
    'guardrails': (1, 1),
}


@dataclass
class RunConfig:
    """Options shared by CLI verbs"""
    window: Optional[List[Tuple[Fraction, Fraction]]] = None  # per-axis [lo, hi]
    resolution: Fraction = DEFAULT_RESOLUTION
    thetas: Union[str, List[Fraction]] = "auto"
    prime: int = DEFAULT_PRIME
    prime2: Optional[int] = None
    seed: int = DEFAULT_SEED
    out: Optional[str] = None
    oracle_dim_budget: int = ORACLE_DIM_BUDGET
    tolerance: Fraction = DEFAULT_TOLERANCE
    quick: bool = False

    def validate(self):
        """Raise ValidationError listing every bad option"""
        problems = []
        if self.resolution <= 0:
            problems.append(f"resolution must be positive, got {self.resolution}")
        if self.tolerance <= 0:
            problems.append(f"tolerance must be positive, got {self.tolerance}")
        if self.oracle_dim_budget <= 0:
            problems.append("oracle dimension budget must be positive")
        if self.window is not None:
            for axis, (lo, hi) in enumerate(self.window):
                if lo > hi:
                    problems.append(f"window axis {axis}: lower bound {lo} exceeds upper bound {hi}")
        if self.thetas != "auto" and not isinstance(self.thetas, list):
            problems.append("thetas must be 'auto' or a list of rationals")
        if problems:
            raise ValidationError(problems)
        return self
