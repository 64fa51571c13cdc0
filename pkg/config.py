# Configuration settings for the reversible CA workbench

import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

# Enumeration caps
ENUMERATION_CAP = 2 ** 20          # window states for exact measures and searches
EXHAUSTIVE_STATE_CAP = 2 ** 24     # full torus states for exhaustive verifiers
CAP_ENV_VAR = "RCABENCH_CAP"

# Batched simulation: symbols held in memory per chunk (states x cells)
SWEEP_CHUNK_CELLS = 1 << 22

# Monte-Carlo
MC_SHARD_SIZE = 4096
CONFIDENCE_LEVEL = 0.95
DEFAULT_MC_SAMPLES = 10_000
DEFAULT_SEED = 0
DEFAULT_WORKERS = 1

NORMALIZATION_TOLERANCE = 1e-12
BOUND_TOLERANCE = 1e-9

# Process exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_CAP_EXCEEDED = 3
EXIT_INVARIANT_VIOLATION = 4
EXIT_OUTPUT_ERROR = 5

# Symbols are written with these digits in canonical text forms
SYMBOL_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"

# Billiard-ball block rule: a lone particle crosses to the opposite corner,
# a diagonal pair turns into the other diagonal, everything else is fixed.
# Block cells are ordered (0,0), (0,1), (1,0), (1,1), first cell most significant.
BILLIARD_BALL_BLOCK_MAP = [0, 8, 4, 3, 2, 5, 9, 7, 1, 6, 10, 11, 12, 13, 14, 15]

# Bundled rules
BUNDLED_RULES = [
    {"name": "shift", "family": "shift", "vector": [1]},
    {"name": "shift-left", "family": "shift", "vector": [-1]},
    {"name": "shift-2d", "family": "shift", "vector": [0, 1]},
    {"name": "shift-2d-up", "family": "shift", "vector": [-1, 0]},
    {
        "name": "identity",
        "family": "table",
        "dimension": 1,
        "alphabet": 2,
        "forward": [0, 0, 1, 1, 0, 0, 1, 1],
        "backward": [0, 0, 1, 1, 0, 0, 1, 1],
    },
    {
        "name": "bbm",
        "family": "margolus",
        "dimension": 2,
        "alphabet": 2,
        "block_map": BILLIARD_BALL_BLOCK_MAP,
        "parity_offsets": [0, 1],
    },
    {
        "name": "margolus-swap",
        "family": "margolus",
        "dimension": 1,
        "alphabet": 2,
        "block_map": [0, 2, 1, 3],
        "parity_offsets": [0, 1],
    },
    {
        "name": "second-order-150",
        "family": "second_order",
        "dimension": 1,
        "base": 2,
        "local_table": [0, 1, 1, 0, 1, 0, 0, 1],
    },
]


def get_bundled_rule_names() -> list[str]:
    """Names of the rules shipped with the bench"""
    return [rule["name"] for rule in BUNDLED_RULES]


def get_enumeration_cap(override: Optional[int] = None) -> int:
    """Resolve the enumeration cap: explicit override, then env var, then default"""
    if override is not None:
        return int(override)
    value = os.environ.get(CAP_ENV_VAR)
    if value:
        return int(value)
    return ENUMERATION_CAP
