import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent

# Data directory for local state (logs, default outputs)
DATA_DIR = Path(os.getenv("PAIRTRUST_DATA_DIR", BASE_DIR / "data"))

LOG_FILE = DATA_DIR / "pairtrust.log"
LOG_LEVEL = os.getenv("PAIRTRUST_LOG_LEVEL", "INFO")

# Trust Game Settings
ENDOWMENT = 10  # money units a sender may send per round
MULTIPLIER = 3  # receiver gets three times the amount sent
GROUP_SIZE = 6
ROUNDS_PER_PAIR = 5
DEFAULT_SEED = 0

# Trust Metric Defaults
TRUST_C = 0.3
TRUST_ALPHA_FLOOR = 0.1
TRUST_PHI = 0.05
TRUST_EPSILON = 0.1
TRUST_MAX_ATF = 1.0
INITIAL_TRUST = 0.5  # neutral starting score

# Analysis Defaults
DEFAULT_START_ROUND = 4
CONFIDENCE_LEVEL = 0.95
SIGNIFICANCE_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))

# Output Formatting
MACHINE_FLOAT_FORMAT = "%.17g"
HUMAN_DECIMALS = 3
DEFAULT_OUT_DIR = DATA_DIR / "runs"
