"""Constants used across the ocal package."""

INLIER = "inlier"
OUTLIER = "outlier"

# PoolState status codes
UNLABELED = 0
LABELED_INLIER = 1
LABELED_OUTLIER = 2

LEARNERS = ("SVDD", "SVDDneg", "SSAD")

STRATEGY_NAMES = ("mm", "emm", "eme", "ml", "hc", "db", "nb", "bnc", "rand", "rand_out")
DATA_BASED_STRATEGIES = {"mm", "emm", "eme", "ml"}

DEFAULT_BUDGET = 50
DEFAULT_OUTLIER_RATE = 0.05
DEFAULT_MAX_N = 1000
DEFAULT_RESAMPLE_SEEDS = (1, 2, 3)
DEFAULT_TRAIN_FRACTION = 0.8
DEFAULT_POOL_N = 25
DEFAULT_POOL_P = 0.1

DEFAULT_ETA_NB = 0.5
DEFAULT_K_NN = 10
DEFAULT_ETA_BNC = 0.7
DEFAULT_P_BNC = 0.15

DEFAULT_PAUC_FPR = 0.1
DEFAULT_METRICS = ("mcc", "kappa", "auc", "pauc:0.1")

KKT_TOL = 1e-6
MAX_SOLVER_ITER = 100_000
BOX_EPS = 1e-8

# density ratio p(x|in) / p(x) is clipped to this range before scoring
RATIO_CAP = 1e3
MIN_DENSITY = 1e-300

# rounding applied to normalized rows before duplicate detection
DUPLICATE_DECIMALS = 12

# k of the ru/aeq/ls summaries stored with every cell
DEFAULT_SUMMARY_K = 5
GROUP_COLUMNS = (
    "dataset",
    "resample_seed",
    "pool",
    "pool_seed",
    "split",
    "learner",
    "kappa",
    "strategy",
    "seed",
)
MISSING_CELL = "-"
