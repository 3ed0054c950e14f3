""" Numerical defaults and reference data shared across the package. """

# Grid cell size used to thin point sets between trajectory steps.
DEFAULT_EPSILON = 1e-4
# Two finite point sets are considered equal if their Hausdorff distance is below this.
SET_TOLERANCE = 1e-12
CONSTANTS_TOLERANCE = 1e-12
LAST_COLUMN_TOLERANCE = 1e-10

POWER_ITERATION_TOL = 1e-10
POWER_ITERATION_MAX_ITER = 2000

# Above this many words, composite products are sampled instead of enumerated.
MAX_ENUMERATED_WORDS = 2**14
MAX_COMPOSITION_LENGTH = 10
# Mask sequences need longer blocks before sampled block norms drop below one.
MAX_SEQUENCE_COMPOSITION_LENGTH = 16
# Levels of a lifted schedule kept in memory at once.
LIFT_CACHE_SIZE = 256
WORD_SAMPLE_SEED = 0

# Lift matrices with a larger condition number are rejected as singular.
MAX_LIFT_CONDITION = 1e12

# Pairs of point sets up to this many distance evaluations use the dense distance matrix.
DENSE_DISTANCE_LIMIT = 4_000_000

# Product diagnostic thresholds.
PRODUCT_TO_ZERO_TOLERANCE = 0.05
TAIL_TOLERANCE = 0.05

# Convergence estimate: mean late ratio below this counts as geometric decay.
GEOMETRIC_DECAY_RATIO = 0.9

# Control polygon embedded into the default lift of the cubic family.
DEFAULT_CUBIC_POLYGON = ((0.0, 0.0), (1.0, 2.0), (2.0, -1.0), (3.0, 1.0), (4.0, 0.0))
# Control polygon of the printed 6x6 lift used with the random 4-point scheme.
FOUR_POINT_POLYGON = (
    (0.0, 2.0),
    (1.0, 1.0),
    (2.0, 1.0),
    (3.0, 2.0),
    (2.0, 4.0),
    (1.0, 4.0),
)
CUBIC_BSPLINE_COEFFS = (1 / 8, 1 / 2, 3 / 4, 1 / 2, 1 / 8)

# A mask sequence counts as having reached its limit once coefficients differ by less than this.
MASK_LIMIT_TOLERANCE = 1e-6
