"""
Configuration settings for the DB-MMD domain adaptation toolkit.

Every default used by the library and the command line lives here.
"""

# ----- SUBSPACE LEARNING CONFIGURATION -----

# Dimension k of the shared subspace (clipped to the problem size for small inputs)
SUBSPACE_DIM = 100

# Regularization weight lambda on ||A||_F^2 (0.1 for digit/face benchmarks, 1 for object benchmarks)
LAMBDA = 1.0

# Label smoothness weight mu for the DGA-DA label propagation (alpha = 1 / (1 + mu))
MU = 0.01

# Maximum number of pseudo-label refresh iterations
ITERATIONS = 10

# Kernel used for the projection: 'primal', 'linear', 'rbf' or 'poly'
KERNEL = 'primal'

# Kernel / affinity bandwidth; None selects the median pairwise distance
KERNEL_SIGMA = None

# Degree of the polynomial kernel (x'y + 1)^d
POLY_DEGREE = 2

# ----- GRAPH CONFIGURATION -----

# Number of nearest neighbours kept in the Laplacian affinity (0 = dense)
NEIGHBORHOOD_P = 5

# 'spirit' keeps the pull/push direction of the weighted MMD terms; 'literal' follows the printed formula
GRAPH_MODE = 'spirit'

# 'literal' fills repulsive entries once; 'rank_one_sum' sums one rank-one term per class pair
MATRIX_MODE = 'literal'

# Keep the unmasked entries of the reweighted MMD matrices in spirit mode
KEEP_OFF_MASK = True

# Use the symmetric normalized Laplacian for label propagation and MEDA
LAPLACIAN_NORMALIZED = True

# Floor applied to affinities before taking 1/W
W_FLOOR = 1e-6

# ----- SOLVER CONFIGURATION -----

# Ridge added to the right-hand pencil operand, relative to trace/n
RIDGE_SCALE = 1e-9

# Relative residual tolerance reported by the generalized eigensolver
EIG_RESIDUAL_TOL = 1e-8

# Number of times the MEDA system ridge is multiplied by 10 before giving up
RIDGE_ESCALATIONS = 3

# ----- MEDA CONFIGURATION -----

# Weight of the (CG reweighted) MMD term
MEDA_ALPHA = 10.0

# Weight of the manifold (Laplacian) term
MEDA_RHO = 0.1

# Weight of the RKHS norm of the labeling function
MEDA_ETA = 1.0

# ----- SYNTHETIC DATA CONFIGURATION -----

SYNTH_CLASSES = 3
SYNTH_PER_CLASS = 50
SYNTH_FEATURE_DIM = 2

# Shift applied to the target domain: 'rotation' (degrees), 'translation' (offset added to every feature)
# or 'scale' (noise multiplier)
SYNTH_SHIFT_KIND = 'rotation'
SYNTH_SHIFT_VALUE = 30.0

# Standard deviation of the per-class Gaussian noise
SYNTH_NOISE = 0.5

# Class centers sit on a 'circle' of this radius, or on a 'line' along the first feature with this spacing
SYNTH_LAYOUT = 'circle'
SYNTH_CENTER_SPREAD = 3.0

# Point the rotation shift turns about (first two features)
SYNTH_PIVOT = (0.0, 0.0)

# Seed used by all randomness in a run
SEED = 7

# ----- EXPERIMENT CONFIGURATION -----

# Models run when an experiment spec does not list any
DEFAULT_MODELS = ['JDA', 'JDA+CG', 'CDDA', 'CDDA+CG', 'CDDA+DB']

# Directory for reports and summaries
OUTPUT_DIR = 'results'

# Parallel (model x seed) cells; 1 runs them in order
N_JOBS = 1

# Decimal places written for accuracies in summary tables
ACCURACY_DECIMALS = 6

# ----- LOGGING CONFIGURATION -----

# Set the logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
LOG_LEVEL = 'INFO'

# Path to log file (set to None for no file logging)
LOG_FILE = 'dbmmd.log'

# ----- OTHER CONFIGURATION -----

# Application version
VERSION = "1.0.0"
