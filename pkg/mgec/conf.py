# Defaults shared by the generator, the trainer, the evaluation harness and the command line.

# optimisation
BATCH_SIZE = 256
MAX_EPOCHS = 100
PATIENCE = 10
LEARNING_RATE = 1e-4
WEIGHT_DECAY = 5e-4
WARMUP_EPOCHS = 5
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
VALIDATION_FRACTION = 0.1

# architecture
EXTRACTOR_HIDDEN = (128, 64)
N_EXPERTS = 5
TOP_K = 1
GATE_DIM = 32

# augmentation
MASK_RHO = 0.10
NEIGHBOR_OFFSET = 1
MIN_ELECTRODES_FOR_SPATIAL = 10
AUGMENT_MODES = ("temporal-neighbor", "self-mask")

# synthetic benchmark
DOMAINS_PER_GROUP = (3, 2)
SAMPLES_PER_DOMAIN = 500
DIM = 128
CLASS_COUNT = 2
LAMBDA = 0.5
SIGMA_GROUP = 1.0
SIGMA_DOMAIN = 0.5
SIGMA_SAMPLE = 1.0
SIGMA_W_BASE = 1.0
SIGMA_W_GROUP = 0.5
SIGMA_W_DOMAIN = 0.25
# teacher spread where per-domain label functions clearly disagree
LARGE_SPREAD_SIGMA_W_GROUP = 10.0
LARGE_SPREAD_SIGMA_W_DOMAIN = 10.0
MAX_BALANCE_ATTEMPTS = 100

# numerical guards
NORM_EPS = 1e-12
PROTOTYPE_NORM_EPS = 1e-8
LOSS_GAP_CLAMP = 30.0

# evaluation
LAMBDA_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
SEEDS = (0, 1, 2, 3, 4)
ABLATIONS = ("full", "shared_only", "routed_only", "no_mutual")
SWEEP_ABLATIONS = ("full", "shared_only", "routed_only")
CHANCE_MARGIN = 0.05

# gradient check
GRADCHECK_PROBES = 100
GRADCHECK_STEP = 1e-5
GRADCHECK_TOL = 1e-4
GRADCHECK_MARGIN = 1e-3

THREADS_ENV = "MGEC_THREADS"
