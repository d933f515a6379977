DEFAULT_LAMBDA = 1.0
DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 5_000
DEFAULT_HISTORY_STRIDE = 1

# nodes with |grad u + F| below EPS_CHAR * m are treated as characteristic
EPS_CHAR = 1e-8

DENSE_ORACLE_MAX_NODES = 4096

GRID_TOLERANCE = 1e-12

# safe Poincare-type constant for the unit square
C_OMEGA_UNIT_SQUARE = 0.5

CSV_FORMAT = "%.17g"
OUT_DIR_ENV = "PAREA_OUT_DIR"
DEFAULT_OUT_DIR = "parea-out"
