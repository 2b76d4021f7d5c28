# Pin BLAS pools before numpy loads: the matrices here are tiny (<= 289x289),
# where thread oversubscription costs orders of magnitude.
import os

for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")
