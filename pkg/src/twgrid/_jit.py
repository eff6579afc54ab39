import os

import numba

# TWGRID_NUMBA_CACHE=0 disables the on-disk cache of compiled kernels
CACHE = os.environ.get("TWGRID_NUMBA_CACHE", "1") != "0"

# try OpenMP before TBB unless the user picked an order; an outdated TBB only warns and is skipped anyway
if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ and "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]
