"""Raise numba's thread cap before its first import.

Worker-count determinism tests exercise up to 8 workers even on smaller
machines; numba refuses set_num_threads above NUMBA_NUM_THREADS, which
defaults to the core count and is frozen at first import. Import this
module before numba anywhere in the package. If numba was already imported
by the embedding application the cap stays as-is and worker counts are
clamped at runtime (see kernels.resolve_workers).
"""

import os
import sys

if "numba" not in sys.modules:
    os.environ.setdefault("NUMBA_NUM_THREADS", str(max(os.cpu_count() or 1, 8)))
