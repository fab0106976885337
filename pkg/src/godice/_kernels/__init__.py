"""Kernel backend selection.

Two complete implementations of the hot kernels exist: a compiled Cython
core and a pure-numpy fallback. By default each primitive uses whichever
implementation benchmarks faster at this package's problem sizes (BLAS for
the dense products, the compiled loops for the sequential decode; see
benchmarks/bench_kernels.py), degrading to pure numpy when the extension is
absent. ``GODICE_KERNELS=python`` or ``GODICE_KERNELS=compiled`` forces one
implementation for everything (the latter raises if the extension is
missing).
"""

import os

from . import pyback

try:
    from . import _core
except ImportError:
    _core = None

_forced = os.environ.get("GODICE_KERNELS", "").strip().lower()

if _forced == "python" or (not _forced and _core is None):
    _name = "python"
    _algebra, _decode = pyback, pyback
elif _forced == "compiled":
    if _core is None:
        raise ImportError("GODICE_KERNELS=compiled but the extension is not built")
    _name = "compiled"
    _algebra, _decode = _core, _core
elif _forced and _forced not in ("python", "compiled", "auto"):
    raise ImportError(f"GODICE_KERNELS={_forced!r}: use python|compiled|auto")
else:
    _name = "auto"
    _algebra, _decode = pyback, _core

matmul = _algebra.matmul
matmul_nt = _algebra.matmul_nt
matmul_tn = _algebra.matmul_tn
adam_step = _algebra.adam_step
viterbi_dp = _decode.viterbi_dp


def backend_name() -> str:
    return _name


def has_compiled() -> bool:
    return _core is not None
