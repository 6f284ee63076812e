"""Hot-kernel dispatch: compiled Cython module when available, numpy otherwise.

Set ``HOLOGEN_PURE_PYTHON=1`` before import to force the numpy fallback.
"""
import importlib
import os

from . import _kernels_py

__all__ = ["COMPILED", "implementation", "phase_quantise", "amplitude_quantise",
           "enforce_amplitude", "trial_sums", "commit_update"]


def _load_compiled():
    try:
        return importlib.import_module("hologen._kernels")
    except ImportError:
        return None


_compiled = None if os.environ.get("HOLOGEN_PURE_PYTHON") else _load_compiled()
COMPILED = _compiled is not None
_impl = _compiled if COMPILED else _kernels_py


def implementation(name: str = "active"):
    """Return a kernel module: ``"compiled"``, ``"python"`` or the ``"active"`` one."""
    if name == "active":
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        mod = _compiled or _load_compiled()
        if mod is None:
            raise ImportError("compiled kernels are not built")
        return mod
    raise ValueError(f"unknown kernel implementation {name!r}")


phase_quantise = _impl.phase_quantise
amplitude_quantise = _impl.amplitude_quantise
enforce_amplitude = _impl.enforce_amplitude
trial_sums = _impl.trial_sums
commit_update = _impl.commit_update
