"""Partial-product memoization toolkit for quantized fully-connected layers.

Thin wrapper over the _crew extension module: analysis of per-input unique
weights, the CREW packed index format, bit-exact memoized execution and the
accelerator dataflow performance model.
"""

try:
    from ._crew import *  # noqa: F401,F403  (installed package layout)
    from . import _crew as _impl
except ImportError:  # development tree: extension sits on sys.path directly
    from _crew import *  # noqa: F401,F403
    import _crew as _impl

__all__ = [name for name in dir(_impl) if not name.startswith("_")]
