"""Hot-loop kernels with a compiled fast path.

Two operations dominate runtime at trace scale: enumerating the ordered pairs
of every episode (Sum |E_s|^2 work behind M_ij counting and constraint
building) and per-episode time-respecting reachability (feasibility checks).
Both are provided by a Cython module when it compiled, with a numpy fallback
otherwise.  Set TRACEGRAPH_PURE_PYTHON=1 to force the fallback; both backends
produce identical output arrays.
"""
import os

_force_pure = os.environ.get("TRACEGRAPH_PURE_PYTHON", "").strip() not in ("", "0")

if _force_pure:
    from . import pure as _impl
    _backend = "python"
else:
    try:
        from . import _ckern as _impl
        _backend = "cython"
    except ImportError:
        from . import pure as _impl
        _backend = "python"

ordered_pair_keys = _impl.ordered_pair_keys
reach_episodes = _impl.reach_episodes


def backend_name():
    """Which kernel implementation is active: "cython" or "python"."""
    return _backend
