"""Backend selection for the hot reservoir-update kernels.

The compiled Cython extension (``rescomp._accel``) is used when it imports
successfully; otherwise a pure NumPy/SciPy fallback takes over. The env var
``RESCOMP_KERNELS`` forces a backend: ``compiled``, ``python``, or ``auto``
(default). Both backends accumulate CSR rows in index order, so their results
agree to the last bit on typical inputs.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from . import _accel

    _HAVE_ACCEL = True
except ImportError:  # pragma: no cover - depends on build environment
    _accel = None
    _HAVE_ACCEL = False


def _select_backend() -> str:
    mode = os.environ.get("RESCOMP_KERNELS", "auto").lower()
    if mode == "compiled":
        if not _HAVE_ACCEL:
            raise ImportError(
                "RESCOMP_KERNELS=compiled but rescomp._accel is not built"
            )
        return "compiled"
    if mode == "python":
        return "python"
    return "compiled" if _HAVE_ACCEL else "python"


_BACKEND = _select_backend()


def backend_name() -> str:
    """Name of the active kernel backend ('compiled' or 'python')."""
    return _BACKEND


def set_backend(name: str) -> None:
    """Force a backend ('compiled' or 'python'); used by tests and benchmarks."""
    global _BACKEND
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled" and not _HAVE_ACCEL:
        raise ImportError("compiled backend requested but rescomp._accel missing")
    _BACKEND = name


def have_compiled() -> bool:
    return _HAVE_ACCEL


def csr_matvec(m, x, out=None):
    """out = m @ x for a core.SparseMatrix."""
    if out is None:
        out = np.empty(m.shape[0])
    if _BACKEND == "compiled":
        _accel.csr_matvec(m.indptr, m.indices, m.data, x, out)
    else:
        out[:] = m.as_scipy() @ x
    return out


def leaky_advance(m, bias, leak, r, pre, out=None):
    """Leaky-tanh reservoir update for one chunk.

    out = (1 - leak) * r + leak * tanh(m @ r + pre + bias)
    """
    if out is None:
        out = np.empty_like(r)
    if _BACKEND == "compiled":
        _accel.leaky_advance(m.indptr, m.indices, m.data, bias, leak, r, pre, out)
    else:
        act = m.as_scipy() @ r
        act += pre
        act += bias
        np.tanh(act, out=act)
        out[:] = (1.0 - leak) * r
        out += leak * act
    return out


def leaky_force(m, bias, leak, r0, pre, out=None):
    """Teacher-forced state sequence for one chunk; pre has shape (T, res_dim)."""
    T, n = pre.shape
    if out is None:
        out = np.empty((T, n))
    if _BACKEND == "compiled":
        _accel.leaky_force(m.indptr, m.indices, m.data, bias, leak, r0, pre, out)
    else:
        prev = r0
        for t in range(T):
            leaky_advance(m, bias, leak, prev, pre[t], out[t])
            prev = out[t]
    return out
