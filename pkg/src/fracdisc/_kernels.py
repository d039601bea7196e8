"""Hot loop of the Grunwald-Letnikov recursion.

The compiled ``_glkernel`` extension is used when it was built; otherwise
the numpy implementation below takes over. Setting ``FRACDISC_PURE_PYTHON=1``
forces the fallback.
"""

import os

import numpy as np


def gl_recurrence_py(lead, coeffs, x0, kmax):
    """X[k+1] = lead @ X[k] - sum_{i=2}^{k+1} coeffs[i] X[k+1-i]."""
    lead = np.ascontiguousarray(lead, dtype=np.complex128)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.complex128)
    if coeffs.shape[0] < kmax + 1:
        raise ValueError("need at least kmax+1 coefficients")
    out = np.empty((kmax + 1,) + x0.shape, dtype=np.complex128)
    out[0] = x0
    for k in range(kmax):
        acc = lead @ out[k]
        if k >= 1:
            # out[k-1], out[k-2], ..., out[0] pair with coeffs[2..k+1]
            acc -= np.tensordot(coeffs[2 : k + 2], out[k - 1 :: -1], axes=1)
        out[k + 1] = acc
    return out


try:
    from ._glkernel import gl_recurrence as gl_recurrence_compiled
except ImportError:  # extension not built
    gl_recurrence_compiled = None


def _compiled(lead, coeffs, x0, kmax):
    return gl_recurrence_compiled(
        np.ascontiguousarray(lead, dtype=np.complex128),
        np.ascontiguousarray(coeffs, dtype=np.float64),
        np.ascontiguousarray(x0, dtype=np.complex128),
        kmax,
    )


if gl_recurrence_compiled is not None and not os.environ.get("FRACDISC_PURE_PYTHON"):
    gl_recurrence = _compiled
    BACKEND = "cython"
else:
    gl_recurrence = gl_recurrence_py
    BACKEND = "python"
