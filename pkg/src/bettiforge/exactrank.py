"""Exact integer matrix rank via fraction-free (Bareiss) Gaussian elimination.

Ranks of boundary matrices must be exact, not numerical: Betti numbers are
differences of ranks and an off-by-one from float round-off would be silent.
Bareiss elimination keeps all intermediate entries as integer minors, so the
divisions are exact.  A vectorized int64 path covers the desk-scale matrices
here; if entry growth ever threatens 64-bit overflow the computation restarts
with Python big integers.
"""

from __future__ import annotations

import numpy as np

# |piv*x| + |y*z| stays below 2**63 when every entry magnitude is below this
_INT64_SAFE = 2**30


def integer_rank(matrix) -> int:
    """Exact rank (over Q) of an integer matrix."""
    a = np.array(matrix, dtype=np.int64, copy=True)
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if a.size == 0:
        return 0
    try:
        return _bareiss_rank(a)
    except OverflowError:
        big = np.array(matrix, dtype=object, copy=True)
        return _bareiss_rank(big)


def _bareiss_rank(a: np.ndarray) -> int:
    rows, cols = a.shape
    guarded = a.dtype == np.int64
    prev = 1
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pivots = np.nonzero(a[r:, c])[0]
        if pivots.size == 0:
            continue
        i = r + int(pivots[0])
        if i != r:
            a[[r, i], :] = a[[i, r], :]
        piv = a[r, c]
        if r + 1 < rows:
            if guarded:
                mx = int(np.abs(a[r:, c:]).max())
                if mx > _INT64_SAFE:
                    raise OverflowError("int64 Bareiss guard tripped")
            block = a[r + 1 :, c + 1 :]
            block *= piv
            block -= np.outer(a[r + 1 :, c], a[r, c + 1 :])
            # Bareiss divisions are exact, so floor division is the true quotient
            block //= prev
            a[r + 1 :, c] = 0
        prev = piv
        r += 1
    return r
