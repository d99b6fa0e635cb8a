"""Dense linear solves in both scalar modes.

Float systems use Gaussian elimination with partial pivoting. Rational
systems are scaled to integers row by row and reduced with Bareiss'
fraction-free elimination, so intermediate entries stay integers and the
result is exact.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import SingularSystem

PIVOT_FLOOR = 1e-12


def _as_2d(b):
    b = np.asarray(b)
    return (b[:, None], True) if b.ndim == 1 else (b, False)


def solve(a, b, pivot_floor: float = PIVOT_FLOOR):
    """Solve ``a @ x = b`` for square ``a``; ``b`` may be a vector or a matrix.

    Object arrays of ``Fraction`` are solved exactly, anything else in float64.
    Raises :class:`SingularSystem` when no usable pivot exists.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"coefficient matrix must be square, got {a.shape}")
    b2, vector = _as_2d(b)
    if b2.shape[0] != a.shape[0]:
        raise ValueError("right-hand side does not match the coefficient matrix")
    if a.shape[0] == 0:
        x = np.empty((0, b2.shape[1]), dtype=b2.dtype)
    elif a.dtype == object or b2.dtype == object:
        x = _solve_exact(a, b2)
    else:
        x = _solve_float(np.asarray(a, float), np.asarray(b2, float), pivot_floor)
    return x[:, 0] if vector else x


def inverse(a, pivot_floor: float = PIVOT_FLOOR):
    a = np.asarray(a)
    n = a.shape[0]
    if a.dtype == object:
        eye = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                eye[i, j] = Fraction(int(i == j))
    else:
        eye = np.eye(n)
    return solve(a, eye, pivot_floor)


def _solve_float(a, b, pivot_floor):
    n = a.shape[0]
    m = np.hstack([a, b])
    for k in range(n):
        piv = k + int(np.argmax(np.abs(m[k:, k])))
        if abs(m[piv, k]) < pivot_floor:
            raise SingularSystem(
                f"pivot {m[piv, k]:.3e} below {pivot_floor:g} in column {k}; "
                "the target is probably not hit almost surely"
            )
        if piv != k:
            m[[k, piv]] = m[[piv, k]]
        factors = m[k + 1 :, k] / m[k, k]
        m[k + 1 :, k:] -= np.outer(factors, m[k, k:])
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (m[i, n:] - m[i, i + 1 : n] @ x[i + 1 :]) / m[i, i]
    return x


def _integer_rows(a, b):
    rows = []
    for i in range(a.shape[0]):
        entries = [Fraction(v) for v in a[i]] + [Fraction(v) for v in b[i]]
        scale = 1
        for v in entries:
            scale = scale * v.denominator // math.gcd(scale, v.denominator)
        rows.append([int(v * scale) for v in entries])
    return rows


def _solve_exact(a, b):
    n = a.shape[0]
    k_rhs = b.shape[1]
    m = _integer_rows(a, b)
    width = n + k_rhs
    prev = 1
    for k in range(n):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    break
            else:
                raise SingularSystem(
                    f"matrix is singular at column {k}; "
                    "the target is probably not hit almost surely"
                )
        pivot = m[k][k]
        for i in range(k + 1, n):
            row_i = m[i]
            lead = row_i[k]
            row_k = m[k]
            for j in range(k + 1, width):
                row_i[j] = (row_i[j] * pivot - lead * row_k[j]) // prev
            row_i[k] = 0
        prev = pivot
    x = np.empty((n, k_rhs), dtype=object)
    for c in range(k_rhs):
        for i in range(n - 1, -1, -1):
            acc = Fraction(m[i][n + c])
            for j in range(i + 1, n):
                acc -= m[i][j] * x[j, c]
            x[i, c] = acc / m[i][i]
    return x
