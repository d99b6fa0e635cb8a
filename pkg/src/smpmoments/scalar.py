"""Scalar backends: exact rationals (``fractions.Fraction``) or IEEE floats.

A model is loaded in one mode and every derived quantity stays in that mode.
Arrays of rationals use ``dtype=object`` so numpy broadcasting still works.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Real

import numpy as np

from .errors import MalformedDocument

RATIONAL = "rational"
FLOAT = "float"
MODES = (RATIONAL, FLOAT)

DEFAULT_TOLERANCE = 1e-9


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"unknown scalar mode {mode!r}; expected one of {MODES}")
    return mode


def parse_scalar(value, mode: str = RATIONAL):
    """Convert a JSON number or an ``"a/b"`` string to the requested mode.

    Decimal literals are read through their string form, so ``0.25`` becomes
    ``Fraction(1, 4)`` rather than the binary expansion of the float.
    """
    if isinstance(value, bool):
        raise MalformedDocument(f"boolean {value!r} is not a number")
    if isinstance(value, Fraction):
        q = value
    elif isinstance(value, int):
        q = Fraction(value)
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise MalformedDocument(f"non-finite value {value!r}")
        q = Fraction(repr(value))
    elif isinstance(value, str):
        try:
            q = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise MalformedDocument(f"cannot parse number {value!r}") from exc
    elif isinstance(value, Real):
        q = Fraction(float(value))
    else:
        raise MalformedDocument(f"expected a number, got {type(value).__name__}")
    return q if mode == RATIONAL else float(q)


def convert(value, mode: str):
    """Convert an already numeric value into ``mode``."""
    if mode == RATIONAL:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, (int, np.integer)):
            return Fraction(int(value))
        return Fraction(float(value))
    return float(value)


def dtype_for(mode: str):
    return object if mode == RATIONAL else float


def as_array(values, mode: str) -> np.ndarray:
    """Build an array of scalars in ``mode`` from nested sequences."""
    arr = np.array(values, dtype=object)
    out = np.empty(arr.shape, dtype=dtype_for(mode))
    for idx in np.ndindex(arr.shape):
        out[idx] = parse_scalar(arr[idx], mode)
    return out


def zeros(shape, mode: str) -> np.ndarray:
    if mode == RATIONAL:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


def ones(shape, mode: str) -> np.ndarray:
    if mode == RATIONAL:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(1))
        return out
    return np.ones(shape)


def identity(n: int, mode: str) -> np.ndarray:
    out = zeros((n, n), mode)
    for i in range(n):
        out[i, i] = Fraction(1) if mode == RATIONAL else 1.0
    return out


def array_mode(arr: np.ndarray) -> str:
    return RATIONAL if arr.dtype == object else FLOAT


def to_float(arr: np.ndarray) -> np.ndarray:
    return np.asarray(arr, dtype=float)


def format_scalar(value) -> str:
    """Render rationals as ``a/b`` and floats with 12 significant digits."""
    if isinstance(value, Fraction):
        return str(value)
    return f"{float(value):.12g}"


def jsonable(value):
    """Rationals become ``"a/b"`` strings; floats pass through."""
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else str(value)
    return float(value)


def is_close(a, b, tol: float = DEFAULT_TOLERANCE) -> bool:
    """Exact equality for rationals, relative closeness for floats."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    a, b = float(a), float(b)
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def rel_discrepancy(a, b, floor: float = 0.0) -> float:
    """Max elementwise ``|a - b| / max(|a|, |b|, floor)``.

    Pairs that are both exactly zero contribute 0. Rational inputs are
    compared exactly, so identical rationals give exactly 0.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.dtype == object and b.dtype == object:
        worst = Fraction(0)
        for x, y in zip(a.ravel(), b.ravel()):
            if x == y:
                continue
            worst = max(worst, abs(x - y) / max(abs(x), abs(y), Fraction(floor)))
        return float(worst)
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    diff = np.abs(a - b)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(diff == 0, 0.0, diff / scale)
    return float(np.max(rel))
