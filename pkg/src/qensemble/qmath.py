"""Deformed logarithm and exponential.

    ln_q(x) = (x**(1-q) - 1) / (1-q)
    e_q(x)  = [1 + (1-q) x]**(1/(1-q))   where 1 + (1-q) x > 0, else 0

Both reduce to ``log``/``exp`` as q -> 1.  The generic branches are evaluated
through ``expm1``/``log1p`` so that nothing cancels when 1-q is small, and
for |q - 1| < ``Q1_THRESHOLD`` the ordinary functions are used directly.

All functions accept scalars or array-likes; scalar input gives a Python float.
"""

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "Q1_THRESHOLD",
    "check_q",
    "is_unit_q",
    "q_log",
    "q_exp",
    "q_log_ratio",
    "q_log_from_log",
]

Q1_THRESHOLD = 1e-8


def check_q(q):
    """Validate a deformation parameter and return it as a float."""
    try:
        q = float(q)
    except (TypeError, ValueError):
        raise DomainError(f"q must be a real number, got {q!r}") from None
    if not math.isfinite(q) or q <= 0.0:
        raise DomainError(f"q must be a finite positive number, got {q!r}")
    return q


def is_unit_q(q):
    return abs(q - 1.0) < Q1_THRESHOLD


def _out(arr, scalar):
    return float(arr) if scalar else arr


def q_log_from_log(log_x, q):
    """ln_q evaluated from ``log(x)`` rather than ``x``.

    Lets callers take the q-logarithm of numbers too large for a float
    (e.g. ``Y**(1/N)`` with ``Y`` an exact count) as long as their natural
    log is representable.
    """
    q = check_q(q)
    scalar = np.ndim(log_x) == 0
    log_x = np.array(log_x, dtype=float)
    if is_unit_q(q):
        return _out(log_x, scalar)
    one_minus_q = 1.0 - q
    with np.errstate(over="ignore"):
        out = np.expm1(one_minus_q * log_x) / one_minus_q
    return _out(out, scalar)


def q_log(x, q):
    """q-logarithm of ``x > 0``.

    Raises
    ------
    DomainError
        If any ``x <= 0`` or ``q <= 0``.
    """
    q = check_q(q)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0.0)):
        raise DomainError("q_log requires x > 0")
    return q_log_from_log(math.log(float(x)) if scalar else np.log(x), q)


def q_exp(x, q):
    """q-exponential; exactly 0 outside the support ``1 + (1-q) x > 0``."""
    q = check_q(q)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if is_unit_q(q):
        with np.errstate(over="ignore"):
            return _out(np.exp(x), scalar)
    one_minus_q = 1.0 - q
    t = one_minus_q * x
    inside = t > -1.0
    out = np.zeros_like(x)
    with np.errstate(over="ignore"):
        out[inside] = np.exp(np.log1p(t[inside]) / one_minus_q)
    return _out(out, scalar)


def q_log_ratio(x, y, q):
    """ln_q(x / y) computed as ``y**(q-1) * (ln_q x - ln_q y)``."""
    q = check_q(q)
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(~(x > 0.0)) or np.any(~(y > 0.0)):
        raise DomainError("q_log_ratio requires x > 0 and y > 0")
    if is_unit_q(q):
        return _out(np.log(x) - np.log(y), scalar)
    # ln_q x - ln_q y == (x**(1-q) - y**(1-q)) / (1-q).  Subtracting the
    # powers directly avoids the cancellation between two q-logs that have
    # both saturated near 1/(q-1); expm1 keeps the small-exponent case exact.
    a = (1.0 - q) * np.log(x)
    b = (1.0 - q) * np.log(y)
    small = np.maximum(np.abs(a), np.abs(b)) < 1.0
    diff = np.where(small, np.expm1(a) - np.expm1(b), np.exp(a) - np.exp(b)) / (1.0 - q)
    out = y ** (q - 1.0) * diff
    return _out(np.asarray(out), scalar)
