"""Bracketing root search for nonincreasing scalar functions."""

import math

from .errors import InvariantViolation, NoSolutionError

__all__ = ["decreasing_root"]

# Tolerated rise of a nonincreasing function between probes, relative to
# the larger magnitude; absorbs float noise in sums near flat tails.
_MONOTONE_SLACK = 1e-12


def _expansion_points(start, scale, direction, limit, max_steps):
    if limit is None:
        step = scale
        for _ in range(max_steps):
            yield start + direction * step
            step *= 2.0
    else:
        gap = abs(limit - start)
        for k in range(1, max_steps + 1):
            yield limit - direction * gap * 0.5**k


def decreasing_root(f, start=0.0, scale=1.0, lower_limit=None, upper_limit=None,
                    xtol=1e-14, max_expansions=200, max_bisections=4000):
    """Root of a nonincreasing function.

    The bracket is grown from ``start`` by doubling steps of ``scale``.  When
    the domain is bounded on the side the root lies (``upper_limit`` /
    ``lower_limit``, exclusive), the distance to that bound is halved instead.
    The bracket is then bisected down to a width of
    ``xtol * max(scale, |x|)`` and finished with one secant step, kept only if
    it improves on both endpoints.

    Raises
    ------
    NoSolutionError
        If no sign change is found within ``max_expansions`` steps.
    InvariantViolation
        If ``f`` is seen increasing while the bracket grows.
    """
    f0 = f(start)
    if f0 == 0.0:
        return start
    if f0 > 0.0:
        direction, limit = 1.0, upper_limit
    else:
        direction, limit = -1.0, lower_limit

    prev_x, prev_f = start, f0
    found = False
    for x in _expansion_points(start, scale, direction, limit, max_expansions):
        fx = f(x)
        if not math.isfinite(fx):
            raise NoSolutionError(f"objective not finite at {x!r}", bracket=(prev_x, x))
        rise = (fx - prev_f) * direction
        if rise > _MONOTONE_SLACK * max(abs(fx), abs(prev_f), 1.0):
            raise InvariantViolation(
                f"objective not monotone: f({prev_x!r}) = {prev_f!r}, f({x!r}) = {fx!r}"
            )
        if fx == 0.0:
            return x
        if (fx > 0.0) != (f0 > 0.0):
            found = True
            break
        prev_x, prev_f = x, fx
    if not found:
        raise NoSolutionError("root not bracketed after expansion limit", bracket=(start, prev_x))

    if direction > 0:
        lo, f_lo, hi, f_hi = prev_x, prev_f, x, fx
    else:
        lo, f_lo, hi, f_hi = x, fx, prev_x, prev_f

    for _ in range(max_bisections):
        if hi - lo <= xtol * max(scale, abs(lo), abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if f_mid > 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid

    best_x, best_f = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
    if f_hi != f_lo:
        x_sec = hi - f_hi * (hi - lo) / (f_hi - f_lo)
        if lo <= x_sec <= hi:
            f_sec = f(x_sec)
            if abs(f_sec) < abs(best_f):
                best_x = x_sec
    return best_x
