"""Exact replica counting.

N replicas of a finite system each occupy one microstate; a replica tuple is
admitted when its mean energy lies strictly within ``eps`` of ``abar``.
Counts are exact Python integers obtained from the coefficients of the
degeneracy-weighted generating polynomial ``P(x) = sum_m g(m) x**r(m)``
raised to the N-th power, where ``r(m)`` are the energies mapped onto the
smallest integer lattice that contains them.

Window arithmetic is done in Fractions.  The half-width is carried as its
square, so ``eps = c / sqrt(N)`` is represented exactly and the strict
inequality never depends on float rounding.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import EmptyWindowError, InvariantViolation, SpectrumError
from .qmath import check_q, q_exp, q_log, q_log_from_log
from .spectrum import Distribution, Spectrum, to_fraction

__all__ = [
    "LatticeSpectrum",
    "WindowSpec",
    "CountResult",
    "QRelationReport",
    "lattice",
    "exact_param",
    "count_Y",
    "count_W_pinned",
    "empirical_distribution",
    "entropy_rate",
    "beta_estimate",
    "q_relation_check",
    "DEFAULT_EPS_COEFF",
]

DEFAULT_EPS_COEFF = Fraction(1, 2)


def exact_param(value):
    """Exact rational for a window parameter.

    Floats are read through their shortest repr, so ``0.1`` becomes 1/10.
    """
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"window parameter must be finite, got {value!r}")
        return to_fraction(repr(value))
    return to_fraction(value)


class LatticeSpectrum:
    """A spectrum with exact energies mapped onto a reduced integer lattice.

    ``integer_energies[i] == energy[i] * scale`` exactly, and the energies
    relative to the minimum are multiples of ``step``:
    ``integer_energies[i] == offset + step * reduced[i]`` with
    ``gcd(reduced) == 1`` (or all zero).
    """

    def __init__(self, base):
        if not base.is_exact:
            raise SpectrumError(
                "exact counting needs energies given as integer, decimal or p/q literals"
            )
        self.base = base
        energies = base.exact_energies
        self.scale = math.lcm(*(e.denominator for e in energies))
        self.integer_energies = tuple(int(e * self.scale) for e in energies)
        self.offset = min(self.integer_energies)
        diffs = [k - self.offset for k in self.integer_energies]
        self.step = math.gcd(*diffs) or 1
        self.reduced = tuple(d // self.step for d in diffs)
        self.degree = max(self.reduced)
        terms = {}
        for r, g in zip(self.reduced, base.degeneracies):
            terms[r] = terms.get(r, 0) + int(g)
        self._terms = sorted(terms.items())
        self._powers = {0: np.array([1], dtype=object)}

    def __repr__(self):
        return f"LatticeSpectrum({self.base!r}, scale={self.scale}, step={self.step})"

    @property
    def labels(self):
        return self.base.labels

    def coefficients(self, n):
        """Coefficients of P(x)**n as an object array of exact integers."""
        if n < 0:
            raise ValueError("replica count must be nonnegative")
        if n in self._powers:
            return self._powers[n]
        k = max(j for j in self._powers if j < n)
        coeffs = self._powers[k]
        for j in range(k + 1, n + 1):
            nxt = np.zeros(len(coeffs) + self.degree, dtype=object)
            for r, g in self._terms:
                nxt[r:r + len(coeffs)] += coeffs * g if g != 1 else coeffs
            coeffs = nxt
        self._powers[n] = coeffs
        return coeffs

    def sum_value(self, n, j):
        """Exact energy sum of an n-replica tuple whose reduced index is ``j``."""
        return Fraction(n * self.offset + self.step * j, self.scale)

    def admissible(self, n, center, half_sq):
        """Reduced indices j with ``(sum_value(n, j) - center)**2 < half_sq``."""
        j0 = (center * self.scale - n * self.offset) / self.step
        hw_sq = half_sq * self.scale**2 / self.step**2
        hw = math.isqrt(math.floor(hw_sq)) + 1
        lo = max(0, math.floor(j0) - hw - 1)
        hi = min(n * self.degree, math.ceil(j0) + hw + 1)
        out = []
        for j in range(lo, hi + 1):
            d = self.sum_value(n, j) - center
            if d * d < half_sq:
                out.append(j)
        return out

    def window_count(self, n, center, half_sq):
        coeffs = self.coefficients(n)
        return sum((coeffs[j] for j in self.admissible(n, center, half_sq)), 0)

    def nearest_sum(self, n, center):
        """Reachable n-replica energy sum closest to ``center`` (ties: lower)."""
        coeffs = self.coefficients(n)
        best = None
        for j in np.flatnonzero(coeffs != 0):
            s = self.sum_value(n, int(j))
            key = (abs(s - center), s)
            if best is None or key < best:
                best = key
        return None if best is None else best[1]


@lru_cache(maxsize=64)
def _lattice_for(spec):
    return LatticeSpectrum(spec)


def lattice(spec):
    """Return ``spec`` as a LatticeSpectrum (cached per spectrum)."""
    if isinstance(spec, LatticeSpectrum):
        return spec
    return _lattice_for(spec)


@dataclass(frozen=True)
class WindowSpec:
    """Microcanonical window ``|mean - abar| < eps`` over ``N`` replicas.

    ``eps_sq`` is the exact square of the half-width.
    """

    abar: Fraction
    eps_sq: Fraction
    N: int

    def __post_init__(self):
        if not isinstance(self.N, int) or isinstance(self.N, bool) or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.eps_sq > 0:
            raise ValueError("eps must be positive")

    @classmethod
    def make(cls, abar, eps, N):
        eps = exact_param(eps)
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        return cls(exact_param(abar), eps * eps, int(N))

    @classmethod
    def from_coeff(cls, abar, N, coeff=DEFAULT_EPS_COEFF):
        """Window with ``eps = coeff / sqrt(N)``."""
        coeff = exact_param(coeff)
        if not coeff > 0:
            raise ValueError(f"eps coefficient must be positive, got {coeff}")
        return cls(exact_param(abar), coeff * coeff / int(N), int(N))

    @property
    def eps(self):
        """Half-width: a Fraction when it is rational, else a float."""
        num, den = self.eps_sq.numerator, self.eps_sq.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            return Fraction(rn, rd)
        return math.sqrt(self.eps_sq)

    def shifted(self, delta):
        return WindowSpec(self.abar + exact_param(delta), self.eps_sq, self.N)

    @property
    def half_sq_sum(self):
        """Squared half-width in units of the replica energy sum."""
        return self.eps_sq * self.N * self.N


@dataclass(frozen=True)
class CountResult:
    Y_N: int
    W_m: dict
    W: int
    empirical: Distribution
    window: WindowSpec = field(repr=False)

    @property
    def exact(self):
        """Exact per-microstate probabilities ``W(m) / (g(m) W)`` by label."""
        return dict(zip(self.empirical.spectrum.labels, self.empirical.exact))


def count_Y(spec, win):
    """Number of replica tuples (counted per microstate) inside the window."""
    lat = lattice(spec)
    return lat.window_count(win.N, win.N * win.abar, win.half_sq_sum)


def _pinned(lat, win, i):
    a_m = lat.base.exact_energies[i]
    g = int(lat.base.degeneracies[i])
    return g * lat.window_count(win.N - 1, win.N * win.abar - a_m, win.half_sq_sum)


def count_W_pinned(spec, win, m):
    """Window count with the first replica held in configuration ``m``.

    Equals ``g(m)`` times the (N-1)-replica count of the window shifted by
    ``a(m)``.
    """
    lat = lattice(spec)
    return _pinned(lat, win, lat.base.index(m))


def _empty(lat, win, n=None, center=None):
    n = win.N if n is None else n
    center = n * win.abar if center is None else center
    s = lat.nearest_sum(n, center)
    hint = None if s is None else s / n if n else s
    return EmptyWindowError("window admits no replica configuration", nearest_mean=hint, N=win.N)


def empirical_distribution(spec, win):
    """Exact window counts and the distribution of the first replica.

    Raises
    ------
    EmptyWindowError
        If the window admits nothing.
    InvariantViolation
        If the pinned counts do not add up to the window count.
    """
    lat = lattice(spec)
    Y = count_Y(lat, win)
    if Y == 0:
        raise _empty(lat, win)
    W_m = {lab: _pinned(lat, win, i) for i, lab in enumerate(lat.labels)}
    W = sum(W_m.values())
    if W != Y:
        raise InvariantViolation(f"pinned counts sum to {W}, window count is {Y}")
    base = lat.base
    exact = [Fraction(W_m[lab], int(g) * W) for lab, g in zip(base.labels, base.degeneracies)]
    # per-state float conversion is correctly rounded; renormalize the residue
    p = np.array([float(x) for x in exact])
    p /= np.dot(base.degeneracies, p)
    dist = Distribution(base, p, exact=exact)
    return CountResult(Y_N=Y, W_m=W_m, W=W, empirical=dist, window=win)


def entropy_rate(spec, win, q=1.0):
    """``(ln Y_N / N, ln_q(Y_N**(1/N)))`` for the window count ``Y_N``."""
    q = check_q(q)
    lat = lattice(spec)
    Y = count_Y(lat, win)
    if Y == 0:
        raise _empty(lat, win)
    rate = math.log(Y) / win.N
    return rate, q_log_from_log(rate, q)


def beta_estimate(spec, N, abar, eps=None, delta=Fraction(1, 64), eps_coeff=DEFAULT_EPS_COEFF):
    """Central difference of the log entropy rate in ``abar``.

    ``[S(abar + delta) - S(abar - delta)] / (2 delta)`` with
    ``S = ln Y_N / N``.  The window half-width is ``eps`` if given, else
    ``eps_coeff / sqrt(N)``.
    """
    N = int(N)
    if eps is None:
        win = WindowSpec.from_coeff(abar, N, eps_coeff)
    else:
        win = WindowSpec.make(abar, eps, N)
    delta = exact_param(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    up, _ = entropy_rate(spec, win.shifted(delta))
    down, _ = entropy_rate(spec, win.shifted(-delta))
    return (up - down) / (2.0 * float(delta))


@dataclass(frozen=True)
class QRelationRow:
    label: str
    energy: float
    W_m: int
    ratio: float          # W(m) / (g(m) Y), per microstate
    lhs: float            # ln_q(ratio)
    rhs: float            # -beta_star (a(m) - abar)
    residual: float       # lhs - rhs
    eq_prediction: float  # e_q(rhs), to compare with ratio


@dataclass(frozen=True)
class QRelationReport:
    q: float
    N: int
    abar: Fraction
    Y: int
    beta: float
    beta_star: float
    c_q: float
    rows: tuple
    log_W: float
    log_W_reading_inverse: float      # ln Y / (N + 1)
    log_W_reading_ratio: float        # ln Y * (N + 1) / N

    @property
    def max_residual(self):
        return max(abs(r.residual) for r in self.rows)

    @property
    def offset(self):
        """Count-weighted mean residual: the part shared by every configuration.

        A shared offset is a normalization mismatch between ``W`` and the
        sum of the predicted weights; it cancels in ``W(m)/W``.
        """
        total = sum(r.W_m for r in self.rows)
        return sum(r.W_m * r.residual for r in self.rows if r.W_m) / total

    @property
    def max_centered_residual(self):
        off = self.offset
        return max(abs(r.residual - off) for r in self.rows)


def q_relation_check(spec, win, q, delta=Fraction(1, 64)):
    """Finite-N check of the deformed counting relation with exact counts.

    ``Y(abar)`` counts the N-1 replicas other than the first inside the
    window centred on ``(N-1) abar`` (half-width ``N eps`` in sum units), and
    ``W(m)`` is the pinned count of :func:`count_W_pinned`.  The slope
    ``beta`` is the central difference of ``ln_q(Y**(1/N))`` over ``abar``
    with step ``delta``; ``c_q = Y**((1-q)/N)`` and ``beta_star = beta/c_q``.

    Both sides of ``ln_q W(m) - ln_q Y = -beta Y**((1-q)(1-1/N)) (a(m)-abar)``
    are divided by ``Y**(1-q)``, which turns them into
    ``ln_q(W(m)/Y)`` and ``-beta_star (a(m) - abar)``; those are the
    ``lhs``/``rhs`` reported per configuration.  The undivided form overflows
    for any realistic count.
    """
    q = check_q(q)
    lat = lattice(spec)
    delta = exact_param(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    N = win.N
    n = N - 1
    half = win.half_sq_sum

    def rest_count(abar):
        Y = lat.window_count(n, n * abar, half)
        if Y == 0:
            raise _empty(lat, win, n, n * abar)
        return Y

    Y = rest_count(win.abar)
    log_y = math.log(Y)
    log_up = math.log(rest_count(win.abar + delta))
    log_down = math.log(rest_count(win.abar - delta))
    beta = (q_log_from_log(log_up / N, q) - q_log_from_log(log_down / N, q)) / (2.0 * float(delta))
    c_q = math.exp((1.0 - q) * log_y / N)
    beta_star = beta / c_q

    rows = []
    abar_f = float(win.abar)
    W_total = 0
    for i, lab in enumerate(lat.labels):
        W_m = _pinned(lat, win, i)
        W_total += W_m
        g = int(lat.base.degeneracies[i])
        ratio = W_m / (g * Y)
        if ratio > 0.0:
            lhs = q_log(ratio, q)
        else:
            lhs = -1.0 / (1.0 - q) if q < 1.0 else -math.inf
        a = float(lat.base.exact_energies[i])
        rhs = -beta_star * (a - abar_f)
        rows.append(QRelationRow(lab, a, W_m, ratio, lhs, rhs, lhs - rhs, q_exp(rhs, q)))
    log_w = math.log(W_total) if W_total else -math.inf
    return QRelationReport(
        q=q, N=N, abar=win.abar, Y=Y, beta=beta, beta_star=beta_star, c_q=c_q,
        rows=tuple(rows), log_W=log_w,
        log_W_reading_inverse=log_y / (N + 1),
        log_W_reading_ratio=log_y * (N + 1) / N,
    )
