"""Effective deformation parameter of a distribution over a finite spectrum.

If ``p(m) = e_q(-beta_star (a(m) - abar)) / Z`` then ``p**(1-q)`` is affine
in ``a(m)``.  For each trial q the affine model is fitted by least squares
and scored by ``SS_res / SS_tot`` of the transformed data; the best q on a
grid is refined with a bounded scalar minimizer.  The regression runs on
``ln_q p``, an affine image of ``p**(1-q)`` that stays well conditioned
through q = 1.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from .counting import (
    DEFAULT_EPS_COEFF,
    WindowSpec,
    beta_estimate,
    empirical_distribution,
    entropy_rate,
    exact_param,
    lattice,
)
from .errors import DegenerateSpectrumError, EmptyWindowError, UnderdeterminedFitError
from .qmath import Q1_THRESHOLD, is_unit_q

__all__ = ["FitReport", "fit_q", "convergence_study", "Q_GRID_STEP"]

Q_GRID_STEP = 0.01
# Relative spread of the transformed data below which it counts as flat.
_FLAT_TOL = 1e-12


@dataclass(frozen=True)
class FitReport:
    q_hat: float
    beta_star_hat: float
    residual: float               # RMS of the linearized model at q_hat
    abar: float
    score: float = 0.0            # sqrt(SS_res / SS_tot) at q_hat
    N: int = None
    excluded: tuple = ()          # labels left out for zero probability
    rate_log: float = None
    beta_hat: float = None
    empirical: dict = field(default=None, repr=False, compare=False)


def _transform(p, q):
    # ln_q p: an affine image of p**(1-q), continuous through q = 1
    if is_unit_q(q):
        return np.log(p)
    return np.expm1((1.0 - q) * np.log(p)) / (1.0 - q)


def _affine_fit(a, y):
    """Least-squares ``y ~ c0 + c1 a``; returns (c0, c1, ss_res, ss_tot)."""
    A = np.column_stack([np.ones_like(a), a - a.mean()])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_res = float(resid @ resid)
    dev = y - y.mean()
    ss_tot = float(dev @ dev)
    c1 = float(coef[1])
    c0 = float(coef[0]) - c1 * float(a.mean())
    return c0, c1, ss_res, ss_tot


def _score(a, p, q):
    y = _transform(p, q)
    _, _, ss_res, ss_tot = _affine_fit(a, y)
    return ss_res / ss_tot if ss_tot > 0.0 else 0.0


def _beta_star_from_fit(a, p, q, abar):
    y = _transform(p, q)
    c0, c1, ss_res, _ = _affine_fit(a, y)
    rms = math.sqrt(ss_res / len(y))
    # p**(1-q) = 1 + (1-q)(c0 + c1 a) = Z**(q-1) [1 - (1-q) beta_star (a - abar)]
    z_pow = 1.0 if is_unit_q(q) else 1.0 + (1.0 - q) * (c0 + c1 * abar)
    return -c1 / z_pow, rms


def fit_q(emp, spec=None, abar=None, q_lo=0.5, q_hi=2.0, step=Q_GRID_STEP):
    """Fit an effective q and slope to a distribution.

    Parameters
    ----------
    emp : Distribution
        Per-microstate probabilities.  Zero entries are excluded from the
        regression and listed in ``FitReport.excluded``.
    spec : Spectrum, optional
        Must match ``emp.spectrum`` when given.
    abar : float
        Center of the model; only affects ``beta_star_hat``.
    q_lo, q_hi, step : float
        Search interval and grid spacing for q.

    Raises
    ------
    DegenerateSpectrumError
        If all supported energies coincide or the distribution is flat over
        them (no slope, so q is not identifiable).
    UnderdeterminedFitError
        If fewer than three distinct energies carry probability.
    """
    if spec is None:
        spec = emp.spectrum
    elif spec != emp.spectrum:
        raise ValueError("distribution belongs to a different spectrum")
    if abar is None:
        raise TypeError("fit_q needs the center energy abar")
    abar = float(abar)
    if not 0.0 < q_lo < q_hi:
        raise ValueError(f"bad q search interval [{q_lo}, {q_hi}]")

    sup = emp.support
    excluded = tuple(lab for lab, s in zip(spec.labels, sup) if not s)
    a = spec.energies[sup]
    p = emp.p[sup]
    if a.size == 0 or np.ptp(a) == 0.0:
        raise DegenerateSpectrumError("all supported configurations have the same energy")
    if len(np.unique(a)) < 3:
        raise UnderdeterminedFitError(
            f"need at least 3 distinct energies with nonzero probability, got {len(np.unique(a))}"
        )
    logp = np.log(p)
    if np.ptp(logp) <= _FLAT_TOL * max(1.0, float(np.abs(logp).max())):
        raise DegenerateSpectrumError("distribution is flat over its support; q is not identifiable")

    grid = np.arange(q_lo, q_hi + 0.5 * step, step)
    grid = grid[grid <= q_hi]
    scores = np.array([_score(a, p, q) for q in grid])
    k = int(np.argmin(scores))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda q: _score(a, p, q), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    q_hat, best = (float(res.x), float(res.fun)) if res.fun <= scores[k] else (float(grid[k]), float(scores[k]))
    if abs(q_hat - 1.0) < Q1_THRESHOLD:
        q_hat = 1.0
    beta_star, rms = _beta_star_from_fit(a, p, q_hat, abar)
    return FitReport(q_hat=q_hat, beta_star_hat=beta_star, residual=rms, abar=abar,
                     score=math.sqrt(max(best, 0.0)), excluded=excluded)


def convergence_study(spec, abar, eps_coeff=DEFAULT_EPS_COEFF, Ns=(32, 64, 128, 256),
                      delta=None, q_lo=0.5, q_hi=2.0):
    """Fit q to the exact first-replica distribution for each replica count.

    For every N the window is ``|mean - abar| < eps_coeff / sqrt(N)``.  Each
    report also carries the log entropy rate and the finite-difference slope
    ``beta_hat`` (step ``delta``, default range/32).  Reports come back sorted
    by N; errors name the offending N.
    """
    Ns = sorted(int(n) for n in Ns)
    if not Ns:
        raise ValueError("Ns must not be empty")
    lat = lattice(spec)
    abar = exact_param(abar)
    if delta is None:
        delta = Fraction(max(lat.base.exact_energies) - min(lat.base.exact_energies)) / 32
    reports = []
    for N in Ns:
        win = WindowSpec.from_coeff(abar, N, eps_coeff)
        try:
            counts = empirical_distribution(lat, win)
            rate, _ = entropy_rate(lat, win)
            beta_hat = beta_estimate(lat, N, abar, delta=delta, eps_coeff=eps_coeff)
        except EmptyWindowError as exc:
            if exc.N is None:
                exc.N = N
            raise
        try:
            fit = fit_q(counts.empirical, lat.base, float(abar), q_lo=q_lo, q_hi=q_hi)
        except (DegenerateSpectrumError, UnderdeterminedFitError) as exc:
            raise type(exc)(f"N={N}: {exc}") from exc
        reports.append(FitReport(
            q_hat=fit.q_hat, beta_star_hat=fit.beta_star_hat, residual=fit.residual,
            abar=float(abar), score=fit.score, N=N, excluded=fit.excluded,
            rate_log=rate, beta_hat=beta_hat, empirical=counts.empirical.as_dict(),
        ))
    return reports
