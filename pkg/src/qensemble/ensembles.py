"""Canonical ensembles over finite discrete spectra.

Two families share one layout.  The ordinary one has per-microstate
probabilities proportional to ``exp(-beta (a - abar))``; the deformed one
replaces the exponential by ``e_q`` with slope ``beta_star`` and takes its
mean constraint under the escort distribution ``p**q / sum(g p**q)``.

Every sum over configurations carries the degeneracy weight ``g``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDistributionError,
    DomainError,
    EmptySupportError,
    InfeasibleMeanError,
    NoSolutionError,
)
from .qmath import check_q, is_unit_q, q_log_from_log
from .roots import decreasing_root
from .spectrum import Distribution, Spectrum

__all__ = [
    "Spectrum",
    "Distribution",
    "BGSolution",
    "QCanonicalSolution",
    "bg_from_beta",
    "bg_from_mean",
    "shannon_entropy",
    "tsallis_entropy",
    "escort",
    "q_mean",
    "q_canonical_given",
    "q_canonical_at",
    "solve_q_canonical",
    "stationarity_residual",
    "verify_identities",
    "MEAN_TOL",
]

# Escort-mean residual accepted from the solver, in units of the energy range.
MEAN_TOL = 1e-10


@dataclass(frozen=True)
class BGSolution:
    beta: float
    abar: float
    Z: float
    Ztilde: float
    dist: Distribution
    S: float

    # Shared attribute names with QCanonicalSolution, so the stationarity
    # check handles both.
    q = 1.0

    @property
    def beta_star(self):
        return self.beta

    @property
    def spectrum(self):
        return self.dist.spectrum


@dataclass(frozen=True)
class QCanonicalSolution:
    q: float
    beta: float
    beta_star: float
    c_q: float
    Ztilde_q: float
    abar: float
    dist: Distribution
    escort: Distribution
    q_mean: float
    S_q: float

    @property
    def spectrum(self):
        return self.dist.spectrum


def _check_feasible(spec, abar):
    spec.require_distinct()
    abar = float(abar)
    if not (spec.a_min < abar < spec.a_max):
        raise InfeasibleMeanError(
            f"mean {abar!r} outside the open energy range ({spec.a_min!r}, {spec.a_max!r})"
        )
    return abar


def _log_power_sum(dist, q):
    """log of sum(g p**q) over the support."""
    sup = dist.support
    logs = q * np.log(dist.p[sup]) + np.log(dist.g[sup])
    m = logs.max()
    return float(m + math.log(np.exp(logs - m).sum()))


# -- ordinary ensemble ------------------------------------------------------

def _bg_log_weights(spec, beta):
    ref = spec.a_min if beta >= 0.0 else spec.a_max
    return -beta * (spec.energies - ref), ref


def _bg_mean(spec, beta):
    lw, _ = _bg_log_weights(spec, beta)
    w = spec.degeneracies * np.exp(lw)
    return float(np.dot(w, spec.energies) / w.sum())


def _bg_solution(spec, beta, abar=None):
    lw, ref = _bg_log_weights(spec, beta)
    w = np.exp(lw)
    zs = float(np.dot(spec.degeneracies, w))
    dist = Distribution(spec, w / zs)
    if abar is None:
        abar = dist.mean()
    log_zs = math.log(zs)
    Z = math.exp(log_zs - beta * ref) if log_zs - beta * ref < 709.0 else math.inf
    Ztilde = math.exp(log_zs + beta * (abar - ref))
    return BGSolution(beta=float(beta), abar=float(abar), Z=Z, Ztilde=Ztilde,
                      dist=dist, S=shannon_entropy(dist))


def bg_from_beta(spec, beta):
    """Ordinary canonical ensemble at inverse temperature ``beta``.

    Exponentials are taken relative to the lowest energy (highest for
    negative ``beta``), so no weight exceeds one.
    """
    beta = float(beta)
    if not math.isfinite(beta):
        raise DomainError(f"beta must be finite, got {beta!r}")
    return _bg_solution(spec, beta)


def bg_from_mean(spec, abar):
    """Ordinary canonical ensemble whose mean energy is ``abar``.

    Raises
    ------
    InfeasibleMeanError
        Unless ``a_min < abar < a_max``.
    """
    abar = _check_feasible(spec, abar)
    R = spec.energy_range
    beta = decreasing_root(lambda b: (_bg_mean(spec, b) - abar) / R, scale=1.0 / R)
    return _bg_solution(spec, beta, abar)


# -- entropies and escort ---------------------------------------------------

def shannon_entropy(dist):
    sup = dist.support
    p = dist.p[sup]
    return float(-np.dot(dist.g[sup] * p, np.log(p)))


def tsallis_entropy(dist, q):
    """(sum(g p**q) - 1) / (1 - q); the Shannon entropy when q is 1."""
    q = check_q(q)
    if is_unit_q(q):
        return shannon_entropy(dist)
    sup = dist.support
    p = dist.p[sup]
    # sum g p (p**(q-1) - 1), cancellation-free for q near 1
    return float(np.dot(dist.g[sup] * p, np.expm1((q - 1.0) * np.log(p))) / (1.0 - q))


def escort(dist, q):
    """Escort distribution ``p**q / sum(g p**q)``; zero-probability states stay at zero."""
    q = check_q(q)
    sup = dist.support
    if not sup.any():
        raise DegenerateDistributionError("distribution has empty support")
    out = np.zeros_like(dist.p)
    logs = q * np.log(dist.p[sup])
    w = np.exp(logs - logs.max())
    total = float(np.dot(dist.g[sup], w))
    if not total > 0.0:
        raise DegenerateDistributionError("escort normalizer vanishes")
    out[sup] = w / total
    return Distribution(dist.spectrum, out)


def q_mean(dist, q, spec=None):
    """Normalized q-expectation of the energy: the escort-weighted mean."""
    if spec is not None and spec != dist.spectrum:
        raise ValueError("distribution belongs to a different spectrum")
    return escort(dist, q).mean()


# -- deformed ensemble ------------------------------------------------------

def _q_log_weights(spec, q, beta_star, center):
    x = -beta_star * (spec.energies - center)
    if is_unit_q(q):
        return x
    t = (1.0 - q) * x
    lw = np.full_like(x, -np.inf)
    inside = t > -1.0
    lw[inside] = np.log1p(t[inside]) / (1.0 - q)
    return lw


def _q_state(spec, q, beta_star, center):
    """Normalized weights and log of the generalized partition function."""
    lw = _q_log_weights(spec, q, beta_star, center)
    m = lw.max()
    if not np.isfinite(m):
        raise EmptySupportError(
            f"every configuration is cut off at q={q!r}, beta_star={beta_star!r}"
        )
    w = np.exp(lw - m)
    zs = float(np.dot(spec.degeneracies, w))
    return w / zs, m + math.log(zs)


def _escort_mean_of(p, spec, q):
    sup = p > 0.0
    logs = q * np.log(p[sup])
    w = spec.degeneracies[sup] * np.exp(logs - logs.max())
    return float(np.dot(w, spec.energies[sup]) / w.sum())


def q_canonical_given(spec, q, beta_star, center):
    """Deformed canonical distribution ``e_q(-beta_star (a - center)) / Ztilde_q``.

    Configurations outside the support of ``e_q`` get probability exactly 0.
    """
    q = check_q(q)
    p, _ = _q_state(spec, q, float(beta_star), float(center))
    return Distribution(spec, p)


def q_canonical_at(spec, q, beta_star, abar):
    """Assemble a QCanonicalSolution at a given slope, without solving for it.

    At the self-consistent slope this is what :func:`solve_q_canonical`
    returns; anywhere else it is a deliberately non-stationary ensemble whose
    identity residuals can be inspected.
    """
    q = check_q(q)
    beta_star, abar = float(beta_star), float(abar)
    p, log_zt = _q_state(spec, q, beta_star, abar)
    dist = Distribution(spec, p)
    esc = escort(dist, q)
    c_q = math.exp(_log_power_sum(dist, q))
    return QCanonicalSolution(
        q=q,
        beta=beta_star * c_q,
        beta_star=beta_star,
        c_q=c_q,
        Ztilde_q=math.exp(log_zt),
        abar=abar,
        dist=dist,
        escort=esc,
        q_mean=esc.mean(),
        S_q=q_log_from_log(log_zt, q),
    )


def _slope_limits(spec, q, abar):
    """Slopes beyond which the lowest/highest level of e_q hits its pole (q > 1)."""
    if q <= 1.0 or is_unit_q(q):
        return None, None
    upper = 1.0 / ((q - 1.0) * (abar - spec.a_min))
    lower = -1.0 / ((q - 1.0) * (spec.a_max - abar))
    return lower, upper


def solve_q_canonical(spec, q, abar):
    """Self-consistent deformed ensemble with escort mean ``abar``.

    Solves ``q_mean(p(beta_star)) = abar`` for ``beta_star`` with the
    distribution centered on ``abar``, then fills in ``c_q = sum(g p**q)``,
    ``beta = beta_star * c_q``, ``Ztilde_q`` and ``S_q = ln_q(Ztilde_q)``.

    For q > 1 the search never crosses the slope where the weight of the
    extreme level diverges; past it the cutoff branch would reorder the
    weights and the escort mean would stop being monotone.

    Raises
    ------
    InfeasibleMeanError
        Unless ``a_min < abar < a_max``.
    NoSolutionError
        If the root cannot be bracketed or the residual stays above tolerance.
    InvariantViolation
        If the escort mean is found increasing in ``beta_star``.
    """
    q = check_q(q)
    abar = _check_feasible(spec, abar)
    R = spec.energy_range
    lower, upper = _slope_limits(spec, q, abar)

    def objective(bs):
        p, _ = _q_state(spec, q, bs, abar)
        return (_escort_mean_of(p, spec, q) - abar) / R

    beta_star = decreasing_root(objective, scale=1.0 / R, lower_limit=lower, upper_limit=upper)
    sol = q_canonical_at(spec, q, beta_star, abar)
    if not abs(sol.q_mean - abar) <= MEAN_TOL * R:
        raise NoSolutionError(
            f"escort mean {sol.q_mean!r} misses target {abar!r} at q={q!r}",
            bracket=(beta_star, beta_star),
        )
    return sol


def stationarity_residual(sol, spec=None, step=None):
    """Scaled slope of the generalized partition function at the solution.

    Central difference of ``Ztilde(beta_star)`` at fixed ``abar``, divided by
    ``Ztilde * range`` and sign-flipped so it carries the sign of
    ``q_mean - abar``.  ``d Ztilde / d beta_star`` is proportional to that
    difference, so the residual vanishes exactly at self-consistency.
    Accepts a :class:`BGSolution` too (``q = 1``, ``beta_star = beta``).

    ``step`` is the absolute step in ``beta_star``; by default
    ``1e-4 * max(1/range, |beta_star|)``.
    """
    spec = sol.spectrum if spec is None else spec
    R = spec.energy_range
    q, bs, abar = float(sol.q), float(sol.beta_star), float(sol.abar)
    if step is None:
        step = 1e-4 * max(1.0 / R, abs(bs))
    step = float(step)
    if not step > 0.0:
        raise DomainError(f"step must be positive, got {step!r}")
    lower, upper = _slope_limits(spec, q, abar)
    if upper is not None:
        # keep both probes on the near side of the pole
        room = min(upper - bs, bs - lower)
        step = min(step, 0.5 * room)
    _, log_z = _q_state(spec, q, bs, abar)
    _, log_zp = _q_state(spec, q, bs + step, abar)
    _, log_zm = _q_state(spec, q, bs - step, abar)
    slope = (math.exp(log_zp - log_z) - math.exp(log_zm - log_z)) / (2.0 * step)
    return -slope / R


def _rel(a, b):
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def verify_identities(sol):
    """Relative residuals of the identities a self-consistent solution satisfies.

    Returns a dict with keys

    ``beta_factorization``   beta vs beta_star * c_q
    ``cq_power_sum``         c_q vs sum(g p**q)
    ``power_sum_partition``  sum(g p**q) vs Ztilde_q**(1-q)
    ``entropy_partition``    S_q vs ln_q(Ztilde_q)
    ``entropy_tsallis``      S_q vs (sum(g p**q) - 1)/(1-q)

    Only ``power_sum_partition`` and ``entropy_tsallis`` depend on
    stationarity; off the solution they are reported, not raised.
    """
    q = sol.q
    dist = sol.dist
    log_ps = _log_power_sum(dist, q)
    log_zt = math.log(sol.Ztilde_q)
    return {
        "beta_factorization": _rel(sol.beta, sol.beta_star * sol.c_q),
        "cq_power_sum": _rel(sol.c_q, math.exp(log_ps)),
        "power_sum_partition": _rel(math.exp(log_ps), math.exp((1.0 - q) * log_zt)),
        "entropy_partition": _rel(sol.S_q, q_log_from_log(log_zt, q)),
        "entropy_tsallis": _rel(sol.S_q, tsallis_entropy(dist, q)),
    }
