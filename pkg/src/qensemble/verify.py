"""Identity suite run by ``qensemble verify``."""

import math
from dataclasses import dataclass, field

from .ensembles import (
    MEAN_TOL,
    bg_from_mean,
    solve_q_canonical,
    stationarity_residual,
    verify_identities,
)
from .qmath import check_q, is_unit_q, q_log, q_log_ratio

__all__ = ["Check", "VerifyReport", "verify_all", "DEFAULT_Q_GRID", "DEFAULT_TOLERANCES"]

DEFAULT_Q_GRID = (0.5, 0.8, 1.0, 1.2, 2.0)
ABAR_FRACTIONS = (0.2, 0.35, 0.5, 0.65, 0.8)

DEFAULT_TOLERANCES = {
    "beta_factorization": 1e-10,
    "cq_power_sum": 1e-10,
    "power_sum_partition": 1e-10,
    "entropy_partition": 1e-10,
    "entropy_tsallis": 1e-10,
    "escort_mean": MEAN_TOL,
    "stationarity": 1e-6,
    "q_log_ratio": 1e-12,
    "bg_entropy": 1e-12,
    "bg_mean": 1e-12,
    "bg_stationarity": 1e-6,
    "q_to_1_reduction": 1e-4,
}

_RATIO_POINTS = ((0.3, 1.7), (1.7, 5.0), (5.0, 0.3), (2.0, 4.0))


@dataclass
class Check:
    name: str
    tolerance: float
    worst: float = 0.0
    where: dict = field(default_factory=dict)
    count: int = 0

    def record(self, value, **where):
        value = abs(float(value))
        self.count += 1
        # NaN sticks as the worst value so the check fails
        if self.count == 1 or math.isnan(value) or (not math.isnan(self.worst) and value > self.worst):
            self.worst = value
            self.where = where

    @property
    def passed(self):
        return self.count > 0 and self.worst <= self.tolerance


@dataclass
class VerifyReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "worst": c.worst, "tolerance": c.tolerance,
                 "passed": c.passed, "evaluations": c.count, "worst_at": c.where}
                for c in self.checks
            ],
        }


def verify_all(spec, q_grid=DEFAULT_Q_GRID, abar_grid=None, tol=None):
    """Run every identity check over a grid of q values and feasible means.

    ``tol`` replaces all default tolerances when given (a negative control
    with ``tol=0`` must fail).  Checks specific to the ordinary ensemble run
    only when the q grid contains 1.
    """
    spec.require_distinct()
    q_grid = [check_q(q) for q in q_grid]
    if abar_grid is None:
        abar_grid = [spec.a_min + f * spec.energy_range for f in ABAR_FRACTIONS]
    tols = dict(DEFAULT_TOLERANCES)
    if tol is not None:
        tols = {k: float(tol) for k in tols}
    checks = {}

    def check(name):
        if name not in checks:
            checks[name] = Check(name, tols[name])
        return checks[name]

    R = spec.energy_range
    for q in q_grid:
        for x, y in _RATIO_POINTS:
            ref = q_log(x / y, q)
            check("q_log_ratio").record((q_log_ratio(x, y, q) - ref) / abs(ref), q=q, x=x, y=y)
        for abar in abar_grid:
            sol = solve_q_canonical(spec, q, abar)
            for name, value in verify_identities(sol).items():
                check(name).record(value, q=q, abar=abar)
            check("escort_mean").record((sol.q_mean - abar) / R, q=q, abar=abar)
            check("stationarity").record(stationarity_residual(sol, spec), q=q, abar=abar)
            if is_unit_q(q):
                bg = bg_from_mean(spec, abar)
                check("bg_entropy").record((bg.S - math.log(bg.Ztilde)) / bg.S, abar=abar)
                check("bg_mean").record((bg.dist.mean() - abar) / R, abar=abar)
                check("bg_stationarity").record(stationarity_residual(bg, spec), abar=abar)
                for dq in (-1e-6, 1e-6):
                    near = solve_q_canonical(spec, 1.0 + dq, abar)
                    check("q_to_1_reduction").record(
                        near.dist.total_variation(bg.dist), q=1.0 + dq, abar=abar
                    )
    order = list(DEFAULT_TOLERANCES)
    return VerifyReport(sorted(checks.values(), key=lambda c: order.index(c.name)))
