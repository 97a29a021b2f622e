"""Canonical ensembles from exact microcanonical counting.

Logarithmic counting of replica configurations gives the Boltzmann-Gibbs
ensemble; q-logarithmic counting gives the Tsallis ensemble with escort
(normalized q-) expectation values.  The package provides the deformed
functions, both ensembles with a self-consistent solver, an exact big-integer
replica counter, and a fit of the effective q against replica count.
"""

from .counting import (
    CountResult,
    LatticeSpectrum,
    WindowSpec,
    beta_estimate,
    count_W_pinned,
    count_Y,
    empirical_distribution,
    entropy_rate,
    q_relation_check,
)
from .ensembles import (
    BGSolution,
    QCanonicalSolution,
    bg_from_beta,
    bg_from_mean,
    escort,
    q_canonical_at,
    q_canonical_given,
    q_mean,
    shannon_entropy,
    solve_q_canonical,
    stationarity_residual,
    tsallis_entropy,
    verify_identities,
)
from .errors import QEnsembleError
from .qfit import FitReport, convergence_study, fit_q
from .qmath import q_exp, q_log, q_log_ratio
from .spectrum import Distribution, Spectrum
from .specfile import format_spectrum, parse_spectrum, read_spectrum, write_spectrum

__version__ = "0.1.0"
