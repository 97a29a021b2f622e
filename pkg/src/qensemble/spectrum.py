"""Finite discrete spectra and per-microstate probability assignments."""

import math
import numbers
from decimal import Decimal, InvalidOperation
from fractions import Fraction

import numpy as np

from .errors import DegenerateSpectrumError, EmptySupportError, SpectrumError

__all__ = ["Spectrum", "Distribution", "to_fraction", "NORMALIZATION_TOL"]

NORMALIZATION_TOL = 1e-12


def to_fraction(value):
    """Convert an exact literal to a Fraction.

    Accepts integers, Fractions, Decimals and strings such as ``"0.25"``,
    ``"-3"``, ``"1/3"`` or ``"1e-2"``.  Floats are refused: a binary float is
    almost never the number the user meant, and silently quantizing it would
    move window boundaries.
    """
    if isinstance(value, bool):
        raise SpectrumError(f"not an energy literal: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise SpectrumError(f"energy must be finite, got {value}")
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            if "/" in text:
                num, den = text.split("/")
                num, den = int(num), int(den)
                if den <= 0:
                    raise ValueError
                return Fraction(num, den)
            dec = Decimal(text)
        except (ValueError, InvalidOperation):
            raise SpectrumError(f"not a decimal or p/q literal: {value!r}") from None
        if not dec.is_finite():
            raise SpectrumError(f"energy must be finite, got {value!r}")
        return Fraction(dec)
    raise SpectrumError(f"not an exact literal: {value!r} ({type(value).__name__})")


def _coerce_energy(value):
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise SpectrumError(f"energy must be finite, got {value!r}")
        return float(value), None
    exact = to_fraction(value)
    return float(exact), exact


class Spectrum:
    """Ordered set of configurations with energies and degeneracies.

    Parameters
    ----------
    energies : sequence
        One energy per configuration.  Exact literals (int, Fraction,
        Decimal, decimal/``p/q`` strings) are kept exactly as well; floats are
        accepted for the float-only solvers but make the spectrum unusable for
        exact counting.
    degeneracies : sequence of int, optional
        Number of microstates per configuration, default 1 each.
    labels : sequence of str, optional
        Unique labels, default ``"0", "1", ...``.
    """

    def __init__(self, energies, degeneracies=None, labels=None):
        energies = list(energies)
        if not energies:
            raise SpectrumError("spectrum must have at least one configuration")
        n = len(energies)
        if labels is None:
            labels = [str(i) for i in range(n)]
        labels = tuple(str(lab) for lab in labels)
        if len(labels) != n:
            raise SpectrumError("labels and energies differ in length")
        if len(set(labels)) != n:
            seen = set()
            dup = next(lab for lab in labels if lab in seen or seen.add(lab))
            raise SpectrumError(f"duplicate label {dup!r}")
        if degeneracies is None:
            degeneracies = [1] * n
        degeneracies = list(degeneracies)
        if len(degeneracies) != n:
            raise SpectrumError("degeneracies and energies differ in length")
        degs = []
        for g in degeneracies:
            if isinstance(g, bool) or not isinstance(g, numbers.Integral) or g < 1:
                raise SpectrumError(f"degeneracy must be a positive integer, got {g!r}")
            degs.append(int(g))

        floats, exact = zip(*(_coerce_energy(e) for e in energies))
        self.labels = labels
        self.energies = np.array(floats, dtype=float)
        self.energies.flags.writeable = False
        self.degeneracies = np.array(degs, dtype=np.int64)
        self.degeneracies.flags.writeable = False
        self.exact_energies = None if any(e is None for e in exact) else tuple(exact)

    @classmethod
    def two_level(cls):
        return cls([0, 1])

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        if self.labels != other.labels:
            return False
        if not np.array_equal(self.degeneracies, other.degeneracies):
            return False
        if self.exact_energies is not None and other.exact_energies is not None:
            return self.exact_energies == other.exact_energies
        return np.array_equal(self.energies, other.energies)

    def __hash__(self):
        return hash((self.labels, tuple(self.energies), tuple(self.degeneracies)))

    def __repr__(self):
        shown = self.exact_energies if self.exact_energies is not None else self.energies.tolist()
        parts = ", ".join(
            f"{lab}:{e}x{g}" for lab, e, g in zip(self.labels, map(str, shown), self.degeneracies)
        )
        return f"Spectrum({parts})"

    @property
    def is_exact(self):
        return self.exact_energies is not None

    @property
    def n_microstates(self):
        return int(self.degeneracies.sum())

    @property
    def a_min(self):
        return float(self.energies.min())

    @property
    def a_max(self):
        return float(self.energies.max())

    @property
    def energy_range(self):
        return self.a_max - self.a_min

    def index(self, label):
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise SpectrumError(f"unknown label {label!r}") from None

    def require_distinct(self):
        """Raise unless at least two distinct energies are present."""
        if not self.energy_range > 0.0:
            raise DegenerateSpectrumError("all configurations have the same energy")

    def expanded(self):
        """Equivalent spectrum with every degenerate level split into copies."""
        energies, labels = [], []
        source = self.exact_energies if self.is_exact else self.energies.tolist()
        for lab, e, g in zip(self.labels, source, self.degeneracies):
            for k in range(g):
                energies.append(e)
                labels.append(lab if g == 1 else f"{lab}#{k}")
        return Spectrum(energies, labels=labels)

    def scaled(self, factor):
        if self.is_exact and not isinstance(factor, float):
            factor = to_fraction(factor)
            energies = [e * factor for e in self.exact_energies]
        else:
            energies = (self.energies * float(factor)).tolist()
        return Spectrum(energies, self.degeneracies.tolist(), self.labels)

    def permuted(self, order):
        order = list(order)
        source = self.exact_energies if self.is_exact else self.energies.tolist()
        return Spectrum(
            [source[i] for i in order],
            [int(self.degeneracies[i]) for i in order],
            [self.labels[i] for i in order],
        )


class Distribution:
    """Probability of one microstate of each configuration.

    ``p[i]`` applies to each of the ``g[i]`` microstates of configuration
    ``i``, so normalization reads ``sum(g * p) == 1``.  ``exact`` optionally
    holds the same probabilities as Fractions.
    """

    def __init__(self, spectrum, p, exact=None, check=True):
        p = np.array(p, dtype=float)
        if p.shape != (len(spectrum),):
            raise ValueError(f"expected {len(spectrum)} probabilities, got shape {p.shape}")
        if check:
            if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
                raise ValueError("probabilities must lie in [0, 1]")
            total = float(np.dot(spectrum.degeneracies, p))
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise ValueError(f"distribution not normalized: sum(g*p) = {total!r}")
        p.flags.writeable = False
        self.spectrum = spectrum
        self.p = p
        self.exact = None if exact is None else tuple(exact)

    @classmethod
    def from_weights(cls, spectrum, weights):
        """Normalize nonnegative per-microstate weights."""
        w = np.asarray(weights, dtype=float)
        total = float(np.dot(spectrum.degeneracies, w))
        if not total > 0.0:
            raise EmptySupportError("all weights vanish")
        return cls(spectrum, w / total)

    @classmethod
    def uniform(cls, spectrum):
        return cls(spectrum, np.full(len(spectrum), 1.0 / spectrum.n_microstates))

    @property
    def g(self):
        return self.spectrum.degeneracies

    @property
    def support(self):
        return self.p > 0.0

    def as_dict(self):
        return dict(zip(self.spectrum.labels, self.p.tolist()))

    def __getitem__(self, label):
        return float(self.p[self.spectrum.index(label)])

    def mean(self):
        """Ordinary (linear) expectation of the energy."""
        return float(np.dot(self.g * self.p, self.spectrum.energies))

    def total_variation(self, other):
        return 0.5 * float(np.dot(self.g, np.abs(self.p - np.asarray(other.p))))

    def __repr__(self):
        body = ", ".join(f"{k}: {v:.6g}" for k, v in self.as_dict().items())
        return f"Distribution({body})"
