"""Plain-text spectrum files.

One configuration per line::

    # label  energy  degeneracy
    ground   0       1
    excited  1/3     2

Fields are whitespace-separated and ``#`` starts a comment.  Energies are
decimal or ``p/q`` literals and are kept exact; the degeneracy may be
omitted and defaults to 1.
"""

import re

from .errors import SpectrumError, SpectrumParseError
from .spectrum import Spectrum, to_fraction

__all__ = ["parse_spectrum", "read_spectrum", "format_spectrum", "write_spectrum"]

_TOKEN = re.compile(r"\S+")


def parse_spectrum(text):
    labels, energies, degs = [], [], []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(line)]
        if not tokens:
            continue
        if len(tokens) not in (2, 3):
            raise SpectrumParseError(
                f"expected 'label energy [degeneracy]', got {len(tokens)} fields", lineno, 1
            )
        (label, _), (energy, ecol) = tokens[0], tokens[1]
        if label in seen:
            raise SpectrumParseError(
                f"duplicate label {label!r} (first on line {seen[label]})", lineno, tokens[0][1]
            )
        try:
            value = to_fraction(energy)
        except SpectrumError as exc:
            raise SpectrumParseError(str(exc), lineno, ecol) from None
        g = 1
        if len(tokens) == 3:
            gtext, gcol = tokens[2]
            if not gtext.isdigit() or int(gtext) < 1:
                raise SpectrumParseError(
                    f"degeneracy must be a positive integer, got {gtext!r}", lineno, gcol
                )
            g = int(gtext)
        seen[label] = lineno
        labels.append(label)
        energies.append(value)
        degs.append(g)
    if not labels:
        raise SpectrumParseError("no configurations found")
    return Spectrum(energies, degs, labels)


def read_spectrum(path):
    with open(path, encoding="utf-8") as fh:
        return parse_spectrum(fh.read())


def format_spectrum(spec):
    source = spec.exact_energies if spec.is_exact else [repr(e) for e in spec.energies.tolist()]
    lines = ["# label energy degeneracy"]
    for lab, e, g in zip(spec.labels, source, spec.degeneracies.tolist()):
        if not lab or _TOKEN.fullmatch(lab) is None or "#" in lab:
            raise SpectrumError(f"label {lab!r} cannot be written to a spectrum file")
        lines.append(f"{lab} {e} {g}")
    return "\n".join(lines) + "\n"


def write_spectrum(spec, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_spectrum(spec))
