"""Plot data files and the figures rendered next to them.

Data go to a flat two-column text file that any plotting tool can read; a
PNG with the same stem is drawn alongside.  Figures are built on a bare
``Figure`` object, so no pyplot state or display backend is involved.
"""

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

__all__ = ["write_columns", "figure_path", "render_distribution", "render_series", "emit"]


def figure_path(data_path):
    data_path = Path(data_path)
    return data_path.with_suffix(".png") if data_path.suffix != ".png" else data_path.with_suffix(".fig.png")


def write_columns(path, x, y, names):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {names[0]} {names[1]}\n")
        for xi, yi in zip(x, y):
            fh.write(f"{float(xi)!r} {float(yi)!r}\n")


def _save(fig, path):
    fig.savefig(path, dpi=120, metadata={"Software": None})


def render_distribution(path, energies, series, title=""):
    """Stem plot of one or more per-microstate distributions against energy.

    ``series`` maps a legend label to probabilities aligned with ``energies``.
    """
    fig = Figure(figsize=(5.0, 3.5), layout="constrained")
    ax = fig.add_subplot()
    energies = np.asarray(energies, dtype=float)
    width = 0.8 * (np.ptp(energies) / max(len(energies), 2) or 1.0)
    offsets = np.linspace(-0.2, 0.2, len(series)) * width if len(series) > 1 else [0.0]
    for i, ((name, probs), off) in enumerate(zip(series.items(), offsets)):
        ax.vlines(energies + off, 0.0, probs, lw=2.0, color=f"C{i}")
        ax.plot(energies + off, probs, "o", ms=4, color=f"C{i}", label=name)
    ax.set_xlabel("energy a(m)")
    ax.set_ylabel("probability per microstate")
    ax.set_ylim(bottom=0.0)
    if title:
        ax.set_title(title, fontsize=9)
    if len(series) > 1:
        ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def render_series(path, x, y, xlabel, ylabel, title="", reference=None, logx=False):
    fig = Figure(figsize=(5.0, 3.5), layout="constrained")
    ax = fig.add_subplot()
    ax.plot(x, y, "o-", ms=4)
    if reference is not None:
        ax.axhline(reference, color="0.5", lw=0.8, ls="--")
    if logx:
        ax.set_xscale("log", base=2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=9)
    _save(fig, path)


def emit(path, plot):
    """Write the data file and the figure for a ``plot`` description.

    ``plot`` has keys ``x``, ``y``, ``names`` and ``kind`` (``"distribution"``
    or ``"series"``), plus optional ``extra`` series, ``title``, ``reference``
    and ``logx``.  Returns the two paths written.
    """
    write_columns(path, plot["x"], plot["y"], plot["names"])
    fig_path = figure_path(path)
    if plot["kind"] == "distribution":
        series = {plot["names"][1]: plot["y"], **plot.get("extra", {})}
        render_distribution(fig_path, plot["x"], series, plot.get("title", ""))
    else:
        render_series(fig_path, plot["x"], plot["y"], *plot["names"], title=plot.get("title", ""),
                      reference=plot.get("reference"), logx=plot.get("logx", False))
    return Path(path), fig_path
