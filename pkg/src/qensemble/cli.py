"""Command-line front end.

    qensemble MODE [SPECTRUM] [options]

Every run prints a table (or, with ``--format structured``, one JSON
document) to standard output.  ``--out PATH`` also writes the JSON document
to a file and ``--plot-out PATH`` writes two-column plot data plus a PNG of
the same stem.

Exit status: 0 success, 1 usage or parse error, 2 infeasible mean or empty
window, 3 failed verification or internal invariant violation.
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import counting, ensembles, plotting, qfit, qmath
from .errors import QEnsembleError
from .spectrum import Spectrum
from .specfile import read_spectrum
from .verify import DEFAULT_Q_GRID, verify_all

__all__ = ["RunConfig", "run", "main", "SCHEMA_VERSION", "MODES"]

SCHEMA_VERSION = 1
MODES = ("solve-bg", "solve-q", "count", "entropy-rate", "beta", "qcheck",
         "fit", "study", "verify", "qmath")
_PLOTTABLE = {"solve-bg", "solve-q", "count", "qcheck", "fit", "study"}
_NEEDS_SPECTRUM = set(MODES) - {"verify", "qmath"}


class UsageError(QEnsembleError):
    code = "usage"
    exit_status = 1


@dataclass
class RunConfig:
    mode: str
    q: float = None
    abar: str = None
    beta: float = None
    N: list = None
    eps: str = None
    eps_coeff: str = "0.5"
    delta: str = "1/64"
    q_grid: list = None
    tol: float = None
    fn: str = "ln_q"
    x: float = None
    y: float = None
    format: str = "table"
    out: str = None
    plot_out: str = None
    extras: dict = field(default_factory=dict)

    def validate(self):
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.plot_out and self.mode not in _PLOTTABLE:
            raise UsageError(f"mode {self.mode} produces no plot data")
        need = {
            "solve-q": ("q", "abar"),
            "count": ("N", "abar"),
            "entropy-rate": ("N", "abar"),
            "beta": ("N", "abar"),
            "qcheck": ("N", "abar", "q"),
            "fit": ("N", "abar"),
            "study": ("abar",),
            "qmath": ("x", "q"),
        }.get(self.mode, ())
        missing = [f"--{name}" for name in need if getattr(self, name) is None]
        if missing:
            raise UsageError(f"mode {self.mode} requires {', '.join(missing)}")
        if self.mode == "solve-bg" and (self.abar is None) == (self.beta is None):
            raise UsageError("solve-bg takes exactly one of --abar and --beta")
        if self.mode == "qmath" and self.fn == "ln_q_ratio" and self.y is None:
            raise UsageError("ln_q_ratio requires --y")
        if self.N is not None and self.mode != "study" and len(self.N) != 1:
            raise UsageError(f"mode {self.mode} takes a single --N")
        if self.eps is not None and self.mode == "study":
            raise UsageError("study scales the window with N; use --eps-coeff")


# -- helpers ----------------------------------------------------------------

def _frac(value):
    return str(Fraction(value))


def _window(cfg):
    N = cfg.N[0]
    try:
        if cfg.eps is not None:
            return counting.WindowSpec.make(cfg.abar, cfg.eps, N)
        return counting.WindowSpec.from_coeff(cfg.abar, N, cfg.eps_coeff)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _window_doc(win):
    eps = win.eps
    return {"N": win.N, "abar": _frac(win.abar), "eps_squared": _frac(win.eps_sq),
            "eps": _frac(eps) if isinstance(eps, Fraction) else eps}


def _dist_doc(dist):
    doc = {"p": dist.as_dict()}
    if dist.exact is not None:
        doc["p_exact"] = {lab: _frac(x) for lab, x in zip(dist.spectrum.labels, dist.exact)}
    return doc


def _spectrum_doc(spec):
    energies = ([_frac(e) for e in spec.exact_energies] if spec.is_exact
                else spec.energies.tolist())
    return {"labels": list(spec.labels), "energies": energies,
            "degeneracies": spec.degeneracies.tolist()}


def _dist_plot(spec, dist, title, extra=None):
    plot = {"kind": "distribution", "x": spec.energies.tolist(), "y": dist.p.tolist(),
            "names": ("energy", "p"), "title": title}
    if extra:
        plot["extra"] = extra
    return plot


# -- modes ------------------------------------------------------------------

def _solve_bg(cfg, spec):
    if cfg.beta is not None:
        sol = ensembles.bg_from_beta(spec, cfg.beta)
    else:
        sol = ensembles.bg_from_mean(spec, float(Fraction(cfg.abar)))
    result = {"beta": sol.beta, "abar": sol.abar, "Z": sol.Z, "Ztilde": sol.Ztilde, "S": sol.S,
              "ln_Ztilde": math.log(sol.Ztilde),
              "stationarity_residual": ensembles.stationarity_residual(sol, spec),
              "distribution": _dist_doc(sol.dist)}
    rows = [("beta", sol.beta), ("abar", sol.abar), ("Z", sol.Z), ("Ztilde", sol.Ztilde),
            ("S", sol.S), ("ln Ztilde", math.log(sol.Ztilde)),
            ("stationarity residual", result["stationarity_residual"])]
    plot = _dist_plot(spec, sol.dist, f"Boltzmann-Gibbs, beta={sol.beta:.6g}")
    return result, rows, [("p", sol.dist)], plot


def _solve_q(cfg, spec):
    sol = ensembles.solve_q_canonical(spec, cfg.q, float(Fraction(cfg.abar)))
    ids = ensembles.verify_identities(sol)
    stat = ensembles.stationarity_residual(sol, spec)
    result = {"q": sol.q, "beta": sol.beta, "beta_star": sol.beta_star, "c_q": sol.c_q,
              "Ztilde_q": sol.Ztilde_q, "abar": sol.abar, "q_mean": sol.q_mean, "S_q": sol.S_q,
              "identity_residuals": ids, "stationarity_residual": stat,
              "distribution": _dist_doc(sol.dist), "escort": _dist_doc(sol.escort)}
    rows = [(k, result[k]) for k in ("q", "beta", "beta_star", "c_q", "Ztilde_q", "abar",
                                     "q_mean", "S_q")]
    rows += [(f"residual {k}", v) for k, v in ids.items()]
    rows.append(("stationarity residual", stat))
    plot = _dist_plot(spec, sol.dist, f"q={sol.q:g}, beta*={sol.beta_star:.6g}",
                      extra={"escort": sol.escort.p.tolist()})
    return result, rows, [("p", sol.dist), ("escort", sol.escort)], plot


def _count(cfg, spec):
    win = _window(cfg)
    res = counting.empirical_distribution(spec, win)
    result = {"window": _window_doc(win), "Y_N": str(res.Y_N), "W": str(res.W),
              "W_m": {k: str(v) for k, v in res.W_m.items()},
              "distribution": _dist_doc(res.empirical)}
    rows = [("N", win.N), ("abar", _frac(win.abar)), ("eps", win.eps), ("Y_N", res.Y_N),
            ("W", res.W)]
    rows += [(f"W({k})", v) for k, v in res.W_m.items()]
    rows += [(f"p({k})", _frac(x)) for k, x in res.exact.items()]
    plot = _dist_plot(spec, res.empirical, f"exact counts, N={win.N}")
    return result, rows, [], plot


def _entropy_rate(cfg, spec):
    win = _window(cfg)
    q = 1.0 if cfg.q is None else cfg.q
    rate, qrate = counting.entropy_rate(spec, win, q)
    result = {"window": _window_doc(win), "q": q, "rate_log": rate, "rate_qlog": qrate}
    return result, [("N", win.N), ("q", q), ("rate_log", rate), ("rate_qlog", qrate)], [], None


def _beta(cfg, spec):
    win = _window(cfg)
    beta = counting.beta_estimate(spec, win.N, win.abar, eps=cfg.eps, delta=cfg.delta,
                                  eps_coeff=cfg.eps_coeff)
    result = {"window": _window_doc(win), "delta": _frac(cfg.delta), "beta": beta}
    return result, [("N", win.N), ("delta", cfg.delta), ("beta", beta)], [], None


def _qcheck(cfg, spec):
    win = _window(cfg)
    rep = counting.q_relation_check(spec, win, cfg.q, cfg.delta)
    per_m = [{"label": r.label, "energy": r.energy, "W_m": str(r.W_m), "ratio": r.ratio,
              "lhs": r.lhs, "rhs": r.rhs, "residual": r.residual,
              "e_q_prediction": r.eq_prediction} for r in rep.rows]
    result = {"window": _window_doc(win), "q": rep.q, "Y": str(rep.Y), "beta": rep.beta,
              "beta_star": rep.beta_star, "c_q": rep.c_q, "rows": per_m,
              "max_residual": rep.max_residual, "offset": rep.offset,
              "max_centered_residual": rep.max_centered_residual,
              "log_W": rep.log_W,
              "log_W_readings": {"lnY/(N+1)": rep.log_W_reading_inverse,
                                 "lnY*(N+1)/N": rep.log_W_reading_ratio}}
    rows = [("N", win.N), ("q", rep.q), ("beta", rep.beta), ("beta_star", rep.beta_star),
            ("c_q", rep.c_q)]
    rows += [(f"residual({r.label})", r.residual) for r in rep.rows]
    rows += [("max residual", rep.max_residual), ("common offset", rep.offset),
             ("max centered residual", rep.max_centered_residual),
             ("ln W", rep.log_W), ("ln Y/(N+1)", rep.log_W_reading_inverse),
             ("ln Y*(N+1)/N", rep.log_W_reading_ratio)]
    plot = {"kind": "series", "x": [r.energy for r in rep.rows],
            "y": [r.residual for r in rep.rows], "names": ("energy", "residual"),
            "title": f"q-relation residuals, N={win.N}", "reference": 0.0}
    return result, rows, [], plot


def _fit(cfg, spec):
    win = _window(cfg)
    res = counting.empirical_distribution(spec, win)
    fit = qfit.fit_q(res.empirical, spec, float(win.abar))
    result = {"window": _window_doc(win), "q_hat": fit.q_hat, "beta_star_hat": fit.beta_star_hat,
              "residual": fit.residual, "score": fit.score, "excluded": list(fit.excluded),
              "distribution": _dist_doc(res.empirical)}
    rows = [("N", win.N), ("q_hat", fit.q_hat), ("beta_star_hat", fit.beta_star_hat),
            ("residual", fit.residual), ("score", fit.score)]
    fitted = ensembles.q_canonical_given(spec, fit.q_hat, fit.beta_star_hat, float(win.abar))
    plot = _dist_plot(spec, res.empirical, f"N={win.N}, q_hat={fit.q_hat:.4f}",
                      extra={"fitted": fitted.p.tolist()})
    return result, rows, [], plot


def _study(cfg, spec):
    Ns = cfg.N or [32, 64, 128, 256]
    reports = qfit.convergence_study(spec, cfg.abar, cfg.eps_coeff, Ns, delta=cfg.delta)
    result = {"abar": _frac(counting.exact_param(cfg.abar)), "eps_coeff": cfg.eps_coeff,
              "reports": [{"N": r.N, "q_hat": r.q_hat, "beta_star_hat": r.beta_star_hat,
                           "residual": r.residual, "score": r.score, "rate_log": r.rate_log,
                           "beta_hat": r.beta_hat, "excluded": list(r.excluded)}
                          for r in reports]}
    rows = [(f"N={r.N}", f"q_hat={r.q_hat:.6f} beta*={r.beta_star_hat:.6f} "
                         f"rate={r.rate_log:.6f} beta_hat={r.beta_hat:.6f}") for r in reports]
    plot = {"kind": "series", "x": [r.N for r in reports], "y": [r.q_hat for r in reports],
            "names": ("N", "q_hat"), "title": "effective q versus replica count",
            "reference": 1.0, "logx": True}
    return result, rows, [], plot


def _verify(cfg, spec):
    grid = cfg.q_grid or list(DEFAULT_Q_GRID)
    rep = verify_all(spec, grid, tol=cfg.tol)
    rows = [(c.name, f"worst={c.worst:.3e} tol={c.tolerance:.1e} "
                     f"{'PASS' if c.passed else 'FAIL'}") for c in rep.checks]
    rows.append(("overall", "PASS" if rep.passed else "FAIL"))
    return rep.as_dict(), rows, [], None


def _qmath(cfg, spec):
    if cfg.fn == "ln_q":
        value = qmath.q_log(cfg.x, cfg.q)
    elif cfg.fn == "e_q":
        value = qmath.q_exp(cfg.x, cfg.q)
    elif cfg.fn == "ln_q_ratio":
        value = qmath.q_log_ratio(cfg.x, cfg.y, cfg.q)
    else:
        raise UsageError(f"unknown function {cfg.fn!r}")
    result = {"fn": cfg.fn, "x": cfg.x, "y": cfg.y, "q": cfg.q, "value": value}
    return result, [(cfg.fn, value)], [], None


_DISPATCH = {
    "solve-bg": _solve_bg, "solve-q": _solve_q, "count": _count,
    "entropy-rate": _entropy_rate, "beta": _beta, "qcheck": _qcheck, "fit": _fit,
    "study": _study, "verify": _verify, "qmath": _qmath,
}


def _config_doc(cfg):
    keys = ("q", "abar", "beta", "N", "eps", "eps_coeff", "delta", "q_grid", "tol", "fn", "x", "y")
    return {k: getattr(cfg, k) for k in keys if getattr(cfg, k) is not None}


def run(config, spectrum=None):
    """Execute one run.

    Returns ``(exit_status, document, table_rows, plot)`` where ``document``
    is the structured output and ``table_rows`` a list of (name, value)
    pairs plus any distributions to tabulate.  Errors are converted to a
    document carrying the machine-readable code.
    """
    doc = {"schema_version": SCHEMA_VERSION, "mode": config.mode}
    try:
        config.validate()
        if spectrum is None and config.mode in _NEEDS_SPECTRUM:
            raise UsageError(f"mode {config.mode} requires a spectrum file")
        if spectrum is None and config.mode == "verify":
            spectrum = Spectrum.two_level()
        doc["config"] = _config_doc(config)
        if spectrum is not None:
            doc["spectrum"] = _spectrum_doc(spectrum)
        result, rows, dists, plot = _DISPATCH[config.mode](config, spectrum)
    except QEnsembleError as exc:
        doc["error"] = {"code": exc.code, "message": str(exc)}
        return exc.exit_status, doc, [("error", f"[{exc.code}] {exc}")], None
    except ValueError as exc:
        doc["error"] = {"code": "usage", "message": str(exc)}
        return 1, doc, [("error", f"[usage] {exc}")], None
    doc["result"] = result
    status = 0
    if config.mode == "verify" and not result["passed"]:
        status = 3
    table = list(rows)
    for name, dist in dists:
        table += [(f"{name}({lab})", val) for lab, val in dist.as_dict().items()]
    return status, doc, table, plot


def dumps(doc):
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _format_table(rows):
    width = max((len(str(k)) for k, _ in rows), default=0)
    lines = []
    for key, value in rows:
        if isinstance(value, float):
            value = f"{value:.12g}"
        lines.append(f"{str(key):<{width}}  {value}")
    return "\n".join(lines) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser():
    p = _Parser(prog="qensemble",
                description="Ordinary and q-deformed canonical ensembles from exact replica counting.")
    p.add_argument("mode", choices=MODES)
    p.add_argument("spectrum", nargs="?", help="spectrum file: 'label energy [degeneracy]' per line")
    p.add_argument("--q", type=float)
    p.add_argument("--abar", help="mean energy, decimal or p/q")
    p.add_argument("--beta", type=float)
    p.add_argument("--N", type=_int_list, help="replica count (comma-separated list for study)")
    p.add_argument("--eps", help="window half-width, decimal or p/q")
    p.add_argument("--eps-coeff", default="0.5", help="half-width is eps_coeff/sqrt(N) (default 0.5)")
    p.add_argument("--delta", default="1/64", help="finite-difference step in abar (default 1/64)")
    p.add_argument("--q-grid", type=_float_list, help="q values for verify")
    p.add_argument("--tol", type=float, help="override every verify tolerance")
    p.add_argument("--fn", default="ln_q", choices=("ln_q", "e_q", "ln_q_ratio"), help="qmath function")
    p.add_argument("--x", type=float)
    p.add_argument("--y", type=float)
    p.add_argument("--format", choices=("table", "structured"), default="table")
    p.add_argument("--out", help="also write the structured document here")
    p.add_argument("--plot-out", help="two-column plot data file; a PNG is written next to it")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = RunConfig(mode=args.mode, q=args.q, abar=args.abar, beta=args.beta, N=args.N,
                    eps=args.eps, eps_coeff=args.eps_coeff, delta=args.delta,
                    q_grid=args.q_grid, tol=args.tol, fn=args.fn, x=args.x, y=args.y,
                    format=args.format, out=args.out, plot_out=args.plot_out)
    spectrum = None
    if args.spectrum:
        try:
            spectrum = read_spectrum(args.spectrum)
        except OSError as exc:
            print(f"qensemble: error: cannot read {args.spectrum}: {exc.strerror}", file=sys.stderr)
            return 1
        except QEnsembleError as exc:
            print(f"qensemble: error[{exc.code}]: {args.spectrum}: {exc}", file=sys.stderr)
            return exc.exit_status

    status, doc, table, plot = run(cfg, spectrum)
    if "error" in doc:
        print(f"qensemble: error[{doc['error']['code']}]: {doc['error']['message']}", file=sys.stderr)
    if cfg.format == "structured":
        sys.stdout.write(dumps(doc))
    elif "error" not in doc:
        sys.stdout.write(_format_table(table))
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(dumps(doc))
    if cfg.plot_out and plot is not None:
        data_path, fig_path = plotting.emit(cfg.plot_out, plot)
        if cfg.format == "table":
            print(f"plot data: {data_path}\nfigure:    {fig_path}")
    return status


if __name__ == "__main__":
    sys.exit(main())
