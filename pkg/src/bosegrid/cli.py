"""Command line interface producing machine-readable datasets.

Every command writes one table.  CSV files start with
``# bosegrid v1 <command> <json>`` where the JSON object holds the input
parameters and a summary of derived scalars, followed by a header row and
data rows (floats with 17 significant digits).  JSON files hold the same
fields.  :func:`read_dataset` parses both.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .finiterep import (
    ResourceError,
    build,
    commutator_cutoff,
    commutator_residuals,
    cutoff_from_residuals,
    diagonalize,
    energy_range,
    error_report,
)

__all__ = ["Dataset", "read_dataset", "write_dataset", "main", "build_parser"]

SCHEMA = "bosegrid"
SCHEMA_VERSION = 1
LARGE_N_PHI = 256
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(ValueError):
    """Invalid command line arguments."""


@dataclass
class Dataset:
    """A single output table with its provenance.

    Attributes
    ----------
    command : str
    params : dict
        Inputs that determine the output.
    columns : list of str
    rows : list of list
    summary : dict
        Derived scalars (fits, optima, bounds).
    """

    command: str
    params: dict
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_json(self) -> str:
        doc = {
            "schema": SCHEMA,
            "version": SCHEMA_VERSION,
            "command": self.command,
            "params": self.params,
            "summary": self.summary,
            "columns": list(self.columns),
            "rows": [[_plain(v) for v in r] for r in self.rows],
        }
        return json.dumps(_plain(doc), sort_keys=True, indent=1) + "\n"

    def to_csv(self) -> str:
        meta = json.dumps(_plain({"params": self.params, "summary": self.summary}),
                          sort_keys=True, separators=(",", ":"))
        buf = io.StringIO()
        buf.write(f"# {SCHEMA} v{SCHEMA_VERSION} {self.command} {meta}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()


def _plain(v):
    """Convert numpy scalars and containers into JSON-native values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _parse_cell(s: str):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_dataset(path) -> Dataset:
    """Parse a CSV or JSON file written by :func:`write_dataset`."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise ValueError("not a bosegrid dataset")
        return Dataset(doc["command"], doc["params"], doc["columns"], doc["rows"], doc["summary"])
    first, _, rest = text.partition("\n")
    parts = first.split(" ", 4)
    if len(parts) != 5 or parts[:3] != ["#", SCHEMA, f"v{SCHEMA_VERSION}"]:
        raise ValueError("missing bosegrid header line")
    meta = json.loads(parts[4])
    reader = csv.reader(io.StringIO(rest))
    columns = next(reader)
    rows = [[_parse_cell(c) for c in r] for r in reader if r]
    return Dataset(parts[3], meta["params"], columns, rows, meta["summary"])


def write_dataset(ds: Dataset, path=None, fmt: str = "csv") -> str:
    """Serialize ``ds``; write to ``path`` when given and return the text."""
    text = ds.to_json() if fmt == "json" else ds.to_csv()
    if path is not None:
        Path(path).write_text(text)
    return text


# --- commands -------------------------------------------------------------------

def _check_sizes(n_list, large_ok: bool):
    for n in n_list:
        if n < 2 or n % 2:
            raise UsageError(f"--n-phi values must be even and >= 2, got {n}")
        if n > LARGE_N_PHI and not large_ok:
            raise UsageError(f"--n-phi {n} exceeds {LARGE_N_PHI}; pass --large-ok")


def cmd_table1(args) -> Dataset:
    """Energy range and commutator cutoff of the discrete oscillator."""
    n_list = args.n_phi or [32, 64, 128, 256]
    _check_sizes(n_list, args.large_ok)
    rows = []
    for n in n_list:
        rep = build(n, args.mass)
        eig = diagonalize(rep)
        n_b = cutoff_from_residuals(commutator_residuals(rep, eig), args.tol) if n > 2 else 0
        rows.append([n, energy_range(eig, args.mass), n_b])
    return Dataset("table1", {"n_phi": n_list, "mass": args.mass, "tol": args.tol},
                   ["n_phi", "delta_e_over_m", "n_b"], rows)


def cmd_errors(args) -> Dataset:
    """Per-state representation errors for each grid size."""
    n_list = args.n_phi or [64]
    _check_sizes(n_list, args.large_ok)
    cols = ["n_phi", "n", "eps_w", "eps_w_bound", "eps_d", "eps_pi", "eps_phipi", "eps_c"]
    rows = []
    for n in n_list:
        if n < 4:
            raise UsageError("--n-phi must be at least 4 for error reports")
        rep = build(n, args.mass)
        eig = diagonalize(rep)
        n_max = min(n - 3, n // 2 if args.n_max is None else args.n_max)
        rep_ = error_report(rep, eig, n_max, dps=args.dps)
        rows += [[n] + [r[c] for c in cols[1:]] for r in rep_.as_rows()]
    return Dataset("errors", {"n_phi": n_list, "mass": args.mass, "n_max": args.n_max, "dps": args.dps},
                   cols, rows)


def cmd_squeeze(args) -> Dataset:
    """Cutoff of squeezed vacua and the fit ``N_b = (a + b ln eps) ratio``."""
    from .models import squeezed_cutoff_fit

    ratios = args.ratios or [4, 6, 8, 12, 16, 24, 32]
    eps = args.eps or [10.0 ** k for k in range(-10, -3)]
    if any(r <= 0 for r in ratios):
        raise UsageError("--ratios must be positive")
    fit = squeezed_cutoff_fit(ratios, eps)
    rows = []
    for i, r in enumerate(fit.ratios):
        for j, e in enumerate(fit.eps):
            rows.append([r, e, int(fit.cutoffs[i, j]), (fit.a + fit.b * math.log(e)) * r])
    return Dataset("squeeze", {"ratios": list(fit.ratios), "eps": list(fit.eps)},
                   ["ratio", "eps", "n_b", "n_b_fit"], rows,
                   {"a": fit.a, "b": fit.b, "r2": fit.r2})


def _model_scan(command: str, family, masses, eps, kf_mass, kf_eps) -> Dataset:
    from .models import cutoff_vs_mass, optimal_sampling_intervals

    tab = cutoff_vs_mass(family, masses, eps)
    rows = [[float(m), float(e), int(tab.cutoffs[i, j]), float(tab.discarded[i, j])]
            for i, m in enumerate(tab.masses) for j, e in enumerate(tab.eps)]
    system = family.build(kf_mass)
    kf = []
    for e in kf_eps:
        s = optimal_sampling_intervals(system, 0, e)
        kf.append({"eps": e, "F": s.F, "K": s.K, "k_over_f": s.ratio, "flagged": s.flagged})
    summary = {
        "optimal_mass": [{"eps": float(e), "mass": tab.optimal_mass(j)} for j, e in enumerate(tab.eps)],
        "sampling": kf,
        "energy": system.energy,
        "n_cut": system.n_cut,
    }
    params = {"m0_sq": family.m0_sq, "g": family.g, "h": family.h, "masses": list(map(float, masses)),
              "eps": list(map(float, eps)), "kf_mass": kf_mass, "kf_eps": list(map(float, kf_eps)),
              "n_cut": family.n_cut}
    return Dataset(command, params, ["mass", "eps", "n_b", "discarded"], rows, summary)


def cmd_aho(args) -> Dataset:
    """Local anharmonic oscillator: cutoff versus boson mass and optimal windows."""
    from .models import ModelFamily

    masses = args.masses or list(np.arange(1.0, 12.0001, 0.25))
    eps = args.eps or [1e-5, 1e-12]
    kf_eps = args.kf_eps or list(np.logspace(-3, -9, 7))
    fam = ModelFamily("local_phi4", args.m0_sq, args.g, 0.0, args.n_cut)
    return _model_scan("aho", fam, masses, eps, args.mass, kf_eps)


def cmd_twosite(args) -> Dataset:
    """Two coupled sites: cutoff versus boson mass and optimal windows."""
    from .models import ModelFamily

    masses = args.masses or list(np.round(np.arange(0.8, 3.0001, 0.1), 10))
    eps = args.eps or [1e-5, 1e-12]
    kf_eps = args.kf_eps or [1e-4, 1e-6, 1e-8, 1e-10, 1e-12]
    fam = ModelFamily("two_site_phi4", args.m0_sq, args.g, args.h, args.n_cut)
    return _model_scan("twosite", fam, masses, eps, args.mass, kf_eps)


def cmd_counterexample(args) -> Dataset:
    """Spectra of the band-limited sinc combination and its windowed version."""
    from .counterexample import boson_spectrum, build_f, build_g, discrete_spectrum_mismatch
    from .sampling import to_conjugate

    _check_sizes([args.n_phi], args.large_ok)
    f = build_f(args.n_phi)
    g = build_g(f, args.sigma)
    n_max = args.n_max
    pf, pg = boson_spectrum(f, n_max), boson_spectrum(g, n_max)
    rep = build(args.n_phi)
    true, disc = discrete_spectrum_mismatch(f, rep)
    grid = f.grid
    fft_err = float(np.abs(to_conjugate(math.sqrt(grid.delta_phi) * f.f(grid.phi))
                           - math.sqrt(grid.delta_kappa) * f.fhat(grid.kappa)).max())
    rows = []
    for n in range(n_max + 1):
        d = float(disc.probs[n]) if n < len(disc.probs) else float("nan")
        rows.append([n, float(pf.probs[n]), float(pg.probs[n]), d])
    summary = {
        "q": list(f.q_list), "c": list(f.c_list),
        "field_tail_f": f.field_tail(), "field_tail_g": g.field_tail(),
        "conjugate_tail_g": g.conjugate_tail(), "c_g": g.c_g,
        "asymptotic_slope": f.asymptotic_slope, "fft_error": fft_err,
        "high_weight_30": 1.0 - float(pf.probs[:30].sum()), "high_weight_40": 1.0 - float(pf.probs[:40].sum()),
    }
    return Dataset("counterexample", {"n_phi": args.n_phi, "sigma": args.sigma, "n_max": n_max},
                   ["n", "p_f", "p_g", "p_f_discrete"], rows, summary)


def _qpe_state(spec: str, eig, seed):
    N = eig.states.shape[0]
    kind, _, arg = spec.partition(":")
    if kind == "eig":
        n = int(arg or 0)
        if not 0 <= n < N:
            raise UsageError("eigenstate index out of range")
        c = np.zeros(N)
        c[n] = 1.0
        return c
    if kind == "random":
        if seed is None:
            raise UsageError("--seed is required for random states")
        k = int(arg or N)
        rng = np.random.default_rng(seed)
        c = np.zeros(N, dtype=complex)
        c[:k] = rng.normal(size=k) + 1j * rng.normal(size=k)
        return c / np.linalg.norm(c)
    raise UsageError("--state must be 'eig:<n>' or 'random[:<n_states>]'")


def cmd_qpe_demo(args) -> Dataset:
    """Ancilla histogram of phase estimation on the discrete oscillator."""
    from .measure import QPEConfig, high_energy_probability, qpe_distribution, sample_shots

    n = args.n_phi
    if n & (n - 1) or n < 4:
        raise UsageError("--n-phi must be a power of two >= 4")
    _check_sizes([n], args.large_ok)
    if args.shots is not None and args.seed is None:
        raise UsageError("--seed is required with --shots")
    rep = build(n, args.mass)
    eig = diagonalize(rep)
    cfg = QPEConfig.from_eigensystem(rep, eig, args.n_r)
    n_b = commutator_cutoff(n, 1e-4)
    c = _qpe_state(args.state, eig, args.seed)
    anc = qpe_distribution(c, cfg, n_b)
    eps_h = high_energy_probability(c, n_b)
    cols = ["k", "p"]
    counts = None
    if args.shots is not None:
        counts = sample_shots(anc, args.shots, args.seed)
        cols.append("counts")
    rows = [[k, float(p)] + ([int(counts[k])] if counts is not None else []) for k, p in enumerate(anc.probs)]
    summary = {"n_b": n_b, "n_r": cfg.n_r, "p1max": anc.p1max, "p_all": anc.p_all, "eps_h": eps_h,
               "lower_ok": anc.p1max <= eps_h + 1e-15,
               "upper_ok": eps_h <= math.pi ** 2 / 4 * anc.p_all + 1e-15}
    return Dataset("qpe-demo", {"n_phi": n, "mass": args.mass, "n_r": cfg.n_r, "state": args.state,
                                "seed": args.seed, "shots": args.shots}, cols, rows, summary)


def cmd_advise(args) -> Dataset:
    """Run a validation session and emit its transcript."""
    from . import advisor as adv

    if args.shots is not None and args.seed is None:
        raise UsageError("--seed is required with --shots")
    if args.backend == "harmonic":
        backend = adv.HarmonicBackend(args.m0, args.shots, args.seed)
    elif args.backend == "phi4":
        backend = adv.Phi4Backend(args.m0 ** 2, args.g, args.shots, args.seed)
    elif args.backend == "counterexample":
        from .counterexample import build_f

        backend = adv.FunctionBackend(build_f(64).f, args.shots, args.seed)
    else:
        if args.histograms is None:
            raise UsageError("--histograms is required for the histogram backend")
        doc = json.loads(Path(args.histograms).read_text())
        records = doc if isinstance(doc, list) else [doc]
        backend = adv.HistogramBackend([adv.snapshot_from_json(r) for r in records])
    n0 = args.n_phi
    mass0 = args.mass
    if args.backend == "histogram":
        first = json.loads(Path(args.histograms).read_text())
        first = first[0] if isinstance(first, list) else first
        n0 = n0 or int(first["grid"]["n_phi"])
        mass0 = mass0 or float(first["grid"]["mass"])
    state = adv.GuidelineState(n0 or (64 if args.backend == "counterexample" else 32), mass0 or 1.0, args.eps, args.f_c, args.grow)
    result = adv.run_session(backend, state, args.max_rounds)
    transcript = result.to_json()
    rows = []
    for i, r in enumerate(transcript["rounds"]):
        a = dict(r["action"])
        name = a.pop("action")
        rows.append([i, r["grid"]["n_phi"], r["grid"]["mass"], r["betas"]["beta_phi"], r["betas"]["beta_kappa"],
                     name, json.dumps(a, sort_keys=True, separators=(",", ":"))])
    params = {"backend": args.backend, "m0": args.m0, "g": args.g, "n_phi": state.n_phi, "mass": state.mass,
              "eps": args.eps, "f_c": args.f_c, "grow": args.grow, "max_rounds": args.max_rounds,
              "seed": args.seed, "shots": args.shots}
    return Dataset("advise", params,
                   ["round", "n_phi", "mass", "beta_phi", "beta_kappa", "action", "action_args"], rows,
                   {"verdict": result.verdict, "final": transcript["final"], "transcript": transcript})


# --- parser -------------------------------------------------------------------

def _floats(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _ints(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bosegrid", allow_abbrev=False,
                                description="Finite-grid representations of bosonic fields.")
    p.add_argument("--version", action="version", version=f"bosegrid {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n_phi_list=True):
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", default=None, help="output file (default: stdout)")
        sp.add_argument("--large-ok", action="store_true", help=f"allow n_phi above {LARGE_N_PHI}")
        sp.add_argument("--seed", type=int, default=None)
        if n_phi_list:
            sp.add_argument("--n-phi", type=_ints, default=None, help="comma separated grid sizes")

    sp = sub.add_parser("table1", allow_abbrev=False, help="energy range and boson cutoff per grid size")
    common(sp)
    sp.add_argument("--mass", type=float, default=1.0)
    sp.add_argument("--tol", type=float, default=1e-4)
    sp.set_defaults(func=cmd_table1)

    sp = sub.add_parser("errors", allow_abbrev=False, help="representation errors of the low states")
    common(sp)
    sp.add_argument("--mass", type=float, default=1.0)
    sp.add_argument("--n-max", type=int, default=None)
    sp.add_argument("--dps", type=int, default=None, help="extended precision digits")
    sp.set_defaults(func=cmd_errors)

    sp = sub.add_parser("squeeze", allow_abbrev=False, help="squeezed vacuum cutoffs and fit")
    common(sp, False)
    sp.add_argument("--ratios", type=_floats, default=None)
    sp.add_argument("--eps", type=_floats, default=None)
    sp.set_defaults(func=cmd_squeeze)

    for name, func, m0_sq, g, mass in (("aho", cmd_aho, 1.0, 100.0, 5.0), ("twosite", cmd_twosite, -1.0, 2.0, 2.0)):
        sp = sub.add_parser(name, allow_abbrev=False, help=f"{'local' if name == 'aho' else 'two-site'} phi^4 scan")
        common(sp, False)
        sp.add_argument("--m0-sq", type=float, default=m0_sq)
        sp.add_argument("--g", type=float, default=g)
        if name == "twosite":
            sp.add_argument("--h", type=float, default=1.0)
        sp.add_argument("--masses", type=_floats, default=None, help="boson masses to scan")
        sp.add_argument("--eps", type=_floats, default=None, help="discarded weights")
        sp.add_argument("--mass", type=float, default=mass, help="boson mass for the window search")
        sp.add_argument("--kf-eps", type=_floats, default=None, help="tail norms for the window search")
        sp.add_argument("--n-cut", type=int, default=None if name == "aho" else 64)
        sp.set_defaults(func=func)

    sp = sub.add_parser("counterexample", allow_abbrev=False, help="band-limited state with high boson content")
    common(sp, False)
    sp.add_argument("--n-phi", type=int, default=64)
    sp.add_argument("--sigma", type=float, default=0.4)
    sp.add_argument("--n-max", type=int, default=120)
    sp.set_defaults(func=cmd_counterexample)

    sp = sub.add_parser("qpe-demo", allow_abbrev=False, help="phase-estimation boson readout")
    common(sp, False)
    sp.add_argument("--n-phi", type=int, default=64)
    sp.add_argument("--mass", type=float, default=1.0)
    sp.add_argument("--n-r", type=int, default=None)
    sp.add_argument("--state", default="eig:5", help="'eig:<n>' or 'random[:<n_states>]'")
    sp.add_argument("--shots", type=int, default=None)
    sp.set_defaults(func=cmd_qpe_demo)

    sp = sub.add_parser("advise", allow_abbrev=False, help="parameter validation session")
    common(sp, False)
    sp.add_argument("--backend", choices=("harmonic", "phi4", "counterexample", "histogram"), default="harmonic")
    sp.add_argument("--histograms", default=None, help="histogram JSON record or list of records")
    sp.add_argument("--m0", type=float, default=1.0)
    sp.add_argument("--g", type=float, default=0.0)
    sp.add_argument("--n-phi", type=int, default=None)
    sp.add_argument("--mass", type=float, default=None)
    sp.add_argument("--eps", type=float, default=1e-4)
    sp.add_argument("--f-c", type=float, default=0.7)
    sp.add_argument("--grow", choices=("pow2", "even"), default="pow2")
    sp.add_argument("--max-rounds", type=int, default=6)
    sp.add_argument("--shots", type=int, default=None)
    sp.set_defaults(func=cmd_advise)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        ds = args.func(args)
    except (UsageError, ValueError, ResourceError) as exc:
        print(f"bosegrid: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"bosegrid: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = write_dataset(ds, args.out, args.format)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
