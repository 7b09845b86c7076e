"""
Command-line entry point:

    anneal-validate <subcommand> --config <file> [--seed N] [--out PATH]

Each subcommand writes one CSV (comma separated, LF line endings, floats with
17 significant digits) plus a ``<out>.meta.json`` sidecar with the resolved
config, the seed and the package version. Failures print a single JSON line
``{"error": <kind>, "message": <text>}`` on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import negativity_sweep
from .closed_dynamics import evolve, ground_state_overlap_trace, populations
from .config import SUBCOMMANDS, ConfigError, ExperimentConfig, parse_config
from .integrate import IntegrationError
from .noise_ensemble import EnsembleError, EnsembleSpec, run_ensemble, sweep_rows
from .open_dynamics import evolve_master
from .perturbation import alpha_sweep
from .semiclassical import (SvmcSpec, bloch_to_populations, svd_evolve, svmc_run,
                            svmc_summary)
from .spectrum import GapClosedError, min_gap, spectrum_table

POP_COLUMNS = ("p00", "p01", "p10", "p11")

COLUMNS = {
    "spectrum": ("s", "E0", "E1", "E2", "E3", "gap", "swap_expectation_of_ground_state"),
    "pt": ("alpha", "beta", "swap", "p00", "lambda0", "lambda1", "lambda2"),
    "evolve": ("omega_tf", "alpha", "beta") + POP_COLUMNS,
    "master": ("omega_tf", "kappa2", "temperature") + POP_COLUMNS,
    "sweep": ("sigma", "state", "mean", "ci_low", "ci_high"),
    "svd": ("omega_tf", "Mx1", "Mx2", "Mz1", "Mz2") + POP_COLUMNS,
    "svmc": ("temperature", "mean_Mx1", "err_Mx1", "mean_Mx2", "err_Mx2",
             "mean_Mz1", "err_Mz1", "mean_Mz2", "err_Mz2") + POP_COLUMNS,
    "negativity": ("alpha", "mode", "omega_tf", "kappa2", "negativity"),
}

TRACE_COLUMNS = {
    "evolve": ("omega_tf", "alpha", "s", "ground_population"),
    "master": ("omega_tf", "kappa2", "s", "ground_population"),
}


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def emit_csv(records, path, columns=None) -> None:
    """Write ``records`` (dicts sharing the same keys) as CSV.

    ``columns`` fixes the header; it is required when ``records`` is empty.
    """
    records = list(records)
    if columns is None:
        if not records:
            raise ValueError("columns are required to write an empty table")
        columns = tuple(records[0])
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for rec in records:
                if set(rec) != set(columns):
                    raise ValueError(f"record keys {sorted(rec)} differ from header {list(columns)}")
                writer.writerow([_format(rec[c]) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


TEXT_COLUMNS = frozenset({"state", "mode"})


def read_csv(path) -> list[dict]:
    """Read a CSV written by :func:`emit_csv`; numeric cells become floats."""
    def convert(key, cell):
        if key in TEXT_COLUMNS:
            return cell
        try:
            return float(cell)
        except ValueError:
            return cell
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [{k: convert(k, v) for k, v in row.items()} for row in csv.DictReader(fh)]


def write_metadata(path, config: ExperimentConfig, extra: dict | None = None) -> Path:
    meta = {"version": __version__, "seed": config.seed, "config": config.as_dict()}
    if extra:
        meta.update(extra)
    meta_path = Path(str(path) + ".meta.json")
    try:
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {meta_path}: {exc.strerror or exc}") from exc
    return meta_path


def _pops(p) -> dict:
    return dict(zip(POP_COLUMNS, (float(x) for x in p)))


def run_spectrum(cfg: ExperimentConfig):
    rows = spectrum_table(cfg.params, cfg.grids["s"])
    try:
        s_star, gap = min_gap(cfg.params, cfg.s_resolution)
        extra = {"min_gap": {"s": s_star, "gap": gap}}
    except (GapClosedError, ValueError) as exc:
        extra = {"min_gap": {"error": str(exc)}}
    return rows, None, extra


def run_pt(cfg: ExperimentConfig):
    return alpha_sweep(cfg.grids["alpha"], cfg.grids["beta"]), None, {}


def run_evolve(cfg: ExperimentConfig):
    alphas = cfg.grids.get("alpha", [cfg.params.alpha])
    rows, trace = [], []
    for a in alphas:
        for wt in cfg.grids["omega_tf"]:
            p = replace(cfg.params, alpha=float(a), omega_tf=float(wt), kappa2=0.0)
            rows.append({"omega_tf": p.omega_tf, "alpha": p.alpha, "beta": p.beta_offset,
                         **_pops(populations(evolve(p)))})
            if cfg.trace:
                trace += [{"omega_tf": p.omega_tf, "alpha": p.alpha, "s": s, "ground_population": g}
                          for s, g in ground_state_overlap_trace(p)]
    return rows, trace if cfg.trace else None, {}


def run_master(cfg: ExperimentConfig):
    rows, trace = [], []
    for wt in cfg.grids["omega_tf"]:
        for k2 in cfg.grids["kappa2"]:
            p = replace(cfg.params, omega_tf=float(wt), kappa2=float(k2))
            rho, tr = evolve_master(p)
            rows.append({"omega_tf": p.omega_tf, "kappa2": p.kappa2,
                         "temperature": p.temperature, **_pops(populations(rho))})
            if cfg.trace:
                trace += [{"omega_tf": p.omega_tf, "kappa2": p.kappa2, "s": s, "ground_population": g}
                          for s, g in tr]
    return rows, trace if cfg.trace else None, {}


def run_sweep(cfg: ExperimentConfig):
    p = replace(cfg.params, kappa2=0.0)
    rows = []
    for sigma in cfg.grids["sigma"]:
        spec = EnsembleSpec(sigma=float(sigma), seed=cfg.seed, **cfg.ensemble)
        rows += sweep_rows(run_ensemble(p, spec, workers=cfg.workers))
    return rows, None, {}


def run_svd(cfg: ExperimentConfig):
    rows = []
    for wt in cfg.grids["omega_tf"]:
        final = svd_evolve(replace(cfg.params, omega_tf=float(wt)))[-1]
        m = final.vectors()
        rows.append({"omega_tf": float(wt), "Mx1": m[0, 0], "Mx2": m[1, 0],
                     "Mz1": m[0, 2], "Mz2": m[1, 2], **_pops(bloch_to_populations(final))})
    return rows, None, {}


def run_svmc(cfg: ExperimentConfig):
    opts = dict(cfg.svmc)
    resamples = opts.pop("resamples", 1000)
    rows = []
    for T in cfg.grids["temperature"]:
        spec = SvmcSpec(temperature=float(T), seed=cfg.seed, **opts)
        finals = svmc_run(cfg.params, spec, workers=cfg.workers)
        rows.append({"temperature": float(T), **svmc_summary(finals, resamples, cfg.seed)})
    return rows, None, {}


def run_negativity(cfg: ExperimentConfig):
    mode = cfg.negativity_mode
    rows = []
    omegas = cfg.grids.get("omega_tf", [cfg.params.omega_tf])
    kappas = cfg.grids.get("kappa2", [cfg.params.kappa2])
    if mode == "perturbative":
        # the first-order ground state does not depend on the schedule
        omegas, kappas = [cfg.params.omega_tf], [cfg.params.kappa2]
    for wt in omegas:
        for k2 in kappas:
            p = replace(cfg.params, omega_tf=float(wt), kappa2=float(k2))
            for rep in negativity_sweep(cfg.grids["alpha"], p, mode):
                rows.append({"alpha": rep.alpha, "mode": mode, "omega_tf": p.omega_tf,
                             "kappa2": p.kappa2, "negativity": rep.negativity})
    return rows, None, {}


RUNNERS = {
    "spectrum": run_spectrum, "pt": run_pt, "evolve": run_evolve, "master": run_master,
    "sweep": run_sweep, "svd": run_svd, "svmc": run_svmc, "negativity": run_negativity,
}


def run(cfg: ExperimentConfig, out) -> Path:
    rows, trace, extra = RUNNERS[cfg.subcommand](cfg)
    out = Path(out)
    columns = COLUMNS[cfg.subcommand]
    emit_csv([{c: r[c] for c in columns} for r in rows], out, columns)
    if trace is not None:
        trace_path = out.with_name(out.stem + ".trace.csv")
        emit_csv(trace, trace_path, TRACE_COLUMNS[cfg.subcommand])
        extra = {**extra, "trace_file": trace_path.name}
    write_metadata(out, cfg, extra)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anneal-validate",
                                     description="Two-qubit non-stoquastic annealing simulations.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help=f"CSV output path (default {name}.csv)")
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": " ".join(str(message).split())}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        return _fail("io", f"cannot read {args.config}: {exc.strerror or exc}", 2)
    try:
        cfg = parse_config(text, args.subcommand, seed=args.seed)
        out = run(cfg, args.out or f"{args.subcommand}.csv")
    except ConfigError as exc:
        return _fail("config", str(exc), 2)
    except (IntegrationError, EnsembleError, GapClosedError) as exc:
        return _fail("numerical", str(exc), 3)
    except OSError as exc:
        return _fail("io", str(exc), 4)
    except ValueError as exc:
        return _fail("value", str(exc), 5)
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
