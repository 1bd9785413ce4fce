"""Command-line surface: solve, assemble, spectrum, fourier, sweep.

Every run writes a manifest recording the fully resolved configuration,
the tool version and the config-file hash, so any output row can be
regenerated.  Exit codes: 0 ok, 1 usage, 2 validation, 3 numerical
failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, assembly, complexity, spectral
from . import ap_scheme, explicit_scheme
from .model import (
    AP,
    CONFIG_KEYS,
    CflViolationError,
    DivergenceError,
    GridConfig,
    UnsupportedConfigurationError,
    config_as_dict,
    initial_kinetic_field,
    initial_parity_field,
    resolve_config,
)
from .quadrature import gauss_rule

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; route through our exit codes instead
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="transportlab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--output-dir", default=".", help="directory for artifacts")
        p.add_argument("--allow-unstable", action="store_true",
                       help="accept configurations violating the step restriction")
        # overrides: flag names coincide with config keys
        for key in CONFIG_KEYS:
            p.add_argument(f"--{key}", default=None, help=argparse.SUPPRESS)

    p_solve = sub.add_parser("solve", help="run the configured time stepper")
    add_common(p_solve)
    p_solve.add_argument("--export-trajectory", action="store_true",
                         help="also write the full (step, k, m, ...) table")

    p_asm = sub.add_parser("assemble", help="write the space-time system L, F")
    add_common(p_asm)
    p_asm.add_argument("--rescaled", action="store_true",
                       help="assemble the tau-rescaled relaxation system")

    p_spec = sub.add_parser("spectrum", help="measure one system's spectrum")
    add_common(p_spec)
    p_spec.add_argument("--rescaled", action="store_true")
    p_spec.add_argument("--delta", type=float, default=0.1)

    p_fourier = sub.add_parser("fourier", help="per-frequency symbol/norm tables")
    add_common(p_fourier)
    p_fourier.add_argument("--xi-samples", type=int, default=64)

    p_sweep = sub.add_parser("sweep", help="multi-epsilon comparison CSV")
    add_common(p_sweep)
    p_sweep.add_argument("--epsilons", required=True,
                         help="comma-separated epsilon values")
    p_sweep.add_argument("--mode", choices=("fixed_grid", "cfl_driven"),
                         default="fixed_grid")
    p_sweep.add_argument("--delta", type=float, default=0.1)
    p_sweep.add_argument("--T", type=float, default=0.1,
                         help="final time for cfl_driven grids")
    p_sweep.add_argument("--no-spectrum", action="store_true",
                         help="emit resolution/cost counts only")
    return parser


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(rows, destination) -> Path:
    """Write sweep rows to CSV atomically (write-then-rename)."""
    if not rows:
        raise ValueError("rows must be nonempty")
    destination = Path(destination)
    _atomic_write(destination, complexity.rows_to_csv(rows))
    return destination


def _overrides_from_args(args) -> dict:
    out = {}
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def _load_cfg(args) -> GridConfig:
    path = Path(args.config)
    raw = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path} must contain a flat JSON object")
    overrides = _overrides_from_args(args)
    merged = dict(raw)
    merged.update(overrides)
    # coerce numeric strings coming from the command line
    for key, value in list(merged.items()):
        if key in ("scheme", "init") or not isinstance(value, str):
            continue
        if key == "tau" and value == "auto":
            continue
        merged[key] = float(value) if key not in ("N", "Nx", "Nt") else int(value)
    return resolve_config(merged, allow_unstable=args.allow_unstable)


def _write_manifest(args, cfg: GridConfig, outdir: Path, extra: dict | None = None):
    config_bytes = Path(args.config).read_bytes()
    manifest = {
        "tool": "transportlab",
        "version": __version__,
        "subcommand": args.subcommand,
        "resolved_config": config_as_dict(cfg),
        "allow_unstable": bool(args.allow_unstable),
        "input_sha256": hashlib.sha256(config_bytes).hexdigest(),
    }
    if extra:
        manifest.update(extra)
    path = outdir / "manifest.json"
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _rule_for(cfg: GridConfig):
    if cfg.scheme == AP:
        return gauss_rule(cfg.N, 0.0, 1.0)
    return gauss_rule(2 * cfg.N, -1.0, 1.0)


def _cmd_solve(args, cfg, outdir: Path) -> list[Path]:
    rule = _rule_for(cfg)
    x = cfg.interior_x()
    written = []
    if cfg.scheme == AP:
        trajectory = ap_scheme.ap_evolve(initial_parity_field(cfg, rule), cfg, rule)
        rho = rule.weights @ trajectory.fields[-1].blocks()[0]
        if args.export_trajectory:
            tpath = outdir / "trajectory.csv"
            ap_scheme.write_trajectory_csv(trajectory, cfg, tpath)
            written.append(tpath)
    else:
        trajectory = explicit_scheme.explicit_evolve(
            initial_kinetic_field(cfg, rule), cfg, rule
        )
        rho = 0.5 * (trajectory.fields[-1].blocks() @ rule.weights)
        if args.export_trajectory:
            tpath = outdir / "trajectory.csv"
            explicit_scheme.write_trajectory_csv(trajectory, cfg, tpath)
            written.append(tpath)

    lines = ["x,rho"]
    lines += [f"{repr(float(xi))},{repr(float(ri))}" for xi, ri in zip(x, rho)]
    dpath = outdir / "density.csv"
    _atomic_write(dpath, "\n".join(lines) + "\n")
    written.insert(0, dpath)
    return written


def _assemble_system(cfg, rescaled):
    rule = _rule_for(cfg)
    if cfg.scheme == AP:
        initial = initial_parity_field(cfg, rule)
        return assembly.assemble_ap_system(cfg, rule, initial, rescaled=rescaled)
    initial = initial_kinetic_field(cfg, rule)
    return assembly.assemble_explicit_system(cfg, rule, initial)


def _cmd_assemble(args, cfg, outdir: Path) -> list[Path]:
    system = _assemble_system(cfg, args.rescaled)
    meta = assembly.system_metadata(system)
    lpath = outdir / "L.mtx"
    fpath = outdir / "F.mtx"
    assembly.export_matrix_market(system.L, lpath, meta)
    assembly.export_matrix_market(system.F, fpath, meta)
    return [lpath, fpath]


def _cmd_spectrum(args, cfg, outdir: Path) -> list[Path]:
    system = _assemble_system(cfg, args.rescaled)
    report = spectral.singular_extremes(system.L)
    queries = (
        complexity.qlsa_queries(report.sparsity, report.kappa, args.delta)
        if np.isfinite(report.kappa) else float("inf")
    )
    row = complexity.ComplexityRow(
        scheme=cfg.scheme, epsilon=cfg.epsilon, phi=cfg.phi, tau=cfg.tau,
        h=cfg.h, N=cfg.N, Nx=cfg.N_x, Nt=cfg.N_t, delta=args.delta,
        sigma_min=report.sigma_min, sigma_max=report.sigma_max,
        kappa=report.kappa, sparsity=report.sparsity,
        alpha=spectral.alpha_bound(cfg.epsilon, cfg.tau, cfg.N),
        classical_cost=complexity.classical_cost(cfg),
        quantum_queries=queries, status="ok",
    )
    path = outdir / "spectrum.csv"
    emit_report([row], path)
    return [path]


def _cmd_fourier(args, cfg, outdir: Path) -> list[Path]:
    rule = gauss_rule(cfg.N, 0.0, 1.0)
    xi_values = np.linspace(0.0, np.pi, args.xi_samples) / cfg.h
    report = spectral.perturbation_check(cfg, rule, xi_values)

    sym_lines = ["xi,k,v,c1_re,c1_im,c2_re,c2_im,d1_re,d1_im,d2_re,d2_im"]
    for xi in xi_values:
        fm = assembly.assemble_fourier_matrix(cfg, rule, xi)
        for k, s in enumerate(fm.symbols):
            sym_lines.append(",".join([
                repr(float(xi)), str(k + 1), repr(float(rule.nodes[k])),
                repr(s.c1.real), repr(s.c1.imag),
                repr(s.c2.real), repr(s.c2.imag),
                repr(s.d1.real), repr(s.d1.imag),
                repr(s.d2.real), repr(s.d2.imag),
            ]))
    spath = outdir / "symbols.csv"
    _atomic_write(spath, "\n".join(sym_lines) + "\n")

    norm_lines = ["xi,e_norm,sigma_max_eps,sigma_min_eps,sigma_max_zero,"
                  "sigma_min_zero,alpha"]
    for i, xi in enumerate(report.xi):
        norm_lines.append(",".join(repr(float(v)) for v in (
            xi, report.e_norms[i], report.sigma_max_eps[i],
            report.sigma_min_eps[i], report.sigma_max_zero[i],
            report.sigma_min_zero[i], report.alpha,
        )))
    npath = outdir / "fourier_norms.csv"
    _atomic_write(npath, "\n".join(norm_lines) + "\n")
    return [spath, npath]


def _cmd_sweep(args, cfg, outdir: Path) -> list[Path]:
    epsilons = [float(e) for e in args.epsilons.split(",") if e]
    if not epsilons:
        raise _UsageError("--epsilons must list at least one value")
    rows = complexity.sweep_epsilon(
        cfg, epsilons, mode=args.mode, delta=args.delta,
        final_time=args.T, measure_spectrum=not args.no_spectrum,
    )
    path = outdir / "sweep.csv"
    emit_report(rows, path)
    return [path]


def main(argv=None) -> int:
    """Entry point returning the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        if "unrecognized arguments" in str(exc):
            print(f"valid override keys: {', '.join(CONFIG_KEYS)}",
                  file=sys.stderr)
        return EXIT_USAGE

    try:
        outdir = Path(args.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        cfg = _load_cfg(args)
        _write_manifest(args, cfg, outdir)
        handler = {
            "solve": _cmd_solve,
            "assemble": _cmd_assemble,
            "spectrum": _cmd_spectrum,
            "fourier": _cmd_fourier,
            "sweep": _cmd_sweep,
        }[args.subcommand]
        written = handler(args, cfg, outdir)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CflViolationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        print("pass --allow-unstable to proceed anyway", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, UnsupportedConfigurationError, json.JSONDecodeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DivergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RuntimeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    for path in written:
        print(path)
    return EXIT_OK


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
