"""Command-line interface.

Exit codes: 0 success (and real-family verdicts from ``classify``),
1 usage or input error, 2 ``ComplexCovariance`` from ``classify``,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .criteria import DEFAULT_TOL, Verdict, classify
from .errors import NumericalError
from .io import MODEL_SCHEMA, ModelFileError, dumps, format_csv, load_model, model_to_dict, validate_document
from .model import InteractionModel
from .scenarios import PRESETS, get_preset, sweep
from .selftest import FAIL, run_selftest
from .spectral import FrequencyGrid, Normalization, stability
from .squeezing import LOConfig, hd_best, hidden_report, optimal_value, squeezing_spectrum, to_db

PROG = "cavity-squeeze"
EXIT_OK, EXIT_USAGE, EXIT_COMPLEX, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- argument helpers ----------------------------------------------------------


def _scalar(text: str):
    low = text.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise UsageError(f"cannot parse value {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _overrides(pairs: Sequence[str] | None) -> dict:
    out = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects key=value, got {pair!r}")
        out[key.strip()] = _scalar(value)
    return out


def _add_model_source(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="preset name (see 'scenario list')")
    src.add_argument("--model-file", "--matrix", dest="model_file", help="model JSON file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a preset parameter")
    p.add_argument("--allow-unstable", action="store_true", help="evaluate above-threshold models formally")


def _add_output(p: argparse.ArgumentParser, default_format: str):
    p.add_argument("--output", default="-", help="output file, '-' for stdout, or a format name")
    p.add_argument("--format", choices=("csv", "json"), default=None, help=f"output format (default {default_format})")
    p.add_argument("--manifest", help="manifest path (default: beside --output)")
    p.set_defaults(default_format=default_format)


def _add_grid(p: argparse.ArgumentParser):
    p.add_argument("--omega-min", type=float, default=0.0)
    p.add_argument("--omega-max", type=float, default=3.0)
    p.add_argument("--omega-count", type=int, default=301)
    p.add_argument("--omega-list", type=_float_list, help="explicit comma-separated frequencies")


def _add_normalization(p: argparse.ArgumentParser):
    p.add_argument(
        "--normalization", default=Normalization.SHOT_NOISE_UNITY.value,
        choices=[n.value for n in Normalization],
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Hidden squeezing analysis of multimode cavity models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--replay", metavar="MANIFEST", help="re-run the command recorded in a manifest")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("classify", help="predict whether the spectral covariance is real")
    _add_model_source(p)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    _add_output(p, "json")

    p = sub.add_parser("spectrum", help="optimal and homodyne squeezing spectra")
    _add_model_source(p)
    _add_grid(p)
    _add_normalization(p)
    p.add_argument("--lo-mode-weights", type=_float_list, help="real LO mode weights (normalised)")
    p.add_argument("--lo-phase", default="scan", help="LO phase in radians, or 'scan'")
    p.add_argument("--lo-omega", "--lo-optimize-at", dest="lo_omega", type=float,
                   help="optimise the open LO parameters once at this frequency")
    p.add_argument("--modes", type=_int_list, help="keep only these modes (0-based)")
    p.add_argument("--seed", type=int, default=0)
    _add_output(p, "csv")

    p = sub.add_parser("hd", help="best homodyne measurement at one frequency")
    _add_model_source(p)
    _add_normalization(p)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--modes", type=_int_list)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p, "json")

    p = sub.add_parser("scan", help="classify a preset along one parameter")
    p.add_argument("--scenario", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    _add_output(p, "csv")

    p = sub.add_parser("scenario", help="list, run or export presets")
    ssub = p.add_subparsers(dest="action", parser_class=_Parser, required=True)
    q = ssub.add_parser("list")
    _add_output(q, "csv")
    q = ssub.add_parser("run")
    q.add_argument("name")
    q.add_argument("--set", action="append", metavar="KEY=VALUE")
    q.add_argument("--allow-unstable", action="store_true")
    _add_grid(q)
    _add_output(q, "csv")
    q = ssub.add_parser("export")
    q.add_argument("name")
    q.add_argument("path")
    q.add_argument("--set", action="append", metavar="KEY=VALUE")

    p = sub.add_parser("selftest", help="run invariant and preset checks")
    p.add_argument("--count", type=int, default=200, help="random models to check")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("schema", help="print or check the model JSON schema")
    p.add_argument("--validate", metavar="FILE")
    return parser


# --- shared plumbing -----------------------------------------------------------


def _load(args) -> tuple[InteractionModel, dict]:
    overrides = _overrides(getattr(args, "set", None))
    if getattr(args, "scenario", None):
        preset = _preset(args.scenario)
        return _build(preset, overrides), {"scenario": preset.name, "overrides": overrides}
    if overrides:
        raise UsageError("--set only applies to --scenario")
    return load_model(args.model_file), {"model_file": args.model_file}


def _preset(name):
    try:
        return get_preset(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _build(preset, overrides):
    try:
        return preset.build(**overrides)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _grid(args) -> FrequencyGrid:
    if args.omega_list:
        return FrequencyGrid(tuple(sorted(set(args.omega_list))))
    if args.omega_count < 1:
        raise UsageError("--omega-count must be positive")
    return FrequencyGrid.linspace(args.omega_min, args.omega_max, args.omega_count)


def _resolve_output(args) -> tuple[Path | None, str]:
    out, fmt = args.output, args.format
    if out in ("csv", "json"):
        return None, fmt or out
    path = None if out == "-" else Path(out)
    if fmt is None:
        suffix = path.suffix.lower().lstrip(".") if path else ""
        fmt = suffix if suffix in ("csv", "json") else args.default_format
    return path, fmt


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _emit(args, argv, payload_json: dict, table: tuple | None, started: float) -> None:
    path, fmt = _resolve_output(args)
    if fmt == "csv" and table is not None:
        text = format_csv(*table)
    else:
        text = dumps(payload_json)
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    manifest_path = Path(args.manifest) if args.manifest else (
        path.with_name(path.stem + ".manifest.json") if path else None
    )
    if manifest_path is not None:
        manifest = {
            "tool": PROG,
            "version": __version__,
            "argv": list(argv),
            "config": _config(args),
            "output": {"path": str(path) if path else "-", "format": fmt, "sha256": _sha256(text)},
            "timings": {"wall_seconds": time.perf_counter() - started},
        }
        manifest_path.write_text(dumps(manifest))


def _config(args) -> dict:
    skip = {"default_format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# --- subcommands ---------------------------------------------------------------


def _cmd_classify(args, argv, started) -> int:
    model, source = _load(args)
    result = classify(model, args.tol)
    payload = {**result.as_dict(), "source": source, "stability_margin": stability(model).margin}
    _emit(args, argv, payload, None, started)
    return EXIT_COMPLEX if result.verdict is Verdict.COMPLEX_COVARIANCE else EXIT_OK


def _lo_from_args(args, n_selected: int) -> LOConfig | None:
    phase = args.lo_phase
    if phase != "scan":
        try:
            phase = float(phase)
        except ValueError:
            raise UsageError("--lo-phase must be a number or 'scan'") from None
    weights = args.lo_mode_weights
    if weights is None:
        if n_selected == 1:
            weights = [1.0]
        elif phase != "scan":
            raise UsageError("a fixed --lo-phase needs --lo-mode-weights for multimode models")
        else:
            return None
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (n_selected,):
        raise UsageError(f"--lo-mode-weights needs {n_selected} values")
    norm = np.linalg.norm(weights)
    if norm == 0:
        raise UsageError("--lo-mode-weights must not all be zero")
    return LOConfig(tuple(weights / norm), phase)


def _cmd_spectrum(args, argv, started) -> int:
    model, source = _load(args)
    grid = _grid(args)
    n_selected = len(args.modes) if args.modes else model.n_modes
    lo = _lo_from_args(args, n_selected)
    spec = squeezing_spectrum(
        model, grid, lo, lo_omega=args.lo_omega, normalization=args.normalization,
        modes=args.modes, seed=args.seed, require_stable=not args.allow_unstable,
    )
    header = ("omega", "optimal_db", "hd_db", "hidden_fraction")
    rows = list(spec.rows())
    payload = {
        "metadata": {
            "source": source,
            "normalization": args.normalization,
            "modes": args.modes,
            "lo": None if spec.lo is None else {"mode_weights": spec.lo.mode_weights, "phase": spec.lo.phase},
            "lo_omega": args.lo_omega,
            "stability_margin": stability(model).margin,
            "version": __version__,
        },
        "columns": list(header),
        "data": rows,
        "lo_phase": spec.lo_phase,
    }
    _emit(args, argv, payload, (header, rows), started)
    return EXIT_OK


def _cmd_hd(args, argv, started) -> int:
    model, source = _load(args)
    kwargs = dict(normalization=args.normalization, modes=args.modes, require_stable=not args.allow_unstable)
    opt = optimal_value(model, args.omega, **kwargs)
    best = hd_best(model, args.omega, restarts=args.restarts, seed=args.seed, **kwargs)
    payload = {
        "source": source,
        "omega": args.omega,
        "optimal_db": float(to_db(opt)),
        "hd_db": best.db,
        "lower_bound_db": float(to_db(best.lower_bound)),
        "lo_mode_weights": best.weights,
        "lo_phase": best.theta,
        "fraction": None,
        "hidden_share": None,
    }
    if opt < 1.0:
        report = hidden_report(model, args.omega, restarts=args.restarts, seed=args.seed, **kwargs)
        payload.update(fraction=report.fraction, hidden_share=report.hidden_share,
                       variance_fraction=report.variance_fraction)
    _emit(args, argv, payload, None, started)
    return EXIT_OK


def _cmd_scan(args, argv, started) -> int:
    preset = _preset(args.scenario)
    values = [_scalar(v) for v in args.values.split(",") if v.strip()]
    points = sweep(preset, args.param, values, tol=args.tol, fixed=_overrides(args.set))
    header = ("value", "verdict", "commutator_gamma_m", "m2_asymmetry", "gf_asymmetry", "max_rel_sigma_i", "error")
    rows = []
    for p in points:
        c = p.classification
        value = p.value
        if isinstance(value, complex):
            value = value.real if value.imag == 0 else str(value)
        rows.append((
            value,
            c.verdict.value if c else "",
            c.commutator_gamma_m if c else None,
            c.m2_asymmetry if c else None,
            c.gf_asymmetry if c else None,
            p.max_rel_sigma_i,
            p.error or "",
        ))
    payload = {"scenario": preset.name, "param": args.param, "points": [p.as_dict() for p in points]}
    _emit(args, argv, payload, (header, rows), started)
    return EXIT_OK


def _cmd_scenario(args, argv, started) -> int:
    if args.action == "list":
        header = ("name", "expected", "reference_omega", "params", "description")
        rows = [
            (name, p.expected.value, p.reference_omega,
             json.dumps({k: str(v) for k, v in p.params.items()}), p.description)
            for name, p in sorted(PRESETS.items())
        ]
        payload = {
            name: {"expected": p.expected.value, "reference_omega": p.reference_omega,
                   "params": {k: str(v) for k, v in p.params.items()}, "description": p.description}
            for name, p in sorted(PRESETS.items())
        }
        _emit(args, argv, payload, (header, rows), started)
        return EXIT_OK

    preset = _preset(args.name)
    overrides = _overrides(args.set)
    model = _build(preset, overrides)
    if args.action == "export":
        doc = model_to_dict(model, name=preset.name, params={**preset.params, **overrides})
        Path(args.path).write_text(dumps(doc))
        return EXIT_OK

    result = classify(model)
    spec = squeezing_spectrum(
        model, _grid(args), lo_omega=preset.reference_omega, modes=preset.reduce_modes,
        require_stable=not args.allow_unstable,
    )
    header = ("omega", "optimal_db", "hd_db", "hidden_fraction")
    rows = list(spec.rows())
    payload = {
        "scenario": preset.name,
        "overrides": overrides,
        "classification": result.as_dict(),
        "stability_margin": stability(model).margin,
        "lo_omega": preset.reference_omega,
        "modes": preset.reduce_modes,
        "columns": list(header),
        "data": rows,
    }
    _emit(args, argv, payload, (header, rows), started)
    return EXIT_OK


def _cmd_selftest(args, argv, started) -> int:
    results = run_selftest(count=args.count, seed=args.seed)
    for r in results:
        print(r.line())
    return EXIT_NUMERICAL if any(r.status == FAIL for r in results) else EXIT_OK


def _cmd_schema(args, argv, started) -> int:
    if args.validate:
        try:
            doc = json.loads(Path(args.validate).read_text())
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"{args.validate}: invalid JSON ({exc})") from None
        validate_document(doc)
        load_model(args.validate)
        print(f"{args.validate}: valid")
    else:
        sys.stdout.write(dumps(MODEL_SCHEMA))
    return EXIT_OK


COMMANDS = {
    "classify": _cmd_classify,
    "spectrum": _cmd_spectrum,
    "hd": _cmd_hd,
    "scan": _cmd_scan,
    "scenario": _cmd_scenario,
    "selftest": _cmd_selftest,
    "schema": _cmd_schema,
}


def _replay(manifest_path: str) -> int:
    try:
        manifest = json.loads(Path(manifest_path).read_text())
        argv = manifest["argv"]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise UsageError(f"cannot read manifest {manifest_path}: {exc}") from None
    code = main(argv)
    recorded = manifest.get("output", {})
    path = recorded.get("path")
    if code == EXIT_OK and path and path != "-":
        same = _sha256(Path(path).read_text()) == recorded.get("sha256")
        print(f"replay: output {'identical' if same else 'DIFFERS'} ({path})", file=sys.stderr)
        if not same:
            return EXIT_NUMERICAL
    return code


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if args.replay:
            if args.command:
                raise UsageError("--replay cannot be combined with a subcommand")
            return _replay(args.replay)
        if not args.command:
            raise UsageError(f"{PROG}: a subcommand is required")
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return COMMANDS[args.command](args, argv, started)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"{PROG}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
