"""Command-line entry point: ``cubicpulse compress | decompress | bench``.

Configuration precedence is defaults < ``--config`` JSON < explicit flags.
Every run writes a manifest holding the fully resolved configuration; passing
that manifest back via ``--config`` reproduces the outputs byte for byte.

Exit codes: 0 success, 2 usage, 3 input format, 4 numeric/overflow,
5 internal error. Failures print a JSON object to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (AccumulatorOverflow, CubicPulseError, FitFailure, FormatError,
                     IntegratorFailure, InvalidArgument, RangeError, UndefinedState)
from .fileio import write_json
from .cps import read_cps, write_cps
from .fixedpoint import ClampWarning, CompressedPulse, FixedPointFormat, decompress, emulate
from .metrics import dds_modulate, footprint, spectrum_error, time_domain_error, write_error_csv
from .pulse import (Pulse, gen_blackman, gen_gaussian, gen_piecewise_quadratic_chirp,
                    gen_sigmoid, read_pulse_csv, write_pulse_csv)
from .qafit import QaFitOptions, fit_segments, quantize_fit, resolve_symmetry
from .spline import fit_float, optimize_knots_local, uniform_knots

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_NUMERIC, EXIT_INTERNAL = 0, 2, 3, 4, 5

_QA_KEYS = [f.name for f in fields(QaFitOptions) if f.name != "rng_seed"]

_FORMAT_DEFAULTS = {"word_bits": 36, "frac_bits": 20, "alpha_bits": 16, "out_bits": 16}

DEFAULTS = {
    "compress": {
        "input": None, "generate": None, "output": None, "sample_rate": None,
        "segments": 7, "continuity_order": 1, **_FORMAT_DEFAULTS,
        "symmetry": "auto", "qa_fit": False, "optimize_knots": False, "knot_iters": 20,
        "seed": 0, "carrier_hz": None, "plots": True,
        "qa": {k: QaFitOptions.__dataclass_fields__[k].default for k in _QA_KEYS},
    },
    "decompress": {
        "input": None, "output": None, "out_bits": 16, "sample_rate": None, "strict": False,
    },
    "bench": {
        "name": None, "output": None, **_FORMAT_DEFAULTS, "segment_counts": None,
        "continuity_order": 1, "seed": 0, "plots": True,
        "qa": {k: QaFitOptions.__dataclass_fields__[k].default for k in _QA_KEYS},
        "stirap": {"pulse_length": 20e-6, "delay_fraction": 0.3, "peak_rabi": 5e6,
                   "detuning": -100e6, "sample_rate": 1e9, "integrator_step": None},
        "grid_peak": 30000.0,
        "corpus_length": 40000, "corpus_amplitude": 30000.0,
        "widths": [[28, 12], [32, 16], [36, 20], [40, 24], [44, 28]],
        "sample_counts": None,
    },
}

BENCH_SEGMENTS = {"stirap": [2, 4, 6, 8, 10, 14, 20, 30], "corpus": [4, 8, 12, 16, 20]}


class UsageError(CubicPulseError):
    pass


# --- configuration ----------------------------------------------------------

def _load_config(path: str | None, subcommand: str) -> dict:
    if path is None:
        return {}
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    if "subcommand" in obj and "config" in obj:  # a run manifest
        if obj["subcommand"] != subcommand:
            raise UsageError(f"manifest is for '{obj['subcommand']}', not '{subcommand}'")
        obj = obj["config"]
    return obj


def _merge(defaults: dict, override: dict, where: str) -> dict:
    out = json.loads(json.dumps(defaults))
    for key, value in override.items():
        if key not in defaults:
            raise UsageError(f"unknown {where} key '{key}'")
        if isinstance(defaults[key], dict) and value is not None:
            if not isinstance(value, dict):
                raise UsageError(f"{where} key '{key}' must be an object")
            out[key] = _merge(defaults[key], value, f"{where}.{key}")
        else:
            out[key] = value
    return out


def resolve_config(subcommand: str, args: argparse.Namespace) -> dict:
    cfg = _merge(DEFAULTS[subcommand], _load_config(args.config, subcommand), "config")
    flags = {k: v for k, v in vars(args).items()
             if k in cfg and k not in ("qa",) and v is not None}
    cfg.update(flags)
    for key in ("generations", "population_size", "workers"):
        v = getattr(args, key, None)
        if v is not None:
            cfg["qa"][key] = v
    return cfg


def _format(cfg: dict) -> FixedPointFormat:
    return FixedPointFormat(cfg["word_bits"], cfg["frac_bits"], cfg["alpha_bits"],
                            cfg["out_bits"])


def _qa_options(cfg: dict) -> QaFitOptions:
    return QaFitOptions.from_json({**cfg["qa"], "rng_seed": cfg["seed"]})


# --- generators ---------------------------------------------------------------

_GENERATORS = {
    "gaussian": ({"length", "center", "sigma_sq", "amplitude", "carrier_hz"}, {"length", "sigma_sq"}),
    "blackman": ({"length", "amplitude"}, {"length"}),
    "sigmoid": ({"length", "steepness", "amplitude"}, {"length", "steepness"}),
    "chirp": ({"t_p", "f0", "ff"}, {"t_p", "f0", "ff"}),
}


def parse_generator(spec: str, sample_rate: float = 1e9) -> Pulse:
    """Build a pulse from ``kind:key=value,...`` (e.g. ``blackman:length=20000``)."""
    kind, _, rest = spec.partition(":")
    if kind not in _GENERATORS:
        raise UsageError(f"unknown generator '{kind}' (choose from {sorted(_GENERATORS)})")
    allowed, required = _GENERATORS[kind]
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        key = key.strip()
        if not eq or key not in allowed:
            raise UsageError(f"bad generator parameter '{item}' for {kind}")
        try:
            params[key] = float(value)
        except ValueError as exc:
            raise UsageError(f"generator parameter {key} is not a number: {value!r}") from exc
    missing = required - set(params)
    if missing:
        raise UsageError(f"generator {kind} needs {sorted(missing)}")
    amplitude = params.get("amplitude", 30000.0)
    if kind == "gaussian":
        n = _as_int(params["length"], "length")
        center = params.get("center", n // 2)
        return gen_gaussian(n, center, params["sigma_sq"], amplitude,
                            params.get("carrier_hz"), sample_rate)
    if kind == "blackman":
        return gen_blackman(_as_int(params["length"], "length"), amplitude, sample_rate)
    if kind == "sigmoid":
        return gen_sigmoid(_as_int(params["length"], "length"), params["steepness"],
                           amplitude, sample_rate)
    return gen_piecewise_quadratic_chirp(_as_int(params["t_p"], "t_p"), params["f0"],
                                         params["ff"], sample_rate)


def _as_int(value: float, name: str) -> int:
    if value != int(value) or value < 1:
        raise UsageError(f"{name} must be a positive integer")
    return int(value)


# --- subcommands -------------------------------------------------------------

def _stem(path: Path) -> Path:
    return path.with_suffix("")


def _manifest(subcommand: str, cfg: dict, inputs, outputs) -> dict:
    return {
        "subcommand": subcommand,
        "tool_version": __version__,
        "config": cfg,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "rng_seed": cfg.get("seed"),
    }


def _stored_cost(target: np.ndarray, out: np.ndarray, cp: CompressedPulse) -> float:
    n = cp.stored_samples
    d = target[:n] - out[:n]
    return math.fsum(d * d)


def cmd_compress(cfg: dict) -> list[Path]:
    if (cfg["input"] is None) == (cfg["generate"] is None):
        raise UsageError("give exactly one of an input CSV or --generate")
    if cfg["output"] is None:
        raise UsageError("--output is required")
    out = Path(cfg["output"])
    out.parent.mkdir(parents=True, exist_ok=True)
    if cfg["input"] is not None:
        p = read_pulse_csv(cfg["input"], cfg["sample_rate"])
        inputs = [cfg["input"]]
    else:
        p = parse_generator(cfg["generate"], cfg["sample_rate"] or 1e9)
        inputs = []
    fmt = _format(cfg)
    opts = _qa_options(cfg)

    part = uniform_knots(cfg["segments"], len(p))
    if cfg["optimize_knots"]:
        part = optimize_knots_local(p, part, cfg["knot_iters"], cfg["continuity_order"])
    fit = fit_float(p, part, cfg["continuity_order"])
    symmetric = resolve_symmetry(p, fit, cfg["symmetry"])

    naive_cp = quantize_fit(fit, fmt, symmetric)
    naive_em = emulate(naive_cp)
    naive_out = naive_em.samples
    report = {
        "samples": len(p),
        "segments": fit.partition.n_segments,
        "stored_segments": len(naive_cp.segments),
        "boundaries": list(fit.partition.boundaries),
        "symmetric": symmetric,
        "format": asdict(fmt),
        "float_fit": {"residual": fit.residual},
        "naive": {**time_domain_error(p, naive_out).summary(),
                  "cost": _stored_cost(p.samples, naive_out, naive_cp),
                  "clamped_samples": naive_em.clamped},
    }
    cp, final_out = naive_cp, naive_out
    if cfg["qa_fit"]:
        cp, results = fit_segments(p, fit, fmt, opts, "on" if symmetric else "off")
        qa_em = emulate(cp)
        final_out = qa_em.samples
        report["qa"] = {
            **time_domain_error(p, final_out).summary(),
            "cost": _stored_cost(p.samples, final_out, cp),
            "clamped_samples": qa_em.clamped,
            "search_cost": math.fsum(r.cost for r in results),
            "seed_search_cost": math.fsum(r.seed_cost for r in results),
            "evaluations": sum(r.evaluations for r in results),
        }
        report["max_error_reduction"] = (report["naive"]["max_abs"]
                                         / max(report["qa"]["max_abs"], 1e-300))
    report["cost"] = report["qa" if cfg["qa_fit"] else "naive"]["cost"]

    ref, test = p.samples, final_out.astype(float)
    carrier = cfg["carrier_hz"]
    if carrier is not None:
        ref = dds_modulate(ref, carrier, p.sample_rate)
        test = dds_modulate(test, carrier, p.sample_rate)
    spec = spectrum_error(ref, test, p.sample_rate)
    report["spectrum_max_abs_err"] = spec.max_abs_err
    fp = footprint(cp, 16, len(p))
    fp_hdr = footprint(cp, 16, len(p), include_header=True)
    report["footprint"] = {"compressed_bits": fp.compressed_bits, "awg_bits": fp.awg_bits,
                           "ratio": fp.ratio, "compressed_bits_with_header": fp_hdr.compressed_bits}

    stem = _stem(out)
    outputs = [out, stem.with_suffix(".report.json"), stem.with_suffix(".errors.csv")]
    write_cps(cp, out)
    write_json(outputs[1], report)
    write_error_csv(outputs[2], p.samples - final_out)
    if cfg["plots"]:
        from .plotting import plot_compression
        outputs.append(stem.with_suffix(".png"))
        plot_compression(outputs[-1], p.samples, naive_out,
                         final_out if cfg["qa_fit"] else None, list(fit.partition.boundaries))
    manifest = stem.with_suffix(".manifest.json")
    write_json(manifest, _manifest("compress", cfg, inputs, outputs))
    return outputs + [manifest]


def cmd_decompress(cfg: dict) -> list[Path]:
    if cfg["input"] is None or cfg["output"] is None:
        raise UsageError("decompress needs an input .cps and --output")
    cp = read_cps(cfg["input"], cfg["out_bits"])
    out = Path(cfg["output"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ClampWarning)
        samples = decompress(cp, allow_clamp=not cfg["strict"])
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_pulse_csv(out, samples, cfg["sample_rate"])
    outputs = [out] + ([out.with_suffix(".json")] if cfg["sample_rate"] is not None else [])
    manifest = _stem(out).with_suffix(".manifest.json")
    write_json(manifest, _manifest("decompress", cfg, [cfg["input"]], outputs))
    return outputs + [manifest]


def cmd_bench(cfg: dict) -> list[Path]:
    name = cfg["name"]
    if name not in ("stirap", "width-sweep", "corpus"):
        raise UsageError(f"unknown benchmark '{name}'")
    if cfg["output"] is None:
        raise UsageError("--output directory is required")
    outdir = Path(cfg["output"])
    outdir.mkdir(parents=True, exist_ok=True)
    fmt = _format(cfg)
    opts = _qa_options(cfg)
    counts = cfg["segment_counts"] or BENCH_SEGMENTS.get(name)
    base = outdir / name
    csv_path, summary_path = base.with_suffix(".csv"), base.with_suffix(".json")
    outputs = [csv_path, summary_path]
    plot = None

    if name == "stirap":
        from .stirap import StirapConfig, run_benchmark, write_bench_csv
        scfg = StirapConfig(**cfg["stirap"])
        rows, summary = run_benchmark(scfg, counts, fmt, opts, cfg["continuity_order"],
                                      grid_peak=cfg["grid_peak"])
        write_bench_csv(csv_path, rows)
        if cfg["plots"]:
            from .plotting import plot_stirap as plot
    elif name == "corpus":
        from .bench import run_corpus, write_corpus_csv
        rows = run_corpus(counts, fmt, opts, cfg["continuity_order"], cfg["corpus_length"],
                          cfg["corpus_amplitude"])
        summary = {"all_max_errors_reduced": all(r.qa_max <= r.naive_max for r in rows)}
        write_corpus_csv(csv_path, rows)
        if cfg["plots"]:
            from .plotting import plot_corpus as plot
    else:
        from .bench import run_width_sweep, write_width_sweep_csv
        rows = run_width_sweep([tuple(w) for w in cfg["widths"]], cfg["sample_counts"])
        summary = {"units": "output LSB", "alpha_term": "excluded"}
        write_width_sweep_csv(csv_path, rows)
        if cfg["plots"]:
            from .plotting import plot_width_sweep as plot
    write_json(summary_path, summary)
    if plot is not None:
        outputs.append(base.with_suffix(".png"))
        plot(outputs[-1], rows)
    manifest = base.with_suffix(".manifest.json")
    write_json(manifest, _manifest("bench", cfg, [], outputs))
    return outputs + [manifest]


# --- argument parsing ----------------------------------------------------------

def _segment_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


def _add_format_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--word-bits", dest="word_bits", type=int)
    sp.add_argument("--frac-bits", dest="frac_bits", type=int)
    sp.add_argument("--alpha-bits", dest="alpha_bits", type=int)
    sp.add_argument("--out-bits", dest="out_bits", type=int)


def _add_search_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--seed", type=int, help="RNG seed for the integer search")
    sp.add_argument("--generations", type=int)
    sp.add_argument("--population", dest="population_size", type=int)
    sp.add_argument("--workers", type=int, help="threads for per-segment searches")
    sp.add_argument("--continuity", dest="continuity_order", type=int, choices=(0, 1, 2))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cubicpulse", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    c = sub.add_parser("compress", help="fit and quantize a pulse into a .cps file")
    c.add_argument("input", nargs="?", help="pulse CSV (index,value)")
    c.add_argument("--generate", help="generator spec, e.g. gaussian:length=30000,sigma_sq=8e6")
    c.add_argument("-o", "--output", help="output .cps path")
    c.add_argument("--config")
    c.add_argument("--segments", type=int)
    c.add_argument("--symmetry", choices=("auto", "on", "off"))
    c.add_argument("--qa-fit", dest="qa_fit", action="store_true", default=None)
    c.add_argument("--optimize-knots", dest="optimize_knots", action="store_true", default=None)
    c.add_argument("--knot-iters", dest="knot_iters", type=int)
    c.add_argument("--carrier-hz", dest="carrier_hz", type=float,
                   help="modulate before the spectral comparison")
    c.add_argument("--sample-rate", dest="sample_rate", type=float)
    c.add_argument("--no-plots", dest="plots", action="store_false", default=None)
    _add_format_flags(c)
    _add_search_flags(c)

    d = sub.add_parser("decompress", help="emulate the hardware recursion for a .cps file")
    d.add_argument("input", nargs="?")
    d.add_argument("-o", "--output", help="output CSV path")
    d.add_argument("--config")
    d.add_argument("--out-bits", dest="out_bits", type=int)
    d.add_argument("--sample-rate", dest="sample_rate", type=float)
    d.add_argument("--strict", action="store_true", default=None,
                   help="fail instead of clamping out-of-range samples")

    b = sub.add_parser("bench", help="run a benchmark and write CSV/JSON/PNG reports")
    b.add_argument("name", nargs="?", choices=("stirap", "width-sweep", "corpus"))
    b.add_argument("-o", "--output", help="output directory")
    b.add_argument("--config")
    b.add_argument("--segment-counts", dest="segment_counts", type=_segment_list)
    b.add_argument("--no-plots", dest="plots", action="store_false", default=None)
    _add_format_flags(b)
    _add_search_flags(b)
    return ap


_COMMANDS = {"compress": cmd_compress, "decompress": cmd_decompress, "bench": cmd_bench}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (UsageError, InvalidArgument, UndefinedState)):
        return EXIT_USAGE
    if isinstance(exc, (FormatError, FileNotFoundError, IsADirectoryError)):
        return EXIT_FORMAT
    if isinstance(exc, (RangeError, AccumulatorOverflow, FitFailure, IntegratorFailure)):
        return EXIT_NUMERIC
    return EXIT_INTERNAL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.subcommand, args)
        outputs = _COMMANDS[args.subcommand](cfg)
    except Exception as exc:  # noqa: BLE001 - every failure becomes an exit code
        code = _exit_code(exc)
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        for attr in ("segment", "sample", "coefficient"):
            if getattr(exc, attr, None) is not None:
                err[attr] = getattr(exc, attr)
        print(json.dumps(err), file=sys.stderr)
        return code
    for path in outputs:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
