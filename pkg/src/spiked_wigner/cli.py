"""Command-line front end: ``spiked-wigner <command> ...``.

Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, ensemble, experiment, noise, spectra, theory, validation
from . import transform as tr

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3

WORKERS_ENV = "SPIKED_WIGNER_WORKERS"
EFFECTIVE_CONFIG = "config.effective.json"
RESULTS_FILE = "results.csv"
SUMMARY_FILE = "summary.json"
HISTOGRAM_FILE = "histogram.csv"
MATRIX_FILE = "trial0.spwm"


class ConfigError(ValueError):
    pass


_NUMERICAL = (experiment.ExperimentError, spectra.QVEError, noise.QuadratureError,
              noise.TailEvaluationError, theory.NearCriticalError, FloatingPointError)


# config handling ----------------------------------------------------------------

def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``key=value`` strings; dotted keys reach into nested tables."""
    data = json.loads(json.dumps(data))
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not key=value")
        *path, leaf = key.split(".")
        node = data
        for part in path:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {part!r} is not a table")
        node[leaf] = _parse_value(value)
    return data


def _resolve_workers(args, raw: dict) -> int | None:
    if getattr(args, "workers", None) is not None:
        return args.workers
    if "workers" in raw:
        return None
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV}={env!r} is not an integer") from None
    return None


def build_config(args) -> experiment.ExperimentConfig:
    raw = experiment.read_config_file(args.config) if getattr(args, "config", None) else {}
    raw = apply_overrides(raw, getattr(args, "set", None))
    workers = _resolve_workers(args, raw)
    if workers is not None:
        raw["workers"] = workers
    if getattr(args, "seed", None) is not None:
        raw["master_seed"] = args.seed
    if getattr(args, "out", None) is not None:
        raw.setdefault("outputs", {})
        raw["outputs"] = {**{"format": "csv"}, **raw["outputs"], "path": str(args.out)}
    return experiment.ExperimentConfig.from_dict(raw)


def _out_dir(config) -> Path:
    path = Path(config.outputs.get("path", "results"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_effective_config(config, directory: Path, extra=None):
    data = {"version": __version__, "config": config.to_dict()}
    if extra:
        data.update(extra)
    with open(directory / EFFECTIVE_CONFIG, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _print_json(data):
    print(json.dumps(_jsonable(data), indent=2, sort_keys=True))


# commands -----------------------------------------------------------------------

def cmd_predict(args) -> int:
    config = build_config(args)
    model = config.noise_model()
    t = config.build_transform(model)
    pred = config.prediction(model, t)
    if pred is None:
        raise theory.NearCriticalError("near-critical configuration: no limit law is predicted")
    out = pred.to_dict()
    out["lambda"] = config.snr()
    out["N"] = config.N
    try:
        out["detection_threshold"] = tr.detection_threshold(t, model, config.zero_tol)
    except ValueError:
        out["detection_threshold"] = None
    out["reference"] = experiment._reference_description(pred)
    if pred.reference_law == theory.TW_LAW:
        out["reference"].update(mean=theory.tw1_table().mean, var=theory.tw1_table().variance)
    _print_json(out)
    return EXIT_OK


def _progress(done, total):
    if done == total or done % max(1, total // 20) == 0:
        print(f"  {done}/{total} trials", file=sys.stderr)


def _simulate(config, canonical, quiet=False, dump=None):
    directory = _out_dir(config)
    write_effective_config(config, directory, {"canonical": canonical})
    if dump:
        ctx = experiment._TrialContext(config)
        rng = np.random.default_rng(experiment.trial_seed(config.master_seed, 0))
        sample = ensemble.sample(ctx.model, ctx.prior, config.N, ctx.lam, rng)
        ensemble.write_matrix(directory / MATRIX_FILE, ensemble.transformed(sample, ctx.transform))
    records = experiment.run(config, progress=None if quiet else _progress)
    experiment.export_records(records, directory / RESULTS_FILE, canonical)
    return directory, records


def _analyze(config, records, directory):
    pred = config.prediction()
    summary = experiment.summarize(records, pred)
    experiment.export_summary(summary, directory / SUMMARY_FILE)
    experiment.export_histogram(summary, directory / HISTOGRAM_FILE)
    return summary


def cmd_simulate(args) -> int:
    config = build_config(args)
    directory, records = _simulate(config, args.canonical, args.quiet, args.dump_matrix)
    failed = sum(r.failed for r in records)
    print(f"wrote {len(records)} trials ({failed} failed) to {directory / RESULTS_FILE}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    results = Path(args.results)
    config_path = args.config or results.parent / EFFECTIVE_CONFIG
    raw = experiment.read_config_file(config_path)
    if "config" in raw and "version" in raw:  # an effective-config echo
        raw = raw["config"]
    raw = apply_overrides(raw, args.set)
    config = experiment.ExperimentConfig.from_dict(raw)
    directory = Path(args.out) if args.out else results.parent
    directory.mkdir(parents=True, exist_ok=True)
    summary = _analyze(config, experiment.load_records(results), directory)
    _print_json(summary.to_json_dict())
    return EXIT_OK


def cmd_figure(args) -> int:
    runtime = {"outputs": {"path": str(args.out), "format": "csv"}}
    if args.seed is not None:
        runtime["master_seed"] = args.seed
    workers = _resolve_workers(args, {})
    if workers is not None:
        runtime["workers"] = workers
    config = experiment.figure_config(args.name, **runtime)
    directory, records = _simulate(config, args.canonical, args.quiet)
    summary = _analyze(config, records, directory)
    _print_json(summary.to_json_dict())
    return EXIT_OK


def cmd_validate(args) -> int:
    names = sorted(validation.SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        kwargs = {"seed": args.seed} if args.seed is not None else {}
        result = validation.run_suite(name, **kwargs)
        print(result.report())
        ok &= result.passed
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def cmd_tw_table(args) -> int:
    shipped = theory._shipped_table_text()
    digest = theory.table_checksum(shipped)
    print(f"shipped table sha256 {digest}")
    if digest != theory.TW1_TABLE_SHA256:
        print(f"checksum mismatch: expected {theory.TW1_TABLE_SHA256}")
        return EXIT_ACCEPTANCE
    table = theory.TW1Table.from_csv(shipped)
    if args.action == "check":
        # spot-check a few nodes against a fresh Fredholm evaluation
        points = [-6.0, -3.0, -1.5, 0.0, 1.0, 3.0]
        dev = max(abs(theory.tw1_fredholm(s) - float(table.cdf(s))) for s in points)
        print(f"max |table - Fredholm| at {points}: {dev:.3e}")
        print(f"table mean {table.mean:.10f}, variance {table.variance:.10f}")
        return EXIT_OK if dev < 1e-10 else EXIT_ACCEPTANCE
    fresh, report = theory.build_tw1_table()
    text = fresh.to_csv()
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    diff = float(np.max(np.abs(fresh.cdf_values - table.cdf_values)))
    print(json.dumps({**report, "max_abs_diff_vs_shipped": diff}, indent=2))
    identical = text == shipped
    print("regenerated table is byte-identical to the shipped one" if identical
          else "regenerated table differs from the shipped one")
    return EXIT_OK if diff < 1e-10 else EXIT_ACCEPTANCE


# parser -------------------------------------------------------------------------

def _add_config_args(p, with_out=True):
    p.add_argument("config", nargs="?", help="TOML or JSON experiment config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config field (dotted keys for nested tables); repeatable")
    p.add_argument("--seed", type=int, help="master seed")
    if with_out:
        p.add_argument("--workers", type=int, help=f"worker processes (default from ${WORKERS_ENV}, else 1)")
        p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spiked-wigner",
                                     description="Top eigenvalue of transformed spiked Wigner matrices.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="print the predicted limit law as JSON")
    _add_config_args(p, with_out=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="run the Monte Carlo trials and write results.csv")
    _add_config_args(p)
    p.add_argument("--canonical", action="store_true", help="zero the wall-time column")
    p.add_argument("--dump-matrix", action="store_true", help=f"also write trial 0's matrix as {MATRIX_FILE}")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="summarize a results file against the prediction")
    p.add_argument("results", help="results CSV written by simulate")
    p.add_argument("--config", help=f"config file (default: {EFFECTIVE_CONFIG} next to the results)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", help="directory for summary.json and histogram.csv")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("figure", help="run a preset experiment (N=1024, 5000 trials)")
    p.add_argument("name", choices=sorted(experiment.FIGURE_PRESETS))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--canonical", action="store_true")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("validate", help="run invariant suites")
    p.add_argument("suite", choices=sorted(validation.SUITES) + ["all"])
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("tw-table", help="check or regenerate the Tracy-Widom table")
    p.add_argument("action", choices=["check", "regen"])
    p.add_argument("--out", help="where regen writes the new table")
    p.set_defaults(func=cmd_tw_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
