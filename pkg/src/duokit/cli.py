"""Command-line front end.

Subcommands: validate, tune, eval, sweep, simulate. Exit codes: 0 on
success, 1 for any input problem (bad flags, malformed files, failed
validation), 2 for an internal invariant violation. Outputs contain no
timestamps, hostnames, or other environment leakage, so reruns on the
same inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .aggregate import (AggregationMode, DuoWeights, SingleScaled, UnweightedDuo,
                        UQOnlyDuo, WeightedDuo)
from .bundles import BundleFormatError, BundlePair, load_bundle, save_bundle
from .metrics import DEFAULT_SAC_TARGETS, MetricRow, evaluate
from .simulate import SimSpec, describe, generate
from .tune import TuneResult, fit_duo_temperatures, fit_single_temperature

MEASURE_FLAGS = {"softmax": "softmax_response", "entropy": "entropy"}

SWEEP_MODES = ("weighted", "unweighted", "uq_only")


class InputError(ValueError):
    """User-facing problem with arguments or input files."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; bad flags are input errors here.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="duokit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="validate a bundle directory")
    p.add_argument("path", help="bundle directory")

    p = sub.add_parser("tune", help="fit duo temperatures on validation bundles")
    p.add_argument("large_val", help="large member validation bundle")
    p.add_argument("small_val", help="small member validation bundle")
    p.add_argument("--out", help="write the result JSON here instead of stdout")

    p = sub.add_parser("eval", help="evaluate one aggregation mode on test bundles")
    p.add_argument("--large", required=True, help="large member test bundle")
    p.add_argument("--small", help="small member test bundle")
    p.add_argument("--mode", required=True,
                   choices=("single", "weighted", "unweighted", "uq_only"))
    p.add_argument("--weights", help="tune result JSON (weighted and uq_only modes)")
    p.add_argument("--scale", type=float, default=1.0,
                   help="logit scale for single mode (default 1.0)")
    _add_common_flags(p)

    p = sub.add_parser("sweep", help="tune and evaluate a list of duos")
    p.add_argument("config", help="sweep config JSON")
    p.add_argument("--jobs", type=int, default=1,
                   help="number of worker threads (default 1)")

    p = sub.add_parser("simulate", help="generate synthetic bundle pairs")
    p.add_argument("spec", help="simulator spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--measure", choices=sorted(MEASURE_FLAGS), default="softmax")
    p.add_argument("--sac", type=float, action="append", metavar="TARGET",
                   help="selective-accuracy target, repeatable (default 0.98)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="write rows here instead of stdout")


def _read_json(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}")
    if not isinstance(raw, dict):
        raise InputError(f"{path}: expected a JSON object")
    return raw


def _load_weights(path: str) -> DuoWeights:
    raw = _read_json(path)
    for key in ("t_large", "t_small"):
        if key not in raw or isinstance(raw[key], bool) \
                or not isinstance(raw[key], (int, float)):
            raise InputError(f"{path}: missing or non-numeric key {key!r}")
    try:
        return DuoWeights(float(raw["t_large"]), float(raw["t_small"]))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _rows_text(rows: list[MetricRow], fmt: str) -> str:
    records = [row.to_record() for row in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(records[0].keys()))
        writer.writeheader()
        writer.writerows(records)
        return buf.getvalue()
    return "".join(json.dumps(rec) + "\n" for rec in records)


def _tune_text(result: TuneResult) -> str:
    payload = {
        "t_large": result.weights.t_large,
        "t_small": result.weights.t_small,
        "val_nll": result.val_nll,
        "iterations": result.iterations,
        "converged": result.converged,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def cmd_validate(args) -> int:
    bundle = load_bundle(args.path)
    meta = bundle.meta
    for field in ("model_name", "dataset", "split", "num_samples",
                  "num_classes", "flops", "params"):
        print(f"{field}: {getattr(meta, field)}")
    return 0


def cmd_tune(args) -> int:
    pair = BundlePair(load_bundle(args.large_val), load_bundle(args.small_val))
    result = fit_duo_temperatures(pair)
    _emit(_tune_text(result), args.out)
    return 0


def _eval_mode(args) -> AggregationMode:
    if args.mode == "single":
        return SingleScaled(args.scale)
    if args.mode == "unweighted":
        return UnweightedDuo()
    if args.weights is None:
        raise InputError(f"mode {args.mode!r} requires --weights")
    weights = _load_weights(args.weights)
    return WeightedDuo(weights) if args.mode == "weighted" else UQOnlyDuo(weights)


def cmd_eval(args) -> int:
    mode = _eval_mode(args)
    large = load_bundle(args.large)
    if args.small is None:
        if args.mode != "single":
            raise InputError(f"mode {args.mode!r} requires --small")
        data = large
    else:
        data = BundlePair(large, load_bundle(args.small))
    row = evaluate(data, mode, MEASURE_FLAGS[args.measure],
                   tuple(args.sac) if args.sac else DEFAULT_SAC_TARGETS)
    _emit(_rows_text([row], args.format), args.out)
    return 0


_SWEEP_KEYS = {"large", "sidekicks", "modes", "measure", "sac_targets",
               "format", "out"}


def _sweep_config(path: str) -> dict:
    raw = _read_json(path)
    unknown = set(raw) - _SWEEP_KEYS
    if unknown:
        raise InputError(f"{path}: unknown config keys {sorted(unknown)}")
    for key in ("large", "sidekicks"):
        if key not in raw:
            raise InputError(f"{path}: missing config key {key!r}")

    def paths(entry, what):
        if not isinstance(entry, dict) or set(entry) != {"val", "test"}:
            raise InputError(f"{path}: {what} must be an object with val and test paths")
        return entry

    config = {
        "large": paths(raw["large"], "large"),
        "sidekicks": [paths(e, f"sidekicks[{i}]")
                      for i, e in enumerate(raw["sidekicks"])],
        "modes": raw.get("modes", list(SWEEP_MODES)),
        "measure": raw.get("measure", "softmax"),
        "sac_targets": raw.get("sac_targets", list(DEFAULT_SAC_TARGETS)),
        "format": raw.get("format", "csv"),
        "out": raw.get("out"),
    }
    if not config["sidekicks"]:
        raise InputError(f"{path}: sidekicks must not be empty")
    bad = [m for m in config["modes"] if m not in SWEEP_MODES]
    if bad or not config["modes"]:
        raise InputError(f"{path}: modes must be a non-empty subset of {SWEEP_MODES}")
    if config["measure"] not in MEASURE_FLAGS:
        raise InputError(
            f"{path}: measure must be one of {sorted(MEASURE_FLAGS)}")
    if config["format"] not in ("csv", "json"):
        raise InputError(f"{path}: format must be csv or json")
    return config


def _sweep_one(large_val, large_test, entry, modes, measure, sac_targets):
    small_val = load_bundle(entry["val"])
    small_test = load_bundle(entry["test"])
    pair_val = BundlePair(large_val, small_val)
    pair_test = BundlePair(large_test, small_test)
    fitted = fit_duo_temperatures(pair_val).weights
    by_tag = {
        "weighted": WeightedDuo(fitted),
        "unweighted": UnweightedDuo(),
        "uq_only": UQOnlyDuo(fitted),
    }
    return [evaluate(pair_test, by_tag[tag], measure, sac_targets)
            for tag in modes]


def cmd_sweep(args) -> int:
    if args.jobs < 1:
        raise InputError(f"--jobs must be >= 1, got {args.jobs}")
    config = _sweep_config(args.config)
    measure = MEASURE_FLAGS[config["measure"]]
    sac_targets = tuple(float(t) for t in config["sac_targets"])
    large_val = load_bundle(config["large"]["val"])
    large_test = load_bundle(config["large"]["test"])

    scale, _ = fit_single_temperature(large_val)
    rows = [evaluate(large_test, SingleScaled(scale), measure, sac_targets)]

    def job(entry):
        return _sweep_one(large_val, large_test, entry, config["modes"],
                          measure, sac_targets)

    if args.jobs == 1:
        results = [job(e) for e in config["sidekicks"]]
    else:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(job, config["sidekicks"]))
    for chunk in results:
        rows.extend(chunk)
    rows.sort(key=lambda r: (r.balance, r.mode))
    _emit(_rows_text(rows, config["format"]), config["out"])
    return 0


_SPEC_KEYS = {
    "num_classes", "n_val", "n_test", "acc_large", "acc_small",
    "error_correlation", "margin", "noise", "inflation_large",
    "inflation_small", "balance", "seed",
}


def cmd_simulate(args) -> int:
    raw = _read_json(args.spec)
    unknown = set(raw) - _SPEC_KEYS
    if unknown:
        raise InputError(f"{args.spec}: unknown spec keys {sorted(unknown)}")
    try:
        spec = SimSpec(**raw)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{args.spec}: {exc}")
    val, test = generate(spec)
    root = Path(args.out)
    print(describe(spec))
    for split, pair in (("val", val), ("test", test)):
        for member, bundle in (("large", pair.large), ("small", pair.small)):
            path = root / split / member
            save_bundle(bundle, path)
            print(f"wrote: {path}")
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "tune": cmd_tune,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (InputError, BundleFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001  anything else is a bug
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
