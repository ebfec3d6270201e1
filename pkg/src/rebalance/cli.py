"""Command-line front end: ``balance``, ``benchmark``, ``timing`` and ``rerun``.

Exit codes: 0 success, 1 internal error, 2 configuration error (bad flag,
unknown sampler or classifier, missing input file), 3 data error
(unparseable CSV, fewer than two classes, class too small for the folds).

Every run writes ``manifest.json`` next to its outputs. ``rerun MANIFEST``
repeats the run with the recorded arguments; sampler outputs and metric
values come out byte-identical, measured times do not.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import fields
from pathlib import Path

from . import __version__, report
from .core import DataError, class_counts, load_csv, write_csv
from .harness import CLASSIFIERS, run_experiment, stratified_folds, timing_scan
from .neighbors import STRATEGIES
from .parallel import workers
from .samplers import SAMPLER_IDS, SAMPLERS, SamplerConfig, UnknownSamplerError, transform

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3

log = logging.getLogger("rebalance")

# argparse attributes that are not part of a run's identity
_VOLATILE = {"command", "func", "threads", "verbose"}


class ConfigError(ValueError):
    pass


def _config_fields():
    return [f for f in fields(SamplerConfig) if f.name != "seed"]


def _field_type(f):
    if f.name == "neighbor_strategy":
        return str
    return int if "int" in str(f.type) else float


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("sampler options")
    for f in _config_fields():
        kwargs = dict(type=_field_type(f), default=None, dest=f"cfg_{f.name}",
                      help=f"default: {f.default}")
        if f.name == "neighbor_strategy":
            kwargs["choices"] = STRATEGIES
        else:
            kwargs["metavar"] = "N" if kwargs["type"] is int else "X"
        group.add_argument("--" + f.name.replace("_", "-"), **kwargs)


def _add_common(parser: argparse.ArgumentParser, many_inputs: bool = False) -> None:
    parser.add_argument("--in", dest="inputs", action="append" if many_inputs else None,
                        required=True, metavar="CSV", help="input CSV")
    parser.add_argument("--label", default="-1",
                        help="label column name or index (default: last column)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: REBALANCE_THREADS or all cores)")
    parser.add_argument("--out-dir", default=".")
    parser.add_argument("-v", "--verbose", action="store_true")
    _add_config_flags(parser)


def _split_list(values) -> list[str]:
    out = []
    for v in values or []:
        out += [x.strip() for x in v.split(",") if x.strip()]
    return out


def _samplers(values, allow_none: bool) -> list[str]:
    names = _split_list(values)
    if names == ["all"]:
        names = list(SAMPLERS)
    for n in names:
        if n not in SAMPLER_IDS or (n == "none" and not allow_none):
            raise UnknownSamplerError(n)
    if not names:
        raise ConfigError("at least one sampler is required")
    return list(dict.fromkeys(names))


def _sampler_config(args) -> SamplerConfig:
    overrides = {f.name: getattr(args, f"cfg_{f.name}") for f in _config_fields()}
    return SamplerConfig(seed=args.seed).with_overrides(**overrides)


def _check_inputs(paths) -> list[Path]:
    paths = [Path(p) for p in ([paths] if isinstance(paths, str) else paths)]
    for p in paths:
        if not p.is_file():
            raise ConfigError(f"input file not found: {p}")
    return paths


def _write_manifest(args, cfg: SamplerConfig, out_dir: Path, outputs: list[Path]) -> Path:
    run = {k: v for k, v in vars(args).items()
           if k not in _VOLATILE and not k.startswith("cfg_")}
    manifest = {
        "version": __version__,
        "command": args.command,
        "seed": cfg.seed,
        "arguments": run,
        "config": cfg.to_dict(),
        "outputs": [p.name for p in outputs],
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands -----------------------------------------------------------------

def cmd_balance(args) -> int:
    sampler = _samplers([args.sampler], allow_none=False)[0]
    path = _check_inputs(args.inputs)[0]
    cfg = _sampler_config(args)
    ds = load_csv(path, args.label)
    out_dir = _out_dir(args)
    out = out_dir / (args.out or f"{path.stem}_{sampler}.csv")
    t0 = time.perf_counter()
    balanced = transform(ds, cfg, sampler)
    seconds = time.perf_counter() - t0
    write_csv(balanced, out)
    before = {c.label: c.count for c in class_counts(ds)}
    print("class,before,after")
    for c in class_counts(balanced):
        print(f"{ds.label_text(c.label)},{before.get(c.label, 0)},{c.count}")
    print(f"sampling_seconds,{seconds:.3f}")
    _write_manifest(args, cfg, out_dir, [out])
    print(f"wrote {out}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    samplers = _samplers(args.samplers or ["smote"], allow_none=True)
    if "none" not in samplers:
        samplers.insert(0, "none")
    classifiers = _split_list(args.classifiers) or ["gaussian_nb"]
    for c in classifiers:
        if c not in CLASSIFIERS:
            raise ConfigError(f"unknown classifier {c!r}; valid: {', '.join(CLASSIFIERS)}")
    formats = _split_list(args.format) or ["markdown", "csv"]
    for f in formats:
        if f not in report.FORMATS:
            raise ConfigError(f"unknown format {f!r}; valid: {', '.join(report.FORMATS)}")
    if args.folds < 2:
        raise ConfigError("--folds must be at least 2")
    paths = _check_inputs(args.inputs)
    cfg = _sampler_config(args)
    out_dir = _out_dir(args)
    records = []
    for path in paths:
        ds = load_csv(path, args.label)
        if len(class_counts(ds)) < 2:
            raise DataError(f"nothing to balance: {path.name} has fewer than two classes")
        plan = stratified_folds(ds, args.folds, cfg.seed)
        for clf in classifiers:
            for s in samplers:
                log.info("%s / %s / %s", path.stem, clf, s)
                records += run_experiment(ds, s, clf, cfg, dataset_name=path.stem,
                                          normalize=args.normalize, plan=plan)
    tables = report.benchmark_tables(records)
    outputs = []
    if "markdown" in formats:
        text = "\n".join(report.table_markdown(t) for t in tables)
        outputs.append(out_dir / "benchmark.md")
        outputs[-1].write_text(text, encoding="utf-8")
        print(text, end="")
    if "csv" in formats:
        outputs.append(out_dir / "benchmark.csv")
        outputs[-1].write_text(report.tables_csv(tables), encoding="utf-8")
    if "json" in formats:
        outputs.append(out_dir / "benchmark.json")
        outputs[-1].write_text(report.tables_json(tables), encoding="utf-8")
    outputs.append(out_dir / "folds.csv")
    outputs[-1].write_text(report.folds_csv(records), encoding="utf-8")
    if args.figures:
        for t in tables:
            outputs.append(report.benchmark_figure(
                t, out_dir / f"benchmark_{t.dataset}_{t.classifier}.png"))
    _write_manifest(args, cfg, out_dir, outputs)
    return EXIT_OK


def cmd_timing(args) -> int:
    samplers = _samplers(args.samplers or ["smote"], allow_none=True)
    try:
        sizes = [int(s) for s in _split_list(args.sizes)]
    except ValueError:
        raise ConfigError("--sizes takes integers") from None
    if not sizes or sizes != sorted(sizes) or len(set(sizes)) != len(sizes):
        raise ConfigError("--sizes must be strictly ascending")
    if args.repeats < 1:
        raise ConfigError("--repeats must be positive")
    path = _check_inputs(args.inputs)[0]
    cfg = _sampler_config(args)
    ds = load_csv(path, args.label)
    if sizes[-1] > ds.n:
        raise ConfigError(f"size {sizes[-1]} exceeds dataset size {ds.n}")
    out_dir = _out_dir(args)
    rows = timing_scan(ds, samplers, sizes, cfg, args.repeats, args.folds)
    outputs = [out_dir / "timing.csv", out_dir / "projection.csv", out_dir / "timing.md"]
    outputs[0].write_text(report.timing_csv(rows), encoding="utf-8")
    outputs[1].write_text(report.projection_csv(rows, args.target_size), encoding="utf-8")
    text = report.timing_markdown(rows, args.target_size)
    outputs[2].write_text(text, encoding="utf-8")
    print(text, end="")
    if args.figures:
        outputs.append(report.timing_figure(rows, out_dir / "timing.png"))
    _write_manifest(args, cfg, out_dir, outputs)
    return EXIT_OK


def cmd_rerun(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        command, run, config = manifest["command"], manifest["arguments"], manifest["config"]
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"unreadable manifest {args.manifest}: {exc}") from None
    if command not in COMMANDS:
        raise ConfigError(f"manifest names unknown command {command!r}")
    ns = argparse.Namespace(command=command, threads=args.threads, verbose=args.verbose, **run)
    cfg = SamplerConfig.from_dict(config)
    for f in _config_fields():
        setattr(ns, f"cfg_{f.name}", getattr(cfg, f.name))
    ns.seed = cfg.seed
    if args.out_dir is not None:
        ns.out_dir = args.out_dir
    return COMMANDS[command](ns)


COMMANDS = {"balance": cmd_balance, "benchmark": cmd_benchmark, "timing": cmd_timing}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rebalance", description="Oversample imbalanced CSV data and benchmark samplers.",
        epilog="exit codes: 0 ok, 1 internal error, 2 config error, 3 data error")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("balance", help="oversample every class up to the majority count")
    _add_common(p)
    p.add_argument("--sampler", default="smote", help="one of: " + ", ".join(SAMPLERS))
    p.add_argument("--out", default=None, help="output file name inside --out-dir")
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("benchmark", help="cross-validated metrics and times per sampler")
    _add_common(p, many_inputs=True)
    p.add_argument("--samplers", "--sampler", action="append",
                   help="comma separated sampler ids, or 'all'; 'none' is always added")
    p.add_argument("--classifiers", "--classifier", action="append",
                   help="comma separated: " + ", ".join(CLASSIFIERS))
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--normalize", action="store_true",
                   help="min-max scale features with train-split statistics")
    p.add_argument("--format", action="append",
                   help="comma separated subset of csv, json, markdown")
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("timing", help="sampling time against dataset size")
    _add_common(p)
    p.add_argument("--samplers", "--sampler", action="append",
                   help="comma separated sampler ids, or 'all'")
    p.add_argument("--sizes", action="append", required=True,
                   help="comma separated ascending row counts")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--target-size", type=int, default=100_000,
                   help="size for the linear-regression projection")
    p.add_argument("--figures", action="store_true", help="also render a PNG figure")
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("rerun", help="repeat a run from its manifest.json")
    p.add_argument("manifest")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        with workers(args.threads):
            return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, UnknownSamplerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
