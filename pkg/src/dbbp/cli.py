"""Command-line entry point: generate, evaluate, inspect, codebook-export.

Configs are flat ``key = value`` text with ``#`` comments. All stdout is
machine-parseable key=value lines. Exit codes are stable:

    0 success, 2 config parse error, 3 I/O error, 4 dataset missing labels,
    5 misaligned scores file, 6 malformed binary file.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields

from .codebook import build_codebook, export_codebook_csv
from .config import ScenarioConfig
from .dataset import (DatasetFormatError, generate_dataset, read_dataset,
                      write_dataset)
from .evaluate import (AlignmentError, accuracy_only_rows, header_to_config,
                       make_predictor, spectral_efficiency_report,
                       write_report_csv)

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NO_LABELS = 4
EXIT_MISALIGNED = 5
EXIT_FORMAT = 6


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Run parameters beyond the scenario itself."""

    sample_count: int = 400
    input_snr_db: list[float] = field(default_factory=lambda: [math.inf])
    eval_snr_db: float = 30.0
    label_snr_db: float = 30.0
    n_list: list[int] = field(default_factory=lambda: [1, 3, 5])
    predictor: str = "oracle"
    output_prefix: str = "dataset"
    windowed: bool = False
    threads: int = 0          # 0 means all available cores

    def resolved_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


_SCENARIO_KEYS = {f.name for f in fields(ScenarioConfig)}
_RUN_KEYS = {f.name for f in fields(RunConfig)}


def _parse_value(key: str, raw: str, line_no: int):
    raw = raw.strip()
    try:
        if key in ("bs_sub6_panel", "bs_mmwave_panel", "ue_mmwave_panel"):
            rows, cols = raw.lower().split("x")
            return (int(rows), int(cols))
        if key in ("input_snr_db",):
            return [float(v) for v in raw.split(",") if v.strip()]
        if key in ("n_list",):
            return [int(v) for v in raw.split(",") if v.strip()]
        if key in ("windowed",):
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if key in ("predictor", "output_prefix"):
            return raw
        if key in ("k", "kbar", "n_rf", "codebook_size", "t", "cluster_count",
                   "n_s", "seed", "sample_count", "threads"):
            return int(raw)
        return float(raw)
    except (ValueError, TypeError):
        raise ConfigError(f"line {line_no}: cannot parse value {raw!r} "
                          f"for key {key!r}") from None


def parse_config_file(path: str) -> tuple[ScenarioConfig, RunConfig]:
    scenario_kwargs, run_kwargs = {}, {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for line_no, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"line {line_no}: expected 'key = value', got "
                              f"{text!r}")
        key, raw = (part.strip() for part in text.split("=", 1))
        if key in _SCENARIO_KEYS:
            scenario_kwargs[key] = _parse_value(key, raw, line_no)
        elif key in _RUN_KEYS:
            run_kwargs[key] = _parse_value(key, raw, line_no)
        else:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
    try:
        scenario = ScenarioConfig(**scenario_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    run = RunConfig(**run_kwargs)
    if not run.input_snr_db:
        raise ConfigError("input_snr_db must list at least one SNR")
    if run.n_list != sorted(run.n_list):
        raise ConfigError("n_list must be sorted ascending")
    return scenario, run


def _snr_label(snr_db: float) -> str:
    if math.isinf(snr_db):
        return "inf"
    return f"{snr_db:g}"


def cmd_generate(args) -> int:
    try:
        cfg, run = parse_config_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    threads = args.threads if args.threads else run.resolved_threads()
    for snr_db in run.input_snr_db:
        started = time.monotonic()
        ds = generate_dataset(cfg, run.sample_count, input_snr_db=snr_db,
                              label_snr_db=run.label_snr_db,
                              windowed=run.windowed, threads=threads)
        path = f"{run.output_prefix}_snr{_snr_label(snr_db)}.dbbp"
        try:
            write_dataset(ds, path)
        except OSError as exc:
            print(f"io error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"file={path} samples={len(ds)} "
              f"label_wall_s={time.monotonic() - started:.3f}")
    return 0


def cmd_evaluate(args) -> int:
    try:
        ds = read_dataset(args.dataset)
    except DatasetFormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not ds.header.has_labels:
        print("dataset has no labels", file=sys.stderr)
        return EXIT_NO_LABELS

    cfg = None
    if args.config:
        try:
            cfg, _ = parse_config_file(args.config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    cfg = cfg or header_to_config(ds.header)

    n_values = [int(v) for v in args.n.split(",")]
    try:
        predictor = make_predictor(args.predictor, seed=args.seed or 0,
                                   scores_path=args.scores)
    except DatasetFormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (ValueError, OSError) as exc:
        print(f"predictor error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        predictor.check_alignment(ds)
    except AlignmentError as exc:
        if args.predictor == "persistence":
            # unlinked dataset: the persistence baseline is skipped, not fatal
            print(f"skipped={predictor.name} reason=\"{exc}\"")
            return 0
        print(f"alignment error: {exc}", file=sys.stderr)
        return EXIT_MISALIGNED

    rho = 10.0 ** (args.eval_snr_db / 10.0)
    threads = args.threads or (os.cpu_count() or 1)
    if ds.header.has_mmwave:
        rows = spectral_efficiency_report(ds, predictor, n_values, rho,
                                          cfg=cfg, threads=threads)
    else:
        rows = accuracy_only_rows(ds, predictor, n_values)
    try:
        write_report_csv(rows, args.report)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    for r in rows:
        print(f"predictor={r.predictor} n={r.n} A_best_n={r.a_best_n!r} "
              f"configs={r.configs_evaluated}")
    print(f"report={args.report} rows={len(rows)}")
    return 0


def cmd_inspect(args) -> int:
    try:
        ds = read_dataset(args.dataset)
    except DatasetFormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    h = ds.header
    print(f"magic=DBBP version={h.version}")
    for name in ("t", "k", "kbar", "n_tx_sub6", "n_tx", "n_rx", "n_rf",
                 "codebook_size", "sample_count"):
        print(f"{name}={getattr(h, name)}")
    print(f"input_snr_db={_snr_label(h.input_snr_db)}")
    print(f"has_labels={h.has_labels} has_locations={h.has_locations} "
          f"has_mmwave={h.has_mmwave} trajectory_linked={h.trajectory_linked}")
    if ds.samples and h.has_labels:
        first = ds.samples[0]
        plus = ",".join(str(i) for i in first.label.plus45_indices)
        minus = ",".join(str(i) for i in first.label.minus45_indices)
        print(f"first_label_plus45={plus}")
        print(f"first_label_minus45={minus}")
        print(f"first_optimal_mi={first.optimal_mi!r}")
    return 0


def cmd_codebook_export(args) -> int:
    try:
        cfg, _ = parse_config_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cb = build_codebook(cfg)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        export_codebook_csv(cb, args.report)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"codebook={args.report} size={len(cb)} "
          f"subarray={cb.subarray_shape[0]}x{cb.subarray_shape[1]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dbbp",
        description="Dual-band beam prediction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate labeled dataset files")
    gen.add_argument("--config", required=True)
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--threads", type=int, default=0)
    gen.set_defaults(func=cmd_generate)

    ev = sub.add_parser("evaluate", help="evaluate a predictor on a dataset")
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--predictor", default="oracle",
                    choices=["oracle", "random", "persistence", "file"])
    ev.add_argument("--scores", default=None)
    ev.add_argument("--n", default="1,3,5")
    ev.add_argument("--report", required=True)
    ev.add_argument("--config", default=None)
    ev.add_argument("--eval-snr-db", type=float, default=30.0)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--threads", type=int, default=0)
    ev.set_defaults(func=cmd_evaluate)

    ins = sub.add_parser("inspect", help="dump a dataset header")
    ins.add_argument("--dataset", required=True)
    ins.set_defaults(func=cmd_inspect)

    exp = sub.add_parser("codebook-export", help="write the codebook as CSV")
    exp.add_argument("--config", required=True)
    exp.add_argument("--report", required=True)
    exp.set_defaults(func=cmd_codebook_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
