"""Command-line entry point: ``csplab {gen,train,eval,bench}``.

Exit codes: 0 success, 2 usage or validation error, 3 I/O error, 4 numeric
failure. Each subcommand accepts an optional JSON config; explicit flags
override it, and the merged result is recorded in a ``<output>.manifest.json``
written next to the main artifact.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from csplab import __version__
from csplab.bench import BenchConfig, run_bench_isolated
from csplab.chansim.dataset import DatasetConfig, generate_dataset, read_mcsp
from csplab.model.checkpoint import load_checkpoint, save_checkpoint
from csplab.model.config import BackboneConfig
from csplab.model.network import CspModel
from csplab.numcore import NumericFailure
from csplab.trainer import (TrainConfig, TrainingAborted, evaluate, evaluate_persistence, train,
                            write_history_csv)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("csplab")


class UsageError(Exception):
    """Invalid flags or configuration; maps to exit code 2."""


@dataclasses.dataclass
class RunManifest:
    command: str
    config: dict[str, Any]
    seed: int
    version: str
    timestamp: str
    inputs: dict[str, str]  # path -> sha256
    outputs: list[str]

    def write(self, path: str | os.PathLike) -> None:
        Path(path).write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n")


def file_digest(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def manifest_path(out: str | os.PathLike) -> Path:
    return Path(str(out) + ".manifest.json")


def _write_manifest(command: str, config: dict, seed: int, inputs: Sequence[str], outputs: Sequence[str]) -> None:
    now = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    m = RunManifest(command, config, seed, __version__, now,
                    {str(p): file_digest(p) for p in inputs}, [str(p) for p in outputs])
    m.write(manifest_path(outputs[0]))


def _load_json(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError:
        raise
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    return data


def _build(cls, base: dict[str, Any], overrides: dict[str, Any]):
    known = {f.name for f in dataclasses.fields(cls)}
    merged = {**base, **{k: v for k, v in overrides.items() if v is not None}}
    unknown = set(merged) - known
    if unknown:
        raise UsageError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    try:
        return cls(**merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def cmd_gen(args: argparse.Namespace) -> int:
    base = _load_json(args.config)
    seed = args.seed if args.seed is not None else int(base.pop("seed", 0))
    base.pop("seed", None)
    cfg = _build(DatasetConfig, base, {"duplex": args.duplex, "count": args.count,
                                       "velocities": args.velocities, "split": args.split})
    ds = generate_dataset(cfg, seed, args.out)
    size = os.path.getsize(args.out)
    inputs = [args.config] if args.config else []
    _write_manifest("gen", dataclasses.asdict(cfg), seed, inputs, [args.out])
    print(f"wrote {args.out}: {len(ds)} samples, {size} bytes, duplex={cfg.duplex}")
    return EXIT_OK


def _model_config(args, header: dict) -> BackboneConfig:
    base = _load_json(args.model_config)
    for key in ("K", "P", "L"):
        base.setdefault(key, header[key])
    return _build(BackboneConfig, base, {})


def cmd_train(args: argparse.Namespace) -> int:
    base = _load_json(args.config)
    tcfg = _build(TrainConfig, base, {"epochs": args.epochs, "batch_size": args.batch, "lr": args.lr,
                                      "seed": args.seed, "clip_norm": args.clip_norm})
    train_set, val_set = read_mcsp(args.data), read_mcsp(args.val)
    if len(train_set) == 0 or len(val_set) == 0:
        raise UsageError("training and validation sets must be non-empty")
    mcfg = _model_config(args, train_set.header)
    model = CspModel(mcfg, seed=tcfg.seed)
    history_path = args.history or str(args.out) + ".loss.csv"
    config = {"train": dataclasses.asdict(tcfg), "model": mcfg.to_dict()}
    inputs = [args.data, args.val] + ([args.config] if args.config else []) \
        + ([args.model_config] if args.model_config else [])
    try:
        result = train(model, train_set, val_set, tcfg)
    except TrainingAborted as exc:
        save_checkpoint(exc.model, args.out, {"aborted": True, "train": dataclasses.asdict(tcfg)})
        write_history_csv(exc.history, history_path)
        _write_manifest("train", config, tcfg.seed, inputs, [args.out, history_path])
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    meta = {"best_epoch": result.best_epoch, "best_val_nmse": result.best_val_nmse,
            "train": dataclasses.asdict(tcfg)}
    save_checkpoint(result.model, args.out, meta)
    write_history_csv(result.history, history_path)
    _write_manifest("train", config, tcfg.seed, inputs, [args.out, history_path])
    print(f"wrote {args.out}: best epoch {result.best_epoch}, val NMSE {result.best_val_nmse:.6f}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    ds = read_mcsp(args.data)
    model, _ = load_checkpoint(args.model)
    mc = model.config
    if len(ds) == 0:
        raise UsageError("cannot evaluate an empty dataset")
    if (ds.K, ds.P, ds.L) != (mc.K, mc.P, mc.L):
        raise UsageError(f"dataset shape (K={ds.K}, P={ds.P}, L={ds.L}) does not match checkpoint "
                         f"(K={mc.K}, P={mc.P}, L={mc.L})")
    report = evaluate(model, ds)
    Path(args.report).write_text(report.to_json() + "\n")
    _write_manifest("eval", {"data": str(args.data), "model": str(args.model)}, 0,
                    [args.data, args.model], [args.report])
    base = evaluate_persistence(ds)
    print(f"overall NMSE {report.overall_nmse:.6f} (persistence {base.overall_nmse:.6f}) "
          f"over {report.sample_count} samples")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    base = _load_json(args.config)
    seed = args.seed if args.seed is not None else int(base.pop("seed", 0))
    base.pop("seed", None)
    cfg = _build(BenchConfig, base, {
        "variants": args.variants, "seq_lens": args.seq_lens, "mode": args.mode, "F": args.F,
        "L_M": args.L_M, "k": args.k, "H": args.H, "batch": args.batch,
        "warmup_iters": args.warmup, "measure_iters": args.iters})
    report = run_bench_isolated(cfg, seed)
    outputs = []
    if args.out:
        csv_path, json_path = str(args.out) + ".csv", str(args.out) + ".json"
        report.to_csv(csv_path)
        Path(json_path).write_text(report.to_json() + "\n")
        outputs = [csv_path, json_path]
        _write_manifest("bench", report.config, seed, [args.config] if args.config else [], outputs)
    print("variant          P'   latency_ms  samples/s   peak_bytes")
    for e in report.entries:
        if e.error:
            print(f"{e.variant:<14} {e.P_prime:>5}  failed: {e.error}")
        else:
            print(f"{e.variant:<14} {e.P_prime:>5} {e.latency_ms:11.3f} {e.throughput:10.2f} {e.peak_bytes:12d}")
    for name, slope in report.slopes.items():
        tail = report.tail_slopes.get(name)
        extra = f" (P' >= 128: {tail:.3f})" if tail is not None else ""
        print(f"slope {name}: {slope:.3f}{extra}")
    for name, rows in report.ratios.items():
        print(f"ratios {name} (throughput / latency / memory):")
        for r in rows:
            print(f"  P'={r['P_prime']:>5}  {r['throughput_ratio']:.3f}  {r['latency_ratio']:.3f}  "
                  f"{r['memory_ratio']:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="csplab", description="Channel prediction toolkit.")
    ap.add_argument("--version", action="version", version=f"csplab {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="synthesize a dataset file")
    g.add_argument("--config", help="JSON dataset config")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--duplex", choices=("tdd", "fdd"))
    g.add_argument("--count", type=int, help="number of users; each yields one sample per antenna")
    g.add_argument("--velocities", type=_floats, help="comma-separated km/h values")
    g.add_argument("--split", help="stream name separating train/val/test draws")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a model")
    t.add_argument("--data", required=True)
    t.add_argument("--val", required=True)
    t.add_argument("--model-config", help="JSON backbone config; K, P, L default to the data")
    t.add_argument("--config", help="JSON training config")
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--history", help="loss CSV path (default: <out>.loss.csv)")
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--seed", type=int)
    t.add_argument("--clip-norm", type=float, help="global gradient-norm clip, e.g. 10")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--data", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--report", required=True)
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="latency/memory sweep")
    b.add_argument("--config", help="JSON bench config")
    b.add_argument("--variants", type=_names)
    b.add_argument("--seq-lens", type=_ints)
    b.add_argument("--mode", choices=("inference", "training"))
    b.add_argument("--out", help="output prefix; writes <out>.csv and <out>.json")
    b.add_argument("--F", type=int)
    b.add_argument("--L-M", dest="L_M", type=int)
    b.add_argument("--k", type=int)
    b.add_argument("--H", type=int)
    b.add_argument("--batch", type=int)
    b.add_argument("--warmup", type=int)
    b.add_argument("--iters", type=int)
    b.add_argument("--seed", type=int)
    b.set_defaults(func=cmd_bench)
    return ap


def _guarded(func: Callable[[argparse.Namespace], int], args: argparse.Namespace) -> int:
    try:
        return func(args)
    except (UsageError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return _guarded(args.func, args)


if __name__ == "__main__":
    sys.exit(main())
