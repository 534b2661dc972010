"""Command-line entry points: synth-weights, extract, correlate, evaluate.

Extraction and evaluation are separate commands with a file boundary between
them; extraction is the expensive step, experiments on selection and
regression iterate on its CSV output. Every command writes a provenance
record (<output>.run.json) with the resolved configuration and input/output
checksums.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import struct
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .audio import load_wav, validate_rate
from .errors import EmofeatsError
from .evaluation import (
    RunLosoConfig,
    compare_feature_sets,
    consistency_filter,
    format_comparison_table,
    load_manifest,
    run_loso,
    write_comparison_csv,
    write_fold_csv,
)
from .features import (
    build_feature_matrix,
    layer_feature_indices,
    max_pool,
    mean_pool,
    read_feature_csv,
    subset_rows,
    write_feature_csv,
)
from .mfcc import MfccConfig, compute_mfcc, write_mfcc
from .net import ModelConfig, forward_collect
from .stats import correlation_map, export_heatmap_csv
from .weights import fnv1a64, read_weights, synth_weights, write_weights

log = logging.getLogger("emofeats")

WORKERS_ENV = "EMOFEATS_WORKERS"


def _add_arch_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-mfcc", type=int, default=20)
    parser.add_argument("--channels", type=int, default=128)
    parser.add_argument("--blocks", type=int, default=3)
    parser.add_argument("--layers-per-block", type=int, default=5)
    parser.add_argument("--kernel-size", type=int, default=7)


def _arch_config(args: argparse.Namespace) -> ModelConfig:
    return ModelConfig(
        n_mfcc=args.n_mfcc,
        channels=args.channels,
        n_blocks=args.blocks,
        layers_per_block=args.layers_per_block,
        kernel_size=args.kernel_size,
    )


def _file_checksum(path: str) -> str:
    """FNV-1a of the file bytes; weight files reuse their stored trailer."""
    if path.endswith(".gcuw"):
        with open(path, "rb") as fh:
            fh.seek(-8, os.SEEK_END)
            (stored,) = struct.unpack("<Q", fh.read(8))
        return f"{stored:#018x}"
    with open(path, "rb") as fh:
        return f"{fnv1a64(fh.read()):#018x}"


def _write_run_record(out_path: str, command: str, config: dict, inputs: dict, outputs: dict) -> None:
    record = {
        "tool": f"emofeats {__version__}",
        "command": command,
        "config": config,
        "inputs": {name: {"path": p, "fnv1a64": _file_checksum(p)} for name, p in inputs.items()},
        "outputs": {name: {"path": p, "fnv1a64": _file_checksum(p)} for name, p in outputs.items()},
    }
    with open(out_path + ".run.json", "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_synth_weights(args: argparse.Namespace) -> int:
    cfg = _arch_config(args)
    w = synth_weights(cfg, args.seed)
    checksum = write_weights(w, cfg, args.out)
    print(f"wrote {args.out} ({cfg.total_layers} layers x {cfg.channels} units), "
          f"payload checksum {checksum:#018x}")
    _write_run_record(args.out, "synth-weights", {"seed": args.seed, **_cfg_dict(cfg)}, {}, {"weights": args.out})
    return 0


def _cfg_dict(cfg: ModelConfig) -> dict:
    return {
        "n_mfcc": cfg.n_mfcc,
        "channels": cfg.channels,
        "n_blocks": cfg.n_blocks,
        "layers_per_block": cfg.layers_per_block,
        "dilations_per_block": list(cfg.dilations_per_block),
        "kernel_size": cfg.kernel_size,
    }


def _mfcc_config(args: argparse.Namespace, n_mfcc: int) -> MfccConfig:
    return MfccConfig(
        sample_rate_hz=args.sample_rate,
        frame_len=args.frame_len,
        hop_len=args.hop_len,
        n_mels=args.n_mels,
        n_mfcc=n_mfcc,
    )


# extraction worker state, initialized once per process
_WORKER: dict = {}


def _extract_init(weights_path: str, mfcc_cfg: MfccConfig, pool: str, dump_dir: str | None) -> None:
    cfg, w = read_weights(weights_path)
    _WORKER.update(cfg=cfg, weights=w, mfcc_cfg=mfcc_cfg, pool=pool, dump_dir=dump_dir)


def _extract_one(job: tuple[str, str]) -> tuple[str, np.ndarray | None, str | None, float]:
    uid, wav_path = job
    start = time.perf_counter()
    try:
        buf = load_wav(wav_path)
        validate_rate(buf, _WORKER["mfcc_cfg"].sample_rate_hz)
        seq = compute_mfcc(buf, _WORKER["mfcc_cfg"], utterance_id=uid)
        if _WORKER["dump_dir"]:
            write_mfcc(seq, os.path.join(_WORKER["dump_dir"], f"{uid}.mfcc"))
        acts = forward_collect(_WORKER["cfg"], _WORKER["weights"], seq)
        vec = mean_pool(acts) if _WORKER["pool"] == "mean" else max_pool(acts)
        return uid, vec.values, None, time.perf_counter() - start
    except EmofeatsError as exc:
        return uid, None, str(exc), time.perf_counter() - start


def cmd_extract(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    cfg, _ = read_weights(args.weights)
    mfcc_cfg = _mfcc_config(args, cfg.n_mfcc)
    if args.dump_mfcc:
        os.makedirs(args.dump_mfcc, exist_ok=True)

    manifest_dir = os.path.dirname(os.path.abspath(args.manifest))
    jobs = [
        (r.utterance_id,
         r.wav_path if os.path.isabs(r.wav_path) else os.path.join(manifest_dir, r.wav_path))
        for r in manifest.records
    ]
    workers = args.workers or int(os.environ.get(WORKERS_ENV, "1"))
    results: dict[str, np.ndarray] = {}
    failures: list[tuple[str, str]] = []

    init_args = (args.weights, mfcc_cfg, args.pool, args.dump_mfcc)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_extract_init, initargs=init_args) as pool:
            outcomes = list(pool.map(_extract_one, jobs))
    else:
        _extract_init(*init_args)
        outcomes = [_extract_one(job) for job in jobs]

    for uid, values, error, elapsed in outcomes:
        if error is not None:
            failures.append((uid, error))
            log.error("%s failed after %.2fs: %s", uid, elapsed, error)
        else:
            results[uid] = values
            log.info("%s: %d features in %.2fs", uid, values.size, elapsed)

    if failures:
        print(f"{len(failures)} utterance(s) failed; refusing to write partial output:", file=sys.stderr)
        for uid, error in failures:
            print(f"  {uid}: {error}", file=sys.stderr)
        return 1

    from .features import NeuralFeatureVector

    vectors = [
        NeuralFeatureVector(results[r.utterance_id], r.utterance_id, cfg.channels)
        for r in manifest.records
    ]
    metadata = {r.utterance_id: (r.speaker_id, r.session, r.valence, r.arousal) for r in manifest.records}
    fm = build_feature_matrix(vectors, metadata, feature_set_name=f"neural-{args.pool}")
    write_feature_csv(fm, args.out)
    print(f"wrote {args.out}: {fm.n_rows} utterances x {fm.n_features} features ({args.pool} pooling)")
    _write_run_record(
        args.out,
        "extract",
        {"pool": args.pool, "workers": workers, "sample_rate": args.sample_rate,
         "frame_len": args.frame_len, "hop_len": args.hop_len, "n_mels": args.n_mels,
         **_cfg_dict(cfg)},
        {"weights": args.weights, "manifest": args.manifest},
        {"features": args.out},
    )
    return 0


def cmd_correlate(args: argparse.Namespace) -> int:
    fm = read_feature_csv(args.features)
    cfg = _arch_config(args)
    rows = fm.rows_for_speaker(args.speaker)
    if rows.size == 0:
        print(f"speaker {args.speaker!r} not present in {args.features}", file=sys.stderr)
        return 1
    m = correlation_map(subset_rows(fm, rows), args.dim, cfg)
    export_heatmap_csv(m, args.out)
    print(f"wrote {args.out}: {m.values.shape[0]} layers x {m.values.shape[1]} units, "
          f"{m.degenerate_count} degenerate cells")
    _write_run_record(
        args.out,
        "correlate",
        {"speaker": args.speaker, "dim": args.dim, **_cfg_dict(cfg)},
        {"features": args.features},
        {"heatmap": args.out},
    )
    return 0


def _parse_layer_selector(text: str) -> tuple[str, str, int | None]:
    """Returns (label, selector, k_layers)."""
    if text == "all":
        return "all", "all", None
    kind, _, count = text.partition(":")
    if kind in ("first", "last") and count.isdigit():
        return text, f"{kind}_k", int(count)
    raise argparse.ArgumentTypeError(f"bad layer selector {text!r}; use first:N, last:N or all")


def cmd_evaluate(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    filter_settings = {"consistent_only": args.consistent_only, "max_spread": args.max_spread}
    if args.consistent_only:
        before = len(manifest)
        manifest = consistency_filter(manifest, args.max_spread)
        print(f"consistency filter: kept {len(manifest)} of {before} utterances "
              f"(max spread {args.max_spread})")

    cfg = _arch_config(args)
    fm = read_feature_csv(args.features, feature_set_name="neural")
    selectors = [_parse_layer_selector(s) for s in args.layers]

    reports = []
    for label, selector, k_layers in selectors:
        mask = layer_feature_indices(cfg, selector, k_layers)
        run_cfg = RunLosoConfig(
            k=args.k, candidate_mask=mask, layer_selector=label, filter_settings=filter_settings
        )
        fm_named = subset_rows(fm, np.arange(fm.n_rows))
        fm_named.feature_set_name = f"neural-{label.replace(':', '')}"
        reports.append(run_loso(fm_named, manifest, run_cfg))
        log.info("evaluated %s", fm_named.feature_set_name)

    for baseline_path in args.baseline or []:
        bfm = read_feature_csv(baseline_path)
        k_eff = min(args.k, bfm.n_features)
        if k_eff < args.k:
            log.info("baseline %s has %d features; selecting all of them instead of %d",
                     bfm.feature_set_name, bfm.n_features, args.k)
        run_cfg = RunLosoConfig(
            k=k_eff, candidate_mask=None, layer_selector="all", filter_settings=filter_settings
        )
        reports.append(run_loso(bfm, manifest, run_cfg))
        log.info("evaluated baseline %s", bfm.feature_set_name)

    rows = compare_feature_sets(reports)
    folds_path = args.out + "_folds.csv"
    summary_csv = args.out + "_summary.csv"
    summary_txt = args.out + "_summary.txt"
    write_fold_csv(reports, folds_path)
    write_comparison_csv(rows, summary_csv)
    table = format_comparison_table(rows)
    with open(summary_txt, "w") as fh:
        fh.write(table)
    print(table, end="")

    inputs = {"features": args.features, "manifest": args.manifest}
    for i, b in enumerate(args.baseline or []):
        inputs[f"baseline{i}"] = b
    _write_run_record(
        args.out,
        "evaluate",
        {"k": args.k, "layers": args.layers, **filter_settings, **_cfg_dict(cfg)},
        inputs,
        {"folds": folds_path, "summary_csv": summary_csv, "summary_txt": summary_txt},
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emofeats",
        description="Neural-feature extraction and valence/arousal regression toolkit",
    )
    parser.add_argument("--verbose", action="store_true", help="log per-step progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-weights", help="generate a deterministic synthetic weight file")
    _add_arch_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_weights)

    p = sub.add_parser("extract", help="extract pooled features for every manifest utterance")
    p.add_argument("--weights", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pool", choices=("mean", "max"), default="mean")
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--frame-len", type=int, default=512)
    p.add_argument("--hop-len", type=int, default=160)
    p.add_argument("--n-mels", type=int, default=40)
    p.add_argument("--workers", type=int, default=0,
                   help=f"parallel workers (default: ${WORKERS_ENV} or 1)")
    p.add_argument("--dump-mfcc", default=None, help="also write per-utterance .mfcc dumps here")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("correlate", help="export one speaker's feature/target correlation heatmap")
    _add_arch_flags(p)
    p.add_argument("--features", required=True)
    p.add_argument("--speaker", required=True)
    p.add_argument("--dim", choices=("valence", "arousal"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("evaluate", help="leave-one-speaker-out evaluation of feature sets")
    _add_arch_flags(p)
    p.add_argument("--features", required=True, help="neural feature CSV")
    p.add_argument("--baseline", action="append", default=[],
                   help="external feature CSV, may repeat")
    p.add_argument("--manifest", required=True)
    p.add_argument("--consistent-only", action="store_true")
    p.add_argument("--max-spread", type=float, default=1.0)
    p.add_argument("--layers", action="append", default=None,
                   help="layer selector first:N, last:N or all; may repeat (default: all)")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--out", required=True, help="output prefix for report files")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "layers", None) is None and args.command == "evaluate":
        args.layers = ["all"]
    try:
        return args.func(args)
    except EmofeatsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
