"""Command-line harness: per-stage subcommands over persisted artifacts.

Exit codes: 0 success, 2 missing upstream artifact, 3 config-hash mismatch,
4 validation failure.
"""
from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import artifacts as art
from .artifacts import ConfigHashMismatch, read_arsrg, read_artifact, write_arsrg, write_artifact
from .config import RunConfig, load_config, preset_config, save_config
from .embedding import assemble_dataset_graph, build_adjacency, embed, normalize_adjacency, standardize_rows
from .evaluate import evaluate_multiclass, evaluate_ova, format_multiclass, format_ova
from .frontend import image_to_arsrg
from .gcn import predict, train
from .manifest import Manifest, limit_classes, read_manifest, split_coil_protocol, split_eth_protocol, write_manifest
from .matcher import build_distance_matrix
from .toydata import generate_toy_dataset
from .types import TRAIN

EXIT_MISSING_INPUT = 2
EXIT_CONFIG_MISMATCH = 3
EXIT_VALIDATION = 4


class StageError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _image_id(index: int, path: str) -> str:
    stem = Path(path).stem.replace(" ", "_")
    return f"{index:05d}_{stem}"


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise StageError(EXIT_MISSING_INPUT, f"missing {what}: {path}")
    return path


def _extract_one(args):
    path, image_id, label, cfg = args
    return image_to_arsrg(path, image_id, label, cfg)


def stage_extract(cfg: RunConfig, manifest: Manifest, out: Path, workers: int = 1) -> None:
    arsrg_dir = out / "arsrg"
    arsrg_dir.mkdir(parents=True, exist_ok=True)
    labels = manifest.labels()
    jobs = [
        (e.path, _image_id(i, e.path), int(labels[i]), cfg)
        for i, e in enumerate(manifest.entries)
    ]
    for e in manifest.entries:
        _require(Path(e.path), "input image")
    if workers <= 1:
        graphs = [_extract_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            graphs = list(pool.map(_extract_one, jobs, chunksize=4))
    lines = []
    for g in graphs:
        write_arsrg(arsrg_dir / f"{g.image_id}.arsrg", g, cfg)
        lines.append(
            f"{g.image_id}\tregions={len(g.regions)}\tedges={len(g.region_edges)}"
            f"\tdescriptors={len(g.descriptors)}"
        )
    (out / "extract_report.txt").write_text("\n".join(lines) + "\n")


def _load_graphs(cfg: RunConfig, manifest: Manifest, out: Path):
    graphs = []
    for i, e in enumerate(manifest.entries):
        path = _require(out / "arsrg" / f"{_image_id(i, e.path)}.arsrg", "ARSRG artifact")
        graphs.append(read_arsrg(path, expect_config=cfg))
    return graphs


def stage_match(cfg: RunConfig, manifest: Manifest, out: Path, workers: int = 1) -> None:
    graphs = _load_graphs(cfg, manifest, out)
    dm = build_distance_matrix(graphs, cfg, workers=workers, progress=sys.stderr)
    write_artifact(out / "distances.gfg", dm, cfg)
    (out / "match_report.txt").write_text(
        f"n={dm.n}\nmean_distance={dm.values[np.triu_indices(dm.n, 1)].mean():.6f}\n"
    )


def stage_embed(cfg: RunConfig, manifest: Manifest, out: Path) -> None:
    dm, _ = read_artifact(
        _require(out / "distances.gfg", "DistanceMatrix artifact"),
        expect_tag=art.TAG_DISTANCE_MATRIX, expect_config=cfg,
    )
    if cfg.prototypes == "train":
        proto = np.flatnonzero(manifest.split_tags() == TRAIN).tolist()
    else:
        proto = list(range(dm.n))
    X = embed(dm, proto)
    if cfg.standardize_features:
        X = standardize_rows(X)
    write_artifact(out / "features.gfg", X, cfg)
    (out / "embed_report.txt").write_text(
        f"n={X.shape[0]}\nm={X.shape[1]}\nprototypes={cfg.prototypes}\n"
    )


def stage_graph(cfg: RunConfig, manifest: Manifest, out: Path) -> None:
    dm, _ = read_artifact(
        _require(out / "distances.gfg", "DistanceMatrix artifact"),
        expect_tag=art.TAG_DISTANCE_MATRIX, expect_config=cfg,
    )
    X, _ = read_artifact(
        _require(out / "features.gfg", "feature matrix artifact"),
        expect_tag=art.TAG_MATRIX, expect_config=cfg,
    )
    A = build_adjacency(dm, cfg.tau)
    A_hat = normalize_adjacency(A)
    graph = assemble_dataset_graph(X, A, A_hat, manifest.labels(), manifest.split_tags())
    write_artifact(out / "graph.gfg", graph, cfg)
    stats = "\n".join(f"{k}={v}" for k, v in graph.stats.items())
    (out / "graph_report.txt").write_text(stats + "\n")


def stage_train(cfg: RunConfig, manifest: Manifest, out: Path) -> None:
    graph, _ = read_artifact(
        _require(out / "graph.gfg", "DatasetGraph artifact"),
        expect_tag=art.TAG_DATASET_GRAPH, expect_config=cfg,
    )
    model, reports = train(graph, cfg)
    write_artifact(out / "model.gfg", model, cfg)
    lines = ["epoch,step,loss,train_acc,test_acc,seconds"]
    for r in reports:
        lines.append(
            f"{r.epoch},{r.step},{r.loss:.8f},{r.train_acc:.6f},"
            f"{r.test_acc:.6f},{r.seconds:.3f}"
        )
    (out / "trainlog.csv").write_text("\n".join(lines) + "\n")


def stage_eval(cfg: RunConfig, manifest: Manifest, out: Path,
               mode: str = "multiclass") -> float:
    graph, _ = read_artifact(
        _require(out / "graph.gfg", "DatasetGraph artifact"),
        expect_tag=art.TAG_DATASET_GRAPH, expect_config=cfg,
    )
    class_names = list(manifest.label_map())
    if mode == "ova":
        report = evaluate_ova(graph, cfg, class_names)
        text = format_ova(report)
        accuracy = report.macro_accuracy
    else:
        model, _ = read_artifact(
            _require(out / "model.gfg", "GcnModel artifact"),
            expect_tag=art.TAG_GCN_MODEL, expect_config=cfg,
        )
        pred, _ = predict(model, graph)
        report = evaluate_multiclass(pred, graph, class_names)
        text = format_multiclass(report)
        accuracy = report.accuracy
    (out / "eval_report.txt").write_text(text)
    print(text, end="")
    return accuracy


STAGES = ("extract", "match", "embed", "graph", "train", "eval", "pipeline")


def run_stage(stage: str, cfg: RunConfig, manifest: Manifest, out: Path,
              workers: int = 1, mode: str = "multiclass") -> None:
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "run.config")
    if stage in ("extract", "pipeline"):
        stage_extract(cfg, manifest, out, workers)
    if stage in ("match", "pipeline"):
        stage_match(cfg, manifest, out, workers)
    if stage in ("embed", "pipeline"):
        stage_embed(cfg, manifest, out)
    if stage in ("graph", "pipeline"):
        stage_graph(cfg, manifest, out)
    if stage in ("train", "pipeline"):
        stage_train(cfg, manifest, out)
    if stage in ("eval", "pipeline"):
        stage_eval(cfg, manifest, out, mode)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="grembed-fastgcn",
        description="Image classification via region graphs, dissimilarity "
                    "embedding, and importance-sampled graph convolution.",
    )
    sub = p.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        sp = sub.add_parser(stage)
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--dataset", help="preset name (eth-80, coil-100, aloi, toy)")
        sp.add_argument("--manifest", required=True)
        sp.add_argument("--out", required=True)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--mode", choices=("multiclass", "ova"), default="multiclass")
        sp.add_argument("--limit-classes", type=int)
        sp.add_argument("--split-protocol", choices=("coil", "eth"),
                        help="apply a published split protocol to the manifest first")
    mk = sub.add_parser("make-toy", help="render the bundled synthetic dataset")
    mk.add_argument("--out", required=True)
    mk.add_argument("--seed", type=int, default=7)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.stage == "make-toy":
            manifest = generate_toy_dataset(args.out, args.seed)
            print(f"wrote {len(manifest.entries)} images and manifest to {args.out}")
            return 0
        if args.config:
            cfg = load_config(args.config)
        elif args.dataset:
            cfg = preset_config(args.dataset)
        else:
            cfg = RunConfig()
        if args.seed is not None:
            import dataclasses
            cfg = dataclasses.replace(cfg, seed=args.seed)
        cfg.validate()
        manifest = read_manifest(args.manifest)
        if args.limit_classes:
            manifest = limit_classes(manifest, args.limit_classes)
        if args.split_protocol == "coil":
            manifest = split_coil_protocol(manifest, cfg.seed)
        elif args.split_protocol == "eth":
            manifest = split_eth_protocol(manifest, cfg.seed)
        start = time.perf_counter()
        run_stage(args.stage, cfg, manifest, Path(args.out),
                  workers=args.workers, mode=args.mode)
        print(f"{args.stage}: done in {time.perf_counter() - start:.1f}s",
              file=sys.stderr)
        return 0
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except ConfigHashMismatch as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG_MISMATCH
    except FileNotFoundError as e:
        print(f"error: missing input: {e}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (art.ArtifactError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
