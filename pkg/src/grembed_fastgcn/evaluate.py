"""Evaluation protocols: multiclass metrics and the one-versus-all mode."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .gcn import predict, train
from .types import TEST, DatasetGraph


@dataclass
class MulticlassReport:
    accuracy: float
    per_class_accuracy: list[float]
    confusion: np.ndarray  # rows true, cols predicted
    class_names: list[str]


@dataclass
class OvaReport:
    per_class_accuracy: list[float]
    macro_accuracy: float
    class_names: list[str]


def evaluate_multiclass(predictions: np.ndarray, graph: DatasetGraph,
                        class_names: list[str]) -> MulticlassReport:
    mask = graph.split == TEST
    if len(predictions) != graph.n_nodes:
        raise ValueError("predictions must cover every node")
    y = graph.Y[mask]
    p = predictions[mask]
    c = len(class_names)
    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (y, p), 1)
    per_class = []
    for k in range(c):
        total = confusion[k].sum()
        per_class.append(float(confusion[k, k] / total) if total else float("nan"))
    return MulticlassReport(
        accuracy=float(np.mean(p == y)),
        per_class_accuracy=per_class,
        confusion=confusion,
        class_names=class_names,
    )


def evaluate_ova(graph: DatasetGraph, cfg: RunConfig,
                 class_names: list[str]) -> OvaReport:
    """One binary model per class (class vs rest), each trained from scratch
    on the same dataset graph with relabeled targets."""
    mask = graph.split == TEST
    per_class = []
    for k in range(len(class_names)):
        binary = DatasetGraph(
            A=graph.A, A_hat=graph.A_hat, X=graph.X,
            Y=(graph.Y == k).astype(np.int64), split=graph.split,
        )
        model, _ = train(binary, cfg, seed=cfg.seed + k)
        pred, _ = predict(model, binary)
        per_class.append(float(np.mean(pred[mask] == binary.Y[mask])))
    return OvaReport(
        per_class_accuracy=per_class,
        macro_accuracy=float(np.mean(per_class)),
        class_names=class_names,
    )


def format_multiclass(report: MulticlassReport) -> str:
    lines = [f"mode=multiclass", f"test_accuracy={report.accuracy:.6f}"]
    for name, acc in zip(report.class_names, report.per_class_accuracy):
        lines.append(f"class_accuracy[{name}]={acc:.6f}")
    lines.append("confusion_matrix (rows=true, cols=predicted):")
    lines.append("," + ",".join(report.class_names))
    for name, row in zip(report.class_names, report.confusion):
        lines.append(name + "," + ",".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def format_ova(report: OvaReport) -> str:
    lines = [f"mode=ova", f"macro_accuracy={report.macro_accuracy:.6f}"]
    for name, acc in zip(report.class_names, report.per_class_accuracy):
        lines.append(f"binary_accuracy[{name}]={acc:.6f}")
    return "\n".join(lines) + "\n"
