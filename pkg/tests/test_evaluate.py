import numpy as np
import pytest
import scipy.sparse as sp

from grembed_fastgcn.config import RunConfig
from grembed_fastgcn.embedding import normalize_adjacency
from grembed_fastgcn.evaluate import (
    evaluate_multiclass,
    evaluate_ova,
    format_multiclass,
    format_ova,
)
from grembed_fastgcn.types import TEST, TRAIN, DatasetGraph

NAMES = ["a", "b", "c"]


def _graph(n=18, c=3):
    y = np.arange(n) % c
    X = np.eye(c)[y]
    A = sp.csr_matrix((n, n))
    split = np.where(np.arange(n) < n // 2, TRAIN, TEST)
    return DatasetGraph(A=A, A_hat=normalize_adjacency(A), X=X, Y=y, split=split)


def test_perfect_predictions():
    g = _graph()
    report = evaluate_multiclass(g.Y.copy(), g, NAMES)
    assert report.accuracy == 1.0
    assert report.per_class_accuracy == [1.0, 1.0, 1.0]
    assert np.trace(report.confusion) == (g.split == TEST).sum()


def test_constant_predictor_accuracy():
    g = _graph()
    report = evaluate_multiclass(np.zeros(g.n_nodes, dtype=int), g, NAMES)
    assert report.accuracy == pytest.approx(1.0 / 3.0)
    assert report.per_class_accuracy == [1.0, 0.0, 0.0]


def test_confusion_rows_sum_to_class_counts():
    g = _graph()
    rng = np.random.default_rng(80)
    pred = rng.integers(0, 3, size=g.n_nodes)
    report = evaluate_multiclass(pred, g, NAMES)
    mask = g.split == TEST
    for k in range(3):
        assert report.confusion[k].sum() == int(np.sum(g.Y[mask] == k))


def test_prediction_length_checked():
    g = _graph()
    with pytest.raises(ValueError):
        evaluate_multiclass(np.zeros(3, dtype=int), g, NAMES)


def test_ova_on_separable_graph():
    g = _graph(n=30)
    cfg = RunConfig(epochs=50, hidden_size=8, learning_rate=0.5, batch_size=8, seed=1)
    report = evaluate_ova(g, cfg, NAMES)
    assert report.macro_accuracy == 1.0
    assert report.per_class_accuracy == [1.0, 1.0, 1.0]


def test_report_formatting():
    g = _graph()
    text = format_multiclass(evaluate_multiclass(g.Y.copy(), g, NAMES))
    assert "test_accuracy=1.000000" in text
    assert "class_accuracy[b]=1.000000" in text
    assert ",a,b,c" in text
    ova = format_ova(evaluate_ova(
        g, RunConfig(epochs=2, hidden_size=4, learning_rate=0.1, seed=0), NAMES))
    assert ova.startswith("mode=ova")
    assert "macro_accuracy=" in ova
