"""Evaluation metrics and portable artefacts (CSV, binary PGM heatmaps)."""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def confusion_matrix(y_true, y_pred, n_classes: int, normalize: bool = True) -> np.ndarray:
    """Rows are true classes. Normalised rows sum to 1; empty rows stay 0."""
    cm = np.zeros((n_classes, n_classes), dtype=float)
    np.add.at(cm, (np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int)), 1.0)
    if normalize:
        rows = cm.sum(axis=1, keepdims=True)
        cm = np.divide(cm, rows, out=np.zeros_like(cm), where=rows > 0)
    return cm


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    return float(np.mean(y_true == np.asarray(y_pred))) if len(y_true) else float("nan")


def accuracy_from_confusion(cm_normalized: np.ndarray, class_counts) -> float:
    """Overall accuracy recomputed as the prevalence-weighted trace of a row-normalised matrix."""
    counts = np.asarray(class_counts, dtype=float)
    return float(np.sum(np.diag(cm_normalized) * counts) / counts.sum())


def percentile(errors, q: float = 0.9) -> float:
    """Smallest x with empirical Pr[X <= x] >= q."""
    e = np.sort(np.asarray(errors, dtype=float))
    if e.size == 0:
        raise ValueError("no samples")
    k = max(1, math.ceil(q * e.size - 1e-9))
    return float(e[k - 1])


def error_cdf(errors):
    """Sorted errors and the empirical CDF at each of them."""
    e = np.sort(np.asarray(errors, dtype=float))
    return e, np.arange(1, e.size + 1) / e.size


@dataclass
class MetricReport:
    name: str
    n_classes: int
    confusion: np.ndarray
    class_counts: np.ndarray
    accuracy: float
    errors: np.ndarray | None = None

    def summary(self) -> dict:
        d = {"accuracy_pct": 100.0 * self.accuracy, "n_samples": int(self.class_counts.sum())}
        if self.errors is not None:
            d["mean_error"] = float(np.mean(self.errors))
            d["p90_error"] = percentile(self.errors, 0.9)
        return d


@dataclass
class EvalReport:
    task: str
    metrics: dict = field(default_factory=dict)  # name -> MetricReport

    def summary(self) -> dict:
        return {"task": self.task, "metrics": {k: m.summary() for k, m in self.metrics.items()}}


def metric_report(name, n_classes, true_cls, pred_cls, true_val=None, pred_val=None) -> MetricReport:
    cm = confusion_matrix(true_cls, pred_cls, n_classes)
    counts = np.bincount(np.asarray(true_cls, dtype=int), minlength=n_classes)
    err = None
    if true_val is not None:
        err = np.abs(np.asarray(pred_val, dtype=float) - np.asarray(true_val, dtype=float))
    return MetricReport(name, n_classes, cm, counts, accuracy(true_cls, pred_cls), err)


# ----------------------------------------------------------------------------
# files
# ----------------------------------------------------------------------------
def _fmt(x: float) -> str:
    return repr(float(x))


def write_confusion_csv(path, cm: np.ndarray, counts) -> None:
    C = cm.shape[0]
    lines = ["true\\pred," + ",".join(str(j) for j in range(C)) + ",count"]
    for i in range(C):
        lines.append(f"{i}," + ",".join(_fmt(v) for v in cm[i]) + f",{int(counts[i])}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_confusion_csv(path):
    rows = Path(path).read_text().strip().splitlines()[1:]
    cm = np.array([[float(v) for v in r.split(",")[1:-1]] for r in rows])
    counts = np.array([int(r.split(",")[-1]) for r in rows])
    return cm, counts


def write_cdf_csv(path, errors) -> None:
    e, p = error_cdf(errors)
    Path(path).write_text("error,cdf\n" + "".join(f"{_fmt(a)},{_fmt(b)}\n" for a, b in zip(e, p)))


def write_pgm(path, image: np.ndarray, lo=None, hi=None, cell: int = 1) -> None:
    """8-bit binary PGM, values mapped linearly from [lo, hi] to [0, 255]."""
    img = np.asarray(image, dtype=float)
    lo = float(np.min(img)) if lo is None else float(lo)
    hi = float(np.max(img)) if hi is None else float(hi)
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    px = np.clip(np.round((img - lo) * scale), 0, 255).astype(np.uint8)
    if cell > 1:
        px = np.kron(px, np.ones((cell, cell), dtype=np.uint8))
    h, w = px.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + px.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = (int(x) for x in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def write_matrix_csv(path, values: np.ndarray, row_axis=None, col_axis=None) -> None:
    lines = []
    if col_axis is not None:
        lines.append("," + ",".join(_fmt(c) for c in col_axis))
    for i, row in enumerate(values):
        head = (_fmt(row_axis[i]) + ",") if row_axis is not None else ""
        lines.append(head + ",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
