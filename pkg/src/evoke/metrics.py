"""Multi-label metrics for valence/arousal/dominance prediction.

Headline accuracy is the mean of the three per-label accuracies and
headline F1 the macro mean of per-label binary F1; subset accuracy (all
three bits right at once) is reported alongside for transparency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LABEL_NAMES = ("valence", "arousal", "dominance")


class MetricShapeError(ValueError):
    pass


@dataclass
class LabelMetrics:
    accuracy: float
    f1: float


@dataclass
class MetricReport:
    per_label: dict  # label name -> LabelMetrics
    mean_accuracy: float
    macro_f1: float
    subset_accuracy: float
    n_samples: int

    def to_dict(self):
        return {
            "per_label": {
                name: {"accuracy": lm.accuracy, "f1": lm.f1} for name, lm in self.per_label.items()
            },
            "mean_accuracy": self.mean_accuracy,
            "macro_f1": self.macro_f1,
            "subset_accuracy": self.subset_accuracy,
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            per_label={
                name: LabelMetrics(accuracy=v["accuracy"], f1=v["f1"])
                for name, v in d["per_label"].items()
            },
            mean_accuracy=d["mean_accuracy"],
            macro_f1=d["macro_f1"],
            subset_accuracy=d["subset_accuracy"],
            n_samples=d["n_samples"],
        )


def binarize_predictions(probs):
    """Probabilities to bits at 0.5; ties go to 1, so sigmoid(logit) >= 0.5
    agrees exactly with logit >= 0."""
    probs = np.asarray(probs)
    return (probs >= 0.5).astype(np.int64)


def _f1(tp, fp, fn):
    # Label absent and never predicted counts as perfect agreement.
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def multilabel_metrics(pred_bits, true_bits):
    """Per-label accuracy/F1, their means, and subset accuracy."""
    pred = np.asarray(pred_bits)
    true = np.asarray(true_bits)
    if pred.shape != true.shape or pred.ndim != 2 or pred.shape[1] != len(LABEL_NAMES):
        raise MetricShapeError(
            f"expected matching [n, {len(LABEL_NAMES)}] bit matrices, got {pred.shape} and {true.shape}"
        )
    n = pred.shape[0]
    if n < 1:
        raise MetricShapeError("need at least one sample")
    per_label = {}
    for j, name in enumerate(LABEL_NAMES):
        p, t = pred[:, j], true[:, j]
        tp = int(np.sum((p == 1) & (t == 1)))
        fp = int(np.sum((p == 1) & (t == 0)))
        fn = int(np.sum((p == 0) & (t == 1)))
        per_label[name] = LabelMetrics(
            accuracy=float(np.mean(p == t)),
            f1=_f1(tp, fp, fn),
        )
    return MetricReport(
        per_label=per_label,
        mean_accuracy=float(np.mean([lm.accuracy for lm in per_label.values()])),
        macro_f1=float(np.mean([lm.f1 for lm in per_label.values()])),
        subset_accuracy=float(np.mean(np.all(pred == true, axis=1))),
        n_samples=n,
    )


def format_metric_table(report):
    """Aligned text table: one row per label plus the aggregates."""
    rows = [("label", "accuracy", "f1")]
    for name in LABEL_NAMES:
        lm = report.per_label[name]
        rows.append((name, f"{lm.accuracy:.4f}", f"{lm.f1:.4f}"))
    rows.append(("mean/macro", f"{report.mean_accuracy:.4f}", f"{report.macro_f1:.4f}"))
    rows.append(("subset", f"{report.subset_accuracy:.4f}", ""))
    rows.append(("n_samples", str(report.n_samples), ""))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


def aggregate_folds(reports):
    """Unweighted mean of every metric field; sample counts are summed."""
    if not reports:
        raise MetricShapeError("aggregate_folds needs at least one report")
    per_label = {
        name: LabelMetrics(
            accuracy=float(np.mean([r.per_label[name].accuracy for r in reports])),
            f1=float(np.mean([r.per_label[name].f1 for r in reports])),
        )
        for name in LABEL_NAMES
    }
    return MetricReport(
        per_label=per_label,
        mean_accuracy=float(np.mean([r.mean_accuracy for r in reports])),
        macro_f1=float(np.mean([r.macro_f1 for r in reports])),
        subset_accuracy=float(np.mean([r.subset_accuracy for r in reports])),
        n_samples=int(sum(r.n_samples for r in reports)),
    )
