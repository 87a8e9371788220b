"""Temperature-scaled knowledge distillation with k-fold training loops.

The student minimizes

    L_distill = alpha * L1 + (1 - alpha) * L2

where L1 is the soft-target loss between teacher probabilities
q = sigmoid(z/T) and student probabilities p = sigmoid(v/T), scaled by
T^2, and L2 is the plain BCE-with-logits between student predictions at
T=1 and the true bits. Both losses reduce as mean over the batch and
sum over the three labels. The teacher stays frozen throughout.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .metrics import MetricReport, aggregate_folds, binarize_predictions, multilabel_metrics
from .models import build_student, build_teacher, load_checkpoint, serialize_checkpoint
from .tensor import (
    Adam,
    Prng,
    ShapeError,
    Tensor,
    ValidationError,
    add,
    backward,
    bce_with_logits,
    scale,
    sigmoid,
)


class TrainingDivergedError(RuntimeError):
    """Loss went non-finite; message carries fold/epoch/batch."""


@dataclass
class DistillConfig:
    """Distillation hyperparameters; defaults are the operating point."""

    T: float = 1.25
    alpha: float = 0.25
    lr: float = 1e-3
    batch_size: int = 128
    epochs: int = 100
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.T <= 0:
            raise ValidationError(f"temperature must be positive, got {self.T}")
        if not (0.0 <= self.alpha <= 1.0):
            raise ValidationError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass
class FoldReport:
    """Per-fold training trace and validation metrics."""

    fold: int
    train_losses: list  # mean loss per epoch
    metrics: MetricReport
    val_trial_ids: list

    def to_dict(self):
        return {
            "fold": self.fold,
            "train_losses": list(self.train_losses),
            "metrics": self.metrics.to_dict(),
            "val_trial_ids": list(self.val_trial_ids),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            fold=int(d["fold"]),
            train_losses=list(d["train_losses"]),
            metrics=MetricReport.from_dict(d["metrics"]),
            val_trial_ids=list(d["val_trial_ids"]),
        )


def save_fold_reports(reports, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in reports], fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_fold_reports(path):
    with open(path, "r", encoding="utf-8") as fh:
        return [FoldReport.from_dict(d) for d in json.load(fh)]


# ---------------------------------------------------------------------------
# losses


def temperature_sigmoid(logits, T):
    """sigmoid(z/T); T=1 is the plain sigmoid, larger T softens toward 0.5."""
    if T <= 0:
        raise ValidationError(f"temperature must be positive, got {T}")
    return sigmoid(scale(logits, 1.0 / float(T)))


def soft_target_loss(teacher_logits, student_logits, T):
    """Soft-target loss L1 = T^2 * BCE(q, p) with q, p at temperature T.

    Teacher logits are treated as constants; gradients flow only into
    the student side.
    """
    if T <= 0:
        raise ValidationError(f"temperature must be positive, got {T}")
    if teacher_logits.dims != student_logits.dims:
        raise ShapeError(
            f"soft_target_loss: teacher dims {tuple(teacher_logits.dims)} != "
            f"student dims {tuple(student_logits.dims)}"
        )
    T = float(T)
    q = Tensor(expit(teacher_logits.data / T), dtype=student_logits.dtype)
    return scale(bce_with_logits(scale(student_logits, 1.0 / T), q), T * T)


def hard_loss(student_logits, labels):
    """Hard loss L2: BCE-with-logits against the true bits at T=1."""
    y = labels.data if isinstance(labels, Tensor) else np.asarray(labels)
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValidationError("hard_loss labels must be binary")
    targets = labels if isinstance(labels, Tensor) else Tensor(y, dtype=student_logits.dtype)
    return bce_with_logits(student_logits, targets)


def distill_loss(teacher_logits, student_logits, labels, cfg):
    """alpha * L1 + (1 - alpha) * L2."""
    l1 = soft_target_loss(teacher_logits, student_logits, cfg.T)
    l2 = hard_loss(student_logits, labels)
    return add(scale(l1, cfg.alpha), scale(l2, 1.0 - cfg.alpha))


# ---------------------------------------------------------------------------
# cross-validation machinery


def kfold_split(n_items, k, seed):
    """k disjoint index arrays covering range(n_items), sizes within 1."""
    if k < 2:
        raise ValidationError(f"need at least 2 folds, got {k}")
    if n_items < k:
        raise ValidationError(f"cannot split {n_items} items into {k} folds")
    perm = Prng(seed).derive("kfold").permutation(n_items)
    return [np.sort(chunk) for chunk in np.array_split(perm, k)]


def _batches(order, batch_size):
    for start in range(0, order.size, batch_size):
        yield order[start : start + batch_size]


def _evaluate(model, features, labels, batch_size=128):
    # inference only: suspend grad tracking so no graph is recorded
    params = [p for _, p in model.named_params()]
    flags = [p.requires_grad for p in params]
    for p in params:
        p.requires_grad = False
    try:
        probs = []
        for start in range(0, features.shape[0], batch_size):
            logits = model.forward(Tensor(features[start : start + batch_size]))
            probs.append(expit(logits.data))
    finally:
        for p, flag in zip(params, flags):
            p.requires_grad = flag
    probs = np.concatenate(probs, axis=0)
    return multilabel_metrics(binarize_predictions(probs), labels.astype(np.int64))


def _fit_folds(dataset, cfg, build_fn, batch_loss_fn, arch_tag):
    """Train one model per fold; trial-granular splits, seeded shuffles.

    batch_loss_fn(model, idx) must return the scalar loss tensor for the
    windows at `idx`. Returns (fold reports, models, best fold index).
    """
    folds = kfold_split(dataset.n_trials, cfg.folds, cfg.seed)
    root = Prng(cfg.seed)
    reports = []
    models = []
    for fold_i, val_trials in enumerate(folds):
        val_idx = dataset.windows_of_trials(val_trials)
        train_trials = np.setdiff1d(np.arange(dataset.n_trials), val_trials)
        train_idx = dataset.windows_of_trials(train_trials)
        model = build_fn(prng=root.derive(arch_tag, "init", fold_i))
        opt = Adam(model.named_params(), lr=cfg.lr)
        epoch_losses = []
        for epoch in range(cfg.epochs):
            order = train_idx[root.derive(arch_tag, "shuffle", fold_i, epoch).permutation(train_idx.size)]
            batch_losses = []
            for bi, idx in enumerate(_batches(order, cfg.batch_size)):
                loss = batch_loss_fn(model, idx)
                value = float(loss.data)
                if not np.isfinite(value):
                    raise TrainingDivergedError(
                        f"non-finite loss in fold {fold_i}, epoch {epoch}, batch {bi}"
                    )
                opt.zero_grad()
                backward(loss)
                loss = None  # drop the graph before the next forward allocates
                opt.step()
                batch_losses.append(value)
            epoch_losses.append(float(np.mean(batch_losses)))
        metrics = _evaluate(model, dataset.features[val_idx], dataset.labels[val_idx])
        reports.append(
            FoldReport(
                fold=fold_i,
                train_losses=epoch_losses,
                metrics=metrics,
                val_trial_ids=[dataset.trial_ids[t] for t in val_trials],
            )
        )
        models.append(model)
    best = max(range(len(reports)), key=lambda i: (reports[i].metrics.mean_accuracy, -i))
    return reports, models, best


def _training_meta(phase, cfg, reports, best):
    return {
        "phase": phase,
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "folds": cfg.folds,
        "lr": cfg.lr,
        "batch_size": cfg.batch_size,
        "T": cfg.T,
        "alpha": cfg.alpha,
        "fold": best,
        "final_losses": [r.train_losses[-1] for r in reports],
        "val_trial_ids": reports[best].val_trial_ids,
        "mean_accuracy": aggregate_folds([r.metrics for r in reports]).mean_accuracy,
    }


def train_teacher(dataset, cfg):
    """Pretrain the teacher from scratch with plain BCE under k-fold CV.

    Returns (checkpoint bytes, fold reports). The checkpoint holds the
    model of the best-validation fold, trained on that fold's training
    split only.
    """

    def batch_loss(model, idx):
        logits = model.forward(Tensor(dataset.features[idx]))
        return hard_loss(logits, Tensor(dataset.labels[idx]))

    reports, models, best = _fit_folds(dataset, cfg, build_teacher, batch_loss, "teacher")
    blob = serialize_checkpoint(models[best], _training_meta("teacher-scratch", cfg, reports, best))
    return blob, reports


def teacher_logits(teacher, features, batch_size=256):
    """Frozen-teacher logits for every window; no graph is recorded."""
    out = []
    for start in range(0, features.shape[0], batch_size):
        out.append(teacher.forward(Tensor(features[start : start + batch_size])).data)
    return np.concatenate(out, axis=0)


def distill_student(teacher, dataset, cfg):
    """Distill a student against a frozen teacher under k-fold CV.

    `teacher` is a checkpoint path or a loaded Model; its parameters are
    never touched. Returns (checkpoint bytes, fold reports).
    """
    if isinstance(teacher, (str, bytes)) or hasattr(teacher, "__fspath__"):
        teacher = load_checkpoint(teacher)
    teacher.freeze()
    z_all = teacher_logits(teacher, dataset.features)

    def batch_loss(model, idx):
        v = model.forward(Tensor(dataset.features[idx]))
        z = Tensor(z_all[idx])
        return distill_loss(z, v, Tensor(dataset.labels[idx]), cfg)

    reports, models, best = _fit_folds(dataset, cfg, build_student, batch_loss, "student")
    blob = serialize_checkpoint(models[best], _training_meta("student-distill", cfg, reports, best))
    return blob, reports


def train_student_scratch(dataset, cfg):
    """Student trained on hard labels only; the alpha=0 reference path."""

    def batch_loss(model, idx):
        logits = model.forward(Tensor(dataset.features[idx]))
        return hard_loss(logits, Tensor(dataset.labels[idx]))

    reports, models, best = _fit_folds(dataset, cfg, build_student, batch_loss, "student")
    blob = serialize_checkpoint(models[best], _training_meta("student-scratch", cfg, reports, best))
    return blob, reports


# ---------------------------------------------------------------------------
# hyperparameter sweep


@dataclass
class SweepResult:
    """Grid of distillation runs, ordered by (T, alpha)."""

    rows: list = field(default_factory=list)  # per-fold dicts
    aggregates: list = field(default_factory=list)  # per grid point dicts

    def to_json(self, path=None):
        text = json.dumps({"rows": self.rows, "aggregates": self.aggregates}, indent=2, sort_keys=True)
        if path:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["T", "alpha", "fold", "accuracy", "f1"])
        for row in self.rows:
            writer.writerow([row["T"], row["alpha"], row["fold"], row["accuracy"], row["f1"]])
        text = buf.getvalue()
        if path:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def sweep(teacher, dataset, T_list, alpha_list, cfg):
    """Distill once per (T, alpha) grid point and tabulate accuracy/F1."""
    if not T_list or not alpha_list:
        raise ValidationError("sweep needs non-empty T and alpha lists")
    if isinstance(teacher, (str, bytes)) or hasattr(teacher, "__fspath__"):
        teacher = load_checkpoint(teacher)
    teacher.freeze()
    result = SweepResult()
    for T in sorted(T_list):
        for alpha in sorted(alpha_list):
            point_cfg = replace(cfg, T=float(T), alpha=float(alpha))
            _, reports = distill_student(teacher, dataset, point_cfg)
            for r in reports:
                result.rows.append(
                    {
                        "T": float(T),
                        "alpha": float(alpha),
                        "fold": r.fold,
                        "accuracy": r.metrics.mean_accuracy,
                        "f1": r.metrics.macro_f1,
                    }
                )
            agg = aggregate_folds([r.metrics for r in reports])
            result.aggregates.append(
                {
                    "T": float(T),
                    "alpha": float(alpha),
                    "accuracy": agg.mean_accuracy,
                    "f1": agg.macro_f1,
                }
            )
    return result
