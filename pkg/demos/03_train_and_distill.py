"""Teacher pretraining and temperature-scaled distillation, in-process.

Generates a small synthetic dataset whose labels are planted in band
power, pretrains the 4-conv teacher with plain BCE under k-fold CV,
then distills the 2-conv student against the frozen teacher with
T=1.25 and alpha=0.25. Desk-scale epochs; the CLI runs the same loop.
"""

import tempfile
from pathlib import Path

from evoke import Prng, synth_dataset, load_windows, load_checkpoint
from evoke.distill import DistillConfig, distill_student, train_teacher
from evoke.metrics import aggregate_folds
from evoke.models import count_params

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    synth_dataset(Prng(42), n_subjects=1, n_trials=40, out_dir=root, trial_secs=3.0)
    data = load_windows(root)
    print(f"dataset: {data.n_trials} trials, {data.n_windows} windows of [4, 9, 9]")

    cfg = DistillConfig(T=1.25, alpha=0.25, epochs=6, folds=3, batch_size=64, seed=42)

    teacher_blob, teacher_reports = train_teacher(data, cfg)
    (root / "teacher.ckpt").write_bytes(teacher_blob)
    agg = aggregate_folds([r.metrics for r in teacher_reports])
    print(f"\nteacher ({count_params(load_checkpoint(root / 'teacher.ckpt')):,} params)")
    print(f"  mean accuracy {agg.mean_accuracy:.3f}, macro F1 {agg.macro_f1:.3f}")
    for r in teacher_reports:
        print(f"  fold {r.fold}: loss {r.train_losses[0]:.3f} -> {r.train_losses[-1]:.3f}")

    student_blob, student_reports = distill_student(root / "teacher.ckpt", data, cfg)
    (root / "student.ckpt").write_bytes(student_blob)
    agg = aggregate_folds([r.metrics for r in student_reports])
    student = load_checkpoint(root / "student.ckpt")
    print(f"\ndistilled student ({count_params(student):,} params, T={cfg.T}, alpha={cfg.alpha})")
    print(f"  mean accuracy {agg.mean_accuracy:.3f}, macro F1 {agg.macro_f1:.3f}")
    print(f"  subset accuracy {agg.subset_accuracy:.3f}")
    print(f"  best fold stored in checkpoint: {student.meta['fold']}")
