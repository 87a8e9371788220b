"""Computational comparison of the teacher and student networks.

Parameter and FLOP counts come from closed-form walks over the layer
stack; latency and throughput come from timed forward passes. Absolute
milliseconds are machine-specific; the orderings and ratios are the
meaningful part.
"""

from evoke.bench import compare, format_table, measure
from evoke.models import build_student, build_teacher, count_flops, count_params
from evoke.tensor import Prng

teacher = build_teacher(prng=Prng(0)).freeze()
student = build_student(prng=Prng(0)).freeze()

print("closed-form counts (per sample, MAC = 2 FLOPs, activations counted):")
for name, model in (("teacher", teacher), ("student", student)):
    params = count_params(model)
    flops = count_flops(model, (1, 4, 9, 9))
    print(f"  {name:8s} {params:>9,} params  {flops:>12,} FLOPs  {len(model.layers)} layers")
ratio = count_params(teacher) / count_params(student)
print(f"  parameter ratio: {ratio:.1f}x fewer in the student")

print("\ntimed at batch 128 (50 iterations here; the CLI default is 200):")
reports = [
    measure(teacher, batch_size=128, iterations=50, warmup=5, prng=Prng(0)),
    measure(student, batch_size=128, iterations=50, warmup=5, prng=Prng(0)),
]
print(format_table(compare(reports)))
