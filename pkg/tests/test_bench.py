import json

import pytest

from evoke.bench import BenchReport, compare, format_table, measure, measure_multiworker
from evoke.models import build_student, build_teacher, count_params
from evoke.tensor import Prng, ValidationError


@pytest.fixture(scope="module")
def student_report():
    model = build_student(prng=Prng(0)).freeze()
    return measure(model, batch_size=8, iterations=10, warmup=1, prng=Prng(0))


class TestMeasure:
    def test_latency_fields_sane(self, student_report):
        r = student_report
        assert r.mean_ms > 0
        assert r.median_ms > 0
        assert r.p95_ms >= r.median_ms >= 0
        assert r.iterations == 10
        assert r.batch_size == 8

    def test_throughput_definitionally_consistent(self, student_report):
        r = student_report
        implied = r.batch_size / (r.mean_ms / 1e3)
        assert abs(implied - r.throughput_per_s) / implied < 0.01

    def test_static_fields(self, student_report):
        model = build_student(prng=Prng(0))
        assert student_report.param_count == count_params(model)
        assert student_report.flops > 0
        assert student_report.checkpoint_bytes > 4 * student_report.param_count

    def test_validation(self):
        model = build_student(prng=Prng(0)).freeze()
        with pytest.raises(ValidationError):
            measure(model, batch_size=1, iterations=5, warmup=1)
        with pytest.raises(ValidationError):
            measure(model, batch_size=1, iterations=10, warmup=0)

    def test_json_round_trip(self, student_report):
        text = json.dumps(student_report.to_dict())
        back = BenchReport.from_dict(json.loads(text))
        assert back == student_report

    def test_batch_doubling_keeps_most_throughput(self):
        # doubling the batch should not cost more than 20% of samples/s
        model = build_student(prng=Prng(0)).freeze()
        small = measure(model, batch_size=16, iterations=30, warmup=3, prng=Prng(0))
        big = measure(model, batch_size=32, iterations=30, warmup=3, prng=Prng(0))
        assert big.throughput_per_s >= 0.8 * small.throughput_per_s

    def test_multiworker_aggregate(self):
        model = build_student(prng=Prng(0)).freeze()
        r = measure_multiworker(model, workers=2, batch_size=4, iterations=10, warmup=1,
                                prng=Prng(0))
        assert r.model == "studentx2"
        assert r.iterations == 20
        assert r.throughput_per_s > 0
        single = measure_multiworker(model, workers=1, batch_size=4, iterations=10, warmup=1,
                                     prng=Prng(0))
        assert single.model == "student"


class TestCompare:
    def test_orders_by_throughput(self, student_report):
        teacher = build_teacher(prng=Prng(0)).freeze()
        treport = measure(teacher, batch_size=8, iterations=10, warmup=1, prng=Prng(0))
        rows = compare([treport, student_report])
        assert rows[0]["throughput_per_s"] >= rows[1]["throughput_per_s"]
        assert rows[0]["model"] == "student"

    def test_ratio_vs_largest(self, student_report):
        teacher = build_teacher(prng=Prng(0)).freeze()
        treport = measure(teacher, batch_size=8, iterations=10, warmup=1, prng=Prng(0))
        rows = compare([treport, student_report])
        by_model = {r["model"]: r for r in rows}
        assert by_model["teacher"]["param_ratio_vs_largest"] == 1.0
        expect = count_params(teacher) / count_params(build_student(prng=Prng(0)))
        assert abs(by_model["student"]["param_ratio_vs_largest"] - expect) < 1e-9
        assert 15.0 <= by_model["student"]["param_ratio_vs_largest"] <= 20.0

    def test_identical_models_ratio_one(self, student_report):
        rows = compare([student_report, student_report])
        assert all(r["param_ratio_vs_largest"] == 1.0 for r in rows)

    def test_needs_two_reports(self, student_report):
        with pytest.raises(ValidationError):
            compare([student_report])

    def test_format_table_is_aligned(self, student_report):
        rows = compare([student_report, student_report])
        text = format_table(rows)
        lines = text.splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("model")
