import json
import pickle
import struct
import subprocess
import sys

import numpy as np
import pytest

from deap_convert.cli import main
from deap_convert.convert import ArchiveError, convert, load_archive

N_TRIALS, N_CH, N_SAMPLES = 40, 40, 8064


def fabricate_archive(path, seed=0, scale=50.0):
    """DEAP-shaped pickle: float64 data in a plausible microvolt range."""
    rng = np.random.default_rng(seed)
    data = scale * rng.normal(size=(N_TRIALS, N_CH, N_SAMPLES))
    labels = rng.uniform(1.0, 9.0, size=(N_TRIALS, 4))
    with open(path, "wb") as fh:
        pickle.dump({"data": data, "labels": labels}, fh, protocol=2)
    return data, labels


def read_container(path):
    head = struct.Struct("<4sIBBH")
    raw = path.read_bytes()
    magic, version, dtype, ndim, _ = head.unpack(raw[: head.size])
    assert magic == b"EVKT" and version == 1 and dtype == 1
    dims = struct.unpack(f"<{ndim}Q", raw[head.size : head.size + 8 * ndim])
    payload = raw[head.size + 8 * ndim :]
    return np.frombuffer(payload, dtype="<f4").reshape(dims)


@pytest.fixture(scope="module")
def converted(tmp_path_factory):
    root = tmp_path_factory.mktemp("deap")
    archive = root / "s01.dat"
    data, labels = fabricate_archive(archive, seed=1)
    out = root / "out"
    manifest = convert([str(archive)], out)
    return {"archive": archive, "data": data, "labels": labels, "out": out, "manifest": manifest}


def test_forty_containers_and_rows(converted):
    files = sorted(p.name for p in converted["out"].glob("*.evkt"))
    assert len(files) == 40
    assert len(converted["manifest"]["trials"]) == 40
    assert files[0] == "s01_t001.evkt"


def test_values_match_within_narrowing_tolerance(converted):
    data = converted["data"]
    for ti in (0, 17, 39):
        arr = read_container(converted["out"] / f"s01_t{ti + 1:03d}.evkt")
        assert arr.shape == (32, N_SAMPLES)
        src = data[ti, :32, :]
        rel = np.abs(arr.astype(np.float64) - src) / np.maximum(np.abs(src), 1e-12)
        assert rel.max() < 1e-5


def test_peripheral_channels_dropped(converted):
    arr = read_container(converted["out"] / "s01_t001.evkt")
    assert arr.shape[0] == 32


def test_manifest_rows(converted):
    labels = converted["labels"]
    rows = converted["manifest"]["trials"]
    for ti, row in enumerate(rows):
        assert row["subject"] == "s01"
        assert row["dims"] == [32, N_SAMPLES]
        assert row["ratings"] == [float(x) for x in labels[ti, :3]]  # liking dropped
        assert row["bits"] == [int(r > 5.0) for r in row["ratings"]]
        assert len(row["ratings"]) == 3


def test_threshold_rule_example(tmp_path):
    archive = tmp_path / "s02.dat"
    data, labels = fabricate_archive(archive, seed=2)
    labels[0] = [6.0, 4.0, 5.5, 9.0]
    with open(archive, "wb") as fh:
        pickle.dump({"data": data, "labels": labels}, fh, protocol=2)
    manifest = convert([str(archive)], tmp_path / "out")
    assert manifest["trials"][0]["bits"] == [1, 0, 1]
    assert manifest["trials"][0]["ratings"] == [6.0, 4.0, 5.5]


def test_deterministic_output(tmp_path):
    archive = tmp_path / "s03.dat"
    fabricate_archive(archive, seed=3)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    convert([str(archive)], out_a)
    convert([str(archive)], out_b)
    for pa in sorted(out_a.iterdir()):
        assert pa.read_bytes() == (out_b / pa.name).read_bytes()


def test_shape_mismatch_rejected(tmp_path):
    bad = tmp_path / "bad.dat"
    with open(bad, "wb") as fh:
        pickle.dump({"data": np.zeros((40, 40, 100)), "labels": np.zeros((40, 4))}, fh)
    with pytest.raises(ArchiveError, match="shape"):
        load_archive(str(bad))


def test_unreadable_archive_rejected(tmp_path):
    bad = tmp_path / "junk.dat"
    bad.write_bytes(b"this is not a pickle")
    with pytest.raises(ArchiveError):
        load_archive(str(bad))


def test_cli_exit_codes(tmp_path, capsys):
    archive = tmp_path / "s04.dat"
    fabricate_archive(archive, seed=4)
    assert main([str(archive), "--out", str(tmp_path / "out")]) == 0
    assert main([str(tmp_path / "missing.dat"), "--out", str(tmp_path / "out2")]) == 1


def test_primary_preprocess_consumes_output(converted, tmp_path):
    """The emotion-recognition CLI must accept the converted dataset,
    exercised purely through the file formats and a subprocess."""
    feats = tmp_path / "features"
    proc = subprocess.run(
        [sys.executable, "-m", "evoke", "preprocess",
         "--in", str(converted["out"]), "--out", str(feats)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    manifest = json.loads((feats / "manifest.json").read_text())
    assert manifest["kind"] == "features"
    assert len(manifest["trials"]) == 40
    assert manifest["trials"][0]["dims"] == [60, 4, 9, 9]
