import json

import numpy as np
import pytest

from evoke.emotions import (
    ALL_TRIPLES,
    AvatarManifest,
    AvatarManifestError,
    EmotionRecord,
    EmotionTable,
    EmotionTableError,
    bits_to_emotion,
    classify_window,
    emotion_to_avatar,
)
from evoke.models import build_student
from evoke.tensor import Prng


class TestEmotionTable:
    def test_neutral_anchor(self):
        assert bits_to_emotion((0, 0, 0), EmotionTable.default()) == "neutral"

    def test_all_high_is_excited(self):
        assert bits_to_emotion((1, 1, 1), EmotionTable.default()) == "excited"

    def test_bijection_over_8_triples(self):
        table = EmotionTable.default()
        names = {bits_to_emotion(t, table) for t in ALL_TRIPLES}
        assert len(names) == 8

    def test_missing_triple_rejected(self):
        mapping = dict(EmotionTable.default().mapping)
        del mapping[(1, 1, 1)]
        with pytest.raises(EmotionTableError, match="missing"):
            EmotionTable(mapping)

    def test_duplicate_name_rejected(self):
        mapping = dict(EmotionTable.default().mapping)
        mapping[(1, 1, 1)] = "sad"
        with pytest.raises(EmotionTableError, match="duplicated"):
            EmotionTable(mapping)

    def test_wrong_neutral_rejected(self):
        mapping = dict(EmotionTable.default().mapping)
        mapping[(0, 0, 0)], mapping[(1, 0, 1)] = mapping[(1, 0, 1)], mapping[(0, 0, 0)]
        with pytest.raises(EmotionTableError, match="neutral"):
            EmotionTable(mapping)

    def test_json_load(self, tmp_path):
        entries = [
            {"v": v, "a": a, "d": d, "emotion": name}
            for (v, a, d), name in EmotionTable.default().mapping.items()
        ]
        path = tmp_path / "table.json"
        path.write_text(json.dumps(entries))
        table = EmotionTable.from_json(path)
        assert table.mapping == EmotionTable.default().mapping

    def test_custom_bijection_accepted(self, tmp_path):
        names = ["neutral", "calm", "bored", "tense", "elated", "gloomy", "alert", "serene"]
        entries = [
            {"v": t[0], "a": t[1], "d": t[2], "emotion": names[i]}
            for i, t in enumerate(ALL_TRIPLES)
        ]
        path = tmp_path / "table.json"
        path.write_text(json.dumps(entries))
        table = EmotionTable.from_json(path)
        assert table.emotion((0, 0, 0)) == "neutral"
        assert len(table.emotions()) == 8


class TestAvatarManifest:
    def test_default_covers_table(self):
        table = EmotionTable.default()
        manifest = AvatarManifest.default(table)
        for triple in ALL_TRIPLES:
            assert manifest.avatar(table.emotion(triple)).startswith("avatar_")

    def test_neutral_gets_avatar_00(self):
        assert emotion_to_avatar("neutral", AvatarManifest.default()) == "avatar_00"

    def test_unknown_emotion_is_error_not_fallback(self):
        with pytest.raises(KeyError):
            AvatarManifest.default().avatar("melancholy")

    def test_missing_coverage_detected(self):
        table = EmotionTable.default()
        manifest = AvatarManifest.default(table)
        del manifest.entries["happy"]
        with pytest.raises(AvatarManifestError, match="happy"):
            manifest.check_covers(table)

    def test_json_load(self, tmp_path):
        raw = {"neutral": {"id": "n0", "asset_path": "assets/n0.glb"}}
        path = tmp_path / "m.json"
        path.write_text(json.dumps(raw))
        manifest = AvatarManifest.from_json(path)
        assert manifest.avatar("neutral") == "n0"
        assert manifest.entries["neutral"]["asset_path"] == "assets/n0.glb"

    def test_malformed_entry_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"neutral": "n0"}))
        with pytest.raises(AvatarManifestError):
            AvatarManifest.from_json(path)


class TestClassifyWindow:
    def _forced_model(self, logit):
        """Student whose output is constant: zero weights, fixed bias."""
        model = build_student(prng=Prng(0))
        for name, p in model.named_params():
            p.data[:] = 0.0
        final = model.layers[-1]
        final.bias.data[:] = np.asarray(logit, dtype=np.float32)
        return model.freeze()

    def test_saturated_low_is_neutral(self):
        model = self._forced_model([-50.0, -50.0, -50.0])
        record = classify_window(model, np.zeros((4, 9, 9), dtype=np.float32))
        assert record.bits == (0, 0, 0)
        assert record.emotion == "neutral"
        assert record.avatar == "avatar_00"
        assert max(record.probs) < 1e-9

    def test_saturated_high_is_excited(self):
        model = self._forced_model([50.0, 50.0, 50.0])
        record = classify_window(model, np.zeros((4, 9, 9), dtype=np.float32))
        assert record.bits == (1, 1, 1)
        assert record.emotion == "excited"
        assert min(record.probs) > 1.0 - 1e-9

    def test_mixed_corner(self):
        model = self._forced_model([50.0, -50.0, 50.0])
        record = classify_window(model, np.zeros((4, 9, 9), dtype=np.float32))
        assert record.bits == (1, 0, 1)
        assert record.emotion == EmotionTable.default().emotion((1, 0, 1))

    def test_shape_validation(self):
        model = self._forced_model([0.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            classify_window(model, np.zeros((4, 8, 9), dtype=np.float32))

    def test_deterministic(self):
        model = self._forced_model([1.0, -1.0, 0.5])
        rng = np.random.default_rng(0)
        window = rng.normal(size=(4, 9, 9)).astype(np.float32)
        a = classify_window(model, window)
        b = classify_window(model, window)
        assert a == b

    def test_record_to_dict(self):
        record = EmotionRecord(probs=(0.1, 0.2, 0.3), bits=(0, 0, 0), emotion="neutral", avatar="a0")
        d = record.to_dict()
        assert d["emotion"] == "neutral"
        assert d["bits"] == [0, 0, 0]
