"""Mapping thresholded VAD bits to emotions and avatar identifiers.

Eight (valence, arousal, dominance) bit triples map bijectively onto
eight emotion names, with all-low anchored to neutral; each emotion then
resolves to an opaque avatar identifier through a manifest. Both tables
are JSON-configurable and validated on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .metrics import binarize_predictions
from .tensor import Tensor

NEUTRAL = "neutral"

# PAD-octant style defaults; any bijection with (0,0,0) -> neutral loads.
DEFAULT_TABLE_ENTRIES = {
    (0, 0, 0): "neutral",
    (0, 0, 1): "sad",
    (0, 1, 0): "fear",
    (0, 1, 1): "anger",
    (1, 0, 0): "disgust",
    (1, 0, 1): "happy",
    (1, 1, 0): "surprise",
    (1, 1, 1): "excited",
}

ALL_TRIPLES = tuple((v, a, d) for v in (0, 1) for a in (0, 1) for d in (0, 1))


class EmotionTableError(ValueError):
    """Emotion table is not a valid 8-triple bijection."""


class AvatarManifestError(ValueError):
    """Avatar manifest does not cover the active emotion table."""


@dataclass
class EmotionTable:
    mapping: dict  # (v, a, d) -> emotion name

    def __post_init__(self):
        keys = set(self.mapping)
        if keys != set(ALL_TRIPLES):
            missing = sorted(set(ALL_TRIPLES) - keys)
            extra = sorted(keys - set(ALL_TRIPLES))
            raise EmotionTableError(
                f"table must map exactly the 8 binary triples; missing {missing}, unexpected {extra}"
            )
        names = list(self.mapping.values())
        if len(set(names)) != 8:
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise EmotionTableError(f"emotion names must be distinct, duplicated: {dupes}")
        if self.mapping[(0, 0, 0)] != NEUTRAL:
            raise EmotionTableError(
                f"(0,0,0) must map to {NEUTRAL!r}, got {self.mapping[(0, 0, 0)]!r}"
            )

    @classmethod
    def default(cls):
        return cls(dict(DEFAULT_TABLE_ENTRIES))

    @classmethod
    def from_json(cls, path):
        """Load a JSON array of {v, a, d, emotion} objects."""
        with open(path, "r", encoding="utf-8") as fh:
            entries = json.load(fh)
        if not isinstance(entries, list):
            raise EmotionTableError("table file must hold a JSON array")
        mapping = {}
        for e in entries:
            try:
                key = (int(e["v"]), int(e["a"]), int(e["d"]))
                name = str(e["emotion"])
            except (TypeError, KeyError) as exc:
                raise EmotionTableError(f"table entry {e!r} is missing {exc}") from None
            if key in mapping:
                raise EmotionTableError(f"duplicate triple {key}")
            mapping[key] = name
        return cls(mapping)

    def emotion(self, bits):
        key = tuple(int(b) for b in bits)
        if key not in self.mapping:
            raise EmotionTableError(f"bits {key} are not a binary triple")
        return self.mapping[key]

    def emotions(self):
        return set(self.mapping.values())


@dataclass
class AvatarManifest:
    entries: dict  # emotion name -> {"id": str, "asset_path": str|None}

    @classmethod
    def default(cls, table=None):
        """avatar_00..avatar_07 keyed by the bit value of each triple."""
        table = table or EmotionTable.default()
        entries = {}
        for triple in ALL_TRIPLES:
            value = triple[0] * 4 + triple[1] * 2 + triple[2]
            entries[table.emotion(triple)] = {"id": f"avatar_{value:02d}", "asset_path": None}
        return cls(entries)

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise AvatarManifestError("manifest file must hold a JSON object")
        entries = {}
        for emotion, entry in raw.items():
            if not isinstance(entry, dict) or "id" not in entry:
                raise AvatarManifestError(f"manifest entry for {emotion!r} needs an 'id'")
            entries[str(emotion)] = {"id": str(entry["id"]), "asset_path": entry.get("asset_path")}
        return cls(entries)

    def check_covers(self, table):
        missing = sorted(table.emotions() - set(self.entries))
        if missing:
            raise AvatarManifestError(f"manifest lacks avatars for emotions: {missing}")
        return self

    def avatar(self, emotion):
        if emotion not in self.entries:
            raise KeyError(f"no avatar registered for emotion {emotion!r}")
        return self.entries[emotion]["id"]


def bits_to_emotion(bits, table):
    return table.emotion(bits)


def emotion_to_avatar(emotion, manifest):
    return manifest.avatar(emotion)


@dataclass
class EmotionRecord:
    """One classified window: probabilities, bits, emotion, avatar."""

    probs: tuple
    bits: tuple
    emotion: str
    avatar: str

    def to_dict(self):
        return {
            "probs": list(self.probs),
            "bits": list(self.bits),
            "emotion": self.emotion,
            "avatar": self.avatar,
        }


def classify_window(model, window, table=None, manifest=None):
    """Run one [4, 9, 9] feature window through the full mapping chain."""
    table = table or EmotionTable.default()
    manifest = (manifest or AvatarManifest.default(table)).check_covers(table)
    arr = np.asarray(window, dtype=np.float32)
    if arr.shape != (4, 9, 9):
        raise ValueError(f"window must be [4, 9, 9], got {arr.shape}")
    logits = model.forward(Tensor(arr[None]))
    probs = expit(logits.data)[0]
    bits = tuple(int(b) for b in binarize_predictions(probs))
    emotion = table.emotion(bits)
    return EmotionRecord(
        probs=tuple(float(p) for p in probs),
        bits=bits,
        emotion=emotion,
        avatar=manifest.avatar(emotion),
    )
