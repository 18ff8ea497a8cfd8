"""Novelty-aware emotion recognition: Python access to the native core."""
import json

from . import _naers
from ._naers import (
    NaersError,
    angle_at,
    face_feature_names,
    face_landmark_names,
    gen_synth,
    mismatch,
    posture_feature_names,
    posture_landmark_names,
)

__all__ = [
    "Bundle",
    "NaersError",
    "angle_at",
    "face_feature_names",
    "face_features",
    "face_landmark_names",
    "gen_synth",
    "load_samples",
    "mismatch",
    "posture_feature_names",
    "posture_features",
    "posture_landmark_names",
]


def _text(value):
    return value if isinstance(value, str) else json.dumps(value)


def face_features(face):
    """Geometric face features from a {landmark_name: [x, y]} mapping."""
    return _naers.face_features(_text(face))


def posture_features(posture):
    """Geometric posture features from a {landmark_name: [x, y]} mapping."""
    return _naers.posture_features(_text(posture))


def load_samples(path):
    """Samples from a dataset directory, manifest or JSON-lines file, as dicts."""
    return [json.loads(s) for s in _naers.load_samples(str(path))]


class Bundle:
    """A trained model bundle: classifiers, feature providers and context model."""

    def __init__(self, native):
        self._native = native

    @classmethod
    def load(cls, path):
        return cls(_naers.Bundle.load(str(path)))

    @classmethod
    def train(cls, data, **options):
        return cls(_naers.Bundle.train(str(data), **options))

    def save(self, path):
        self._native.save(str(path))

    def encode(self):
        return self._native.encode()

    @property
    def classes(self):
        return self._native.classes

    @property
    def revision(self):
        return self._native.revision

    def classify(self, sample, modality="face"):
        return self._native.classify(_text(sample), modality)

    def detect(self, sample):
        return json.loads(self._native.detect(_text(sample)))

    def evaluate(self, data, modality="face"):
        return json.loads(self._native.evaluate(str(data), modality))

    def add_class(self, name):
        return self._native.add_class(name)
