"""
Seeded synthetic source/target pairs for desk-scale benchmarks.
"""

import hashlib
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

import config
from data_loader import save_features
from datamodel import LabeledDomain, UnlabeledDomain, make_pair
from errors import ConfigError

logger = logging.getLogger(__name__)

SHIFT_KINDS = ('rotation', 'translation', 'scale')
LAYOUTS = ('circle', 'line')


@dataclass(frozen=True)
class SyntheticRecipe:
    """
    Gaussian classes placed on a circle in the first two features, or evenly
    spaced along the first feature with layout='line'.

    shift_value is degrees for 'rotation' (about `pivot`), an offset added to
    every feature for 'translation', and a noise multiplier for 'scale'.
    """
    class_count: int = config.SYNTH_CLASSES
    per_class: int = config.SYNTH_PER_CLASS
    feature_dim: int = config.SYNTH_FEATURE_DIM
    shift_kind: str = config.SYNTH_SHIFT_KIND
    shift_value: float = config.SYNTH_SHIFT_VALUE
    noise: float = config.SYNTH_NOISE
    center_spread: float = config.SYNTH_CENTER_SPREAD
    layout: str = config.SYNTH_LAYOUT
    pivot: tuple = config.SYNTH_PIVOT
    seed: int = config.SEED

    def __post_init__(self):
        if self.class_count < 2:
            raise ConfigError(f"class_count must be >= 2, got {self.class_count}")
        if self.per_class < 1 or self.feature_dim < 1:
            raise ConfigError("per_class and feature_dim must be >= 1")
        if self.shift_kind not in SHIFT_KINDS:
            raise ConfigError(f"shift_kind must be one of {SHIFT_KINDS}, got '{self.shift_kind}'")
        if self.shift_kind == 'rotation' and self.feature_dim < 2:
            raise ConfigError("rotation needs feature_dim >= 2")
        if self.shift_kind == 'scale' and self.shift_value < 0:
            raise ConfigError(f"scale factor must be >= 0, got {self.shift_value}")
        if self.noise < 0:
            raise ConfigError(f"noise must be >= 0, got {self.noise}")
        if self.layout not in LAYOUTS:
            raise ConfigError(f"layout must be one of {LAYOUTS}, got '{self.layout}'")
        try:
            pivot = tuple(float(v) for v in self.pivot)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"pivot must be two numbers, got {self.pivot!r}") from e
        if len(pivot) != 2:
            raise ConfigError(f"pivot must be two numbers, got {self.pivot!r}")
        # JSON hands lists over; keep the frozen recipe hashable
        object.__setattr__(self, 'pivot', pivot)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown synthetic recipe key(s): {unknown}")
        return cls(**data)

    def to_dict(self):
        data = asdict(self)
        data['pivot'] = list(self.pivot)
        return data


def class_centers(recipe):
    """C x l matrix of class means, on a circle of radius center_spread or a centred line."""
    centers = np.zeros((recipe.class_count, recipe.feature_dim))
    angles = 2.0 * np.pi * np.arange(recipe.class_count) / recipe.class_count
    if recipe.layout == 'line':
        centers[:, 0] = recipe.center_spread * (np.arange(recipe.class_count) - (recipe.class_count - 1) / 2.0)
    elif recipe.feature_dim == 1:
        centers[:, 0] = recipe.center_spread * np.arange(recipe.class_count)
    else:
        centers[:, 0] = recipe.center_spread * np.cos(angles)
        centers[:, 1] = recipe.center_spread * np.sin(angles)
    return centers


def _rotate(points, degrees, pivot=(0.0, 0.0)):
    theta = np.deg2rad(degrees)
    rotation = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    centre = np.asarray(pivot, dtype=np.float64)
    rotated = points.copy()
    rotated[:, :2] = (points[:, :2] - centre) @ rotation.T + centre
    return rotated


def _draw(rng, centers, per_class, noise):
    labels = np.repeat(np.arange(centers.shape[0]), per_class)
    points = centers[labels] + noise * rng.standard_normal((labels.shape[0], centers.shape[1]))
    return points, labels


def generate_synthetic(recipe):
    """
    Draw a DomainPair from a recipe.

    The source is drawn from the class Gaussians; the target is a fresh draw from the
    same Gaussians passed through the shift. True target labels are kept on the target
    domain for evaluation.
    """
    rng = np.random.default_rng(recipe.seed)
    centers = class_centers(recipe)
    source_points, source_labels = _draw(rng, centers, recipe.per_class, recipe.noise)

    if recipe.shift_kind == 'scale':
        target_points, target_labels = _draw(rng, centers, recipe.per_class, recipe.noise * recipe.shift_value)
    else:
        target_points, target_labels = _draw(rng, centers, recipe.per_class, recipe.noise)
        if recipe.shift_kind == 'rotation':
            target_points = _rotate(target_points, recipe.shift_value, recipe.pivot)
        else:
            target_points = target_points + recipe.shift_value

    logger.info(f"Synthetic pair: C={recipe.class_count}, {recipe.per_class}/class, l={recipe.feature_dim}, "
                f"{recipe.shift_kind}({recipe.shift_value}), {recipe.layout} layout, noise={recipe.noise}, seed={recipe.seed}")
    source = LabeledDomain(source_points.T, source_labels, name='synthetic_source')
    target = UnlabeledDomain(target_points.T, name='synthetic_target', true_labels=target_labels)
    return make_pair(source, target, recipe.class_count)


def feature_digest(pair):
    """SHA-256 over the float64 features and the labels of a pair, for pinning generated data."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(pair.features, dtype='<f8').tobytes())
    digest.update(np.ascontiguousarray(pair.source.labels, dtype='<i8').tobytes())
    if pair.target.true_labels is not None:
        digest.update(np.ascontiguousarray(pair.target.true_labels, dtype='<i8').tobytes())
    return digest.hexdigest()


def write_synthetic(recipe, out_dir, fmt='csv'):
    """
    Write source and target files for a recipe; the target keeps its labels for scoring.

    Returns:
    --------
    tuple
        (source path, target path)
    """
    pair = generate_synthetic(recipe)
    out_dir = Path(out_dir)
    suffix = 'csv' if fmt == 'csv' else 'f64'
    source_path = out_dir / f"source.{suffix}"
    target_path = out_dir / f"target.{suffix}"
    save_features(source_path, pair.source.features, pair.source.labels, fmt)
    save_features(target_path, pair.target.features, pair.target.true_labels, fmt)
    return source_path, target_path
