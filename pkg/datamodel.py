"""
Typed containers for domains, run configuration and adaptation reports.

All containers are frozen dataclasses validated at construction; pseudo-labels are
replaced through `with_pseudo_labels`, never edited in place.
"""

import logging
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

import config
from errors import ConfigError, DimensionError, EmptyClassError, ParameterError
from linalg import as_feature_matrix

logger = logging.getLogger(__name__)

GRAPH_MODES = ('literal', 'spirit')
MATRIX_MODES = ('literal', 'rank_one_sum')
KERNELS = ('primal', 'linear', 'rbf', 'poly')


def _as_labels(labels, n, what):
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise DimensionError(f"{what} must be 1-D, got shape {labels.shape}")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        if not np.all(np.equal(np.mod(labels, 1), 0)):
            raise ParameterError(f"{what} must be integers")
    labels = labels.astype(np.int64)
    if labels.shape[0] != n:
        raise DimensionError(f"{what} count {labels.shape[0]} does not match sample count {n}")
    if labels.size and labels.min() < 0:
        raise ParameterError(f"{what} must be non-negative")
    labels.setflags(write=False)
    return labels


def _frozen_features(features):
    features = as_feature_matrix(features).copy()
    features.setflags(write=False)
    return features


@dataclass(frozen=True)
class LabeledDomain:
    """Source domain: l x m features with one class label per column."""
    features: np.ndarray
    labels: np.ndarray
    name: str = 'source'

    def __post_init__(self):
        object.__setattr__(self, 'features', _frozen_features(self.features))
        object.__setattr__(self, 'labels', _as_labels(self.labels, self.features.shape[1], 'Labels'))

    @property
    def n_features(self):
        return self.features.shape[0]

    @property
    def n_samples(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class UnlabeledDomain:
    """
    Target domain: l x m features, optional pseudo-labels.

    `true_labels` is kept for evaluation only; adaptation never reads it.
    """
    features: np.ndarray
    pseudo_labels: Optional[np.ndarray] = None
    name: str = 'target'
    true_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, 'features', _frozen_features(self.features))
        m = self.features.shape[1]
        if self.pseudo_labels is not None:
            object.__setattr__(self, 'pseudo_labels', _as_labels(self.pseudo_labels, m, 'Pseudo-labels'))
        if self.true_labels is not None:
            object.__setattr__(self, 'true_labels', _as_labels(self.true_labels, m, 'True labels'))

    @property
    def n_features(self):
        return self.features.shape[0]

    @property
    def n_samples(self):
        return self.features.shape[1]

    def with_pseudo_labels(self, labels):
        return replace(self, pseudo_labels=labels)


@dataclass(frozen=True)
class DomainPair:
    """
    Source and target domains packed as X = [X_S, X_T].

    The type itself accepts class_count >= 1 so that single-class degenerate cases
    can be built; `make_pair` enforces class_count >= 2 for real runs.
    """
    source: LabeledDomain
    target: UnlabeledDomain
    class_count: int

    def __post_init__(self):
        if self.source.n_features != self.target.n_features:
            raise DimensionError(
                f"Feature dimension mismatch: source has {self.source.n_features}, "
                f"target has {self.target.n_features}")
        if self.class_count < 1:
            raise ParameterError(f"class_count must be >= 1, got {self.class_count}")
        if self.source.n_samples < 1 or self.target.n_samples < 1:
            raise ParameterError("Both domains need at least one sample")
        if self.source.labels.max() >= self.class_count:
            raise ParameterError(f"Source label {self.source.labels.max()} >= class_count {self.class_count}")
        counts = np.bincount(self.source.labels, minlength=self.class_count)
        missing = np.flatnonzero(counts == 0)
        if missing.size:
            raise EmptyClassError(f"Source domain has no samples of class(es) {missing.tolist()}")
        pseudo = self.target.pseudo_labels
        if pseudo is not None and pseudo.size and pseudo.max() >= self.class_count:
            raise ParameterError(f"Pseudo-label {pseudo.max()} >= class_count {self.class_count}")

    @property
    def n_source(self):
        return self.source.n_samples

    @property
    def n_target(self):
        return self.target.n_samples

    @property
    def n_samples(self):
        return self.n_source + self.n_target

    @property
    def features(self):
        """Packed l x (n_s + n_t) feature matrix."""
        return np.hstack([self.source.features, self.target.features])

    @property
    def has_pseudo_labels(self):
        return self.target.pseudo_labels is not None

    @property
    def class_presence(self):
        """Boolean mask over classes present in both the source and the target pseudo-labels."""
        present = np.bincount(self.source.labels, minlength=self.class_count) > 0
        if self.target.pseudo_labels is None:
            return np.zeros(self.class_count, dtype=bool)
        return present & (np.bincount(self.target.pseudo_labels, minlength=self.class_count) > 0)

    def with_pseudo_labels(self, labels):
        return replace(self, target=self.target.with_pseudo_labels(labels))


def make_pair(source, target, class_count=None):
    """
    Validate and bundle a source and a target domain.

    Parameters:
    -----------
    source : LabeledDomain
    target : UnlabeledDomain
    class_count : int, optional
        Number of classes; inferred as max source label + 1 when omitted.

    Returns:
    --------
    DomainPair
    """
    if source.n_features != target.n_features:
        raise DimensionError(
            f"Feature dimension mismatch: source has {source.n_features}, target has {target.n_features}")
    if class_count is None:
        class_count = int(source.labels.max()) + 1 if source.n_samples else 0
    if class_count < 2:
        raise ParameterError(f"Domain adaptation needs at least 2 classes, got {class_count}")
    pair = DomainPair(source, target, class_count)
    logger.debug(f"Built pair: n_s={pair.n_source}, n_t={pair.n_target}, l={source.n_features}, C={class_count}")
    return pair


@dataclass(frozen=True)
class AdaptConfig:
    """Hyper-parameters of one adaptation run; defaults come from config.py."""
    dim: int = config.SUBSPACE_DIM
    lam: float = config.LAMBDA
    mu: float = config.MU
    iterations: int = config.ITERATIONS
    kernel: str = config.KERNEL
    sigma: Optional[float] = config.KERNEL_SIGMA
    poly_degree: int = config.POLY_DEGREE
    neighborhood_p: int = config.NEIGHBORHOOD_P
    graph_mode: str = config.GRAPH_MODE
    matrix_mode: str = config.MATRIX_MODE
    keep_off_mask: bool = config.KEEP_OFF_MASK
    laplacian_normalized: bool = config.LAPLACIAN_NORMALIZED
    w_floor: float = config.W_FLOOR
    ridge: Optional[float] = None
    meda_alpha: float = config.MEDA_ALPHA
    meda_rho: float = config.MEDA_RHO
    meda_eta: float = config.MEDA_ETA
    seed: int = config.SEED

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.lam <= 0:
            raise ConfigError(f"lam must be > 0, got {self.lam}")
        if self.mu <= 0:
            raise ConfigError(f"mu must be > 0, got {self.mu}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}, got '{self.kernel}'")
        if self.sigma is not None and self.sigma <= 0:
            raise ConfigError(f"sigma must be > 0 or null for the median heuristic, got {self.sigma}")
        if self.poly_degree < 1:
            raise ConfigError(f"poly_degree must be >= 1, got {self.poly_degree}")
        if self.neighborhood_p < 0:
            raise ConfigError(f"neighborhood_p must be >= 0 (0 = dense), got {self.neighborhood_p}")
        if self.graph_mode not in GRAPH_MODES:
            raise ConfigError(f"graph_mode must be one of {GRAPH_MODES}, got '{self.graph_mode}'")
        if self.matrix_mode not in MATRIX_MODES:
            raise ConfigError(f"matrix_mode must be one of {MATRIX_MODES}, got '{self.matrix_mode}'")
        if self.w_floor <= 0:
            raise ConfigError(f"w_floor must be > 0, got {self.w_floor}")
        if self.ridge is not None and self.ridge < 0:
            raise ConfigError(f"ridge must be >= 0, got {self.ridge}")
        if self.meda_eta <= 0 or self.meda_alpha < 0 or self.meda_rho < 0:
            raise ConfigError("MEDA weights need eta > 0, alpha >= 0, rho >= 0")

    @property
    def alpha(self):
        """Label propagation trade-off in the 1 / (1 + mu) parameterization."""
        return 1.0 / (1.0 + self.mu)

    @classmethod
    def from_dict(cls, data):
        """Build a config from a JSON object; unknown keys are rejected."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown adaptation config key(s): {unknown}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Invalid adaptation config: {e}") from e

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def updated(self, **overrides):
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return AdaptConfig.from_dict({**self.to_dict(), **overrides})


@dataclass
class IterationRecord:
    """What one pseudo-label refresh produced."""
    iteration: int
    objective: float
    churn: int
    eigenvalues: tuple
    pseudo_labels: np.ndarray
    accuracy: Optional[float] = None

    def to_dict(self):
        return {
            'iteration': self.iteration,
            'accuracy': self.accuracy,
            'objective': self.objective,
            'churn': self.churn,
            'eigenvalues': list(self.eigenvalues),
            'pseudo_labels': self.pseudo_labels.tolist(),
        }


@dataclass
class AdaptationReport:
    """Per-iteration trace plus the final projection and labels of one run."""
    model: str
    iterations: list = field(default_factory=list)
    projection: Optional[np.ndarray] = None
    embedding: Optional[np.ndarray] = None
    predicted_labels: Optional[np.ndarray] = None
    baseline_accuracy: Optional[float] = None
    wall_time: float = 0.0
    label_mapping: Optional[dict] = None
    settings: dict = field(default_factory=dict)

    @property
    def final_accuracy(self):
        return self.iterations[-1].accuracy if self.iterations else None

    @property
    def fixed_point_iteration(self):
        """First iteration whose pseudo-labels did not change, or None."""
        for record in self.iterations:
            if record.churn == 0:
                return record.iteration
        return None

    def to_dict(self):
        """JSON-ready view; wall time is left out so stored reports are reproducible."""
        return {
            'model': self.model,
            'baseline_accuracy': self.baseline_accuracy,
            'final_accuracy': self.final_accuracy,
            'fixed_point_iteration': self.fixed_point_iteration,
            'predicted_labels': None if self.predicted_labels is None else self.predicted_labels.tolist(),
            'label_mapping': self.label_mapping,
            'settings': self.settings,
            'iterations': [r.to_dict() for r in self.iterations],
        }
