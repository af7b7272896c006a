"""
Adaptation algorithms: JDA, CDDA, DGA-DA and MEDA with their compacting-graph (+CG)
and full decision-boundary (+DB) variants.

Each run alternates between learning a projection (or, for MEDA, a labeling
function) from the current target pseudo-labels and refreshing those labels,
until they stop changing or the iteration cap is reached.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np
from sklearn.decomposition import PCA

from boundary_graph import build_affinity, build_graphs, build_laplacian, reweight
from classify import (accuracy, fit_structural_risk, hard_labels, nn_classify, one_hot,
                      propagate_labels)
from datamodel import AdaptationReport, IterationRecord
from errors import (AdaptationError, ConfigError, DbMmdError, DimensionError, ParameterError,
                    StateError, UnsupportedModelError)
from linalg import centering_matrix, gen_eig_smallest, kernel_matrix, stack_vectors
from mmd import build_mmd_matrices

logger = logging.getLogger(__name__)

BASES = ('JDA', 'CDDA', 'DGA_DA', 'MEDA')
BOUNDARIES = ('none', 'CG', 'DB')


@dataclass(frozen=True)
class ModelKind:
    """A baseline model plus the boundary terms layered on top of it."""
    base: str
    boundary: str = 'none'

    def __post_init__(self):
        if self.base not in BASES:
            raise UnsupportedModelError(f"Unknown base model '{self.base}'. Expected one of {BASES}")
        if self.boundary not in BOUNDARIES:
            raise UnsupportedModelError(f"Unknown boundary '{self.boundary}'. Expected one of {BOUNDARIES}")
        if self.base == 'MEDA' and self.boundary == 'DB':
            raise UnsupportedModelError("MEDA has no repulsive term, so MEDA+DB does not exist")

    @classmethod
    def parse(cls, text):
        """Parse names such as 'JDA', 'cdda+db' or 'DGA-DA+CG'."""
        if isinstance(text, ModelKind):
            return text
        parts = str(text).strip().upper().split('+')
        if len(parts) > 2 or not parts[0]:
            raise UnsupportedModelError(f"Cannot parse model name '{text}'")
        base = parts[0].replace('-', '_')
        boundary = parts[1] if len(parts) == 2 else 'none'
        return cls(base, boundary)

    @property
    def name(self):
        return self.base if self.boundary == 'none' else f"{self.base}+{self.boundary}"

    @property
    def baseline(self):
        return ModelKind(self.base)

    @property
    def has_repulsion(self):
        return self.base in ('CDDA', 'DGA_DA')


@dataclass(frozen=True)
class DbMatrix:
    """M0 + compacting term - separation term for one model kind."""
    entries: np.ndarray
    kind: ModelKind


@dataclass(frozen=True)
class Projection:
    matrix: np.ndarray
    eigenvalues: tuple
    embedded: np.ndarray
    objective: float


def assemble_db(mmd, graphs, kind, keep_off_mask=True):
    """
    Combine the MMD matrices of one pseudo-labeling into the model's coefficient matrix.

    JDA: M0 + sum M_c. CDDA and DGA-DA subtract M_{S->T} + M_{T->S}.
    +CG reweights sum M_c with G_CG; +DB also reweights the repulsive sum with G_SG.
    """
    kind = ModelKind.parse(kind)
    if kind.boundary != 'none' and graphs is None:
        raise StateError(f"{kind.name} needs boundary graphs")

    compact = mmd.mc_sum
    if kind.boundary in ('CG', 'DB'):
        compact = reweight(mmd.mc_sum, graphs.g_cg, graphs.cg_mask, graphs.mode, keep_off_mask)
    entries = mmd.m0 + compact

    if kind.has_repulsion:
        repulsive = mmd.repulsive_sum
        if kind.boundary == 'DB':
            repulsive = reweight(repulsive, graphs.g_sg, graphs.sg_mask, graphs.mode, keep_off_mask)
        entries = entries - repulsive

    return DbMatrix(entries=entries, kind=kind)


def solve_projection(S, db, k, lam, ridge=None):
    """
    Solve (S DB S' + lam I) A = S H S' A Phi for the k smallest eigenvectors.

    Parameters:
    -----------
    S : numpy.ndarray
        Features X (l x n, primal) or kernel matrix K (n x n).
    db : numpy.ndarray or DbMatrix
        n x n coefficient matrix.
    k : int
        Subspace dimension; clipped to the size of S with a warning.
    lam : float
        Regularization weight, > 0.
    ridge : float, optional
        Ridge for the constraint operand, see linalg.gen_eig_smallest.

    Returns:
    --------
    Projection
        A, its eigenvalues, the embedding Z = A'S and the objective
        tr(A' S DB S' A) + lam ||A||_F^2.
    """
    entries = db.entries if isinstance(db, DbMatrix) else np.asarray(db, dtype=np.float64)
    n = entries.shape[0]
    if S.shape[1] != n:
        raise DimensionError(f"Representation has {S.shape[1]} samples, DB matrix has {n}")
    if lam <= 0:
        raise ParameterError(f"lambda must be > 0, got {lam}")
    size = S.shape[0]
    if k > size:
        logger.warning(f"Subspace dimension {k} exceeds problem size {size}; using {size}")
        k = size

    left = np.linalg.multi_dot([S, entries, S.T]) + lam * np.eye(size)
    right = np.linalg.multi_dot([S, centering_matrix(n), S.T])
    pairs = gen_eig_smallest(left, right, k, ridge)
    A = stack_vectors(pairs)
    objective = float(np.trace(np.linalg.multi_dot([A.T, left, A])))
    return Projection(matrix=A, eigenvalues=tuple(p.value for p in pairs),
                      embedded=A.T @ S, objective=objective)


def _representation(X, cfg):
    if cfg.kernel == 'primal':
        return X
    return kernel_matrix(X, cfg.kernel, cfg.sigma, cfg.poly_degree)


def _label_target(Z, pair, kind, cfg):
    """New target labels from the embedding: 1-NN, refined by label propagation for DGA-DA."""
    ns = pair.n_source
    ys = pair.source.labels
    nearest = nn_classify(Z[:, :ns], ys, Z[:, ns:])
    if kind.base != 'DGA_DA':
        return nearest

    W = build_affinity(Z, None, cfg.neighborhood_p)
    L = build_laplacian(W, cfg.laplacian_normalized)
    Y0 = one_hot(np.concatenate([ys, nearest]), pair.class_count)
    clamped = np.arange(pair.n_samples) < ns
    F = propagate_labels(L, Y0, cfg.mu, clamped)
    return hard_labels(F[ns:])


def _start(pair, cfg, kind, base_classifier, label_mapping):
    """Initial pseudo-labels and an empty report with the unadapted 1-NN baseline."""
    Xs, ys, Xt = pair.source.features, pair.source.labels, pair.target.features
    truth = pair.target.true_labels
    baseline_labels = nn_classify(Xs, ys, Xt)
    baseline = accuracy(baseline_labels, truth) if truth is not None else None
    if pair.has_pseudo_labels:
        labels = pair.target.pseudo_labels
    elif base_classifier is nn_classify:
        labels = baseline_labels
    else:
        labels = np.asarray(base_classifier(Xs, ys, Xt))
    settings = {**cfg.to_dict(), 'label_alpha': cfg.alpha, 'model': kind.name}
    report = AdaptationReport(model=kind.name, baseline_accuracy=baseline,
                              label_mapping=label_mapping, settings=settings)
    if baseline is not None:
        logger.info(f"{kind.name}: unadapted 1-NN accuracy {baseline:.4f}")
    return pair.with_pseudo_labels(labels), report


def _record(report, pair, new_labels, iteration, objective, eigenvalues, cfg):
    truth = pair.target.true_labels
    churn = int(np.count_nonzero(new_labels != pair.target.pseudo_labels))
    acc = accuracy(new_labels, truth) if truth is not None else None
    report.iterations.append(IterationRecord(
        iteration=iteration, objective=objective, churn=churn,
        eigenvalues=tuple(eigenvalues), pseudo_labels=np.array(new_labels), accuracy=acc))
    acc_text = f"{acc:.4f}" if acc is not None else "n/a"
    logger.info(f"{report.model} iteration {iteration}/{cfg.iterations}: "
                f"accuracy={acc_text} churn={churn} objective={objective:.6g}")
    return churn


def run_adaptation(pair, cfg, kind, base_classifier=nn_classify, label_mapping=None):
    """
    Iterate projection learning and pseudo-label refresh for one model.

    Parameters:
    -----------
    pair : DomainPair
        Source/target pair; existing target pseudo-labels seed the first iteration.
    cfg : AdaptConfig
    kind : ModelKind or str
    base_classifier : callable, optional
        (train, train_labels, query) -> labels used when the target has no
        pseudo-labels yet. Defaults to 1-NN in input space.
    label_mapping : dict, optional
        Original label values keyed by dense class index, copied into the report.

    Returns:
    --------
    AdaptationReport
    """
    kind = ModelKind.parse(kind)
    if kind.base == 'MEDA':
        return _run_meda(pair, cfg, kind, base_classifier, label_mapping)

    start_time = time.perf_counter()
    pair, report = _start(pair, cfg, kind, base_classifier, label_mapping)
    X = pair.features
    ns = pair.n_source

    try:
        S = _representation(X, cfg)
        affinity = build_affinity(X, cfg.sigma, 0) if kind.boundary != 'none' else None
    except DbMmdError as e:
        raise AdaptationError(f"{kind.name} failed during setup: {e}", kind.name, 0) from e

    projection = None
    for iteration in range(1, cfg.iterations + 1):
        try:
            matrices = build_mmd_matrices(pair, cfg.matrix_mode)
            graphs = None
            if affinity is not None:
                graphs = build_graphs(pair, affinity, matrices.masks, cfg.graph_mode, cfg.w_floor)
            db = assemble_db(matrices, graphs, kind, cfg.keep_off_mask)
            projection = solve_projection(S, db, cfg.dim, cfg.lam, cfg.ridge)
            new_labels = _label_target(projection.embedded, pair, kind, cfg)
        except DbMmdError as e:
            raise AdaptationError(f"{kind.name} failed at iteration {iteration}: {e}",
                                  kind.name, iteration) from e

        churn = _record(report, pair, new_labels, iteration, projection.objective,
                        projection.eigenvalues, cfg)
        pair = pair.with_pseudo_labels(new_labels)
        if churn == 0:
            logger.info(f"{kind.name}: pseudo-labels fixed after {iteration} iterations")
            break

    report.projection = projection.matrix
    report.embedding = projection.embedded
    report.predicted_labels = np.array(pair.target.pseudo_labels)
    report.wall_time = time.perf_counter() - start_time
    logger.debug(f"{kind.name}: {len(report.iterations)} iterations, n_s={ns}, "
                 f"wall time {report.wall_time:.2f}s")
    return report


def _structural_risk(K, beta, Y, labeled, M, L, cfg, eta):
    F = K @ beta
    fit = float(np.sum((labeled[:, None] * (Y - F)) ** 2))
    norm = eta * float(np.trace(beta.T @ F))
    graph = float(np.trace(np.linalg.multi_dot([beta.T, K, cfg.meda_alpha * M + cfg.meda_rho * L, F])))
    return fit + norm + graph


def meda_features(X, dim):
    """
    Joint-domain PCA coordinates (dim x n) the MEDA kernel is built on.

    With dim >= the feature count the features are returned as they are.
    """
    if dim >= X.shape[0]:
        return X
    if dim < 1:
        raise ParameterError(f"MEDA subspace dimension must be >= 1, got {dim}")
    pca = PCA(n_components=dim, svd_solver='full')
    Z = pca.fit_transform(X.T).T
    logger.debug(f"MEDA features: {X.shape[0]} -> {dim} dims, "
                 f"{pca.explained_variance_ratio_.sum():.3f} of the variance kept")
    return Z


def _run_meda(pair, cfg, kind, base_classifier=nn_classify, label_mapping=None):
    if cfg.kernel == 'primal':
        raise ConfigError(f"{kind.name} works on a kernel expansion; set kernel to linear, rbf or poly")

    start_time = time.perf_counter()
    pair, report = _start(pair, cfg, kind, base_classifier, label_mapping)
    ns, n = pair.n_source, pair.n_samples
    labeled = (np.arange(n) < ns).astype(np.float64)

    try:
        X = meda_features(pair.features, cfg.dim)
        K = kernel_matrix(X, cfg.kernel, cfg.sigma, cfg.poly_degree)
        L = build_laplacian(build_affinity(X, cfg.sigma, cfg.neighborhood_p), cfg.laplacian_normalized)
        affinity = build_affinity(X, cfg.sigma, 0) if kind.boundary != 'none' else None
    except DbMmdError as e:
        raise AdaptationError(f"{kind.name} failed during setup: {e}", kind.name, 0) from e

    beta = None
    for iteration in range(1, cfg.iterations + 1):
        try:
            matrices = build_mmd_matrices(pair, cfg.matrix_mode)
            graphs = None
            if affinity is not None:
                graphs = build_graphs(pair, affinity, matrices.masks, cfg.graph_mode, cfg.w_floor)
            M = assemble_db(matrices, graphs, kind, cfg.keep_off_mask).entries
            Y = one_hot(np.concatenate([pair.source.labels, pair.target.pseudo_labels]), pair.class_count)
            beta, eta = fit_structural_risk(K, Y, labeled, M, L, cfg.meda_alpha, cfg.meda_rho, cfg.meda_eta)
        except DbMmdError as e:
            raise AdaptationError(f"{kind.name} failed at iteration {iteration}: {e}",
                                  kind.name, iteration) from e

        new_labels = np.argmax((K @ beta)[ns:], axis=1)
        objective = _structural_risk(K, beta, Y, labeled, M, L, cfg, eta)
        churn = _record(report, pair, new_labels, iteration, objective, (), cfg)
        pair = pair.with_pseudo_labels(new_labels)
        if churn == 0:
            logger.info(f"{kind.name}: pseudo-labels fixed after {iteration} iterations")
            break

    report.projection = beta
    report.embedding = (K @ beta).T
    report.predicted_labels = np.array(pair.target.pseudo_labels)
    report.wall_time = time.perf_counter() - start_time
    return report


def run_meda_cg(pair, cfg, base_classifier=nn_classify, label_mapping=None):
    """MEDA with its MMD term reweighted by the compacting graph."""
    return _run_meda(pair, cfg, ModelKind('MEDA', 'CG'), base_classifier, label_mapping)
