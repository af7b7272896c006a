"""
Target-label producers and the accuracy metric.
"""

import logging

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist
from sklearn.metrics import accuracy_score

import config
from errors import DimensionError, NumericError, ParameterError
from linalg import as_feature_matrix

logger = logging.getLogger(__name__)


def nn_classify(train, train_labels, query):
    """
    1-nearest-neighbour labels for the columns of `query`.

    Ties go to the lowest train index.
    """
    train = as_feature_matrix(train)
    query = as_feature_matrix(query)
    train_labels = np.asarray(train_labels)
    if train.shape[1] == 0:
        raise ParameterError("Training set is empty")
    if train.shape[0] != query.shape[0]:
        raise DimensionError(f"Train has {train.shape[0]} features, query has {query.shape[0]}")
    if train_labels.shape[0] != train.shape[1]:
        raise DimensionError("One label per training column is required")
    dists = cdist(query.T, train.T, metric='sqeuclidean')
    return train_labels[np.argmin(dists, axis=1)]


def one_hot(labels, class_count):
    """n x C one-vs-all indicator matrix."""
    labels = np.asarray(labels, dtype=np.int64)
    Y = np.zeros((labels.shape[0], class_count))
    Y[np.arange(labels.shape[0]), labels] = 1.0
    return Y


def propagate_labels(L, Y0, mu, clamped=None):
    """
    Label smoothness propagation F = mu (mu I + L)^-1 Y0.

    F is the stationary point of mu ||F - Y0||_F^2 + tr(F' L F).

    Parameters:
    -----------
    L : numpy.ndarray
        n x n positive semidefinite graph Laplacian.
    Y0 : numpy.ndarray
        n x C initial label distribution.
    mu : float
        Fidelity weight, > 0.
    clamped : numpy.ndarray, optional
        Boolean mask of rows reset to Y0 after solving (the labeled source rows).

    Returns:
    --------
    numpy.ndarray
        n x C propagated scores.
    """
    if mu <= 0:
        raise ParameterError(f"mu must be > 0, got {mu}")
    L = np.asarray(L, dtype=np.float64)
    Y0 = np.asarray(Y0, dtype=np.float64)
    n = L.shape[0]
    if L.shape != (n, n) or Y0.shape[0] != n:
        raise DimensionError(f"Laplacian {L.shape} and labels {Y0.shape} do not agree")
    F = mu * scipy.linalg.solve(mu * np.eye(n) + L, Y0, assume_a='sym')
    if clamped is not None:
        F[clamped] = Y0[clamped]
    return F


def renormalize_rows(F):
    """Scale every row with a positive sum to sum 1."""
    sums = F.sum(axis=1, keepdims=True)
    return np.divide(F, sums, out=F.copy(), where=sums > 0)


def hard_labels(F):
    """Row argmax after renormalization; ties go to the lowest class index."""
    return np.argmax(renormalize_rows(F), axis=1)


def fit_structural_risk(K, Y, labeled, M, L, alpha, rho, eta, escalations=config.RIDGE_ESCALATIONS):
    """
    Closed-form labeling function f = K beta minimizing
    ||E (Y - K beta)||^2 + eta tr(beta' K beta) + tr(beta' K (alpha M + rho L) K beta).

    The stationary point solves ((E + alpha M + rho L) K + eta I) beta = E Y, where E
    is the diagonal indicator of labeled rows. On a singular system eta is
    multiplied by 10 up to `escalations` times.

    Returns:
    --------
    tuple
        (beta, eta_used)
    """
    n = K.shape[0]
    E = np.diag(np.asarray(labeled, dtype=np.float64))
    lhs = (E + alpha * M + rho * L) @ K
    rhs = E @ Y
    current = eta
    for attempt in range(escalations + 1):
        try:
            beta = scipy.linalg.solve(lhs + current * np.eye(n), rhs)
            if np.all(np.isfinite(beta)):
                return beta, current
        except np.linalg.LinAlgError as e:
            logger.debug(f"Structural risk solve failed with eta={current:.3g}: {e}")
        if attempt < escalations:
            logger.warning(f"Singular labeler system; escalating eta from {current:.3g} to {current * 10:.3g}")
            current *= 10.0
    raise NumericError(f"Structural risk system stayed singular up to eta={current:.3g}")


def accuracy(pred, truth):
    """Fraction of matching labels."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape[0] != truth.shape[0]:
        raise DimensionError(f"Prediction count {pred.shape[0]} != truth count {truth.shape[0]}")
    if pred.shape[0] == 0:
        raise ParameterError("Accuracy of an empty label set is undefined")
    return float(accuracy_score(truth, pred))
