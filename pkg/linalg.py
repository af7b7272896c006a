"""
Dense symmetric linear algebra for the DB-MMD toolkit.

Feature matrices follow the column convention used throughout the package:
an l x n array whose columns are samples, source columns first.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import pdist, squareform
from sklearn.metrics.pairwise import linear_kernel, polynomial_kernel

import config
from errors import BandwidthError, DimensionError, NumericError, ParameterError

logger = logging.getLogger(__name__)

KERNEL_KINDS = ('linear', 'rbf', 'poly')


@dataclass(frozen=True)
class EigPair:
    """One generalized eigenpair; `vector` has unit B-norm."""
    value: float
    vector: np.ndarray


def as_feature_matrix(X):
    """Return X as a finite 2-D float64 array (columns are samples)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"Feature matrix must be 2-D, got {X.ndim}-D")
    if not np.all(np.isfinite(X)):
        raise ParameterError("Feature matrix contains non-finite entries")
    return X


def symmetrize(A):
    """Average A with its transpose to remove round-off asymmetry."""
    return 0.5 * (A + A.T)


def pairwise_sq_dists(X):
    """
    Squared Euclidean distances between the columns of X.

    Parameters:
    -----------
    X : numpy.ndarray
        l x n feature matrix.

    Returns:
    --------
    numpy.ndarray
        Symmetric n x n matrix with zero diagonal.
    """
    X = as_feature_matrix(X)
    return squareform(pdist(X.T, metric='sqeuclidean'))


def median_bandwidth(sq_dists):
    """Median of the nonzero pairwise distances (not squared)."""
    upper = sq_dists[np.triu_indices_from(sq_dists, k=1)]
    nonzero = upper[upper > 0]
    if nonzero.size == 0:
        raise BandwidthError("All points coincide; the median bandwidth is zero")
    sigma = float(np.median(np.sqrt(nonzero)))
    logger.debug(f"Median heuristic bandwidth: sigma={sigma:.6g} over {nonzero.size} pairs")
    return sigma


def kernel_matrix(X, kind, sigma=None, degree=None):
    """
    Gram matrix K = phi(X)' phi(X) over the columns of X.

    Parameters:
    -----------
    X : numpy.ndarray
        l x n feature matrix.
    kind : str
        One of 'linear', 'rbf', 'poly'.
    sigma : float, optional
        RBF bandwidth; None selects the median heuristic.
    degree : int, optional
        Polynomial degree, defaults to config.POLY_DEGREE.

    Returns:
    --------
    numpy.ndarray
        Symmetric positive semidefinite n x n matrix.
    """
    X = as_feature_matrix(X)
    if kind == 'linear':
        return symmetrize(linear_kernel(X.T))
    if kind == 'rbf':
        sq = pairwise_sq_dists(X)
        if sigma is None:
            sigma = median_bandwidth(sq)
        if sigma <= 0:
            raise BandwidthError(f"RBF bandwidth must be positive, got {sigma}")
        return np.exp(-sq / (2.0 * sigma ** 2))
    if kind == 'poly':
        degree = config.POLY_DEGREE if degree is None else degree
        if int(degree) != degree or degree < 1:
            raise ParameterError(f"Polynomial degree must be an integer >= 1, got {degree}")
        return symmetrize(polynomial_kernel(X.T, degree=int(degree), gamma=1.0, coef0=1.0))
    raise ParameterError(f"Unknown kernel kind '{kind}'. Expected one of {KERNEL_KINDS}")


def centering_matrix(n):
    """H = I - (1/n) 11'."""
    if n < 1:
        raise ParameterError(f"Centering matrix needs n >= 1, got {n}")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def default_ridge(B):
    """Ridge RIDGE_SCALE * trace(B) / n used to make the right-hand operand definite."""
    n = B.shape[0]
    return config.RIDGE_SCALE * float(np.trace(B)) / n


def _fix_signs(vectors):
    # largest-magnitude component of every column made positive (first index on ties)
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def gen_eig_smallest(A, B, k, ridge=None):
    """
    The k smallest eigenpairs of A v = lambda (B + ridge I) v.

    Parameters:
    -----------
    A : numpy.ndarray
        Symmetric n x n left operand.
    B : numpy.ndarray
        Symmetric positive semidefinite n x n right operand.
    k : int
        Number of eigenpairs, 1 <= k <= n.
    ridge : float, optional
        Diagonal shift added to B; None uses default_ridge(B).

    Returns:
    --------
    list of EigPair
        Sorted by ascending eigenvalue, vectors B-orthonormal with a
        deterministic sign (largest-magnitude component positive).
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise DimensionError(f"Pencil operands must be square and equal-sized, got {A.shape} and {B.shape}")
    n = A.shape[0]
    if k < 1 or k > n:
        raise ParameterError(f"Requested {k} eigenpairs from a problem of size {n}")
    if ridge is None:
        ridge = default_ridge(B)
    if ridge < 0:
        raise ParameterError(f"Ridge must be non-negative, got {ridge}")

    A = symmetrize(A)
    B_reg = symmetrize(B) + ridge * np.eye(n)
    try:
        values, vectors = scipy.linalg.eigh(A, B_reg, subset_by_index=[0, k - 1])
    except np.linalg.LinAlgError as e:
        raise NumericError(f"Right-hand operand is not positive definite after ridge {ridge:.3g}: {e}") from e

    vectors = _fix_signs(vectors)

    residual = np.linalg.norm(A @ vectors - (B_reg @ vectors) * values, axis=0)
    bound = config.EIG_RESIDUAL_TOL * (np.linalg.norm(A) + np.abs(values) * np.linalg.norm(B_reg))
    if np.any(residual > bound):
        logger.warning(f"Eigen residual above tolerance: max {residual.max():.3g} (bound {bound.min():.3g})")
    else:
        logger.debug(f"Eigen residual max {residual.max():.3g} for {k} pairs of size {n}")

    return [EigPair(float(values[i]), vectors[:, i].copy()) for i in range(k)]


def stack_vectors(pairs):
    """Columns of the eigenvectors in `pairs` as one n x k matrix."""
    return np.column_stack([p.vector for p in pairs])
