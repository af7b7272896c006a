"""
Affinity matrix, compacting / separation graphs and graph Laplacian.

The compacting graph reweights cross-domain same-class pairs (far pairs pulled
harder); the separation graph reweights cross-domain different-class pairs
(close pairs pushed harder).
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import laplacian
from sklearn.neighbors import kneighbors_graph

import config
from errors import ParameterError
from linalg import median_bandwidth, pairwise_sq_dists, symmetrize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AffinityMatrix:
    entries: np.ndarray
    sigma: float
    neighborhood_p: int


@dataclass(frozen=True)
class BoundaryGraphs:
    g_cg: np.ndarray
    g_sg: np.ndarray
    mode: str
    cg_mask: np.ndarray
    sg_mask: np.ndarray


def build_affinity(X, sigma=None, neighborhood_p=0):
    """
    Gaussian affinity w_ij = exp(-||x_i - x_j||^2 / 2 sigma^2) with zero diagonal.

    Parameters:
    -----------
    X : numpy.ndarray
        l x n feature matrix.
    sigma : float, optional
        Bandwidth; None selects the median pairwise distance.
    neighborhood_p : int
        Keep w_ij only when i is among the p nearest neighbours of j or vice
        versa; 0 keeps every pair.

    Returns:
    --------
    AffinityMatrix
    """
    sq = pairwise_sq_dists(X)
    n = sq.shape[0]
    if n < 2:
        raise ParameterError(f"Affinity needs at least 2 points, got {n}")
    if sigma is None:
        sigma = median_bandwidth(sq)
    if sigma <= 0:
        raise ParameterError(f"Affinity bandwidth must be positive, got {sigma}")

    W = np.exp(-sq / (2.0 * sigma ** 2))
    np.fill_diagonal(W, 0.0)

    if neighborhood_p > 0:
        p = min(neighborhood_p, n - 1)
        knn = kneighbors_graph(np.asarray(X).T, n_neighbors=p, mode='connectivity', include_self=False)
        knn = knn.toarray().astype(bool)
        W = np.where(knn | knn.T, W, 0.0)

    return AffinityMatrix(entries=W, sigma=float(sigma), neighborhood_p=int(neighborhood_p))


def build_graphs(pair, W, masks, mode='spirit', w_floor=config.W_FLOOR):
    """
    Compacting graph G_CG and separation graph G_SG.

    Parameters:
    -----------
    pair : DomainPair
        Used for size checks only; the masks carry the label information.
    W : AffinityMatrix
        Dense affinity over all samples.
    masks : mmd.CrossMasks
        Cross-domain same-class and different-class masks.
    mode : str
        'literal': both graphs are -1/max(w, floor) on their masks.
        'spirit': G_CG = 1/max(w, floor) and G_SG = w on their masks.

    Returns:
    --------
    BoundaryGraphs
        Zero outside the masks in both modes.
    """
    w = W.entries
    n = pair.n_samples
    if w.shape != (n, n):
        raise ParameterError(f"Affinity is {w.shape}, expected {(n, n)}")
    inverse = 1.0 / np.maximum(w, w_floor)

    if mode == 'literal':
        g_cg = np.where(masks.same_class, -inverse, 0.0)
        g_sg = np.where(masks.different_class, -inverse, 0.0)
    elif mode == 'spirit':
        g_cg = np.where(masks.same_class, inverse, 0.0)
        g_sg = np.where(masks.different_class, w, 0.0)
    else:
        raise ParameterError(f"Unknown graph mode '{mode}'")

    return BoundaryGraphs(g_cg=g_cg, g_sg=g_sg, mode=mode,
                          cg_mask=masks.same_class, sg_mask=masks.different_class)


def reweight(matrix, graph, mask, mode, keep_off_mask=True):
    """
    Apply a boundary graph to an MMD matrix.

    Literal mode is the plain elementwise product. Spirit mode scales the masked
    entries and, with keep_off_mask, leaves every other entry untouched.
    """
    if mode == 'literal' or not keep_off_mask:
        return graph * matrix
    return np.where(mask, graph * matrix, matrix)


def build_laplacian(W, normalized=False):
    """
    Graph Laplacian L = D - W, or D^-1/2 (D - W) D^-1/2 when normalized.

    Under normalization an isolated vertex keeps a unit diagonal and no off-diagonal entries.
    """
    entries = W.entries if isinstance(W, AffinityMatrix) else np.asarray(W, dtype=np.float64)
    L = laplacian(entries, normed=normalized)
    if normalized:
        isolated = entries.sum(axis=1) == 0
        if isolated.any():
            logger.debug(f"{int(isolated.sum())} isolated vertices in the affinity graph")
            L[isolated, :] = 0.0
            L[:, isolated] = 0.0
            L[isolated, isolated] = 1.0
    return symmetrize(np.asarray(L))
