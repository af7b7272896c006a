"""
MMD coefficient matrices over the packed sample order [source | target].

For a coefficient vector e, tr(Z e e' Z') is the squared distance between the
weighted means that e selects, which is how every builder below is assembled.
"""

import logging
from dataclasses import dataclass

import numpy as np

from errors import ParameterError, StateError

logger = logging.getLogger(__name__)

DIRECTIONS = ('S->T', 'T->S')


@dataclass(frozen=True)
class CrossMasks:
    """Cross-domain sample pairs split by pseudo-class agreement."""
    same_class: np.ndarray
    different_class: np.ndarray


@dataclass(frozen=True)
class MmdMatrices:
    m0: np.ndarray
    mc_sum: np.ndarray
    m_st: np.ndarray
    m_ts: np.ndarray
    masks: CrossMasks

    @property
    def repulsive_sum(self):
        return self.m_st + self.m_ts


def _packed_labels(pair):
    if not pair.has_pseudo_labels:
        raise StateError("Target pseudo-labels are required; run an initial classifier first")
    return pair.source.labels, pair.target.pseudo_labels


def _membership(pair):
    """Boolean n-vectors selecting each source and each target sub-domain."""
    ys, yt = _packed_labels(pair)
    ns, nt = pair.n_source, pair.n_target
    in_source = [np.concatenate([ys == c, np.zeros(nt, dtype=bool)]) for c in range(pair.class_count)]
    in_target = [np.concatenate([np.zeros(ns, dtype=bool), yt == c]) for c in range(pair.class_count)]
    return in_source, in_target


def _coefficients(plus, minus):
    e = np.zeros(plus.shape[0])
    e[plus] = 1.0 / plus.sum()
    e[minus] = -1.0 / minus.sum()
    return e


def build_marginal(pair):
    """M0 = e e' with e = 1/n_s on the source block and -1/n_t on the target block."""
    ns, nt = pair.n_source, pair.n_target
    e = np.concatenate([np.full(ns, 1.0 / ns), np.full(nt, -1.0 / nt)])
    return np.outer(e, e)


def build_conditional(pair):
    """
    Sum of the per-class MMD matrices M_c.

    Classes missing from either side contribute nothing.
    """
    in_source, in_target = _membership(pair)
    n = pair.n_samples
    total = np.zeros((n, n))
    for c in range(pair.class_count):
        if not in_source[c].any() or not in_target[c].any():
            logger.debug(f"Class {c} absent from one domain; skipping its conditional term")
            continue
        e = _coefficients(in_source[c], in_target[c])
        total += np.outer(e, e)
    return total


def build_repulsive(pair, direction, mode='literal'):
    """
    Repulsive-force matrix M_{S->T} or M_{T->S}.

    Parameters:
    -----------
    pair : DomainPair
        Pair carrying target pseudo-labels.
    direction : str
        'S->T' pairs source class c with target classes r != c;
        'T->S' pairs target class c with source classes r != c.
    mode : str
        'literal' writes each entry once from the piecewise rule;
        'rank_one_sum' accumulates one rank-one term per (c, r) pair.

    Returns:
    --------
    numpy.ndarray
        Symmetric n x n matrix.
    """
    if direction not in DIRECTIONS:
        raise ParameterError(f"direction must be one of {DIRECTIONS}, got '{direction}'")
    in_source, in_target = _membership(pair)
    if direction == 'S->T':
        first, second = in_source, in_target
    else:
        first, second = in_target, in_source

    n = pair.n_samples
    M = np.zeros((n, n))
    class_pairs = [(c, r) for c in range(pair.class_count) for r in range(pair.class_count)
                   if r != c and first[c].any() and second[r].any()]

    if mode == 'rank_one_sum':
        for c, r in class_pairs:
            e = _coefficients(first[c], second[r])
            M += np.outer(e, e)
        return M
    if mode != 'literal':
        raise ParameterError(f"Unknown matrix mode '{mode}'")

    for c, r in class_pairs:
        a, b = first[c], second[r]
        na, nb = a.sum(), b.sum()
        M[np.ix_(a, a)] = 1.0 / (na * na)
        M[np.ix_(b, b)] = 1.0 / (nb * nb)
        M[np.ix_(a, b)] = -1.0 / (na * nb)
        M[np.ix_(b, a)] = -1.0 / (na * nb)
    return M


def cross_masks(pair):
    """Masks of cross-domain pairs with equal and with different pseudo-classes."""
    ys, yt = _packed_labels(pair)
    ns, nt = pair.n_source, pair.n_target
    n = ns + nt
    labels = np.concatenate([ys, yt])
    is_source = np.arange(n) < ns
    cross = is_source[:, None] != is_source[None, :]
    same = labels[:, None] == labels[None, :]
    return CrossMasks(same_class=cross & same, different_class=cross & ~same)


def build_mmd_matrices(pair, mode='literal'):
    """All four MMD matrices plus the cross-domain masks for one pseudo-labeling."""
    presence = pair.class_presence
    if not presence.all():
        logger.warning(f"Pseudo-classes empty in the target: {np.flatnonzero(~presence).tolist()}")
    return MmdMatrices(
        m0=build_marginal(pair),
        mc_sum=build_conditional(pair),
        m_st=build_repulsive(pair, 'S->T', mode),
        m_ts=build_repulsive(pair, 'T->S', mode),
        masks=cross_masks(pair),
    )
