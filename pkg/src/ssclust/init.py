"""ss-k-means++: label-aware k-means++ seeding for semi-supervised EM."""

from __future__ import annotations

import numpy as np

from .errors import InsufficientDataError, SingularModelError
from .gaussian import CovModel, mstep_covariances
from .ssem import Dataset, GmmParams

MAX_LLOYD_ITER = 50
MIN_INIT_WEIGHT = 1e-6


def _sq_dists(x, centers):
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _seed_centers(x, fixed, G, rng):
    """Complete ``fixed`` centers to ``G`` by D^2-weighted sampling over all rows."""
    centers = [c for c in fixed]
    while len(centers) < G:
        if not centers:
            centers.append(x[rng.integers(x.shape[0])])
            continue
        d2 = _sq_dists(x, np.asarray(centers)).min(axis=1)
        total = d2.sum()
        if total > 0.0:
            idx = rng.choice(x.shape[0], p=d2 / total)
        else:
            idx = rng.integers(x.shape[0])
        centers.append(x[idx])
    return np.array(centers, dtype=float)


def constrained_lloyd(data: Dataset, centers, max_iter=MAX_LLOYD_ITER):
    """Lloyd iterations with labeled rows frozen to their class's cluster.

    An empty cluster is re-seeded at the unlabeled row farthest from its
    current center.  Returns ``(assignments, centers)``.
    """
    x = data.x
    centers = np.array(centers, dtype=float)
    G = centers.shape[0]
    fixed = data.row_components
    unl = fixed < 0
    assign = None
    for _ in range(max_iter):
        d2 = _sq_dists(x, centers)
        new = np.where(unl, d2.argmin(axis=1), fixed)
        _fill_empty(new, d2, unl, G, centers, x)
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for k in range(G):
            members = assign == k
            if members.any():
                centers[k] = x[members].mean(axis=0)
    return assign, centers


def _fill_empty(assign, d2, unl, G, centers, x):
    counts = np.bincount(assign, minlength=G)
    empty = np.flatnonzero(counts == 0)
    if not empty.size:
        return
    own = d2[np.arange(x.shape[0]), assign]
    # farthest unlabeled rows first; a row is only moved if its cluster keeps a member
    order = [i for i in np.argsort(-own, kind="stable") if unl[i]]
    for k in empty:
        for pos, i in enumerate(order):
            if counts[assign[i]] > 1:
                counts[assign[i]] -= 1
                assign[i] = k
                counts[k] = 1
                centers[k] = x[i]
                del order[pos]
                break


def _fallback_covariances(x, G):
    var = float(np.mean(np.var(x, axis=0)))
    if not var > 0.0:
        var = 1.0
    return np.broadcast_to(var * np.eye(x.shape[1]), (G, x.shape[1], x.shape[1])).copy()


def ss_kmeanspp(data: Dataset, G: int, model=CovModel.VVV, seed=None) -> GmmParams:
    """Starting parameters for semi-supervised EM.

    1. Every labeled class seeds its component at the mean of its labeled
       rows; the remaining centers are drawn by k-means++ D^2 sampling over
       all rows.
    2. Constrained Lloyd iterations (at most 50) refine the partition with
       labeled rows held in their class's cluster.
    3. The hard partition is turned into mixture parameters: weights from
       cluster proportions among unlabeled rows (uniform if any falls below
       1e-6), cluster means, and constrained covariances.  If the partition
       is too small to give a positive-definite covariance, a spherical
       covariance with the overall mean variance is used for every
       component.
    """
    model = CovModel.parse(model)
    x = data.x
    n = data.n
    if G < max(1, data.n_classes):
        raise ValueError(f"G={G} is smaller than the {data.n_classes} labeled classes")
    if n < G:
        raise InsufficientDataError(f"need at least G={G} observations, have {n}")
    rng = np.random.default_rng(seed)

    mapping = data.class_to_component
    if mapping and max(mapping) >= G:
        raise ValueError(f"class_to_component refers to component {max(mapping)} but G={G}")
    # class centers go to their mapped slots; sampled centers fill the rest in order
    class_centers = [x[data.labels == c].mean(axis=0) for c in range(data.n_classes)]
    sampled = _seed_centers(x, class_centers, G, rng)[data.n_classes:]
    centers = np.empty((G, data.dim))
    free = [k for k in range(G) if k not in set(mapping)]
    for c, k in enumerate(mapping):
        centers[k] = class_centers[c]
    for k, center in zip(free, sampled):
        centers[k] = center

    assign, centers = constrained_lloyd(data, centers)

    resp = np.zeros((n, G))
    resp[np.arange(n), assign] = 1.0
    unl = data.unlabeled_mask
    if unl.any():
        weights = resp[unl].sum(axis=0) / unl.sum()
    else:
        weights = np.zeros(G)
    if np.any(weights < MIN_INIT_WEIGHT):
        weights = np.full(G, 1.0 / G)

    try:
        covs = mstep_covariances(x, resp, centers, model)
    except SingularModelError:
        covs = _fallback_covariances(x, G)
    return GmmParams(weights, centers, covs, model)
