"""Semi-supervised EM for Gaussian mixtures.

Rows of a :class:`Dataset` are either unlabeled or carry a known class id.
Each labeled class is tied to one mixture component.  The likelihood
treats the two kinds of rows differently:

* an unlabeled row contributes ``log sum_k pi_k phi(x; mu_k, Sigma_k)``;
* a labeled row of class ``c`` contributes ``log phi(x; mu_j, Sigma_j)``
  with ``j`` the component of ``c`` -- no mixing weight, since the labeled
  groups are modelled as degenerate mixtures with all mass on ``j``.

Mixing weights are therefore estimated from the unlabeled rows only, while
means and covariances pool every row.
"""

from __future__ import annotations

import logging
from functools import cached_property
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, EmptyComponentError, UnderflowError
from .gaussian import (
    MIN_COMPONENT_WEIGHT,
    CovModel,
    GaussianComponent,
    log_density_components,
    mstep_covariances,
)

logger = logging.getLogger(__name__)

UNLABELED = -1


@dataclass(frozen=True)
class Dataset:
    """Observations plus a partial label vector.

    Parameters
    ----------
    x : array of shape (n, dim)
    labels : int array of shape (n,), optional
        ``-1`` marks an unlabeled row; otherwise a class id in
        ``0 .. n_classes - 1``.  Omitted means nothing is labeled.
    class_to_component : sequence of int, optional
        Component index of every class.  Defaults to the identity, so
        class ``c`` is component ``c``.
    class_names : sequence of str, optional
        Original label values, for reporting.
    """

    x: np.ndarray
    labels: np.ndarray = None
    class_to_component: tuple = None
    class_names: tuple = ()

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1:
            raise DataFormatError("x must be a non-empty (n, dim) matrix")
        if not np.all(np.isfinite(x)):
            raise DataFormatError("x contains non-finite values")
        if self.labels is None:
            labels = np.full(x.shape[0], UNLABELED, dtype=int)
        else:
            labels = np.asarray(self.labels, dtype=int).reshape(-1)
        if labels.shape[0] != x.shape[0]:
            raise DataFormatError(
                f"{labels.shape[0]} labels given for {x.shape[0]} observations"
            )
        if np.any(labels < UNLABELED):
            raise DataFormatError("class ids must be >= 0 (or -1 for unlabeled)")
        present = np.unique(labels[labels != UNLABELED])
        n_classes = int(present.max()) + 1 if present.size else 0
        if present.size != n_classes:
            raise DataFormatError("class ids must be dense: 0 .. n_classes - 1")

        if self.class_to_component is None:
            mapping = tuple(range(n_classes))
        else:
            mapping = tuple(int(j) for j in self.class_to_component)
            if len(mapping) != n_classes:
                raise DataFormatError(
                    f"class_to_component has {len(mapping)} entries for "
                    f"{n_classes} labeled classes"
                )
            if len(set(mapping)) != len(mapping) or min(mapping, default=0) < 0:
                raise DataFormatError("class_to_component must be injective and >= 0")

        x.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_to_component", mapping)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def n_classes(self) -> int:
        """Number of distinct labeled classes (``C - 1`` in mixture notation)."""
        return len(self.class_to_component)

    @cached_property
    def unlabeled_mask(self) -> np.ndarray:
        mask = self.labels == UNLABELED
        mask.setflags(write=False)
        return mask

    @cached_property
    def n_unlabeled(self) -> int:
        return int(np.count_nonzero(self.unlabeled_mask))

    @cached_property
    def row_components(self) -> np.ndarray:
        """Fixed component of each labeled row, ``-1`` for unlabeled rows."""
        mapping = np.asarray(self.class_to_component + (UNLABELED,), dtype=int)
        # labels == -1 indexes the trailing sentinel
        comps = mapping[self.labels]
        comps.setflags(write=False)
        return comps

    @cached_property
    def labeled_rows(self) -> np.ndarray:
        rows = np.flatnonzero(~self.unlabeled_mask)
        rows.setflags(write=False)
        return rows

    def subset_columns(self, columns) -> "Dataset":
        return Dataset(
            self.x[:, list(columns)],
            self.labels,
            self.class_to_component,
            self.class_names,
        )


@dataclass(frozen=True)
class GmmParams:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    model: CovModel = CovModel.VVV

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covariances, dtype=float)
        G, dim = means.shape
        if covs.shape != (G, dim, dim):
            raise ValueError(f"covariances must have shape {(G, dim, dim)}, got {covs.shape}")
        if weights.shape != (G,):
            raise ValueError(f"expected {G} weights, got {weights.shape[0]}")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixing weights must be a probability vector")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)
        object.__setattr__(self, "model", CovModel.parse(self.model))

    @property
    def G(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def components(self) -> list[GaussianComponent]:
        return [GaussianComponent(m, c) for m, c in zip(self.means, self.covariances)]


@dataclass
class FitResult:
    params: GmmParams
    resp: np.ndarray
    loglik: float
    loglik_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    # True when every row is labeled and the weights are class proportions
    weights_from_labels: bool = False

    @property
    def labels(self) -> np.ndarray:
        return map_labels(self.resp)


def _check_compatible(data: Dataset, G: int):
    if G < max(1, data.n_classes):
        raise ValueError(f"G={G} is smaller than the {data.n_classes} labeled classes")
    if data.n_classes and max(data.class_to_component) >= G:
        raise ValueError(
            f"class_to_component refers to component {max(data.class_to_component)} "
            f"but G={G}"
        )


def component_log_densities(x, params: GmmParams) -> np.ndarray:
    """Matrix of ``log phi(x_i; mu_k, Sigma_k)``, shape (n, G)."""
    return log_density_components(x, params.means, params.covariances)


def _e_step_arrays(data: Dataset, weights, means, covs):
    logp = log_density_components(data.x, means, covs)
    n, G = logp.shape
    resp = np.zeros((n, G))
    loglik = 0.0

    unl = data.unlabeled_mask
    if data.n_unlabeled:
        with np.errstate(divide="ignore"):
            a = np.log(weights) + logp[unl]
        amax = a.max(axis=1)
        bad = np.flatnonzero(~np.isfinite(amax))
        if bad.size:
            row = int(np.flatnonzero(unl)[bad[0]])
            raise UnderflowError(f"all component densities underflow at row {row}", row=row)
        w = np.exp(a - amax[:, None])
        total = w.sum(axis=1)
        resp[unl] = w / total[:, None]
        loglik += float(np.sum(amax + np.log(total)))

    lab = data.labeled_rows
    if lab.size:
        comps = data.row_components[lab]
        terms = logp[lab, comps]
        bad = np.flatnonzero(~np.isfinite(terms))
        if bad.size:
            row = int(lab[bad[0]])
            raise UnderflowError(f"labeled row {row} has zero density", row=row)
        resp[lab, comps] = 1.0
        loglik += float(terms.sum())
    return resp, loglik


def e_step(data: Dataset, params: GmmParams):
    """Posterior responsibilities and the observed-data log-likelihood.

    Returns
    -------
    resp : array of shape (n, G)
        Labeled rows are one-hot at their class's component.
    loglik : float
    """
    _check_compatible(data, params.G)
    return _e_step_arrays(data, params.weights, params.means, params.covariances)


def _m_step_arrays(data: Dataset, resp, model: CovModel):
    nk = resp.sum(axis=0)
    small = np.flatnonzero(nk < MIN_COMPONENT_WEIGHT)
    if small.size:
        k = int(small[0])
        raise EmptyComponentError(f"component {k} has no members", component=k)
    means = (resp.T @ data.x) / nk[:, None]
    covs = mstep_covariances(data.x, resp, means, model)

    n1 = data.n_unlabeled
    if n1 > 0:
        weights = resp[data.unlabeled_mask].sum(axis=0) / n1
    else:
        # fully labeled: no unlabeled mixture to weight, use class proportions
        weights = nk / nk.sum()
    weights = np.clip(weights, 0.0, None)
    weights = weights / weights.sum()
    return weights, means, covs


def m_step(data: Dataset, resp, model) -> GmmParams:
    """Weighted ML update of weights, means and constrained covariances."""
    model = CovModel.parse(model)
    weights, means, covs = _m_step_arrays(data, np.asarray(resp, dtype=float), model)
    return GmmParams(weights, means, covs, model)


def map_labels(resp) -> np.ndarray:
    """Row-wise MAP component; ties go to the lowest index."""
    return np.argmax(np.asarray(resp), axis=1)


def fit(data: Dataset, G: int, model, init: GmmParams, max_iter: int = 500, rel_tol: float = 1e-8) -> FitResult:
    """Run semi-supervised EM from ``init`` until the log-likelihood settles.

    Convergence is declared when ``|l_new - l_old| / (1 + |l_old|) < rel_tol``.
    """
    model = CovModel.parse(model)
    _check_compatible(data, G)
    if init.G != G or init.dim != data.dim:
        raise ValueError(
            f"init has G={init.G}, dim={init.dim}; expected G={G}, dim={data.dim}"
        )

    weights, means, covs = init.weights, init.means, init.covariances
    resp, loglik = _e_step_arrays(data, weights, means, covs)
    trace = [loglik]
    # responsibilities cannot move when every row is labeled or G == 1
    frozen = data.n_unlabeled == 0 or G == 1
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        weights, means, covs = _m_step_arrays(data, resp, model)
        resp, new = _e_step_arrays(data, weights, means, covs)
        trace.append(new)
        if frozen or abs(new - loglik) / (1.0 + abs(loglik)) < rel_tol:
            loglik = new
            converged = True
            break
        loglik = new
    if not converged:
        logger.debug("EM hit max_iter=%d (G=%d, %s)", max_iter, G, model)
    return FitResult(
        params=GmmParams(weights, means, covs, model),
        resp=resp,
        loglik=loglik,
        loglik_trace=trace,
        iterations=iterations,
        converged=converged,
        weights_from_labels=data.n_unlabeled == 0,
    )
