"""Multivariate Gaussian log-densities and constrained covariance estimators.

Four covariance parameterizations are supported, named with the usual
volume/shape/orientation letters:

========  ==========================================
``EII``   one shared spherical covariance ``lambda * I``
``VII``   per-component spherical ``lambda_k * I``
``EEE``   one shared full covariance
``VVV``   unconstrained full covariance per component
========  ==========================================
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import EmptyComponentError, SingularModelError

LOG_2PI = math.log(2.0 * math.pi)

# ridge scale used when a covariance estimate loses positive definiteness
RIDGE_SCALE = 1e-10
MIN_COMPONENT_WEIGHT = 1e-8
# full covariances with eigenvalue ratio below this are numerically singular;
# a ridge-propped estimate always lands below it, so collapse is reported
MIN_RCOND = math.sqrt(np.finfo(float).eps)


class CovModel(str, enum.Enum):
    EII = "EII"
    VII = "VII"
    EEE = "EEE"
    VVV = "VVV"

    @property
    def rank(self) -> int:
        """Position in the canonical ordering EII < VII < EEE < VVV."""
        return _MODEL_ORDER.index(self)

    @property
    def spherical(self) -> bool:
        return self in (CovModel.EII, CovModel.VII)

    @property
    def shared(self) -> bool:
        return self in (CovModel.EII, CovModel.EEE)

    @classmethod
    def parse(cls, value) -> "CovModel":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(
                f"unknown covariance model {value!r}; expected one of "
                f"{', '.join(m.value for m in cls)}"
            ) from None

    def __str__(self) -> str:
        return self.value


_MODEL_ORDER = (CovModel.EII, CovModel.VII, CovModel.EEE, CovModel.VVV)


@dataclass(frozen=True)
class GaussianComponent:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"covariance shape {cov.shape} does not match mean dimension {mean.size}"
            )
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise ValueError("covariance matrix is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def _cholesky(cov, component=None):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise SingularModelError(
            f"covariance of component {component} is not positive definite",
            component=component,
        ) from None


def log_density_many(x, mean, cov, component=None):
    """Log-density of ``N(mean, cov)`` at every row of ``x``.

    Parameters
    ----------
    x : array of shape (n, dim)
    mean : array of shape (dim,)
    cov : array of shape (dim, dim)
        Symmetric positive-definite covariance.
    component : int, optional
        Component index reported in a :class:`SingularModelError`.

    Returns
    -------
    logp : array of shape (n,)
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mean = np.asarray(mean, dtype=float)
    chol = _cholesky(np.asarray(cov, dtype=float), component)
    dim = mean.size
    z = solve_triangular(chol, (x - mean).T, lower=True, check_finite=False)
    maha = np.einsum("ij,ij->j", z, z)
    half_logdet = np.log(np.diag(chol)).sum()
    return -0.5 * (dim * LOG_2PI + maha) - half_logdet


def log_density_components(x, means, covs) -> np.ndarray:
    """Matrix of ``log phi(x_i; mu_k, Sigma_k)`` over a stack of components.

    Parameters
    ----------
    x : array of shape (n, dim)
    means : array of shape (G, dim)
    covs : array of shape (G, dim, dim)

    Returns
    -------
    logp : array of shape (n, G)
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    means = np.atleast_2d(np.asarray(means, dtype=float))
    covs = np.asarray(covs, dtype=float)
    G, dim = means.shape
    try:
        chol = np.linalg.cholesky(covs)
    except np.linalg.LinAlgError:
        for k in range(G):
            _cholesky(covs[k], k)
        raise
    # whitening by the inverse Cholesky factor: z = L^{-1} (x - mu)
    inv_chol = np.linalg.inv(chol)
    z = x @ inv_chol.transpose(0, 2, 1) - (inv_chol @ means[:, :, None]).transpose(0, 2, 1)
    maha = np.einsum("gni,gni->ng", z, z)
    half_logdet = np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    return -0.5 * (dim * LOG_2PI + maha) - half_logdet


def log_density(x, comp: GaussianComponent) -> float:
    """Log-density of a single point under one Gaussian component."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != comp.dim:
        raise ValueError(f"point has dimension {x.size}, component has {comp.dim}")
    return float(log_density_many(x[None, :], comp.mean, comp.covariance)[0])


def regularize(cov, component=None):
    """Symmetrize ``cov`` and add a tiny ridge if it is not positive definite.

    The ridge is ``1e-10`` times the mean diagonal entry.  Raises
    :class:`SingularModelError` if the result still fails a Cholesky
    factorization.
    """
    cov = 0.5 * (cov + cov.T)
    if not np.all(np.isfinite(cov)):
        raise SingularModelError(
            f"covariance of component {component} has non-finite entries",
            component=component,
        )
    if np.linalg.eigvalsh(cov)[0] <= 0.0:
        ridge = RIDGE_SCALE * float(np.mean(np.diag(cov)))
        cov = cov + ridge * np.eye(cov.shape[0])
    _cholesky(cov, component)
    return cov


def mstep_covariances(x, resp, means, model) -> np.ndarray:
    """Responsibility-weighted ML covariances under a constraint class.

    With scatter matrices ``W_k = sum_i resp_ik (x_i - mu_k)(x_i - mu_k)^T``
    and effective counts ``n_k``:

    * VVV: ``W_k / n_k``
    * EEE: ``sum_k W_k / n``
    * VII: ``tr(W_k) / (n_k dim) * I``
    * EII: ``sum_k tr(W_k) / (n dim) * I``

    Returns an array of shape (G, dim, dim).
    """
    model = CovModel.parse(model)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    resp = np.asarray(resp, dtype=float)
    means = np.atleast_2d(np.asarray(means, dtype=float))
    n, dim = x.shape
    G = resp.shape[1]

    nk = resp.sum(axis=0)
    for k in range(G):
        if nk[k] < MIN_COMPONENT_WEIGHT:
            raise EmptyComponentError(f"component {k} has no members", component=k)
    n_total = nk.sum()

    if model.spherical:
        # only traces are needed: tr W_k = sum_i resp_ik ||x_i - mu_k||^2
        diff = x[:, None, :] - means[None, :, :]
        traces = np.einsum("ng,ng->g", resp, np.einsum("ngd,ngd->ng", diff, diff))
        if model is CovModel.EII:
            variances = np.full(G, traces.sum() / (n_total * dim))
        else:
            variances = traces / (nk * dim)
        bad = np.flatnonzero(~(variances > 0.0))
        if bad.size:
            k = None if model is CovModel.EII else int(bad[0])
            raise SingularModelError(
                f"component {k} has zero spherical variance", component=k
            )
        return variances[:, None, None] * np.eye(dim)

    diff = x[None, :, :] - means[:, None, :]  # (G, n, dim)
    scatters = (diff * resp.T[:, :, None]).transpose(0, 2, 1) @ diff

    if model is CovModel.EEE:
        shared = regularize(scatters.sum(axis=0) / n_total, component=None)
        _check_conditioning(shared[None], shared_model=True)
        return np.broadcast_to(shared, (G, dim, dim)).copy()

    out = scatters / nk[:, None, None]
    out = 0.5 * (out + out.transpose(0, 2, 1))
    if not np.all(np.isfinite(out)) or np.any(np.linalg.eigvalsh(out)[:, 0] <= 0.0):
        for k in range(G):
            out[k] = regularize(out[k], component=k)
    _check_conditioning(out)
    return out


def _check_conditioning(covs, shared_model=False):
    eig = np.linalg.eigvalsh(covs)
    bad = np.flatnonzero(~(eig[:, 0] > MIN_RCOND * eig[:, -1]))
    if bad.size:
        k = None if shared_model else int(bad[0])
        raise SingularModelError(
            f"covariance of component {k} is numerically singular "
            f"(eigenvalue ratio {eig[bad[0], 0] / eig[bad[0], -1]:.1e})",
            component=k,
        )
