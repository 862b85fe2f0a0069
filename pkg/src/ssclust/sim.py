"""Synthetic mixtures and the penalty-sweep Monte Carlo experiment."""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .metrics import ari
from .select import ALL_MODELS, fit_candidates, score_candidate, select_best
from .ssem import UNLABELED, Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MixtureSpec:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        mu = np.atleast_2d(np.asarray(self.means, dtype=float))
        cov = np.asarray(self.covariances, dtype=float)
        G, dim = mu.shape
        if w.shape != (G,) or cov.shape != (G, dim, dim):
            raise ValueError("inconsistent mixture dimensions")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be a probability vector")
        for k in range(G):
            if not np.allclose(cov[k], cov[k].T) or np.linalg.eigvalsh(cov[k])[0] <= 0:
                raise ValueError(f"covariance {k} is not symmetric positive definite")
        object.__setattr__(self, "weights", w / w.sum())
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def G(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_component(spec: MixtureSpec, k: int, n: int, seed=None) -> np.ndarray:
    """``n`` draws from component ``k`` alone."""
    rng = _rng(seed)
    chol = np.linalg.cholesky(spec.covariances[k])
    return spec.means[k] + rng.standard_normal((n, spec.dim)) @ chol.T


def sample_mixture(spec: MixtureSpec, n: int, seed=None):
    """Draw ``n`` points; returns ``(points, true_components)``."""
    rng = _rng(seed)
    comps = rng.choice(spec.G, size=n, p=spec.weights)
    z = rng.standard_normal((n, spec.dim))
    points = np.empty((n, spec.dim))
    for k in range(spec.G):
        rows = comps == k
        chol = np.linalg.cholesky(spec.covariances[k])
        points[rows] = spec.means[k] + z[rows] @ chol.T
    return points, comps


def onion_correlation(dim: int, seed=None, eta: float = 1.0) -> np.ndarray:
    """Random correlation matrix from the onion construction.

    With ``eta = 1`` the matrix is uniform over the set of ``dim x dim``
    correlation matrices.  The matrix is grown one row at a time: the new
    column is ``L w`` with ``L`` the Cholesky factor of the current block,
    ``w`` uniform in direction and ``|w|^2 ~ Beta(k/2, beta)``.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = _rng(seed)
    if dim == 1:
        return np.ones((1, 1))
    beta = eta + (dim - 2) / 2.0
    r12 = 2.0 * rng.beta(beta, beta) - 1.0
    corr = np.array([[1.0, r12], [r12, 1.0]])
    for k in range(2, dim):
        beta -= 0.5
        y = rng.beta(k / 2.0, beta)
        u = rng.standard_normal(k)
        u /= np.linalg.norm(u)
        w = np.sqrt(y) * u
        z = np.linalg.cholesky(corr) @ w
        grown = np.eye(k + 1)
        grown[:k, :k] = corr
        grown[:k, k] = z
        grown[k, :k] = z
        corr = grown
    return corr


SIGMA_1 = np.array([[0.5, 0.35], [0.35, 0.5]])
SIGMA_2 = np.array([[0.5, -0.35], [-0.35, 0.5]])


def crossed_ellipses_mixture(seed=None, weights=(1 / 3, 1 / 3, 1 / 3)) -> MixtureSpec:
    """Three-component planar mixture: two crossed ellipses at the origin and a
    third component at (2, 2) whose covariance is a random onion correlation / 6."""
    sigma3 = onion_correlation(2, seed) / 6.0
    return MixtureSpec(
        weights=np.asarray(weights, dtype=float),
        means=np.array([[0.0, 0.0], [0.0, 0.0], [2.0, 2.0]]),
        covariances=np.stack([SIGMA_1, SIGMA_2, sigma3]),
    )


def semi_supervised_sample(spec: MixtureSpec, n_s: int, n_u: int, labeled_components=(0, 1), seed=None):
    """Labeled rows split evenly over ``labeled_components``, then ``n_u``
    unlabeled rows from the full mixture.

    Returns ``(dataset, true_components)`` with labeled rows first.
    """
    rng = _rng(seed)
    labeled_components = tuple(labeled_components)
    per = np.full(len(labeled_components), n_s // len(labeled_components))
    per[: n_s % len(labeled_components)] += 1
    blocks, labels, truth = [], [], []
    for c, (k, cnt) in enumerate(zip(labeled_components, per)):
        blocks.append(sample_component(spec, k, int(cnt), rng))
        labels.append(np.full(cnt, c))
        truth.append(np.full(cnt, k))
    x_u, z_u = sample_mixture(spec, n_u, rng)
    blocks.append(x_u)
    labels.append(np.full(n_u, UNLABELED))
    truth.append(z_u)
    data = Dataset(
        np.vstack(blocks),
        np.concatenate(labels),
        class_to_component=tuple(range(len(labeled_components))),
    )
    return data, np.concatenate(truth)


def penalty_grid(n_u: int, n_s: int, size: int) -> np.ndarray:
    """``size`` evenly spaced penalty arguments spanning ``[n_u, n_u + n_s]``."""
    if size < 2:
        raise ValueError("m grid needs at least two points")
    return np.linspace(n_u, n_u + n_s, size)


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def mean_ari(self) -> dict:
        """``{(n_u, m): mean ARI}`` over replicates."""
        acc = defaultdict(list)
        for r in self.rows:
            acc[(r["n_u"], r["m"])].append(r["ari"])
        return {k: float(np.mean(v)) for k, v in acc.items()}

    def paired(self, n_u: int, m_a: float, m_b: float):
        """Per-replicate ARI arrays at two penalty arguments, aligned by replicate."""
        by = defaultdict(dict)
        for r in self.rows:
            if r["n_u"] == n_u:
                by[r["m"]][r["replicate"]] = r["ari"]
        reps = sorted(set(by[m_a]) & set(by[m_b]))
        return np.array([by[m_a][i] for i in reps]), np.array([by[m_b][i] for i in reps])

    def to_csv(self, fh=None) -> str:
        buf = fh if fh is not None else io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n_u", "m", "replicate", "G", "model", "ari"])
        for r in self.rows:
            writer.writerow(
                [
                    r["n_u"],
                    format(r["m"], ".17g"),
                    r["replicate"],
                    r["G"],
                    r["model"],
                    format(r["ari"], ".17g"),
                ]
            )
        return buf.getvalue() if fh is None else ""


def _replicate(r, n_s, n_u_list, m_grid_size, G_range, models, seed, restarts, weights):
    rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
    spec = crossed_ellipses_mixture(rng, weights)
    rows = []
    for n_u in n_u_list:
        data, truth = semi_supervised_sample(spec, n_s, n_u, seed=rng)
        fit_seed = int(rng.integers(2**31))
        cands = fit_candidates(data, G_range, models, restarts=restarts, seed=fit_seed)
        scores = [score_candidate(c, data.n, data.n_unlabeled, data.dim) for c in cands]
        unl = data.unlabeled_mask
        for m in penalty_grid(n_u, n_s, m_grid_size):
            i = select_best(scores, float(m))
            labels = cands[i].fit.labels[unl]
            rows.append(
                {
                    "n_u": int(n_u),
                    "m": float(m),
                    "replicate": int(r),
                    "G": scores[i].G,
                    "model": scores[i].model.value,
                    "ari": ari(labels, truth[unl]),
                }
            )
    return rows


def penalty_sweep_experiment(
    n_s: int = 100,
    n_u_list=(5, 10, 20, 40, 80, 160),
    m_grid_size: int = 11,
    replicates: int = 50,
    G_range=range(2, 6),
    models=ALL_MODELS,
    seed: int = 0,
    restarts: int = 5,
    weights=(1 / 3, 1 / 3, 1 / 3),
    threads: int = 1,
) -> SweepResult:
    """ARI of the selected model across a grid of penalty arguments.

    Each replicate draws a fresh onion covariance for the third component,
    ``n_s`` labeled points split evenly between the first two components,
    and for every ``n_u`` an independent unlabeled sample from the full
    mixture.  Candidate fits are computed once per ``(replicate, n_u)`` and
    re-scored at every ``m`` in ``[n_u, n_u + n_s]``; the ARI is taken over
    the unlabeled points against their true components.
    """
    if n_s < 1 or replicates < 1:
        raise ValueError("n_s and replicates must be >= 1")
    if min(n_u_list) < 2:
        raise ValueError("every n_u must be >= 2 so that log(n_u) > 0")
    G_range = sorted(int(g) for g in G_range)
    models = [getattr(m, "value", m) for m in models]
    config = {
        "n_s": n_s,
        "n_u_list": [int(v) for v in n_u_list],
        "m_grid_size": m_grid_size,
        "replicates": replicates,
        "G_range": G_range,
        "models": models,
        "seed": seed,
        "restarts": restarts,
        "weights": [float(w) for w in weights],
    }
    args = (n_s, config["n_u_list"], m_grid_size, G_range, models, seed, restarts, weights)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda r: _replicate(r, *args), range(replicates)))
    else:
        chunks = [_replicate(r, *args) for r in range(replicates)]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda row: (row["n_u"], row["m"], row["replicate"]))
    return SweepResult(rows, config)
