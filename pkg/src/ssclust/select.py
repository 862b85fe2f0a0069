"""Parameter counting, penalized likelihood criteria and model search.

Every criterion here has the form ``2 * loglik - d * log(m)``:

* ``bic``        -- ``m = n``, all observations;
* ``bic_star``   -- ``m = n1``, unlabeled observations only;
* ``bic_prime``  -- any ``m > 1`` (``m = e**2`` gives the AIC penalty).

Larger is better throughout.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyComponentError,
    InsufficientDataError,
    NoViableModelError,
    SingularModelError,
    UndefinedPenaltyError,
    UnderflowError,
)
from .gaussian import CovModel
from .init import ss_kmeanspp
from .ssem import Dataset, FitResult, fit

logger = logging.getLogger(__name__)

ALL_MODELS = (CovModel.EII, CovModel.VII, CovModel.EEE, CovModel.VVV)

# errors that mark a candidate as failed instead of aborting the search
CANDIDATE_ERRORS = (
    SingularModelError,
    EmptyComponentError,
    UnderflowError,
    InsufficientDataError,
)


def count_params(G: int, dim: int, model) -> int:
    """Free parameters: ``G - 1`` weights, ``G * dim`` means, covariances."""
    if G < 1 or dim < 1:
        raise ValueError("G and dim must be >= 1")
    model = CovModel.parse(model)
    full = dim * (dim + 1) // 2
    cov = {
        CovModel.EII: 1,
        CovModel.VII: G,
        CovModel.EEE: full,
        CovModel.VVV: G * full,
    }[model]
    return (G - 1) + G * dim + cov


def bic(loglik: float, d: int, n: int) -> float:
    if n < 2:
        raise UndefinedPenaltyError(f"classical BIC needs n >= 2, got {n}")
    return 2.0 * loglik - d * math.log(n)


def bic_star(loglik: float, d: int, n1: int) -> float:
    """BIC with the penalty driven by the unlabeled sample size ``n1``."""
    if n1 < 2:
        raise UndefinedPenaltyError(
            f"BIC* needs at least 2 unlabeled observations, got n1={n1}"
        )
    return 2.0 * loglik - d * math.log(n1)


def bic_prime(loglik: float, d: int, m: float) -> float:
    """``2 * loglik - d * log(m)`` for an arbitrary penalty argument ``m > 1``."""
    if not m > 1.0:
        raise ValueError(f"penalty argument m must exceed 1, got {m}")
    return 2.0 * loglik - d * math.log(m)


@dataclass
class ModelScore:
    G: int
    model: CovModel
    loglik: float
    d: int
    n: int
    n1: int
    bic_star: float = math.nan
    bic_prime: dict = field(default_factory=dict)
    failed: bool = False
    error: str | None = None

    @property
    def bic(self) -> float:
        return bic(self.loglik, self.d, self.n)

    def criterion(self, m="n1") -> float:
        """Score under penalty argument ``m`` (``"n1"`` selects BIC*)."""
        if self.failed:
            return -math.inf
        if isinstance(m, str):
            if m == "n1":
                return bic_star(self.loglik, self.d, self.n1)
            if m == "n":
                return self.bic
            raise ValueError(f"unknown penalty argument {m!r}")
        m = float(m)
        if m in self.bic_prime:
            return self.bic_prime[m]
        return bic_prime(self.loglik, self.d, m)

    def to_dict(self) -> dict:
        return {
            "G": self.G,
            "model": self.model.value,
            "loglik": None if self.failed else self.loglik,
            "d": self.d,
            "n": self.n,
            "n1": self.n1,
            "bic_star": None if self.failed or math.isnan(self.bic_star) else self.bic_star,
            "bic": None if self.failed or self.n < 2 else self.bic,
            "bic_prime": {
                repr(m): v for m, v in sorted(self.bic_prime.items()) if not self.failed
            },
            "failed": self.failed,
            "error": self.error,
        }


@dataclass
class Candidate:
    """Best of several restarted fits for one ``(G, model)`` pair."""

    G: int
    model: CovModel
    fit: FitResult | None
    error: str | None = None
    restart: int | None = None

    @property
    def failed(self) -> bool:
        return self.fit is None


def candidate_seed(seed: int, G: int, model, restart: int) -> int:
    """Deterministic per-candidate seed, independent of scheduling order."""
    ss = np.random.SeedSequence([int(seed), int(G), CovModel.parse(model).rank, int(restart)])
    return int(ss.generate_state(1)[0])


def fit_candidate(data: Dataset, G: int, model, restarts: int = 5, seed: int = 0, max_iter: int = 500, rel_tol: float = 1e-8) -> Candidate:
    model = CovModel.parse(model)
    best = None
    best_r = None
    error = None
    seen = set()
    for r in range(max(1, restarts)):
        try:
            init = ss_kmeanspp(data, G, model, seed=candidate_seed(seed, G, model, r))
            # EM is deterministic: a repeated starting point cannot change the winner
            key = (init.weights.tobytes(), init.means.tobytes(), init.covariances.tobytes())
            if key in seen:
                continue
            seen.add(key)
            result = fit(data, G, model, init, max_iter=max_iter, rel_tol=rel_tol)
        except CANDIDATE_ERRORS as exc:
            error = f"{type(exc).__name__}: {exc}"
            continue
        if best is None or result.loglik > best.loglik:
            best, best_r = result, r
    if best is None:
        logger.debug("candidate G=%d %s failed: %s", G, model, error)
        return Candidate(G, model, None, error)
    return Candidate(G, model, best, None, best_r)


def score_candidate(cand: Candidate, n: int, n1: int, dim: int, m_values=()) -> ModelScore:
    d = count_params(cand.G, dim, cand.model)
    if cand.failed:
        return ModelScore(cand.G, cand.model, math.nan, d, n, n1, failed=True, error=cand.error)
    ll = cand.fit.loglik
    star = bic_star(ll, d, n1) if n1 >= 2 else math.nan
    primes = {float(m): bic_prime(ll, d, float(m)) for m in m_values}
    return ModelScore(cand.G, cand.model, ll, d, n, n1, star, primes)


def select_best(scores, m="n1") -> int:
    """Index of the winning score under penalty ``m``.

    Ties are broken toward fewer parameters, then fewer components, then
    the model order EII < VII < EEE < VVV.
    """
    best = None
    best_key = None
    for i, s in enumerate(scores):
        if s.failed:
            continue
        key = (s.criterion(m), -s.d, -s.G, -s.model.rank)
        if best_key is None or key > best_key:
            best, best_key = i, key
    if best is None:
        raise NoViableModelError("every candidate model failed to fit")
    return best


@dataclass
class SearchResult:
    scores: list
    candidates: list
    best_index: int
    m: object = "n1"

    @property
    def best(self) -> ModelScore:
        return self.scores[self.best_index]

    @property
    def best_fit(self) -> FitResult:
        return self.candidates[self.best_index].fit

    def reselect(self, m) -> "SearchResult":
        """Same fits, winner chosen under a different penalty argument."""
        return SearchResult(self.scores, self.candidates, select_best(self.scores, m), m)


def _resolve(data, G_range, models):
    G_list = sorted({int(g) for g in G_range})
    if not G_list:
        raise ValueError("G_range is empty")
    if G_list[0] < max(1, data.n_classes):
        raise ValueError(
            f"G={G_list[0]} is smaller than the {data.n_classes} labeled classes"
        )
    model_list = sorted({CovModel.parse(m) for m in models}, key=lambda m: m.rank)
    if not model_list:
        raise ValueError("no covariance models given")
    return G_list, model_list


def fit_candidates(data: Dataset, G_range, models=ALL_MODELS, restarts=5, seed=0, threads=1, max_iter=500, rel_tol=1e-8) -> list:
    """Fit every ``(G, model)`` pair; results are ordered by G then model."""
    G_list, model_list = _resolve(data, G_range, models)
    jobs = [(G, model) for G in G_list for model in model_list]

    def run(job):
        return fit_candidate(data, job[0], job[1], restarts, seed, max_iter, rel_tol)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def model_search(data: Dataset, G_range, models=ALL_MODELS, m="n1", restarts=5, seed=0, threads=1, m_values=(), max_iter=500, rel_tol=1e-8) -> SearchResult:
    """Fit all candidates and pick the one maximizing ``2 loglik - d log(m)``.

    Parameters
    ----------
    m : ``"n1"``, ``"n"`` or float
        Penalty argument used for selection; ``"n1"`` is BIC*.
    m_values : iterable of float
        Extra penalty arguments to record in each score's ``bic_prime``.
    """
    if m == "n1" and data.n_unlabeled < 2:
        raise UndefinedPenaltyError(
            f"BIC* is undefined with n1={data.n_unlabeled} unlabeled observations"
        )
    m_values = list(m_values)
    if not isinstance(m, str):
        m_values.append(float(m))
    candidates = fit_candidates(data, G_range, models, restarts, seed, threads, max_iter, rel_tol)
    scores = [
        score_candidate(c, data.n, data.n_unlabeled, data.dim, m_values) for c in candidates
    ]
    return SearchResult(scores, candidates, select_best(scores, m), m)


def score_subsets(data: Dataset, subsets, G_range, models=ALL_MODELS, **kwargs) -> dict:
    """Run :func:`model_search` on caller-supplied column subsets.

    Returns ``{tuple(columns): SearchResult}``.  No search over subsets is
    performed; comparing results across subsets is left to the caller.
    """
    out = {}
    for cols in subsets:
        cols = tuple(int(c) for c in cols)
        out[cols] = model_search(data.subset_columns(cols), G_range, models, **kwargs)
    return out
