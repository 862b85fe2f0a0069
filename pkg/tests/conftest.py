import numpy as np
import pytest

# criterion number -> (passed, detail), filled in by the acceptance suite
ACCEPTANCE = {}

from ssclust.ssem import Dataset


def random_spd(rng, dim, cond=10.0):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eig = np.exp(rng.uniform(0.0, np.log(cond), size=dim))
    return (q * eig) @ q.T


def planted_spherical(rng, n_per, G, dim=2, sep=10.0, sigma=1.0):
    """``G`` spherical clusters whose centers are ``sep * sigma`` apart along a line."""
    centers = np.zeros((G, dim))
    centers[:, 0] = sep * sigma * np.arange(G)
    x = np.vstack([c + sigma * rng.standard_normal((n_per, dim)) for c in centers])
    truth = np.repeat(np.arange(G), n_per)
    return x, truth


def unsupervised_em(x, weights, means, covs, max_iter=500, rel_tol=1e-8, return_params=False):
    """Textbook EM for a full-covariance mixture, written against scipy densities."""
    from scipy.special import logsumexp
    from scipy.stats import multivariate_normal

    weights, means, covs = weights.copy(), means.copy(), covs.copy()
    n, G = x.shape[0], weights.size
    ll_old = None
    for _ in range(max_iter + 1):
        logp = np.column_stack(
            [multivariate_normal(means[k], covs[k]).logpdf(x) for k in range(G)]
        ).reshape(n, G)
        a = np.log(weights) + logp
        ll = logsumexp(a, axis=1).sum()
        if ll_old is not None and abs(ll - ll_old) / (1 + abs(ll_old)) < rel_tol:
            break
        ll_old = ll
        r = np.exp(a - logsumexp(a, axis=1, keepdims=True))
        nk = r.sum(0)
        weights = nk / n
        means = (r.T @ x) / nk[:, None]
        for k in range(G):
            d = x - means[k]
            covs[k] = (r[:, k, None] * d).T @ d / nk[k]
    if return_params:
        return ll, weights, means, covs
    return ll


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_cluster_data(rng):
    x, truth = planted_spherical(rng, 40, 2)
    return Dataset(x), truth


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
