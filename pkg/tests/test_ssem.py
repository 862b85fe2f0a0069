import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from ssclust.errors import DataFormatError, UnderflowError
from ssclust.gaussian import CovModel
from ssclust.init import ss_kmeanspp
from ssclust.metrics import ari
from ssclust.ssem import Dataset, GmmParams, e_step, fit, m_step, map_labels

from conftest import planted_spherical, unsupervised_em


def params(weights, means, covs, model="VVV"):
    return GmmParams(np.asarray(weights, float), np.asarray(means, float), np.asarray(covs, float), model)


class TestDataset:
    def test_defaults(self):
        d = Dataset(np.zeros((4, 2)))
        assert d.n == 4 and d.n_unlabeled == 4 and d.n_classes == 0

    def test_labels_and_mapping(self):
        d = Dataset(np.zeros((4, 1)), [0, 0, -1, 1], class_to_component=(2, 0))
        assert d.n_classes == 2
        np.testing.assert_array_equal(d.row_components, [2, 2, -1, 0])

    def test_rejects_sparse_class_ids(self):
        with pytest.raises(DataFormatError):
            Dataset(np.zeros((3, 1)), [0, 2, -1])

    def test_rejects_non_injective_mapping(self):
        with pytest.raises(DataFormatError):
            Dataset(np.zeros((2, 1)), [0, 1], class_to_component=(1, 1))


class TestEStep:
    def test_equidistant_point_is_split(self):
        p = params([0.5, 0.5], [[-1.0, 0.0], [1.0, 0.0]], [np.eye(2)] * 2)
        resp, _ = e_step(Dataset(np.array([[0.0, 3.0]])), p)
        np.testing.assert_allclose(resp, [[0.5, 0.5]], atol=1e-15)

    def test_labeled_row_is_one_hot(self):
        p = params([0.2, 0.3, 0.5], [[0.0], [5.0], [9.0]], [[[1.0]]] * 3)
        data = Dataset(np.array([[0.0], [100.0]]), [-1, 0], class_to_component=(1,))
        resp, _ = e_step(data, p)
        np.testing.assert_array_equal(resp[1], [0.0, 1.0, 0.0])

    def test_single_component_loglik(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((20, 2))
        cov = np.array([[2.0, 0.3], [0.3, 1.0]])
        p = params([1.0], [[0.5, -0.5]], [cov])
        resp, ll = e_step(Dataset(x), p)
        np.testing.assert_array_equal(resp, np.ones((20, 1)))
        assert ll == pytest.approx(multivariate_normal([0.5, -0.5], cov).logpdf(x).sum(), abs=1e-10)

    def test_labeled_rows_contribute_density_only(self):
        x = np.array([[0.0], [1.0], [3.0]])
        p = params([0.25, 0.75], [[0.0], [3.0]], [[[1.0]], [[2.0]]])
        data = Dataset(x, [-1, 0, 1])
        _, ll = e_step(data, p)
        n0 = multivariate_normal(0.0, 1.0)
        n1 = multivariate_normal(3.0, 2.0)
        expected = (
            math.log(0.25 * n0.pdf(0.0) + 0.75 * n1.pdf(0.0)) + n0.logpdf(1.0) + n1.logpdf(3.0)
        )
        assert ll == pytest.approx(expected, abs=1e-12)

    def test_underflow_names_row(self):
        p = params([1.0, 0.0], [[0.0], [0.0]], [[[1e-3]], [[1.0]]])
        data = Dataset(np.array([[0.0], [1e200]]))
        with pytest.raises(UnderflowError) as err:
            e_step(data, p)
        assert err.value.row == 1


class TestMStep:
    def test_fully_labeled_gives_class_mles(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((30, 2))
        labels = np.repeat([0, 1, 2], 10)
        data = Dataset(x, labels)
        resp, _ = e_step(data, params([1 / 3] * 3, np.zeros((3, 2)), [np.eye(2)] * 3))
        p = m_step(data, resp, "VVV")
        for k in range(3):
            xs = x[labels == k]
            np.testing.assert_allclose(p.means[k], xs.mean(0), atol=1e-14)
            np.testing.assert_allclose(p.covariances[k], np.cov(xs.T, bias=True), atol=1e-14)
        np.testing.assert_allclose(p.weights, [1 / 3] * 3, atol=1e-15)

    def test_mirrored_data_gives_equal_weights(self):
        half = np.array([[1.0, 0.2], [2.0, -0.3], [1.5, 0.7], [3.0, 0.1]])
        x = np.vstack([half, -half])
        resp = np.zeros((8, 2))
        resp[:4] = [0.9, 0.1]
        resp[4:] = [0.1, 0.9]
        p = m_step(Dataset(x), resp, "VVV")
        np.testing.assert_allclose(p.weights, [0.5, 0.5], atol=1e-15)

    def test_weights_use_unlabeled_rows_only(self):
        x = np.array([[0.0], [0.1], [5.0], [5.1], [5.2], [-0.1]])
        data = Dataset(x, [0, 0, 0, -1, -1, -1])
        resp = np.array([[1, 0], [1, 0], [1, 0], [0, 1], [0, 1], [1, 0]], dtype=float)
        p = m_step(data, resp, "EII")
        np.testing.assert_allclose(p.weights, [1 / 3, 2 / 3], atol=1e-15)


class TestFit:
    def test_fully_labeled_converges_in_one_iteration(self):
        rng = np.random.default_rng(5)
        x = np.vstack([rng.standard_normal((15, 2)), rng.standard_normal((15, 2)) + 4])
        labels = np.repeat([0, 1], 15)
        data = Dataset(x, labels)
        init = params([0.5, 0.5], [[1.0, 1.0], [2.0, 2.0]], [np.eye(2)] * 2)
        res = fit(data, 2, "VVV", init)
        assert res.iterations == 1 and res.converged and res.weights_from_labels
        for k in range(2):
            xs = x[labels == k]
            np.testing.assert_allclose(res.params.means[k], xs.mean(0), atol=1e-10)
            np.testing.assert_allclose(res.params.covariances[k], np.cov(xs.T, bias=True), atol=1e-10)

    def test_single_component_unlabeled(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((40, 3))
        init = params([1.0], [[9.0, 9.0, 9.0]], [np.eye(3)])
        res = fit(Dataset(x), 1, "VVV", init)
        assert res.iterations == 1
        np.testing.assert_allclose(res.params.means[0], x.mean(0), atol=1e-12)
        np.testing.assert_allclose(res.params.covariances[0], np.cov(x.T, bias=True), atol=1e-12)

    def test_recovers_separated_clusters(self):
        rng = np.random.default_rng(8)
        x, truth = planted_spherical(rng, 50, 2, sep=10)
        data = Dataset(x)
        res = fit(data, 2, "EII", ss_kmeanspp(data, 2, "EII", seed=0))
        assert ari(res.labels, truth) == 1.0

    @pytest.mark.parametrize("model", list(CovModel))
    def test_monotone_and_label_fidelity(self, model):
        rng = np.random.default_rng(9)
        x = np.vstack([rng.standard_normal((30, 2)), rng.standard_normal((30, 2)) * 0.5 + 2])
        labels = np.full(60, -1)
        labels[:3] = 0
        labels[30:33] = 1
        data = Dataset(x, labels, class_to_component=(2, 0))
        res = fit(data, 3, model, ss_kmeanspp(data, 3, model, seed=1))
        assert np.all(np.diff(res.loglik_trace) >= -1e-8)
        np.testing.assert_array_equal(res.labels[:3], 2)
        np.testing.assert_array_equal(res.labels[30:33], 0)
        lab = labels >= 0
        assert np.all(res.resp[lab].max(axis=1) == 1.0)
        np.testing.assert_allclose(res.resp.sum(1), 1.0, atol=1e-9)

    def test_zero_labels_matches_plain_em(self):
        rng = np.random.default_rng(10)
        x = np.vstack([rng.standard_normal((40, 2)), rng.standard_normal((40, 2)) + [3, 1]])
        init = params([0.4, 0.6], [[0.5, 0.0], [2.0, 1.0]], [np.eye(2), np.eye(2) * 2])
        res = fit(Dataset(x), 2, "VVV", init)
        oracle = unsupervised_em(x, init.weights, init.means, init.covariances)
        assert res.loglik == pytest.approx(oracle, abs=1e-10)

    def test_rejects_too_few_components(self):
        data = Dataset(np.zeros((4, 1)), [0, 1, 2, -1])
        init = params([0.5, 0.5], [[0.0], [1.0]], [[[1.0]]] * 2)
        with pytest.raises(ValueError):
            fit(data, 2, "EII", init)


def test_map_labels_ties_go_low():
    resp = np.array([[0.5, 0.5], [0.0, 1.0], [1.0, 0.0], [0.2, 0.4]])
    np.testing.assert_array_equal(map_labels(resp), [0, 1, 0, 1])
