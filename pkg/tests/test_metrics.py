import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssclust.errors import DegenerateTestError
from ssclust.metrics import (
    answering_time,
    ari,
    contingency,
    hellinger,
    line_difference_test,
    membership_distributions,
)


def pair_counting_ari(a, b):
    """Adjusted Rand from the 2x2 pair-agreement table, O(n^2)."""
    both = only_a = only_b = neither = 0
    for i, j in itertools.combinations(range(len(a)), 2):
        sa, sb = a[i] == a[j], b[i] == b[j]
        if sa and sb:
            both += 1
        elif sa:
            only_a += 1
        elif sb:
            only_b += 1
        else:
            neither += 1
    denom = (both + only_a) * (only_a + neither) + (both + only_b) * (only_b + neither)
    if denom == 0:
        return 1.0
    return 2.0 * (both * neither - only_a * only_b) / denom


def exact_permutation_p(assignments, lines):
    """Fraction of all relabelings with the same line sizes whose H is at least the observed one."""
    assignments = np.asarray(assignments)
    lines = np.asarray(lines)
    first = lines == lines.min()
    n, k = lines.size, int(first.sum())

    def stat(mask):
        p, q, _ = membership_distributions(assignments, np.where(mask, 0, 1))
        return hellinger(p, q)

    observed = stat(first)
    count = total = 0
    for idx in itertools.combinations(range(n), k):
        mask = np.zeros(n, bool)
        mask[list(idx)] = True
        total += 1
        count += stat(mask) >= observed - 1e-12
    return count / total


class TestARI:
    def test_relabeling_invariance(self):
        a = [0, 0, 1, 1, 2, 2, 2]
        b = [5, 5, 9, 9, 1, 1, 1]
        assert ari(a, b) == 1.0

    def test_pair_counting_example(self):
        assert ari([1, 1, 1, 2], [1, 1, 2, 2]) == pytest.approx(0.0, abs=1e-15)
        assert pair_counting_ari([1, 1, 1, 2], [1, 1, 2, 2]) == pytest.approx(0.0, abs=1e-15)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            n = int(rng.integers(2, 13))
            a = rng.integers(0, int(rng.integers(1, n + 1)), size=n)
            b = rng.integers(0, int(rng.integers(1, n + 1)), size=n)
            assert ari(a, b) == pytest.approx(pair_counting_ari(a, b), abs=1e-12)

    def test_degenerate_partitions(self):
        assert ari([0, 0, 0], [1, 1, 1]) == 1.0
        assert ari([0, 1, 2], [2, 0, 1]) == 1.0
        assert ari([0, 0, 0], [0, 1, 2]) == 0.0

    def test_random_labelings_center_on_zero(self):
        rng = np.random.default_rng(1)
        vals = [ari(rng.integers(0, 3, 1000), rng.integers(0, 3, 1000)) for _ in range(100)]
        assert abs(np.mean(vals)) < 0.02

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(0, 4), min_size=2, max_size=30), st.permutations(range(5)))
    def test_bounded_and_symmetric(self, a, perm):
        rng = np.random.default_rng(len(a))
        b = rng.integers(0, 3, len(a))
        val = ari(a, b)
        assert val <= 1.0 + 1e-12
        assert val == pytest.approx(ari(b, a), abs=1e-12)
        relabeled = [perm[v] for v in a]
        assert ari(relabeled, b) == pytest.approx(val, abs=1e-12)
        assert ari(a, relabeled) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ari([0, 1], [0, 1, 1])

    def test_contingency(self):
        np.testing.assert_array_equal(contingency([0, 0, 1], ["x", "y", "y"]), [[1, 1], [0, 1]])


class TestHellinger:
    def test_examples(self):
        assert hellinger([0.3, 0.7], [0.3, 0.7]) == 0.0
        assert hellinger([1, 0], [0, 1]) == 1.0
        assert hellinger([1, 0], [0.5, 0.5]) == pytest.approx(math.sqrt(1 - math.sqrt(0.5)), abs=1e-15)
        assert hellinger([1, 0], [0.5, 0.5]) == pytest.approx(0.541196, abs=1e-6)

    def test_metric_properties(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            K = int(rng.integers(2, 8))
            p, q, r = rng.dirichlet(np.ones(K) * 0.5, size=3)
            assert hellinger(p, q) == pytest.approx(hellinger(q, p), abs=1e-15)
            assert hellinger(p, r) <= hellinger(p, q) + hellinger(q, r) + 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            hellinger([1.2, -0.2], [0.5, 0.5])
        with pytest.raises(ValueError):
            hellinger([0.5, 0.4], [0.5, 0.5])
        with pytest.raises(ValueError):
            hellinger([1.0], [0.5, 0.5])


class TestLineDifference:
    def test_single_cluster(self):
        out = line_difference_test([0] * 8, [0, 1] * 4, B=99, seed=0)
        assert out.statistic == 0.0 and out.p_value == 1.0

    def test_perfect_separation(self):
        lines = np.repeat([0, 1], 20)
        out = line_difference_test(lines.copy(), lines, B=999, seed=0)
        assert out.statistic == 1.0
        assert out.p_value == pytest.approx(0.001)

    @pytest.mark.parametrize("seed", range(4))
    def test_agrees_with_exhaustive_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n = 10
        lines = np.repeat([0, 1], [4, 6]) if seed % 2 else np.repeat([0, 1], 5)
        assignments = rng.integers(0, 3, n)
        if seed == 0:
            assignments = lines.copy()
        exact = exact_permutation_p(assignments, lines)
        out = line_difference_test(assignments, lines, B=20_000, seed=seed)
        assert out.p_value == pytest.approx(exact, abs=0.01)

    def test_p_value_formula(self):
        out = line_difference_test([0, 1, 1, 0, 2, 2], [0, 0, 0, 1, 1, 1], B=50, seed=3)
        expected = (1 + np.count_nonzero(out.null_samples >= out.statistic - 1e-12)) / 51
        assert out.p_value == expected and out.p_value > 0
        assert out.B == 50

    def test_statistic_invariant_under_joint_row_permutation(self):
        rng = np.random.default_rng(4)
        assignments = rng.integers(0, 4, 30)
        lines = rng.integers(0, 2, 30)
        perm = rng.permutation(30)
        a = line_difference_test(assignments, lines, B=10, seed=0).statistic
        b = line_difference_test(assignments[perm], lines[perm], B=10, seed=0).statistic
        assert a == pytest.approx(b, abs=1e-15)

    def test_deterministic(self):
        args = ([0, 1, 1, 0, 2, 2, 1], [0, 0, 0, 1, 1, 1, 1])
        a = line_difference_test(*args, B=30, seed=9)
        b = line_difference_test(*args, B=30, seed=9)
        np.testing.assert_array_equal(a.null_samples, b.null_samples)

    def test_degenerate(self):
        with pytest.raises(DegenerateTestError):
            line_difference_test([0, 1, 2], [1, 1, 1], B=9)
        with pytest.raises(ValueError):
            line_difference_test([0, 1], [0, 1], B=0)


class TestAnsweringTime:
    Q = range(2, 31)

    def test_examples(self):
        assert answering_time({q: 0.01 for q in self.Q}, 0.05) == 2
        assert answering_time({q: 0.5 for q in self.Q}, 0.05) == "never"
        assert answering_time({q: (0.2 if q < 10 else 0.01) for q in self.Q}, 0.05) == 10

    def test_late_failure_resets(self):
        p = {q: 0.01 for q in self.Q}
        p[30] = 0.2
        assert answering_time(p, 0.05) == "never"
        p[30], p[25] = 0.01, 0.2
        assert answering_time(p, 0.05) == 26

    def test_missing_index(self):
        with pytest.raises(KeyError):
            answering_time({q: 0.01 for q in range(2, 30)}, 0.05)

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            p = {q: float(v) for q, v in zip(self.Q, rng.uniform(0, 0.2, 29))}
            a1, a2 = np.sort(rng.uniform(0.001, 0.2, 2))
            t1, t2 = answering_time(p, a1), answering_time(p, a2)
            if t2 == "never":
                assert t1 == "never"
            elif t1 != "never":
                assert t2 <= t1
