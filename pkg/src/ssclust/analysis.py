"""Misselection probabilities for penalized likelihood criteria.

Two nested Gaussian-mean models are compared,

* ``M1 = {N(mu, I) : mu in R^d}``
* ``M0 = {N(mu, I) : mu_j = 0 for j > d0}``,

with the alternative truth ``mu*_j = 1 / sqrt(j)``.  For a sample of size
``n`` the log-likelihood ratio statistic ``Y = 2 (L1 - L0)`` is
``sum_{j > d0} (sqrt(n) xbar_j)^2``, which is noncentral chi-square under
the alternative and central chi-square under the null.  The criteria
``2L - d log(n)`` and ``2L - d log(m)`` (``m < n``) disagree exactly when
``(d - d0) log(m) < Y < (d - d0) log(n)``.

The chi-square distribution functions are computed here from the
regularized incomplete gamma function rather than taken from a special
function library.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

_EPS = 1e-16
_TINY = 1e-300
_MAX_TERMS = 1_000_000


def _series_p(a, x):
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if term < total * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _continued_fraction_q(a, x):
    # modified Lentz evaluation
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x)``."""
    if a <= 0.0:
        raise ValueError("a must be positive")
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _series_p(a, x))
    return max(0.0, 1.0 - _continued_fraction_q(a, x))


def chi2_cdf(x: float, df: float) -> float:
    """``P(chi2_df <= x)``; zero for ``x <= 0``."""
    if df <= 0.0:
        raise ValueError("df must be positive")
    if x <= 0.0:
        return 0.0
    return gammainc_lower(0.5 * df, 0.5 * x)


def _log_gamma_density_term(a, y):
    # log of y^a e^-y / Gamma(a + 1), the gap P(a, y) - P(a + 1, y)
    return a * math.log(y) - y - math.lgamma(a + 1.0)


def noncentral_chi2_cdf(x: float, df: float, ncp: float, tol: float = 1e-12) -> float:
    """Noncentral chi-square CDF as a Poisson mixture of central CDFs.

    ``sum_j Pois(j; ncp/2) * chi2_cdf(x, df + 2j)``, summed outward from the
    Poisson mode until the neglected Poisson mass is below ``tol``.
    Neighbouring central CDFs are obtained by the recurrence
    ``P(a + 1, y) = P(a, y) - y^a e^-y / Gamma(a + 1)``.
    """
    if df <= 0.0:
        raise ValueError("df must be positive")
    if ncp < 0.0:
        raise ValueError("ncp must be non-negative")
    if x <= 0.0:
        return 0.0
    if ncp == 0.0:
        return chi2_cdf(x, df)

    lam = 0.5 * ncp
    y = 0.5 * x
    a0 = 0.5 * df
    log_lam = math.log(lam)

    def log_pois(j):
        return -lam + j * log_lam - math.lgamma(j + 1.0)

    j_mode = int(math.floor(lam))
    p_mode = gammainc_lower(a0 + j_mode, y)
    mass = math.exp(log_pois(j_mode))
    total = mass * p_mode

    # upward: j_mode + 1, j_mode + 2, ...
    up_j, up_p = j_mode, p_mode
    # downward: j_mode - 1, ..., 0
    dn_j, dn_p = j_mode, p_mode
    while 1.0 - mass > tol:
        w_up = math.exp(log_pois(up_j + 1))
        w_dn = math.exp(log_pois(dn_j - 1)) if dn_j > 0 else 0.0
        if w_up == 0.0 and w_dn == 0.0:
            break
        if w_up >= w_dn:
            up_p -= math.exp(_log_gamma_density_term(a0 + up_j, y))
            up_p = min(max(up_p, 0.0), 1.0)
            up_j += 1
            mass += w_up
            total += w_up * up_p
        else:
            dn_p += math.exp(_log_gamma_density_term(a0 + dn_j - 1, y))
            dn_p = min(max(dn_p, 0.0), 1.0)
            dn_j -= 1
            mass += w_dn
            total += w_dn * dn_p
    return min(max(total, 0.0), 1.0)


def f_inf_cdf(x: float, df1: float) -> float:
    """CDF of the F distribution with ``(df1, infinity)`` degrees of freedom."""
    return chi2_cdf(df1 * x, df1)


@dataclass(frozen=True)
class NestedModelSpec:
    """Dimensions, sample size and penalty argument of the nested-mean example."""

    d: int
    d0: int
    n: int
    m: float

    def __post_init__(self):
        if not (1 <= self.d0 < self.d):
            raise ValueError(f"need 1 <= d0 < d, got d0={self.d0}, d={self.d}")
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if not self.m >= 1.0:
            raise ValueError(f"need m >= 1, got {self.m}")

    @property
    def gap(self) -> int:
        return self.d - self.d0

    @property
    def ncp(self) -> float:
        """``n * sum_{j=d0+1}^{d} 1/j``: squared norm of the dropped mean coordinates, times n."""
        return self.n * math.fsum(1.0 / j for j in range(self.d0 + 1, self.d + 1))

    @property
    def interval(self):
        return self.gap * math.log(self.m), self.gap * math.log(self.n)


def prob_case2a(spec: NestedModelSpec) -> float:
    """P(BIC keeps the null but ``BIC'(m)`` picks the alternative | alternative true)."""
    if spec.m >= spec.n:
        return 0.0
    lo, hi = spec.interval
    ncp = spec.ncp
    return max(0.0, noncentral_chi2_cdf(hi, spec.gap, ncp) - noncentral_chi2_cdf(lo, spec.gap, ncp))


def prob_case2b(spec: NestedModelSpec) -> float:
    """P(BIC keeps the null but ``BIC'(m)`` picks the alternative | null true)."""
    if spec.m >= spec.n:
        return 0.0
    lo, hi = spec.interval
    return max(0.0, chi2_cdf(hi, spec.gap) - chi2_cdf(lo, spec.gap))


def prob_nested_limit(d1: int, d0: int, n: int, m: float) -> float:
    """Large-sample probability that ``BIC'(m)`` wrongly prefers the bigger of two nested models.

    ``F(log n) - F(log m)`` with ``F`` the ``F(d1 - d0, inf)`` distribution
    function, i.e. ``chi2_{d1-d0}`` evaluated at ``(d1 - d0) log(.)``.
    """
    if d1 <= d0:
        raise ValueError("d1 must exceed d0")
    if not m > 1.0:
        raise ValueError("m must exceed 1")
    if m >= n:
        return 0.0
    df = d1 - d0
    return max(0.0, f_inf_cdf(math.log(n), df) - f_inf_cdf(math.log(m), df))


def simulate_disagreement(spec: NestedModelSpec, replicates: int, seed=None, truth="alternative", chunk=200_000) -> float:
    """Monte Carlo frequency of ``T = 0`` and ``T'_m = 1``.

    Draws the sample mean directly (``xbar ~ N(mu, I / n)``) and compares
    ``2L - d log(n)`` with ``2L - d log(m)`` for both models.  Only the
    ``d - d0`` dropped coordinates enter ``L1 - L0``, so only those are drawn.
    """
    if truth not in ("alternative", "null"):
        raise ValueError("truth must be 'alternative' or 'null'")
    rng = np.random.default_rng(seed)
    j = np.arange(spec.d0 + 1, spec.d + 1)
    mu = 1.0 / np.sqrt(j) if truth == "alternative" else np.zeros(j.size)
    log_n, log_m = math.log(spec.n), math.log(spec.m)
    hits = 0
    done = 0
    while done < replicates:
        size = min(chunk, replicates - done)
        xbar = mu + rng.standard_normal((size, j.size)) / math.sqrt(spec.n)
        # 2(L1 - L0) = n * ||xbar - xbar_0||^2
        lr = spec.n * np.sum(xbar**2, axis=1)
        t_bic = lr - spec.d * log_n > -spec.d0 * log_n
        t_prime = lr - spec.d * log_m > -spec.d0 * log_m
        hits += int(np.count_nonzero(~t_bic & t_prime))
        done += size
    return hits / replicates


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    m: float
    prob_2a: float
    prob_2b: float


@dataclass
class SweepTable:
    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def to_csv(self, fh=None) -> str:
        buf = fh if fh is not None else io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["axis", "value", "m", "prob_2a", "prob_2b"])
        for r in self.rows:
            writer.writerow(
                [r.axis, _fmt(r.value), _fmt(r.m), _fmt(r.prob_2a), _fmt(r.prob_2b)]
            )
        return buf.getvalue() if fh is None else ""

    def curve(self, m, column="prob_2a"):
        """``(values, probabilities)`` along the axis for one penalty argument."""
        pts = [(r.value, getattr(r, column)) for r in self.rows if r.m == m]
        return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])


def _fmt(v):
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return format(float(v), ".17g")


FIGURE_PRESETS = {
    "fig1": {"axis": "n", "fixed": {"d": 200, "d0": 190}},
    "fig2": {"axis": "d", "fixed": {"n": 1000, "gap": 10}},
    "fig3": {"axis": "d0", "fixed": {"n": 1000, "d": 200}},
}


def figure_sweep(axis: str, grid, fixed: dict, m_list) -> SweepTable:
    """Tabulate case 2a/2b probabilities along one axis for several ``m``.

    Parameters
    ----------
    axis : {"n", "d", "d0"}
        Quantity varied along ``grid``.
    fixed : dict
        The remaining of ``n``, ``d``, ``d0``.  With ``axis="d"`` a ``gap``
        entry may replace ``d0`` so that ``d0 = d - gap`` at each point.
    m_list : iterable of float
        Penalty arguments; entries may also be the string ``"n"``.
    """
    if axis not in ("n", "d", "d0"):
        raise ValueError(f"axis must be one of n, d, d0; got {axis!r}")
    table = SweepTable()
    for value in grid:
        params = {k: v for k, v in fixed.items() if k != "gap"}
        params[axis] = value
        if "gap" in fixed and "d0" not in params:
            params["d0"] = params["d"] - fixed["gap"]
        for m in m_list:
            m_val = params.get("n") if m == "n" else m
            try:
                spec = NestedModelSpec(
                    d=int(params["d"]), d0=int(params["d0"]), n=int(params["n"]), m=float(m_val)
                )
            except (KeyError, TypeError, ValueError) as exc:
                table.skipped.append({"axis": axis, "value": value, "m": m, "reason": str(exc)})
                continue
            table.rows.append(
                SweepRow(axis, float(value), spec.m, prob_case2a(spec), prob_case2b(spec))
            )
    return table
