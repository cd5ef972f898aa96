"""Exact truncated power-series engine.

All univariate series are held in log space (LogSeries): coefficient arrays
store log values with -inf as the zero sentinel, so no negative coefficient
is representable and rho**(-n) growth cannot overflow.  Convolutions and the
formal exponential use log-sum-exp throughout.

Bivariate tables (coefficients [x^n y^N] with y tagging the cluster count)
are computed internally in tilted linear space: coefficients are multiplied
by u**n for a radius u chosen so the largest entry stays far from the float64
ceiling, then returned as log values.  This keeps the hot O(n^2)..O(n^2 log n)
loops in plain fused arithmetic instead of log-sum-exp.

Cluster structures live in Omega_n = {(N_1..N_n): sum k N_k = n}; the
brute-force enumerator over Omega_n is the oracle the fast paths are tested
against.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import (
    ContractViolationError,
    InvalidParameterError,
    OutOfRangeError,
    SizeLimitError,
)
from .weights import WeightSequence

NEG_INF = -np.inf

SET = "set"
MULTISET = "multiset"
_MODELS = (SET, MULTISET)

_OMEGA_CAP = 30
_LINEAR_LOG_CAP = 600.0  # max log-magnitude allowed in tilted linear tables


def _check_model(model: str):
    if model not in _MODELS:
        raise InvalidParameterError(f"model must be one of {_MODELS}, got {model!r}")


# ---------------------------------------------------------------------------
# LogSeries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogSeries:
    """Truncated power series with non-negative coefficients, stored as logs."""

    order: int
    logcoeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.logcoeffs, dtype=float)
        if arr.shape != (self.order + 1,):
            raise InvalidParameterError("logcoeffs must have length order+1")
        if np.isnan(arr).any():
            raise ContractViolationError("NaN coefficient")
        arr.flags.writeable = False
        object.__setattr__(self, "logcoeffs", arr)

    def to_csv(self, path):
        export_values_csv(path, np.arange(self.order + 1), self.logcoeffs)

    def to_json(self) -> str:
        return json.dumps({"order": self.order, "log_coefficients": self.logcoeffs.tolist()})


def export_values_csv(path, indices, logvalues):
    """CSV export with columns index,value_log,value (value blank on overflow)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "value_log", "value"])
        for i, lv in zip(indices, logvalues):
            val = math.exp(lv) if lv < 700 else ""
            writer.writerow([int(i), repr(float(lv)), repr(val) if val != "" else ""])


def coeff(series: LogSeries, n: int) -> tuple[float, int]:
    """(log coefficient, sign) with sign 0 for an exactly-zero coefficient."""
    if not 0 <= n <= series.order:
        raise OutOfRangeError(f"n={n} outside stored order {series.order}")
    lv = float(series.logcoeffs[n])
    return lv, (0 if lv == NEG_INF else 1)


# ---------------------------------------------------------------------------
# Construction of the cluster series and its (multi)set exponentials
# ---------------------------------------------------------------------------


def cluster_series(w: WeightSequence, K: int) -> LogSeries:
    """The weight generating series truncated at order K (constant term 0)."""
    if K < 1:
        raise InvalidParameterError("K must be >= 1")
    logc = np.full(K + 1, NEG_INF)
    logc[1:] = w.log_weight(np.arange(1, K + 1))
    return LogSeries(K, logc)


def series_exp(a: LogSeries) -> LogSeries:
    """Formal exponential of a series with zero constant term.

    Uses the derivative recurrence n B_n = sum_{k=1..n} k A_k B_{n-k} with the
    inner sum done by log-sum-exp; every intermediate quantity is a log of a
    non-negative number, so the non-negativity invariant is structural.
    """
    if a.logcoeffs[0] != NEG_INF:
        raise ContractViolationError("series_exp requires zero constant term")
    K = a.order
    la = a.logcoeffs
    lb = np.full(K + 1, NEG_INF)
    lb[0] = 0.0
    logk = np.log(np.arange(1, K + 1, dtype=float))
    ka = logk + la[1:]  # log(k * A_k)
    for n in range(1, K + 1):
        terms = ka[:n] + lb[n - 1 :: -1]
        lb[n] = logsumexp(terms) - math.log(n)
    return LogSeries(K, lb)


def _multiset_exponent(w: WeightSequence, K: int, k_lo: int = 1, k_hi: int | None = None) -> np.ndarray:
    """Log coefficients of sum_{j>=1} sum_{k in [k_lo,k_hi]} c_k x^(jk) / j."""
    k_hi = K if k_hi is None else min(k_hi, K)
    out = np.full(K + 1, NEG_INF)
    if k_lo > k_hi:
        return out
    logc = w.log_weight(np.arange(k_lo, k_hi + 1))
    for j in range(1, K // k_lo + 1):
        kmax = min(k_hi, K // j)
        if kmax < k_lo:
            break
        idx = j * np.arange(k_lo, kmax + 1)
        vals = logc[: kmax - k_lo + 1] - math.log(j)
        np.logaddexp.at(out, idx, vals)
    return out


def euler_transform(w: WeightSequence, K: int) -> LogSeries:
    """Multiset generating series exp{sum_j C(x^j)/j} to order K."""
    if K < 1:
        raise InvalidParameterError("K must be >= 1")
    return series_exp(LogSeries(K, _multiset_exponent(w, K)))


def repetition_sum_series(w: WeightSequence, K: int, p: int = 0) -> LogSeries:
    """Truncation of sum_{j>=1} j^p C(x^j): coefficient at m is
    sum over factorizations m = j*k of j^p c_k."""
    out = np.full(K + 1, NEG_INF)
    logc = w.log_weight(np.arange(1, K + 1))
    for j in range(1, K + 1):
        kmax = K // j
        if kmax < 1:
            break
        idx = j * np.arange(1, kmax + 1)
        np.logaddexp.at(out, idx, logc[:kmax] + p * math.log(j))
    return LogSeries(K, out)


def restricted_series(
    w: WeightSequence, K: int, model: str, restriction: str, s: int
) -> LogSeries:
    """Generating series using only cluster sizes in the allowed window.

    restriction: "max_size" keeps sizes k <= s, "min_size" keeps k > s.
    """
    _check_model(model)
    if s < 0:
        raise InvalidParameterError("s must be >= 0")
    if restriction == "max_size":
        k_lo, k_hi = 1, s
    elif restriction == "min_size":
        k_lo, k_hi = s + 1, K
    else:
        raise InvalidParameterError(f"unknown restriction {restriction!r}")
    if model == MULTISET:
        expo = _multiset_exponent(w, K, k_lo, k_hi)
    else:
        expo = np.full(K + 1, NEG_INF)
        if k_lo <= min(k_hi, K):
            ks = np.arange(k_lo, min(k_hi, K) + 1)
            expo[ks] = w.log_weight(ks)
    return series_exp(LogSeries(K, expo))


def series_product(a: LogSeries, b: LogSeries, order: int | None = None) -> LogSeries:
    """Log-space Cauchy product, truncated at ``order`` (default min order)."""
    K = min(a.order, b.order) if order is None else order
    la, lb = a.logcoeffs, b.logcoeffs
    out = np.full(K + 1, NEG_INF)
    for n in range(K + 1):
        lo = max(0, n - b.order)
        hi = min(n, a.order)
        if lo > hi:
            continue
        j = np.arange(lo, hi + 1)
        out[n] = logsumexp(la[j] + lb[n - j])
    return LogSeries(K, out)


# ---------------------------------------------------------------------------
# Bivariate tables (x tracks size, y tracks the number of clusters)
# ---------------------------------------------------------------------------


def _auto_tilt(w: WeightSequence, K: int) -> float:
    """Radius u with sum_k k c_k u^k ~ K, truncated at K terms.

    Keeps tilted table entries around exp(C(u)) = exp(O(K-ish)) rather than
    rho**(-K).  Only overflow protection; any u in the radius works for
    correctness.
    """
    ks = np.arange(1, K + 1, dtype=float)
    logc = w.log_weight(ks)
    cap = 0.999 * w.multiset_radius if w.kind == "power" else None

    def total(u):
        if u <= 0:
            return 0.0
        t = logc + np.log(ks) + ks * math.log(u)
        t = t[t > -745]
        return float(np.exp(t).sum()) if t.size else 0.0

    hi = cap if cap is not None else 1.0
    if cap is None:
        while total(hi) < K and hi < 1e12:
            hi *= 2.0
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi) if hi < math.inf else lo * 2
        if total(mid) < K:
            lo = mid
        else:
            hi = mid
    u = 0.5 * (lo + hi)
    # Guard: keep the dominant column mass below the float64 ceiling.
    def logmass(u):
        t = logc + ks * math.log(u)
        m = float(np.max(t))
        return m + math.log(np.exp(t - m).sum())

    while u > 1e-12 and logmass(u) > math.log(_LINEAR_LOG_CAP):
        u *= 0.9
    return max(u, 1e-12)


def bivariate_set_table(
    w: WeightSequence, K: int, N_max: int | None = None, tilt: float | None = None
) -> np.ndarray:
    """Log table T[n, N] = log [x^n y^N] exp(y C(x)), n <= K, N <= N_max.

    Column N is built by iterated convolution with the cluster coefficient
    vector, dividing by N at each step (C^N / N!).
    """
    N_max = K if N_max is None else min(N_max, K)
    u = _auto_tilt(w, K) if tilt is None else tilt
    ks = np.arange(1, K + 1, dtype=float)
    cvec = np.zeros(K + 1)
    lt = w.log_weight(ks) + ks * math.log(u)
    mask = lt > -745
    cvec[1:][mask] = np.exp(lt[mask])
    out = np.full((K + 1, N_max + 1), NEG_INF)
    out[0, 0] = 0.0
    d = np.zeros(K + 1)
    d[0] = 1.0
    offsets = -np.arange(K + 1) * math.log(u)
    for N in range(1, N_max + 1):
        d = np.convolve(d, cvec)[: K + 1] / N
        pos = d > 0
        col = np.full(K + 1, NEG_INF)
        col[pos] = np.log(d[pos]) + offsets[pos]
        out[:, N] = col
    return out


def bivariate_multiset_table(
    w: WeightSequence, K: int, N_max: int | None = None, tilt: float | None = None
) -> np.ndarray:
    """Log table T[n, N] = log [x^n y^N] exp{sum_j y^j C(x^j)/j}.

    Equivalent product form: prod_k sum_m binom(c_k+m-1, m) x^(km) y^m, folded
    in one pass per cluster size k (m ranges over multiplicities).
    """
    N_max = K if N_max is None else min(N_max, K)
    u = _auto_tilt(w, K) if tilt is None else tilt
    logc = w.log_weight(np.arange(1, K + 1))
    T = np.zeros((K + 1, N_max + 1))
    T[0, 0] = 1.0
    lnu = math.log(u)
    for k in range(1, K + 1):
        lc = logc[k - 1]
        if lc == NEG_INF:
            continue
        c = math.exp(lc)
        S = T.copy()
        m_hi = min(K // k, N_max)
        lg_c = gammaln(c)
        for m in range(1, m_hi + 1):
            lw = gammaln(c + m) - lg_c - gammaln(m + 1) + m * k * lnu
            if lw < -745:
                continue
            T[k * m :, m:] += math.exp(lw) * S[: K + 1 - k * m, : N_max + 1 - m]
    pos = T > 0
    out = np.where(pos, np.log(np.where(pos, T, 1.0)), NEG_INF)
    out -= np.arange(K + 1)[:, None] * lnu
    out[~pos] = NEG_INF
    return out


def bivariate_set_coeffs(
    w: WeightSequence, n: int, N_max: int | None = None, tilt: float | None = None
) -> np.ndarray:
    """Log values of [x^n y^N] exp(y C(x)) for N = 0..N_max."""
    N_max = n if N_max is None else N_max
    if N_max > n:
        raise InvalidParameterError("N_max cannot exceed n")
    return bivariate_set_table(w, n, N_max, tilt)[n]


def bivariate_multiset_coeffs(
    w: WeightSequence, n: int, N_max: int | None = None, tilt: float | None = None
) -> np.ndarray:
    """Log values of [x^n y^N] of the bivariate multiset series, N = 0..N_max."""
    N_max = n if N_max is None else N_max
    if N_max > n:
        raise InvalidParameterError("N_max cannot exceed n")
    return bivariate_multiset_table(w, n, N_max, tilt)[n]


def bivariate_multiset_coeffs_yrec(w: WeightSequence, n: int, N_max: int | None = None) -> np.ndarray:
    """Slow reference for the multiset bivariate coefficients.

    Treats the series as exp of the y-series whose j-th coefficient is the
    x-series C(x^j)/j and applies the exponential recurrence in y.  Used to
    cross-check the table builder on small inputs.
    """
    N_max = n if N_max is None else min(N_max, n)
    logc = w.log_weight(np.arange(1, n + 1))
    # E[j] = x-series of C(x^j)/j, linear space at tilt u
    u = _auto_tilt(w, n)
    E = np.zeros((N_max + 1, n + 1))
    for j in range(1, N_max + 1):
        for k in range(1, n // j + 1):
            lv = logc[k - 1] + j * k * math.log(u)
            if lv > -745:
                E[j, j * k] = math.exp(lv) / j
    G = np.zeros((N_max + 1, n + 1))
    G[0, 0] = 1.0
    for N in range(1, N_max + 1):
        acc = np.zeros(n + 1)
        for mm in range(1, N + 1):
            if not E[mm].any():
                continue
            acc += mm * np.convolve(E[mm], G[N - mm])[: n + 1]
        G[N] = acc / N
    row = G[:, n]
    out = np.full(N_max + 1, NEG_INF)
    pos = row > 0
    out[pos] = np.log(row[pos]) - n * math.log(u)
    return out


# ---------------------------------------------------------------------------
# Brute force over cluster structures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterStructure:
    """A vector (N_1..N_n) with sum k N_k = n; counts[0] is unused."""

    n: int
    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.shape != (self.n + 1,):
            raise InvalidParameterError("counts must have length n+1")
        if (arr < 0).any() or int((np.arange(self.n + 1) * arr).sum()) != self.n:
            raise ContractViolationError("counts not in Omega_n")
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)

    def key(self) -> tuple:
        return tuple(int(v) for v in self.counts[1:])


def iter_partitions(n: int):
    """Ascending-composition generator for the integer partitions of n."""
    if n == 0:
        yield ()
        return
    a = [0] * (n + 1)
    k = 1
    a[1] = n
    while k != 0:
        x = a[k - 1] + 1
        y = a[k] - 1
        k -= 1
        while x <= y:
            a[k] = x
            y -= x
            k += 1
        a[k] = x + y
        yield tuple(a[: k + 1])


def _structure_log_weight(w: WeightSequence, counts: dict[int, int], model: str) -> float:
    """log of prod c_i^{N_i}/N_i!  (set) or prod binom(c_i+N_i-1, N_i) (multiset)."""
    total = 0.0
    for size, mult in counts.items():
        lc = float(w.log_weight(size))
        if lc == -math.inf:
            return -math.inf
        if model == SET:
            total += mult * lc - gammaln(mult + 1)
        else:
            c = math.exp(lc)
            total += gammaln(c + mult) - gammaln(c) - gammaln(mult + 1)
    return total


def brute_force_structure_sum(w: WeightSequence, n: int, model: str) -> float:
    """Partition-function oracle: direct sum over all of Omega_n (n <= 30)."""
    _check_model(model)
    if n > _OMEGA_CAP:
        raise SizeLimitError(f"brute force capped at n <= {_OMEGA_CAP}")
    if n == 0:
        return 1.0
    terms = []
    for part in iter_partitions(n):
        counts: dict[int, int] = {}
        for size in part:
            counts[size] = counts.get(size, 0) + 1
        lw = _structure_log_weight(w, counts, model)
        if lw != -math.inf:
            terms.append(math.exp(lw))
    return math.fsum(sorted(terms))


def exact_structure_law(w: WeightSequence, n: int, model: str) -> dict[tuple, float]:
    """Exact probability of each cluster structure in Omega_n (n <= 30)."""
    _check_model(model)
    if n > _OMEGA_CAP:
        raise SizeLimitError(f"structure law capped at n <= {_OMEGA_CAP}")
    raw = {}
    for part in iter_partitions(n):
        counts: dict[int, int] = {}
        for size in part:
            counts[size] = counts.get(size, 0) + 1
        lw = _structure_log_weight(w, counts, model)
        if lw == -math.inf:
            continue
        key = tuple(counts.get(k, 0) for k in range(1, n + 1))
        raw[key] = math.exp(lw)
    total = math.fsum(sorted(raw.values()))
    return {k: v / total for k, v in raw.items()}


# ---------------------------------------------------------------------------
# Exact distributions of the cluster statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbabilityTable:
    """Exact distribution table for one statistic at one n.

    table_kind: "pmf" (kappa), "cdf" (P(L <= s)), "survival" (P(M > s)).
    """

    statistic: str
    model: str
    n: int
    support: np.ndarray
    values: np.ndarray
    table_kind: str

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "value_log", "value"])
            for i, v in zip(self.support, self.values):
                writer.writerow([int(i), repr(math.log(v) if v > 0 else -math.inf), repr(float(v))])

    def to_json(self) -> str:
        return json.dumps(
            {
                "statistic": self.statistic,
                "model": self.model,
                "n": self.n,
                "table_kind": self.table_kind,
                "support": self.support.tolist(),
                "values": self.values.tolist(),
            }
        )


def full_series(w: WeightSequence, K: int, model: str) -> LogSeries:
    """exp(C) (set) or the Euler transform (multiset), truncated at K."""
    _check_model(model)
    if model == SET:
        return series_exp(cluster_series(w, K))
    return euler_transform(w, K)


def largest_cdf(w: WeightSequence, ns: list[int], model: str) -> dict[int, np.ndarray]:
    """Exact P(L <= s), s = 0..n, for every n in ns, in one incremental pass.

    Multiplies in the size-s factor (exp(c_s x^s) for sets,
    (1 - x^s)^(-c_s) for multisets) and snapshots the coefficient at each
    requested n after every s.
    """
    _check_model(model)
    K = max(ns)
    logc = w.log_weight(np.arange(1, K + 1))
    cur = np.full(K + 1, NEG_INF)
    cur[0] = 0.0
    snaps = {n: np.full(K + 1, NEG_INF) for n in ns}
    for s in range(1, K + 1):
        lc = logc[s - 1]
        if lc != NEG_INF:
            c = math.exp(lc)
            base = cur.copy()
            for m in range(1, K // s + 1):
                if model == SET:
                    lw = m * lc - gammaln(m + 1)
                else:
                    lw = gammaln(c + m) - gammaln(c) - gammaln(m + 1)
                if lw == NEG_INF:
                    continue
                np.logaddexp(cur[s * m :], base[: K + 1 - s * m] + lw, out=cur[s * m :])
        for n in ns:
            snaps[n][s] = cur[n]
    out = {}
    for n in ns:
        row = snaps[n][: n + 1].copy()
        row[0] = NEG_INF if n >= 1 else 0.0
        total = snaps[n][K]  # all sizes allowed == unrestricted coefficient
        out[n] = np.exp(row - total)
    return out


def smallest_survival(w: WeightSequence, n: int, model: str, s_max: int) -> np.ndarray:
    """Exact P(M > s) for s = 0..s_max at total size n."""
    _check_model(model)
    log_full, sign = coeff(full_series(w, n, model), n)
    if sign == 0:
        raise InvalidParameterError("partition function vanishes at this n")
    out = np.zeros(s_max + 1)
    out[0] = 1.0
    for s in range(1, s_max + 1):
        lr, sg = coeff(restricted_series(w, n, model, "min_size", s), n)
        out[s] = 0.0 if sg == 0 else math.exp(lr - log_full)
    return out


def exact_distribution(
    w: WeightSequence, n: int, statistic: str, model: str, s_max: int | None = None
) -> ProbabilityTable:
    """Exact distribution of kappa, the largest or the smallest cluster size.

    kappa: pmf over N = 0..n (coefficient ratios of the bivariate series).
    largest: cdf P(L <= s), s = 0..n.
    smallest: survival P(M > s), s = 0..s_max (default n).
    """
    _check_model(model)
    if statistic == "kappa":
        row = (
            bivariate_set_coeffs(w, n)
            if model == SET
            else bivariate_multiset_coeffs(w, n)
        )
        total = logsumexp(row)
        probs = np.exp(row - total)
        return ProbabilityTable("kappa", model, n, np.arange(n + 1), probs, "pmf")
    if statistic == "largest":
        values = largest_cdf(w, [n], model)[n]
        return ProbabilityTable("largest", model, n, np.arange(n + 1), values, "cdf")
    if statistic == "smallest":
        s_max = n if s_max is None else s_max
        values = smallest_survival(w, n, model, s_max)
        return ProbabilityTable("smallest", model, n, np.arange(s_max + 1), values, "survival")
    raise InvalidParameterError(f"unknown statistic {statistic!r}")
