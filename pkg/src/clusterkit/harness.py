"""Experiment driver: exact-vs-asymptotic-vs-empirical verification suites.

Each verify_* function runs one limit-law check over a grid of sizes and
returns an ExperimentReport whose verdict is a pure function of the metric
rows and the declared tolerance.  Exact columns are computed once per grid
(the bivariate tables and the largest-cluster pass yield every n <= max n in
one sweep) and shared across rows.

Row semantics (CSV columns n,key,exact,predicted,empirical,deviation):
  coefficients:  exact/predicted are log values, deviation = |ratio - 1|
  gumbel:        deviation = Kolmogorov distance (empirical column in
                 sampled mode), key unused
  smallest:      key = s, exact/predicted are probabilities, deviation =
                 absolute difference
  moments:       key = ell, exact/predicted are moments, deviation =
                 |ratio - 1|; identity rows use key = -ell and deviation =
                 relative error of the falling-factorial identity
  llt:           key = t, exact/predicted are point masses
  bivariate:     key = N, exact/predicted are log values
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import chi2 as chi2_dist

from . import asymptotics as asy
from . import sampling as smp
from . import series as ser
from .errors import InvalidParameterError
from .weights import WeightSequence


@dataclass(frozen=True)
class MetricRow:
    n: int
    key: float | None
    exact: float | None
    predicted: float | None
    empirical: float | None
    deviation: float


@dataclass(frozen=True)
class ExperimentReport:
    experiment: str
    n_grid: list[int]
    metrics: list[MetricRow]
    passed: bool
    tolerance: float
    note: str
    config_echo: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = asdict(self)
        payload["metrics"] = [asdict(m) for m in self.metrics]
        return json.dumps(payload, indent=2)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "key", "exact", "predicted", "empirical", "deviation"])
            for m in self.metrics:
                writer.writerow(
                    [m.n, m.key, m.exact, m.predicted, m.empirical, m.deviation]
                )


def _echo(w: WeightSequence, **kw) -> dict:
    cfg = {"weights": w.to_config()}
    cfg.update(kw)
    return cfg


def _parallel(fn, cells, threads: int):
    if threads <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, cells))


def _ratio_dev(exact_log: float, predicted_log: float) -> float:
    return abs(math.exp(predicted_log - exact_log) - 1.0)


# ---------------------------------------------------------------------------
# Coefficient asymptotics
# ---------------------------------------------------------------------------


def verify_coefficients(
    w: WeightSequence,
    model: str,
    n_grid: list[int],
    ell: int = 0,
    tolerance: float = 0.10,
    threads: int = 1,
) -> ExperimentReport:
    """Exact coefficients vs the saddle estimates across n_grid."""
    if len(n_grid) < 2:
        raise InvalidParameterError("trend check needs at least two grid points")
    n_grid = sorted(n_grid)
    K = max(n_grid)
    base = ser.full_series(w, K, model)
    if ell > 0:
        factor = (
            ser.cluster_series(w, K)
            if model == "set"
            else ser.repetition_sum_series(w, K, 0)
        )
        for _ in range(ell):
            base = ser.series_product(base, factor)

    def cell(n):
        exact_log, _ = ser.coeff(base, n)
        if model == "set":
            est = asy.coeff_estimate_set(w, n, ell)
        else:
            est = asy.coeff_estimate_multiset(w, n, ell)
        return MetricRow(n, None, exact_log, est.log_value, None, _ratio_dev(exact_log, est.log_value))

    rows = _parallel(cell, n_grid, threads)
    passed = rows[-1].deviation <= tolerance and rows[-1].deviation < rows[0].deviation
    return ExperimentReport(
        "coefficients",
        n_grid,
        rows,
        passed,
        tolerance,
        f"model={model} ell={ell}; pass iff dev(max n) <= tol and < dev(min n)",
        _echo(w, model=model, n_grid=n_grid, ell=ell, tolerance=tolerance),
    )


# ---------------------------------------------------------------------------
# Largest cluster (Gumbel)
# ---------------------------------------------------------------------------


def verify_gumbel(
    w: WeightSequence,
    model: str,
    n_grid: list[int],
    mode: str = "exact",
    samples: int = 0,
    tolerance: float = 0.08,
    seed: int = 0,
) -> ExperimentReport:
    """Kolmogorov distance of the rescaled largest-cluster law to the Gumbel cdf."""
    if len(n_grid) < 2:
        raise InvalidParameterError("trend check needs at least two grid points")
    n_grid = sorted(n_grid)
    cdfs = ser.largest_cdf(w, n_grid, model)
    rows = []
    for n in n_grid:
        scal = asy.gumbel_scaling(w, n, model)
        s = np.arange(1, n + 1)
        target = scal.cdf_at(s)
        exact_cdf = cdfs[n][1:]
        ks = float(np.max(np.abs(exact_cdf - target)))
        emp_ks = None
        if mode == "sampled":
            if samples < 1:
                raise InvalidParameterError("sampled mode needs samples >= 1")
            mat = smp.dp_sample_structures(w, n, model, samples, seed=seed)
            largest = np.array([row.nonzero()[0].max() + 1 for row in mat])
            emp_cdf = np.searchsorted(np.sort(largest), s, side="right") / samples
            emp_ks = float(np.max(np.abs(emp_cdf - target)))
        rows.append(MetricRow(n, None, None, None, emp_ks, ks))
    devs = [r.deviation for r in rows]
    passed = all(b < a for a, b in zip(devs, devs[1:])) and devs[-1] <= tolerance
    return ExperimentReport(
        "gumbel",
        n_grid,
        rows,
        passed,
        tolerance,
        f"model={model} mode={mode}; pass iff KS strictly decreasing and final <= tol",
        _echo(w, model=model, n_grid=n_grid, mode=mode, samples=samples, tolerance=tolerance, seed=seed),
    )


# ---------------------------------------------------------------------------
# Smallest cluster
# ---------------------------------------------------------------------------


def verify_smallest(
    w: WeightSequence,
    model: str,
    n_grid: list[int],
    s_max: int = 8,
    tolerance: float = 0.02,
) -> ExperimentReport:
    """Exact P(M > s) against the limit values for s = 1..s_max."""
    n_grid = sorted(n_grid)
    rows = []
    for n in n_grid:
        surv = ser.smallest_survival(w, n, model, s_max)
        for s in range(1, s_max + 1):
            lim = asy.smallest_cluster_limit(w, s, model)
            rows.append(
                MetricRow(n, s, float(surv[s]), lim.value, None, abs(surv[s] - lim.value))
            )
    final = [r for r in rows if r.n == n_grid[-1]]
    passed = all(r.deviation <= tolerance for r in final)
    return ExperimentReport(
        "smallest",
        n_grid,
        rows,
        passed,
        tolerance,
        f"model={model}; pass iff |exact - limit| <= tol for every s at max n",
        _echo(w, model=model, n_grid=n_grid, s_max=s_max, tolerance=tolerance),
    )


# ---------------------------------------------------------------------------
# Cluster-count moments
# ---------------------------------------------------------------------------


def _kappa_tables(w: WeightSequence, ns: list[int], model: str) -> dict[int, np.ndarray]:
    """Exact kappa pmf for every n in ns from one bivariate table build."""
    K = max(ns)
    table = (
        ser.bivariate_set_table(w, K)
        if model == "set"
        else ser.bivariate_multiset_table(w, K)
    )
    out = {}
    for n in ns:
        row = table[n]
        out[n] = np.exp(row - logsumexp(row))
    return out


def verify_moments(
    w: WeightSequence,
    model: str,
    n_grid: list[int],
    ell_max: int = 2,
    tolerance: float = 0.10,
    identity_tol: float = 1e-10,
    identity_n: int | None = None,
    identity_ell: int = 3,
) -> ExperimentReport:
    """Exact E[kappa^ell] vs the asymptotic moments, plus the set-case
    falling-factorial identity E[(kappa)_ell] = [x^n]e^C C^ell / [x^n]e^C."""
    n_grid = sorted(n_grid)
    tables = _kappa_tables(w, n_grid, model)
    rows = []
    for n in n_grid:
        pmf = tables[n]
        Ns = np.arange(len(pmf), dtype=float)
        for ell in range(1, ell_max + 1):
            exact = float((Ns**ell * pmf).sum())
            est = asy.moment_estimate(w, n, ell, model)
            pred = math.exp(est.log_value)
            rows.append(MetricRow(n, ell, exact, pred, None, abs(pred / exact - 1.0)))
    note_extra = ""
    identity_ok = True
    if model == "set":
        n_id = identity_n if identity_n is not None else min(200, max(n_grid))
        pmf = tables[n_id] if n_id in tables else _kappa_tables(w, [n_id], model)[n_id]
        Ns = np.arange(len(pmf), dtype=float)
        base = ser.full_series(w, n_id, "set")
        factor = ser.cluster_series(w, n_id)
        powered = base
        for ell in range(1, identity_ell + 1):
            powered = ser.series_product(powered, factor)
            lhs = float((np.prod([Ns - i for i in range(ell)], axis=0) * pmf).sum())
            num, _ = ser.coeff(powered, n_id)
            den, _ = ser.coeff(base, n_id)
            rhs = math.exp(num - den)
            dev = abs(lhs / rhs - 1.0)
            identity_ok = identity_ok and dev <= identity_tol
            rows.append(MetricRow(n_id, -ell, lhs, rhs, None, dev))
        note_extra = f"; identity rows key=-ell at n={n_id}, tol={identity_tol}"
    final = [r for r in rows if r.n == n_grid[-1] and r.key is not None and r.key > 0]
    passed = all(r.deviation <= tolerance for r in final) and identity_ok
    return ExperimentReport(
        "moments",
        n_grid,
        rows,
        passed,
        tolerance,
        f"model={model}; pass iff moment ratios within tol at max n" + note_extra,
        _echo(w, model=model, n_grid=n_grid, ell_max=ell_max, tolerance=tolerance),
    )


# ---------------------------------------------------------------------------
# Local limit theorem
# ---------------------------------------------------------------------------


def verify_llt(
    w: WeightSequence,
    model: str,
    n_grid: list[int],
    t_grid: tuple[float, ...] = (-1.5, -1.0, 0.0, 1.0, 1.5),
    tolerance: float = 0.15,
) -> ExperimentReport:
    """Exact pmf of the cluster count at the predicted lattice points."""
    if len(n_grid) < 2:
        raise InvalidParameterError("trend check needs at least two grid points")
    n_grid = sorted(n_grid)
    tables = _kappa_tables(w, n_grid, model)
    rows = []
    for n in n_grid:
        pmf = tables[n]
        for t in t_grid:
            N, pred = asy.llt_pmf_prediction(w, n, t, model)
            exact = float(pmf[N]) if 0 <= N < len(pmf) else 0.0
            rows.append(MetricRow(n, t, exact, pred, None, abs(exact / pred - 1.0)))
    worst = {
        n: max(r.deviation for r in rows if r.n == n) for n in (n_grid[0], n_grid[-1])
    }
    passed = worst[n_grid[-1]] <= tolerance and worst[n_grid[-1]] < worst[n_grid[0]]
    return ExperimentReport(
        "llt",
        n_grid,
        rows,
        passed,
        tolerance,
        f"model={model}; pass iff max-over-t dev <= tol at max n and improving",
        _echo(w, model=model, n_grid=n_grid, t_grid=list(t_grid), tolerance=tolerance),
    )


# ---------------------------------------------------------------------------
# Bivariate counting
# ---------------------------------------------------------------------------


def verify_bivariate(
    w: WeightSequence,
    n_grid: list[int],
    N_rule: str = "sqrt",
    tolerance: float = 0.10,
) -> ExperimentReport:
    """Exact [x^n y^N] of the set series vs the ratio-saddle estimate."""
    if len(n_grid) < 2:
        raise InvalidParameterError("trend check needs at least two grid points")
    if N_rule == "sqrt":
        rule = lambda n: max(2, int(math.isqrt(n)))
    else:
        raise InvalidParameterError(
            "N rule must send N and n/N to infinity; only 'sqrt' is built in"
        )
    n_grid = sorted(n_grid)
    rows = []
    for n in n_grid:
        N = rule(n)
        exact_log = float(ser.bivariate_set_coeffs(w, n, N)[N])
        est = asy.bivariate_set_estimate(w, n, N)
        rows.append(
            MetricRow(n, N, exact_log, est.log_value, None, _ratio_dev(exact_log, est.log_value))
        )
    passed = rows[-1].deviation <= tolerance and rows[-1].deviation < rows[0].deviation
    return ExperimentReport(
        "bivariate",
        n_grid,
        rows,
        passed,
        tolerance,
        "set model; pass iff dev(max n) <= tol and improving",
        _echo(w, n_grid=n_grid, N_rule=N_rule, tolerance=tolerance),
    )


# ---------------------------------------------------------------------------
# Goodness of fit helpers (sampler validation)
# ---------------------------------------------------------------------------


def chi2_structure_gof(
    observed: np.ndarray, law: dict[tuple, float], min_expected: float = 5.0
) -> tuple[float, float, int]:
    """Pearson chi^2 of sampled structure rows against an exact law.

    Cells with expected count below ``min_expected`` are pooled.  Returns
    (statistic, p_value, dof).
    """
    total = observed.shape[0]
    counts: dict[tuple, int] = {}
    for row in observed:
        key = tuple(int(v) for v in row)
        counts[key] = counts.get(key, 0) + 1
    unseen = set(counts) - set(law)
    if unseen:
        raise InvalidParameterError(f"sampled structure outside the exact law: {unseen.pop()}")
    cells = []
    pool_obs = 0
    pool_exp = 0.0
    for key, prob in law.items():
        exp = prob * total
        obs = counts.get(key, 0)
        if exp < min_expected:
            pool_obs += obs
            pool_exp += exp
        else:
            cells.append((obs, exp))
    if pool_exp > 0:
        cells.append((pool_obs, pool_exp))
    stat = sum((obs - exp) ** 2 / exp for obs, exp in cells)
    dof = max(1, len(cells) - 1)
    return stat, float(chi2_dist.sf(stat, dof)), dof


def chi2_two_sample(sample_a: np.ndarray, sample_b: np.ndarray) -> tuple[float, float, int]:
    """Two-sample chi^2 on integer-valued samples (pooled low-count bins)."""
    lo = int(min(sample_a.min(), sample_b.min()))
    hi = int(max(sample_a.max(), sample_b.max()))
    bins = np.arange(lo, hi + 2)
    ca, _ = np.histogram(sample_a, bins=bins)
    cb, _ = np.histogram(sample_b, bins=bins)
    keep = (ca + cb) >= 10
    ca = np.append(ca[keep], ca[~keep].sum())
    cb = np.append(cb[keep], cb[~keep].sum())
    na, nb = ca.sum(), cb.sum()
    stat = 0.0
    cells = 0
    for a, b in zip(ca, cb):
        tot = a + b
        if tot == 0:
            continue
        ea = tot * na / (na + nb)
        eb = tot * nb / (na + nb)
        stat += (a - ea) ** 2 / ea + (b - eb) ** 2 / eb
        cells += 1
    dof = max(1, cells - 1)
    return stat, float(chi2_dist.sf(stat, dof)), dof
