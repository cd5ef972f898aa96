"""Exact random generation of cluster structures.

Two routes to the conditioned laws on Omega_n:

  * Boltzmann rejection: independent per-size draws (Poisson for sets,
    negative binomial for multisets) at a tuning radius, accepted iff the
    total size hits n.  The tilt r^(sum k N_k) is constant on Omega_n, so
    the accepted law is exactly the target law.
  * Exact DP: a table of restricted partition functions (cluster sizes
    <= s) sampled size-by-size from the exact conditionals.

Streams are numpy Generators; parallel replications derive child seeds via
SeedSequence(entropy=seed, spawn_key=(index,)) so runs are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import (
    InvalidParameterError,
    RejectionBudgetError,
    SizeLimitError,
)
from .saddle import size_power_sum, solve_multiset_saddle, solve_set_saddle
from .series import ClusterStructure
from .weights import WeightSequence

_DP_BUDGET = 2000
_INT_GEOM_CAP = 32  # integer weights up to this use sums of geometrics


@dataclass(frozen=True)
class SamplerConfig:
    model: str  # "set" | "multiset"
    n: int
    tuning_radius: float | None = None
    max_rejections: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.model not in ("set", "multiset"):
            raise InvalidParameterError(f"unknown model {self.model!r}")
        if self.n < 1:
            raise InvalidParameterError("n must be >= 1")
        if self.max_rejections < 1:
            raise InvalidParameterError("max_rejections must be >= 1")


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Reproducible child stream for replication ``index``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def structure_statistics(cs: ClusterStructure) -> tuple[int, int, int]:
    """(number of clusters, smallest size, largest size)."""
    counts = cs.counts
    kappa = int(counts.sum())
    nz = np.nonzero(counts[1:])[0] + 1
    return kappa, int(nz.min()), int(nz.max())


# ---------------------------------------------------------------------------
# Boltzmann rejection samplers
# ---------------------------------------------------------------------------


def tuning_radius(w: WeightSequence, cfg: SamplerConfig) -> float:
    if cfg.tuning_radius is not None:
        return cfg.tuning_radius
    if cfg.model == "set":
        return solve_set_saddle(w, cfg.n).r
    return solve_multiset_saddle(w, cfg.n).r


def predicted_acceptance(w: WeightSequence, cfg: SamplerConfig) -> float:
    """Local-CLT acceptance estimate 1/sqrt(2 pi b(r)) at the tuning radius."""
    r = tuning_radius(w, cfg)
    if cfg.model == "set":
        b = size_power_sum(w, r, 2)
    else:
        from .saddle import size_power_sum_multi

        b = size_power_sum_multi(w, r, 2, 2)
    return 1.0 / math.sqrt(2.0 * math.pi * b)


def _set_batch(rng, lam, batch):
    return rng.poisson(lam, size=(batch, lam.size))


def _multiset_batch(rng, w, q, batch):
    """Negative binomial draws N_k ~ NB(c_k, q_k) per column k."""
    n = q.size
    out = np.zeros((batch, n), dtype=np.int64)
    with np.errstate(over="ignore"):
        cvals = np.exp(np.minimum(w.log_weight(np.arange(1, n + 1)), 690.0))
    for k in range(n):
        c = cvals[k]
        if c == 0.0 or q[k] == 0.0:
            continue
        if float(c).is_integer() and c <= _INT_GEOM_CAP:
            g = rng.geometric(1.0 - q[k], size=(batch, int(c)))
            out[:, k] = g.sum(axis=1) - int(c)
        else:
            lam = rng.gamma(c, q[k] / (1.0 - q[k]), size=batch)
            out[:, k] = rng.poisson(lam)
    return out


def _boltzmann_batches(w: WeightSequence, cfg: SamplerConfig, rng, batch: int):
    """Yield (counts_matrix, total_sizes) batches of independent draws."""
    n = cfg.n
    r = tuning_radius(w, cfg)
    ks = np.arange(1, n + 1, dtype=float)
    logq = w.log_weight(ks) + ks * math.log(r)
    if cfg.model == "set":
        lam = np.exp(np.clip(logq, -745.0, 42.0))
        lam[logq < -745.0] = 0.0
        if np.any(logq > 42.0):
            raise InvalidParameterError("Poisson mean too large; lower the tuning radius")
        while True:
            m = _set_batch(rng, lam, batch)
            yield m, (m * np.arange(1, n + 1)).sum(axis=1)
    else:
        q = np.exp(np.clip(ks * math.log(r), -745.0, 0.0))
        q[np.exp(w.log_weight(ks)) == 0.0] = 0.0
        if np.any(q >= 1.0):
            raise InvalidParameterError("tuning radius must satisfy r < 1 for multisets")
        while True:
            m = _multiset_batch(rng, w, q, batch)
            yield m, (m * np.arange(1, n + 1)).sum(axis=1)


def _rejection_sample(w, cfg, rng, count):
    """Accept ``count`` structures; returns (matrix, trials_used)."""
    n = cfg.n
    rows = []
    have = 0
    trials = 0
    batch = min(max(64, 4 * count), 20000)
    gen = _boltzmann_batches(w, cfg, rng, batch)
    while have < count:
        if trials >= cfg.max_rejections:
            raise RejectionBudgetError(
                f"no acceptance within {cfg.max_rejections} trials; "
                "the exact DP sampler is the fallback"
            )
        m, tot = next(gen)
        take = min(batch, cfg.max_rejections - trials)
        m, tot = m[:take], tot[:take]
        trials += take
        hit = m[tot == n]
        if hit.size:
            rows.append(hit)
            have += hit.shape[0]
    mat = np.vstack(rows)[:count]
    return mat, trials


def _as_structure(n: int, row: np.ndarray) -> ClusterStructure:
    counts = np.zeros(n + 1, dtype=np.int64)
    counts[1:] = row
    return ClusterStructure(n, counts)


def boltzmann_sample_set(w: WeightSequence, cfg: SamplerConfig, rng) -> ClusterStructure:
    """One exact draw of the set-model cluster structure at size cfg.n."""
    if cfg.model != "set":
        raise InvalidParameterError("config model must be 'set'")
    mat, _ = _rejection_sample(w, cfg, rng, 1)
    return _as_structure(cfg.n, mat[0])


def boltzmann_sample_multiset(w: WeightSequence, cfg: SamplerConfig, rng) -> ClusterStructure:
    """One exact draw of the multiset-model cluster structure at size cfg.n."""
    if cfg.model != "multiset":
        raise InvalidParameterError("config model must be 'multiset'")
    mat, _ = _rejection_sample(w, cfg, rng, 1)
    return _as_structure(cfg.n, mat[0])


def boltzmann_sample_structures(
    w: WeightSequence, cfg: SamplerConfig, count: int, rng=None
) -> tuple[np.ndarray, int]:
    """Batched rejection sampling; returns (count x n matrix, trials used)."""
    rng = stream(cfg.seed) if rng is None else rng
    return _rejection_sample(w, cfg, rng, count)


# ---------------------------------------------------------------------------
# Exact DP sampler
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _dp_table(w: WeightSequence, n: int, model: str) -> np.ndarray:
    """W[s, v] = log total weight of structures of size v with sizes <= s."""
    logc = w.log_weight(np.arange(1, n + 1))
    W = np.full((n + 1, n + 1), -np.inf)
    W[0, 0] = 0.0
    for s in range(1, n + 1):
        row = W[s - 1].copy()
        lc = logc[s - 1]
        if lc != -np.inf:
            c = math.exp(lc)
            base = W[s - 1]
            for m in range(1, n // s + 1):
                lw = _factor_log(model, lc, c, m)
                if lw == -np.inf:
                    continue
                np.logaddexp(row[s * m :], base[: n + 1 - s * m] + lw, out=row[s * m :])
        W[s] = row
    return W


def _factor_log(model: str, lc: float, c: float, m: int) -> float:
    if model == "set":
        return m * lc - float(gammaln(m + 1))
    return float(gammaln(c + m) - gammaln(c) - gammaln(m + 1))


def exact_dp_sampler(
    w: WeightSequence, n: int, model: str, rng, budget: int = _DP_BUDGET
) -> ClusterStructure:
    """One draw from the exact law via the restricted partition-function table.

    Descends s = n..1 sampling the multiplicity of size-s clusters from its
    exact conditional; the output law is exactly the target measure.
    """
    if n > budget:
        raise SizeLimitError(f"DP sampler budget is n <= {budget}")
    W = _dp_table(w, n, model)
    logc = w.log_weight(np.arange(1, n + 1))
    counts = np.zeros(n + 1, dtype=np.int64)
    v = n
    for s in range(n, 0, -1):
        if v == 0:
            break
        lc = logc[s - 1]
        if lc == -np.inf or s > v:
            continue
        c = math.exp(lc)
        lws = np.array(
            [
                (_factor_log(model, lc, c, m) if m else 0.0) + W[s - 1, v - s * m]
                for m in range(v // s + 1)
            ]
        )
        probs = np.exp(lws - logsumexp(lws))
        m = int(rng.choice(len(probs), p=probs / probs.sum()))
        counts[s] = m
        v -= s * m
    return ClusterStructure(n, counts)


def dp_sample_structures(
    w: WeightSequence, n: int, model: str, count: int, seed: int = 0, budget: int = _DP_BUDGET
) -> np.ndarray:
    """Vectorized DP sampling of ``count`` structures (count x n matrix).

    Replicates are grouped by remaining size at each s so the conditional
    pmf is computed once per distinct state.
    """
    if n > budget:
        raise SizeLimitError(f"DP sampler budget is n <= {budget}")
    rng = stream(seed)
    W = _dp_table(w, n, model)
    logc = w.log_weight(np.arange(1, n + 1))
    rem = np.full(count, n, dtype=np.int64)
    out = np.zeros((count, n + 1), dtype=np.int64)
    for s in range(n, 0, -1):
        lc = logc[s - 1]
        if lc == -np.inf:
            continue
        c = math.exp(lc)
        active = np.nonzero(rem >= s)[0]
        if active.size == 0:
            continue
        for v in np.unique(rem[active]):
            idx = active[rem[active] == v]
            lws = np.array(
                [
                    (_factor_log(model, lc, c, m) if m else 0.0) + W[s - 1, v - s * m]
                    for m in range(v // s + 1)
                ]
            )
            probs = np.exp(lws - logsumexp(lws))
            ms = rng.choice(len(probs), size=idx.size, p=probs / probs.sum())
            out[idx, s] = ms
            rem[idx] -= s * ms
    if np.any(rem != 0):
        raise SizeLimitError("DP sampling failed to exhaust the remaining size")
    return out[:, 1:]


def sample(w: WeightSequence, cfg: SamplerConfig, rng=None) -> tuple[ClusterStructure, str]:
    """Draw one structure, preferring Boltzmann; uses the DP route when the
    predicted acceptance rate is below 1e-4 (returns the method used)."""
    rng = stream(cfg.seed) if rng is None else rng
    if cfg.n <= _DP_BUDGET and predicted_acceptance(w, cfg) < 1e-4:
        return exact_dp_sampler(w, cfg.n, cfg.model, rng), "dp"
    if cfg.model == "set":
        return boltzmann_sample_set(w, cfg, rng), "boltzmann"
    return boltzmann_sample_multiset(w, cfg, rng), "boltzmann"
