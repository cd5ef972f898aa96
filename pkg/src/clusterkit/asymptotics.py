"""Saddle-point asymptotics, limit laws and admissibility diagnostics.

Every estimate returns an AsymptoticEstimate carrying the value in log space
together with a source tag and the saddle point it was evaluated at.  The
variance entering the coefficient formulas is the second tilt moment with the
mean subtracted (x^2 C'' at the saddle); when that quantity degenerates to
zero (single-size cluster sets, e.g. e^x) we substitute the full tilt
variance and flag the estimate, which reproduces the Stirling-type formula
up to an O(1) factor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .errors import (
    InvalidParameterError,
    ScopeError,
    UnsupportedOrderError,
)
from .saddle import (
    SaddlePoint,
    hayman_functionals,
    size_power_sum,
    size_power_sum_multi,
    solve_multiset_saddle,
    solve_ratio_saddle,
    solve_set_saddle,
)
from .weights import WeightSequence

LOG_2PI = math.log(2.0 * math.pi)

SRC_SET_COEFF = "set-coeff"
SRC_MULTISET_COEFF_SUB = "multiset-coeff-subcritical"  # rho < 1
SRC_MULTISET_COEFF_CRIT = "multiset-coeff-critical"  # rho = 1
SRC_SET_COUNT = "set-count"
SRC_MULTISET_COUNT = "multiset-count"
SRC_SADDLE_GENERAL = "saddle-general"
SRC_BIVARIATE_SET = "bivariate-set"
SRC_LLT = "count-llt"
SRC_MOMENT = "count-moment"


@dataclass(frozen=True)
class AsymptoticEstimate:
    """A value carried as a log magnitude with provenance."""

    log_value: float
    source: str
    saddle: SaddlePoint | None = None
    extras: dict = field(default_factory=dict)


def _degenerate_variance(a: float, b: float) -> tuple[float, bool]:
    """x^2 C'' = b - a at the saddle; fall back to b when it vanishes."""
    v = b - a
    if v <= 1e-9 * b:
        return b, True
    return v, False


# ---------------------------------------------------------------------------
# Coefficient and counting estimates
# ---------------------------------------------------------------------------


def coeff_estimate_set(w: WeightSequence, n: float, ell: int = 0) -> AsymptoticEstimate:
    """log of the saddle estimate for [x^n] e^C C^ell."""
    if ell < 0:
        raise InvalidParameterError("ell must be >= 0")
    sp = solve_set_saddle(w, n)
    C0 = size_power_sum(w, sp.r, 0)
    v, degen = _degenerate_variance(sp.a_val, sp.b_val)
    log_value = (
        C0
        + ell * math.log(C0)
        - 0.5 * (LOG_2PI + math.log(v))
        - n * math.log(sp.r)
    )
    extras = {"degenerate": True} if degen else {}
    return AsymptoticEstimate(log_value, SRC_SET_COEFF, sp, extras)


def _subcritical_prefactor(w: WeightSequence) -> float:
    """sum_{j>=2} C(rho^j)/j for rho < 1 (repetition overhead of multisets)."""
    total = 0.0
    j = 2
    while True:
        term = size_power_sum(w, w.rho**j, 0) / j
        total += term
        if term < 1e-14 * max(total, 1e-300):
            break
        j += 1
        if j > 10**6:
            break
    return total


def coeff_estimate_multiset(
    w: WeightSequence, n: float, ell: int = 0, p: tuple[int, ...] = ()
) -> AsymptoticEstimate:
    """log of the saddle estimate for the multiset series times repetition sums.

    rho < 1: subcritical branch (set saddle plus a constant prefactor);
    rho = 1 (and finite explicit weights): critical branch at the multiset
    saddle.
    """
    if ell < 0 or len(p) not in (0, ell):
        raise InvalidParameterError("p must have length ell (or be empty)")
    ps = tuple(p) if p else tuple([0] * ell)
    if w.kind == "power" and w.rho < 1:
        sp = solve_set_saddle(w, n)
        C0 = size_power_sum(w, sp.r, 0)
        v, degen = _degenerate_variance(sp.a_val, sp.b_val)
        log_value = (
            _subcritical_prefactor(w)
            + C0
            + ell * math.log(C0)
            - 0.5 * (LOG_2PI + math.log(v))
            - n * math.log(sp.r)
        )
        extras = {"degenerate": True} if degen else {}
        return AsymptoticEstimate(log_value, SRC_MULTISET_COEFF_SUB, sp, extras)
    sp = solve_multiset_saddle(w, n)
    lnG = size_power_sum_multi(w, sp.r, 0, 0)
    A12 = size_power_sum_multi(w, sp.r, 1, 2)
    v, degen = _degenerate_variance(A12, sp.b_val)  # sum_j j x^{2j} C''(x^j)
    log_value = lnG - 0.5 * (LOG_2PI + math.log(v)) - n * math.log(sp.r)
    for pi in ps:
        log_value += math.log(size_power_sum_multi(w, sp.r, 0, pi + 1))
    extras = {"degenerate": True} if degen else {}
    return AsymptoticEstimate(log_value, SRC_MULTISET_COEFF_CRIT, sp, extras)


def count_estimate(w: WeightSequence, n: int, model: str) -> AsymptoticEstimate:
    """Asymptotic count of size-n structures: n! [x^n]e^C or [x^n](multiset series)."""
    if model == "set":
        base = coeff_estimate_set(w, n, 0)
        return AsymptoticEstimate(
            base.log_value + float(gammaln(n + 1)), SRC_SET_COUNT, base.saddle, base.extras
        )
    if model == "multiset":
        base = coeff_estimate_multiset(w, n, 0)
        return AsymptoticEstimate(base.log_value, SRC_MULTISET_COUNT, base.saddle, base.extras)
    raise InvalidParameterError(f"unknown model {model!r}")


def hayman_coeff_general(fspec, w: WeightSequence, n: float, r: float) -> AsymptoticEstimate:
    """Off-saddle coefficient estimate F(r) r^-n exp(-(a-n)^2/(2b)) / sqrt(2 pi b).

    Evaluating different n at a shared radius r lets coefficient ratios be
    compared without re-solving the saddle equation.
    """
    family, arg = fspec
    a, b, _ = hayman_functionals(fspec, w, r)
    if family == "set":
        f_r = size_power_sum(w, r, 0) + int(arg) * math.log(size_power_sum(w, r, 0))
    else:
        f_r = size_power_sum_multi(w, r, 0, 0)
        for p in arg:
            f_r += math.log(size_power_sum_multi(w, r, 0, p + 1))
    gauss = -((a - n) ** 2) / (2.0 * b)
    log_value = f_r - 0.5 * (LOG_2PI + math.log(b)) - n * math.log(r) + gauss
    sp = SaddlePoint(
        "set" if family == "set" else "multiset",
        r,
        -math.log1p((r - w.rho) / w.rho),
        float(n),
        a - n,
        a,
        b,
    )
    return AsymptoticEstimate(log_value, SRC_SADDLE_GENERAL, sp, {"gauss_log": gauss})


def bivariate_set_estimate(
    w: WeightSequence, n: int, N: int, alpha: float | None = None
) -> AsymptoticEstimate:
    """Estimate of [x^n y^N] exp(y C(x)) at the ratio saddle."""
    if N < 1:
        raise InvalidParameterError("N must be >= 1")
    sp = solve_ratio_saddle(w, n, N)
    al = w.alpha if w.alpha is not None else alpha
    if al is None:
        raise InvalidParameterError("alpha required (explicit weights: pass alpha)")
    C0 = size_power_sum(w, sp.r, 0)
    cpp = (sp.b_val - sp.a_val) / sp.r**2  # C''(r)
    var = N * sp.r**2 * cpp / ((al + 1.0) * C0)
    log_value = (
        -float(gammaln(N + 1))
        + N * math.log(C0)
        - 0.5 * (LOG_2PI + math.log(var))
        - n * math.log(sp.r)
    )
    return AsymptoticEstimate(log_value, SRC_BIVARIATE_SET, sp)


# ---------------------------------------------------------------------------
# Cluster-count limit laws
# ---------------------------------------------------------------------------


def llt_pmf_prediction(
    w: WeightSequence, n: int, t: float, model: str, alpha: float | None = None
) -> tuple[int, float]:
    """(target count N, predicted point mass) of the local limit law.

    Covered: sets for 0 < rho <= 1, multisets for rho < 1.  The critical
    multiset case is outside the established scope and is rejected.
    """
    if model == "multiset":
        if not (w.kind == "power" and w.rho < 1):
            raise ScopeError("multiset local limit law requires rho < 1")
    elif model != "set":
        raise InvalidParameterError(f"unknown model {model!r}")
    al = w.alpha if w.alpha is not None else alpha
    if al is None:
        raise InvalidParameterError("alpha required (explicit weights: pass alpha)")
    sp = solve_set_saddle(w, n)
    C0 = size_power_sum(w, sp.r, 0)
    sigma2 = C0 / (al + 1.0)
    N = int(math.floor(C0 + t * math.sqrt(sigma2)))
    predicted = math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi * sigma2)
    return N, predicted


def moment_estimate(w: WeightSequence, n: int, ell: int, model: str) -> AsymptoticEstimate:
    """Asymptotic ell-th moment of the number of clusters.

    Sets (any rho) and subcritical multisets: C(z_n)^ell for every ell >= 1.
    Critical multisets: only ell in {1, 2} admit a closed asymptotic form.
    """
    if ell < 1:
        raise InvalidParameterError("ell must be >= 1")
    critical = model == "multiset" and not (w.kind == "power" and w.rho < 1)
    if not critical:
        sp = solve_set_saddle(w, n)
        C0 = size_power_sum(w, sp.r, 0)
        return AsymptoticEstimate(ell * math.log(C0), SRC_MOMENT, sp, {"ell": ell})
    if ell > 2:
        raise UnsupportedOrderError(
            "critical multiset moments implemented for ell <= 2 only"
        )
    sp = solve_multiset_saddle(w, n)
    m1 = size_power_sum_multi(w, sp.r, 0, 1)  # sum_j C(q^j)
    if ell == 1:
        return AsymptoticEstimate(math.log(m1), SRC_MOMENT, sp, {"ell": 1})
    m2 = m1 * m1 + size_power_sum_multi(w, sp.r, 0, 2)  # + sum_j j C(q^j)
    return AsymptoticEstimate(math.log(m2), SRC_MOMENT, sp, {"ell": 2})


# ---------------------------------------------------------------------------
# Largest cluster: Gumbel scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GumbelScaling:
    """Affine rescaling s(t) = (lnX + t)/beta_n for the largest cluster."""

    beta_n: float
    lnX: float
    model: str  # "set" | "multiset-rho<1" | "multiset-rho=1"
    saddle: SaddlePoint

    def s_of_t(self, t: float) -> float:
        return (self.lnX + t) / self.beta_n

    def t_of_s(self, s) -> np.ndarray | float:
        return self.beta_n * np.asarray(s, dtype=float) - self.lnX

    def cdf_at(self, s) -> np.ndarray | float:
        """Predicted P(L <= s) under the limit law."""
        return np.exp(-np.exp(-self.t_of_s(s)))


def gumbel_scaling(w: WeightSequence, n: int, model: str) -> GumbelScaling:
    """Scaling constants for the largest-cluster extreme value law.

    beta_n is the saddle decay rate of the matching model (set saddle for
    sets and subcritical multisets; multiset saddle when rho = 1); the
    centering constant uses the symbolic slowly-varying descriptor so the
    h ratio is exact.
    """
    if w.kind != "power":
        raise ScopeError("gumbel scaling needs the power-law family (h symbolic)")
    if model == "set":
        sp = solve_set_saddle(w, n)
        tag = "set"
    elif model == "multiset":
        if w.rho < 1:
            sp = solve_set_saddle(w, n)
            tag = "multiset-rho<1"
        else:
            sp = solve_multiset_saddle(w, n)
            tag = "multiset-rho=1"
    else:
        raise InvalidParameterError(f"unknown model {model!r}")
    beta = sp.chi
    C0 = size_power_sum(w, sp.r, 0)
    lnC = math.log(C0)
    alpha = w.alpha
    lnX = (
        -float(gammaln(alpha))
        + lnC
        + (alpha - 1.0) * math.log(lnC)
        + w.h.log_at_real(lnC / beta)
        - w.h.log_at_real(1.0 / beta)
    )
    return GumbelScaling(beta, lnX, tag, sp)


def power_law_scaling(n: float, alpha: float, rho: float, model: str) -> tuple[float, float]:
    """Closed-form first-order scaling for pure power-law weights (h == 1).

    Returns (beta_n first order, lnX three-term expansion).  The reference
    scale is f = (n / Gamma(alpha+1))^(1/(alpha+1)), with an extra
    zeta(alpha+1) factor inside the root for critical multisets.
    """
    if model == "set" or (model == "multiset" and rho < 1):
        f = (n / math.gamma(alpha + 1.0)) ** (1.0 / (alpha + 1.0))
    elif model == "multiset":
        f = (n / (math.gamma(alpha + 1.0) * _zeta_em(alpha + 1.0))) ** (1.0 / (alpha + 1.0))
    else:
        raise InvalidParameterError(f"unknown model {model!r}")
    lnX = alpha * math.log(f) + (alpha - 1.0) * math.log(math.log(f)) + (alpha - 1.0) * math.log(alpha)
    return 1.0 / f, lnX


# ---------------------------------------------------------------------------
# Smallest cluster limit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmallestLimit:
    value: float
    diverged: bool


def smallest_cluster_limit(w: WeightSequence, s: int, model: str) -> SmallestLimit:
    """Limit of P(M > s): exp(-sum_{k<=s} c_k rho^k) for sets, with the
    repetition-summed exponent for multisets (0 with a flag on divergence)."""
    if s < 0:
        raise InvalidParameterError("s must be >= 0")
    rho = w.rho
    total = 0.0
    for k in range(1, s + 1):
        lc = float(w.log_weight(k))
        if lc == -math.inf:
            continue
        ck_rhok = math.exp(lc + k * math.log(rho))
        if model == "set":
            total += ck_rhok
        elif model == "multiset":
            if rho**k >= 1.0:
                return SmallestLimit(0.0, True)  # sum_j rho^{jk}/j diverges
            total += math.exp(lc) * (-math.log1p(-(rho**k)))
        else:
            raise InvalidParameterError(f"unknown model {model!r}")
    return SmallestLimit(math.exp(-total), False)


# ---------------------------------------------------------------------------
# Summation lemmas
# ---------------------------------------------------------------------------

_BERNOULLI = (
    1.0 / 6,
    -1.0 / 30,
    1.0 / 42,
    -1.0 / 30,
    5.0 / 66,
    -691.0 / 2730,
    7.0 / 6,
    -3617.0 / 510,
)


def _zeta_em(s: float, N: int = 24) -> float:
    """zeta(s) for s > 1 by Euler-Maclaurin with 8 Bernoulli corrections."""
    if s <= 1:
        raise InvalidParameterError("zeta evaluated for s > 1 only")
    total = sum(k ** (-s) for k in range(1, N))
    total += N ** (1.0 - s) / (s - 1.0) + 0.5 * N ** (-s)
    fac = s
    power = N ** (-s - 1.0)
    for i, b2j in enumerate(_BERNOULLI):
        two_j = 2 * (i + 1)
        total += b2j / math.factorial(two_j) * fac * power
        # next factor: s(s+1)...(s+2j)  and N^{-s-2j-1}
        fac *= (s + two_j - 1.0) * (s + two_j)
        power /= N * N
    return total


@dataclass(frozen=True)
class RegimePrediction:
    value: float
    regime: str  # "integral" | "log" | "zeta"
    constant: float


def euler_maclaurin_sum_asympt(beta: float, gamma: float, chi: float) -> RegimePrediction:
    """Leading asymptotics of sum_k k^gamma e^(-chi k)/(1-e^(-chi k))^beta.

    Three regimes by comparing beta with 1+gamma: an integral constant times
    chi^-(gamma+1), the logarithmic boundary case, or zeta(beta-gamma) times
    chi^-beta.
    """
    if beta < 0 or gamma < 0:
        raise InvalidParameterError("beta and gamma must be >= 0")
    if not chi > 0:
        raise InvalidParameterError("chi must be positive")
    if chi > 0.5:
        warnings.warn("chi > 0.5: asymptotic regime prediction is unreliable", stacklevel=2)
    if abs(beta - (1.0 + gamma)) < 1e-12:
        return RegimePrediction(chi ** (-(gamma + 1.0)) * math.log(1.0 / chi), "log", 1.0)
    if beta < 1.0 + gamma:

        def integrand(t):
            return t**gamma * math.exp(-t) / (1.0 - math.exp(-t)) ** beta

        d1 = quad(integrand, 0.0, 1.0)[0] + quad(integrand, 1.0, np.inf)[0]
        return RegimePrediction(d1 * chi ** (-(gamma + 1.0)), "integral", d1)
    d2 = _zeta_em(beta - gamma)
    return RegimePrediction(d2 * chi ** (-beta), "zeta", d2)


def karamata_prediction(w: WeightSequence, chi: float) -> float:
    """Tauberian leading term Gamma(alpha) h(1/chi) chi^-alpha of C(rho e^-chi)."""
    if w.kind != "power":
        raise ScopeError("Karamata prediction needs the power-law family")
    if not chi > 0:
        raise InvalidParameterError("chi must be positive")
    return math.exp(float(gammaln(w.alpha)) + w.h.log_at_real(1.0 / chi)) * chi ** (-w.alpha)


# ---------------------------------------------------------------------------
# H-admissibility diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    """Numeric probe of the capture / locality / decay conditions."""

    r: float
    chi: float
    delta: float
    theta0: float
    a_val: float
    b_val: float
    locality_max: float  # H2: relative defect of the Gaussian approximation
    decay_max: float  # H3: max of |F(r e^{i theta})| sqrt(b) / F(r) off-center
    grid: int


def _complex_cluster_sum(w: WeightSequence, r: float, thetas: np.ndarray, p: int = 0) -> np.ndarray:
    """C evaluated at r e^{i theta} for each theta (vectorized, truncated)."""
    if w.kind == "explicit":
        ks = np.arange(1, len(w.values) + 1, dtype=float)
        mags = np.asarray(w.values) * r**ks
    else:
        chi = -math.log1p((r - w.rho) / w.rho)
        k_hi = 64
        logc = None
        while True:
            ks = np.arange(1, k_hi + 1, dtype=float)
            lt = w.h.log_at(ks) + (w.alpha - 1.0) * np.log(ks) - chi * ks
            if lt[-1] < np.max(lt) - 45.0 or k_hi > 5e7:
                logc = lt
                break
            k_hi *= 2
        mags = np.exp(np.clip(logc, -745.0, 700.0))
        mags[logc < -745.0] = 0.0
    phases = np.exp(1j * np.outer(ks, thetas))
    return (mags * ks**p) @ phases


def _complex_log_f(fspec, w: WeightSequence, r: float, thetas: np.ndarray) -> np.ndarray:
    """log F(r e^{i theta}) for the set / multiset functional families."""
    family, arg = fspec
    if family == "set":
        Cz = _complex_cluster_sum(w, r, thetas)
        return Cz + int(arg) * np.log(Cz)
    total = np.zeros(len(thetas), dtype=complex)
    j = 1
    while True:
        Cz = _complex_cluster_sum(w, r**j, j * thetas)
        total += Cz / j
        if np.max(np.abs(Cz)) / j < 1e-14 * max(np.max(np.abs(total)), 1e-300) and j >= 2:
            break
        j += 1
        if j > 10**6:
            break
    for p in arg:
        acc = np.zeros(len(thetas), dtype=complex)
        jj = 1
        while True:
            Cz = _complex_cluster_sum(w, r**jj, jj * thetas)
            acc += jj**p * Cz
            if jj**p * np.max(np.abs(Cz)) < 1e-14 * max(np.max(np.abs(acc)), 1e-300) and jj >= 2:
                break
            jj += 1
            if jj > 10**6:
                break
        total += np.log(acc)
    return total


def h_admissibility_diagnostics(
    fspec,
    w: WeightSequence,
    chi: float,
    delta: float | None = None,
    theta_grid: int = 64,
    r: float | None = None,
) -> AdmissibilityReport:
    """Probe the three admissibility conditions on a theta grid.

    r defaults to rho e^-chi (pass r explicitly for polynomial weights whose
    radius is infinite); the locality window is theta0 = chi^(1+delta) with
    delta defaulting to alpha/3 + 0.01.
    """
    if not chi > 0:
        raise InvalidParameterError("chi must be positive")
    if delta is None:
        al = w.alpha if w.alpha is not None else 1.0
        delta = al / 3.0 + 0.01
    if not delta > 0:
        raise InvalidParameterError("delta must be positive")
    if r is None:
        if w.kind != "power":
            raise InvalidParameterError("pass r explicitly for explicit weights")
        r = w.rho * math.exp(-chi)
    theta0 = chi ** (1.0 + delta)
    a, b, _ = hayman_functionals(fspec, w, r)
    f_r = float(np.real(_complex_log_f(fspec, w, r, np.zeros(1))[0]))

    th_loc = np.linspace(0.0, theta0, theta_grid)
    f_loc = _complex_log_f(fspec, w, r, th_loc)
    dev = np.abs(np.exp(f_loc - f_r - 1j * th_loc * a + th_loc**2 * b / 2.0) - 1.0)
    locality_max = float(np.max(dev))

    th_dec = np.linspace(theta0, math.pi, theta_grid)
    f_dec = _complex_log_f(fspec, w, r, th_dec)
    decay = np.exp(np.real(f_dec) - f_r) * math.sqrt(b)
    decay_max = float(np.max(decay))

    return AdmissibilityReport(
        r, chi, delta, theta0, a, b, locality_max, decay_max, theta_grid
    )
