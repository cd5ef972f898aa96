"""Saddle-point equations and the tilted-measure functionals.

The three monotone root-finding problems solved here:

  set:      r C'(r) = n                 (objective: first size-power sum)
  multiset: sum_j r^j C'(r^j) = n       (objective: repetition-summed version)
  ratio:    r C'(r) / C(r) = n/N        (objective: tilted mean cluster size)

Each objective is strictly increasing in r, so a doubling/halving bracket
scan plus bisection plus two Newton polish steps is robust.  For power-law
weights the radius variable is chi = ln(rho/r) (capped at 1e-8 to dodge
float64 cancellation in 1 - r); finite explicit weight lists behave like
polynomials with infinite radius and get a geometrically grown bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InvalidParameterError, UnreachableTargetError
from .weights import WeightSequence

_CHI_MIN = 1e-8
_REL_TOL = 1e-9
_BLOCK = 65536
_TAIL_EPS = 1e-16
_TAIL_RUN = 5
_J_EPS = 1e-14


@dataclass(frozen=True)
class SaddlePoint:
    """A solved saddle equation with the tilt mean/variance at the root."""

    kind: str  # "set" | "multiset" | "ratio"
    r: float
    chi: float  # ln(reference radius / r); negative for polynomial roots beyond it
    target: float
    residual: float
    a_val: float
    b_val: float


# ---------------------------------------------------------------------------
# Size-power sums
# ---------------------------------------------------------------------------


def _power_sum_chi(w: WeightSequence, chi: float, s: float) -> float:
    """sum_k k^s c_k (rho e^-chi)^k = sum_k h(k) k^(alpha-1+s) e^(-chi k)."""
    if chi <= 0:
        raise DivergenceError("power-law sums diverge at or beyond the radius")
    expo = w.alpha - 1.0 + s
    total = 0.0
    k0 = 1
    # starting block sized to the decay scale: repetition sums make many
    # short calls at large effective chi
    block = int(min(512, max(8, 60.0 / chi)))
    while True:
        ks = np.arange(k0, k0 + block, dtype=float)
        lt = w.h.log_at(ks) + expo * np.log(ks) - chi * ks
        t = np.exp(np.clip(lt, -745.0, 700.0))
        t[lt < -745.0] = 0.0
        total += float(t.sum())
        # past the crest the terms decay monotonically (up to the slowly
        # varying factor); a whole block below threshold ends the sum
        if k0 + block > 10 and ks[-1] > expo / chi:
            tail = t[ks > expo / chi]
            if tail.size >= _TAIL_RUN and float(tail[-_TAIL_RUN:].max()) < _TAIL_EPS * max(
                total, 1e-300
            ):
                break
        k0 += block
        block = min(block * 2, _BLOCK)
        if k0 > 2e9:
            raise DivergenceError("power sum did not converge within term budget")
    return total


def _explicit_sum(w: WeightSequence, r: float, s: float) -> float:
    ks = np.arange(1, len(w.values) + 1, dtype=float)
    vals = np.asarray(w.values)
    return float((vals * ks**s * r**ks).sum())


def size_power_sum(w: WeightSequence, r: float, s: float) -> float:
    """sum_{k>=1} k^s c_k r^k  (the s-th moment sum of the tilted cluster law)."""
    if r <= 0:
        raise InvalidParameterError("r must be positive")
    if w.kind == "explicit":
        return _explicit_sum(w, r, s)
    chi = -math.log1p((r - w.rho) / w.rho)
    return _power_sum_chi(w, chi, s)


def size_power_sum_multi(w: WeightSequence, r: float, s: float, t: float) -> float:
    """sum_{j>=1} j^(t-1) sum_k k^s c_k r^(jk), truncated adaptively in j."""
    if not 0 < r < w.multiset_radius:
        raise DivergenceError("repetition sum requires 0 < r < min(rho, 1)")
    if w.kind == "power":
        chi = -math.log1p((r - w.rho) / w.rho)  # r = rho e^-chi

        def inner(j):
            # (rho e^-chi)^j = rho^j e^(-j chi); fold rho^j into the weights:
            # sum_k k^s c_k rho^(jk) e^(-j chi k)
            #   = sum_k h(k) k^(alpha-1+s) rho^((j-1)k) e^(-j chi k)
            # For rho < 1 the rho^((j-1)k) factor is a geometric damping; fold
            # it into an effective chi_j = j*chi + (j-1) ln(1/rho).
            chi_j = j * chi + (j - 1) * (-math.log(w.rho))
            return _power_sum_chi(w, chi_j, s)

    else:

        def inner(j):
            return _explicit_sum(w, r**j, s)

    total = 0.0
    j = 1
    while True:
        term = j ** (t - 1.0) * inner(j)
        total += term
        if j >= 2 and term < _J_EPS * max(total, 1e-300):
            break
        j += 1
        if j > 5e7:
            raise DivergenceError("repetition sum did not converge in j")
    return total


# ---------------------------------------------------------------------------
# Hayman functionals a, b, c
# ---------------------------------------------------------------------------


def hayman_functionals(fspec, w: WeightSequence, r: float) -> tuple[float, float, float]:
    """(a, b, c) of F = e^f at radius r.

    fspec = ("set", ell) for F = e^C * C^ell, or ("multiset", (p_1..p_ell))
    for F = (multiset series) * prod_i sum_j j^(p_i) C(x^j).
    """
    family, arg = fspec
    if family == "set":
        ell = int(arg)
        A0 = size_power_sum(w, r, 0)
        A1 = size_power_sum(w, r, 1)
        A2 = size_power_sum(w, r, 2)
        A3 = size_power_sum(w, r, 3)
        a = A1 + ell * A1 / A0
        b = A2 + ell * (A2 / A0 - (A1 / A0) ** 2)
        c = A3 + ell * (A3 / A0 - 3 * A1 * A2 / A0**2 + 2 * (A1 / A0) ** 3)
        return a, b, c
    if family == "multiset":
        ps = tuple(int(p) for p in arg)
        a = size_power_sum_multi(w, r, 1, 1)
        b = size_power_sum_multi(w, r, 2, 2)
        c = size_power_sum_multi(w, r, 3, 3)
        for p in ps:
            A0p = size_power_sum_multi(w, r, 0, 1 + p)
            A1p = size_power_sum_multi(w, r, 1, 2 + p)
            A2p = size_power_sum_multi(w, r, 2, 3 + p)
            A3p = size_power_sum_multi(w, r, 3, 4 + p)
            a += A1p / A0p
            b += A2p / A0p - (A1p / A0p) ** 2
            c += A3p / A0p - 3 * A1p * A2p / A0p**2 + 2 * (A1p / A0p) ** 3
        return a, b, c
    raise InvalidParameterError(f"unknown functional family {family!r}")


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------


def _bracket_chi(f, target: float, chi_hi_start: float = 1.0):
    """Bracket a root of the decreasing-in-chi objective f(chi) = target.

    Scans upward until f <= target, then halves downward until f >= target,
    so the objective is never evaluated far below the root (keeps the term
    counts of the underlying sums bounded).
    """
    hi = chi_hi_start
    while f(hi) > target:
        hi *= 2.0
        if hi > 1400:
            raise UnreachableTargetError("objective exceeds target everywhere")
    lo = hi / 2.0
    while f(lo) < target:
        hi = lo
        lo /= 2.0
        if lo < _CHI_MIN:
            if f(_CHI_MIN) >= target:
                return _CHI_MIN, hi
            raise UnreachableTargetError(
                "target not reachable above the chi >= 1e-8 resolution cap"
            )
    return lo, hi


def _bisect(f, lo, hi, target, iters=60):
    """Bisection for increasing f on [lo, hi] with f(lo) <= target <= f(hi)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _bisect_decreasing(f, lo, hi, target, iters=60):
    """Bisection for decreasing f on [lo, hi] with f(lo) >= target >= f(hi)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _chi_of(w: WeightSequence, r: float, reference: float) -> float:
    return -math.log1p((r - reference) / reference)


def solve_set_saddle(w: WeightSequence, n: float) -> SaddlePoint:
    """Root of r C'(r) = n."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if w.kind == "power":
        f = lambda chi: _power_sum_chi(w, chi, 1)
        lo_chi, hi_chi = _bracket_chi(f, n)
        chi = _bisect_decreasing(f, lo_chi, hi_chi, n)
        r = w.rho * math.exp(-chi)
    else:
        g = lambda rr: _explicit_sum(w, rr, 1)
        hi = 1.0
        while g(hi) < n:
            hi *= 2.0
            if hi > 1e300:
                raise UnreachableTargetError("polynomial objective never reaches n")
        r = _bisect(g, 0.0, hi, n)
    for _ in range(8):
        a = size_power_sum(w, r, 1)
        if abs(a - n) <= _REL_TOL * max(1.0, n):
            break
        b = size_power_sum(w, r, 2)
        step = (n - a) * r / b
        r_new = r + step
        if w.kind == "power":
            r_new = min(max(r_new, 1e-300), w.rho * math.exp(-_CHI_MIN))
        r = r_new
    a = size_power_sum(w, r, 1)
    b = size_power_sum(w, r, 2)
    return SaddlePoint("set", r, _chi_of(w, r, w.rho), float(n), a - n, a, b)


def solve_multiset_saddle(w: WeightSequence, n: float) -> SaddlePoint:
    """Root of sum_j r^j C'(r^j) = n, on (0, min(rho, 1))."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    ref = w.multiset_radius
    f = lambda chi: size_power_sum_multi(w, ref * math.exp(-chi), 1, 1)
    lo_chi, hi_chi = _bracket_chi(f, n)
    chi = _bisect_decreasing(f, lo_chi, hi_chi, n)
    r = ref * math.exp(-chi)
    for _ in range(8):
        a = size_power_sum_multi(w, r, 1, 1)
        if abs(a - n) <= _REL_TOL * max(1.0, n):
            break
        b = size_power_sum_multi(w, r, 2, 2)
        r = min(max(r + (n - a) * r / b, 1e-300), ref * math.exp(-_CHI_MIN))
    a = size_power_sum_multi(w, r, 1, 1)
    b = size_power_sum_multi(w, r, 2, 2)
    return SaddlePoint("multiset", r, _chi_of(w, r, w.rho), float(n), a - n, a, b)


def solve_ratio_saddle(w: WeightSequence, n: float, N: float) -> SaddlePoint:
    """Root of r C'(r)/C(r) = n/N (mean cluster size under the tilt)."""
    if n < 1 or N < 1:
        raise InvalidParameterError("n and N must be >= 1")
    target = n / N
    if target <= w.m:
        raise UnreachableTargetError(
            f"n/N = {target} not above the smallest positive size m = {w.m}"
        )
    if w.kind == "explicit" and target >= len(w.values):
        k_max = max(i + 1 for i, v in enumerate(w.values) if v > 0)
        if target >= k_max:
            raise UnreachableTargetError(
                f"n/N = {target} not below the largest positive size {k_max}"
            )

    def ratio_at(r):
        return size_power_sum(w, r, 1) / size_power_sum(w, r, 0)

    if w.kind == "power":
        f = lambda chi: ratio_at(w.rho * math.exp(-chi))
        lo_chi, hi_chi = _bracket_chi(f, target)
        chi = _bisect_decreasing(f, lo_chi, hi_chi, target)
        r = w.rho * math.exp(-chi)
        r_cap = w.rho * math.exp(-_CHI_MIN)
    else:
        hi = 1.0
        while ratio_at(hi) < target:
            hi *= 2.0
            if hi > 1e12:
                raise UnreachableTargetError("ratio saturates below n/N")
        lo = hi
        while ratio_at(lo) > target:
            lo /= 2.0
        r = _bisect(ratio_at, lo, hi, target)
        r_cap = math.inf
    for _ in range(8):
        A0 = size_power_sum(w, r, 0)
        A1 = size_power_sum(w, r, 1)
        g = A1 / A0
        if abs(g - target) <= _REL_TOL * max(1.0, target):
            break
        A2 = size_power_sum(w, r, 2)
        deriv = (A2 * A0 - A1 * A1) / (r * A0 * A0)  # > 0 by Cauchy-Schwarz
        r = min(max(r + (target - g) / deriv, 1e-300), r_cap)
    A0 = size_power_sum(w, r, 0)
    A1 = size_power_sum(w, r, 1)
    A2 = size_power_sum(w, r, 2)
    return SaddlePoint("ratio", r, _chi_of(w, r, w.rho), target, A1 / A0 - target, A1, A2)
