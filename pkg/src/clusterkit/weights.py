"""Cluster weight sequences.

A weight sequence assigns a non-negative weight c_k to each cluster size k.
Two kinds are supported:

  * power-law: c_k = h(k) * k**(alpha-1) * rho**(-k) with alpha > 0,
    0 < rho <= 1 and h a slowly-varying factor (a positive constant or a
    power of log, the latter evaluated as h(1) := h(2) so weights stay
    positive at k = 1);
  * explicit: a finite list of non-negative reals (c_k = 0 beyond the list),
    carrying a declared rho used by limit formulas; for root finding the
    effective radius of such a polynomial series is +infinity.

Weights are evaluated in log space so that small rho at large k cannot
overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

_LOG_LOG_2 = math.log(math.log(2.0))


@dataclass(frozen=True)
class HSpec:
    """Slowly-varying factor: constant ``c`` or ``(ln k)**p``."""

    kind: str  # "const" | "logpow"
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in ("const", "logpow"):
            raise InvalidParameterError(f"unknown h kind {self.kind!r}")
        if self.kind == "const" and not self.value > 0:
            raise InvalidParameterError("constant h must be positive")

    def log_at(self, k):
        """log h(k) for integer sizes k >= 1 (vectorized)."""
        if self.kind == "const":
            return np.log(self.value) * np.ones_like(np.asarray(k, dtype=float))
        k = np.asarray(k, dtype=float)
        # h(1) := h(2) keeps the k = 1 weight positive.
        return self.value * np.log(np.log(np.maximum(k, 2.0)))

    def log_at_real(self, x: float) -> float:
        """log h(x) for real arguments (used by limit formulas)."""
        if self.kind == "const":
            return math.log(self.value)
        return self.value * (math.log(math.log(x)) if x > 2.0 else _LOG_LOG_2)

    def value_at_real(self, x: float) -> float:
        return math.exp(self.log_at_real(x))

    def to_config(self) -> dict:
        if self.kind == "const":
            return {"type": "const", "c": self.value}
        return {"type": "logpow", "p": self.value}

    @classmethod
    def from_config(cls, cfg: dict) -> "HSpec":
        if cfg.get("type") == "const":
            return cls("const", float(cfg.get("c", 1.0)))
        if cfg.get("type") == "logpow":
            return cls("logpow", float(cfg["p"]))
        raise InvalidParameterError(f"unknown h descriptor {cfg!r}")


@dataclass(frozen=True)
class WeightSequence:
    """Immutable weight sequence; safe to share across threads."""

    kind: str  # "power" | "explicit"
    alpha: float | None
    rho: float
    h: HSpec | None
    values: tuple[float, ...] | None
    m: int = 0  # first index with c_m > 0, derived

    def __post_init__(self):
        if self.kind == "power":
            if self.alpha is None or not self.alpha > 0:
                raise InvalidParameterError("alpha must be positive")
            if not 0 < self.rho <= 1:
                raise InvalidParameterError("rho must lie in (0, 1]")
            if self.h is None:
                raise InvalidParameterError("power-law weights need an h descriptor")
            object.__setattr__(self, "m", 1)
        elif self.kind == "explicit":
            if not self.values:
                raise InvalidParameterError("explicit weights need at least one value")
            if any(v < 0 for v in self.values):
                raise InvalidParameterError("weights must be non-negative")
            if not 0 < self.rho <= 1:
                raise InvalidParameterError("declared rho must lie in (0, 1]")
            first = next((i + 1 for i, v in enumerate(self.values) if v > 0), None)
            if first is None:
                raise InvalidParameterError("explicit weights must have a positive entry")
            object.__setattr__(self, "m", first)
            if self.alpha is not None and not self.alpha > 0:
                raise InvalidParameterError("alpha must be positive when supplied")
        else:
            raise InvalidParameterError(f"unknown weight kind {self.kind!r}")

    # -- evaluation ---------------------------------------------------------

    def log_weight(self, k):
        """log c_k, with -inf for zero weights. Accepts scalars or arrays."""
        karr = np.asarray(k, dtype=float)
        if self.kind == "power":
            out = (
                self.h.log_at(karr)
                + (self.alpha - 1.0) * np.log(karr)
                - karr * math.log(self.rho)
            )
        else:
            vals = np.zeros_like(karr)
            idx = karr.astype(int)
            inside = (idx >= 1) & (idx <= len(self.values))
            lookup = np.asarray(self.values, dtype=float)
            vals[inside] = lookup[idx[inside] - 1]
            with np.errstate(divide="ignore"):
                out = np.log(vals)
        return float(out) if np.isscalar(k) else out

    @property
    def radius(self) -> float:
        """Radius of convergence of the cluster series."""
        return self.rho if self.kind == "power" else math.inf

    @property
    def multiset_radius(self) -> float:
        """Radius of the multiset (Euler-transformed) series."""
        return min(self.rho, 1.0) if self.kind == "power" else 1.0

    @property
    def is_power(self) -> bool:
        return self.kind == "power"

    def alpha_or_raise(self) -> float:
        if self.alpha is None:
            raise InvalidParameterError(
                "alpha is required for this estimate; supply it when building "
                "explicit weights"
            )
        return self.alpha

    # -- config round trip --------------------------------------------------

    def to_config(self) -> dict:
        if self.kind == "power":
            return {
                "kind": "power",
                "alpha": self.alpha,
                "rho": self.rho,
                "h": self.h.to_config(),
            }
        cfg = {"kind": "explicit", "values": list(self.values), "rho": self.rho}
        if self.alpha is not None:
            cfg["alpha"] = self.alpha
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "WeightSequence":
        kind = cfg.get("kind")
        if kind == "power":
            h = HSpec.from_config(cfg.get("h", {"type": "const", "c": 1.0}))
            return make_power_weights(float(cfg["alpha"]), float(cfg["rho"]), h)
        if kind == "explicit":
            alpha = cfg.get("alpha")
            return make_explicit_weights(
                cfg["values"],
                rho=float(cfg.get("rho", 1.0)),
                alpha=None if alpha is None else float(alpha),
            )
        raise InvalidParameterError(f"unknown weight config {cfg!r}")


def make_power_weights(alpha: float, rho: float, h_spec=None) -> WeightSequence:
    """Power-law weights c_k = h(k) k**(alpha-1) rho**(-k)."""
    if h_spec is None:
        h = HSpec("const", 1.0)
    elif isinstance(h_spec, HSpec):
        h = h_spec
    elif isinstance(h_spec, dict):
        h = HSpec.from_config(h_spec)
    else:
        raise InvalidParameterError(f"bad h descriptor {h_spec!r}")
    return WeightSequence("power", float(alpha), float(rho), h, None)


def make_explicit_weights(values, rho: float = 1.0, alpha: float | None = None) -> WeightSequence:
    """Explicit finite weight list; c_k = values[k-1], zero beyond."""
    return WeightSequence("explicit", alpha, float(rho), None, tuple(float(v) for v in values))


def weight_at(w: WeightSequence, k: int) -> float:
    """c_k as a plain float."""
    if k < 1:
        raise InvalidParameterError("k must be >= 1")
    if w.kind == "explicit":
        return w.values[k - 1] if k <= len(w.values) else 0.0
    lw = w.log_weight(k)
    return math.exp(lw) if lw != -math.inf else 0.0


@dataclass(frozen=True)
class OscillationReport:
    """Per-size sandwich check A1 k^(a1-1) rho^-k <= c_k <= A2 k^(a2-1) rho^-k."""

    ks: np.ndarray
    lower_ok: np.ndarray
    upper_ok: np.ndarray
    all_ok: bool


def verify_oscillating_bounds(
    w: WeightSequence,
    alpha1: float,
    alpha2: float,
    A1: float,
    A2: float,
    k_min: int,
    k_max: int,
) -> OscillationReport:
    """Check membership of c_k in the two-sided power-law envelope on [k_min, k_max]."""
    if not (0 < alpha1 <= alpha2):
        raise InvalidParameterError("need 0 < alpha1 <= alpha2")
    if not (0 < A1 <= A2):
        raise InvalidParameterError("need 0 < A1 <= A2")
    if k_min < 1 or k_max < k_min:
        raise InvalidParameterError("bad k range")
    ks = np.arange(k_min, k_max + 1)
    rho = w.rho
    logc = w.log_weight(ks)
    lo = math.log(A1) + (alpha1 - 1.0) * np.log(ks) - ks * math.log(rho)
    hi = math.log(A2) + (alpha2 - 1.0) * np.log(ks) - ks * math.log(rho)
    slack = 1e-12 * np.maximum(1.0, np.abs(logc))
    lower_ok = logc >= lo - slack
    upper_ok = logc <= hi + slack
    return OscillationReport(ks, lower_ok, upper_ok, bool(np.all(lower_ok & upper_ok)))
