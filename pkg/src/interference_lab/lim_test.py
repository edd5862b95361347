"""Consistent test of no interference against the linear-in-means model.

The estimator of the mean squared spillover coefficient is
``g_hat = mean_i W_i * Y_i**2`` where ``W_i`` is a known function of the
treated-neighbor fraction ``T_i`` satisfying E[W] = 0, E[T W] = 0 and
E[T**2 W] = 1 under the Bernoulli design.  Units of degree one cannot carry
such a weight and get ``W_i = 0``.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .designs import Bernoulli, sample_many
from .errors import DegenerateWeightError, UsageError
from .models import fraction_treated
from .risk import TestProcedure, map_blocks

__all__ = [
    "FractionMoments",
    "LimTestResult",
    "error_bounds",
    "estimate_separation",
    "fraction_moments",
    "fraction_moments_oracle",
    "fraction_treated",
    "lim_procedure",
    "run_lim_test",
    "simulate_g_hat",
    "threshold",
    "unit_weights",
    "weight_general",
    "weight_half",
]

DENOM_TOL = 1e-12
OUTCOME_TOL = 1e-9


@dataclass(frozen=True)
class FractionMoments:
    """Raw moments of T = Binomial(d, p) / d."""

    d: int
    p: float
    m1: float
    m2: float
    m3: float
    m4: float

    @property
    def var(self):
        return self.m2 - self.m1**2


def fraction_moments(d, p):
    """Closed-form first four moments of the treated-neighbor fraction."""
    d = int(d)
    if d < 1:
        raise UsageError("degree must be at least 1")
    if not 0.0 < p < 1.0:
        raise UsageError("p must lie in (0, 1)")
    f2 = d * (d - 1)
    f3 = f2 * (d - 2)
    f4 = f3 * (d - 3)
    m1 = p
    m2 = (d * p + f2 * p**2) / d**2
    m3 = (d * p + 3 * f2 * p**2 + f3 * p**3) / d**3
    m4 = (d * p + 7 * f2 * p**2 + 6 * f3 * p**3 + f4 * p**4) / d**4
    return FractionMoments(d, p, m1, m2, m3, m4)


def fraction_moments_oracle(d, p):
    """Moments by summing over all 2**d neighbor treatment patterns."""
    d = int(d)
    if d < 1:
        raise UsageError("degree must be at least 1")
    acc = [0.0] * 4
    for bits in itertools.product((0, 1), repeat=d):
        k = sum(bits)
        w = p**k * (1 - p) ** (d - k)
        t = k / d
        for r in range(4):
            acc[r] += w * t ** (r + 1)
    return FractionMoments(d, p, *acc)


def _denominator(mo):
    skew = mo.m3 - mo.m2 * mo.m1
    return mo.var * (mo.m4 - mo.m2**2) - skew**2


def weight_general(T, moments):
    """Unbiased weight for any moment law with a nonzero denominator."""
    den = _denominator(moments)
    if abs(den) <= DENOM_TOL:
        raise DegenerateWeightError(
            f"weight denominator vanishes (d={moments.d}, p={moments.p})", degrees=[moments.d]
        )
    skew = moments.m3 - moments.m2 * moments.m1
    T = np.asarray(T, dtype=np.float64)
    return (moments.var * (T**2 - moments.m2) - skew * (T - moments.m1)) / den


def weight_half(T, d):
    """Closed-form weight at p = 1/2: 8 d^2 / (1 - 1/d) * [(T^2 - E T^2) - (T - E T)]."""
    d = int(d)
    if d < 2:
        raise DegenerateWeightError(f"no unbiased weight for degree {d}", degrees=[d])
    T = np.asarray(T, dtype=np.float64)
    m2 = (0.5 * d + 0.25 * d * (d - 1)) / d**2
    return 8.0 * d**2 / (1.0 - 1.0 / d) * ((T**2 - m2) - (T - 0.5))


def excluded_units(network):
    """Units with fewer than two neighbors; they get weight zero."""
    return np.flatnonzero(network.degrees < 2)


def unit_weights(network, T, p=0.5):
    """Weights W_i for a (m, n) or (n,) array of neighbor fractions."""
    T = np.asarray(T, dtype=np.float64)
    deg = network.degrees
    W = np.zeros_like(T)
    bad = []
    for d in np.unique(deg[deg >= 2]).tolist():
        cols = deg == d
        try:
            if p == 0.5:
                W[..., cols] = weight_half(T[..., cols], d)
            else:
                W[..., cols] = weight_general(T[..., cols], fraction_moments(d, p))
        except DegenerateWeightError:
            bad.append(d)
    if bad:
        raise DegenerateWeightError(f"degenerate weights for degrees {bad} at p={p}", degrees=bad)
    return W


def estimate_separation(network, z, Y, p=0.5):
    """g_hat = (1/n) * sum over units of degree >= 2 of W_i * Y_i**2.

    Accepts one intervention/outcome pair or (m, n) batches.
    """
    if not 0.0 < p < 1.0:
        raise UsageError("p must lie in (0, 1)")
    Y = np.asarray(Y, dtype=np.float64)
    if np.any(np.abs(Y) > 1.0 + OUTCOME_TOL):
        raise UsageError("observed outcomes must satisfy |Y_i| <= 1")
    W = unit_weights(network, fraction_treated(network, z), p)
    return (W * Y**2).sum(axis=-1) / network.n


def threshold(network, variant="main"):
    """Rejection threshold.

    main:    (d_max**5 / n) ** (1/4)
    general: max(|T| / n, d_max**2.5 / n**0.5) ** (1/2), T = degree-1 units
    """
    n = network.n
    if n < 1:
        raise UsageError("empty network")
    dmax = network.d_max
    if variant == "main":
        return (dmax**5 / n) ** 0.25
    if variant == "general":
        t = int(np.sum(network.degrees == 1))
        return max(t / n, dmax**2.5 / math.sqrt(n)) ** 0.5
    raise UsageError(f"unknown threshold variant {variant!r}")


def error_bounds(network):
    """(variance bound 2^9 d_max^5 / n, RMSE bound 2^5 max(|T|/n, d_max^2.5 / sqrt n))."""
    n = network.n
    dmax = network.d_max
    t = int(np.sum(network.degrees == 1))
    return 2.0**9 * dmax**5 / n, 2.0**5 * max(t / n, dmax**2.5 / math.sqrt(n))


@dataclass(frozen=True)
class LimTestResult:
    g_hat: float
    tau: float
    reject: bool
    excluded_units: np.ndarray = field(repr=False)
    weights: np.ndarray = field(default=None, repr=False)


def run_lim_test(network, z, Y, p=0.5, variant="main", keep_weights=False):
    """Threshold test: reject when g_hat >= tau."""
    g_hat = float(estimate_separation(network, z, Y, p))
    tau = threshold(network, variant)
    W = unit_weights(network, fraction_treated(network, z), p) if keep_weights else None
    return LimTestResult(g_hat, tau, g_hat >= tau, excluded_units(network), W)


def lim_procedure(network, p=0.5, variant="main"):
    """The Bernoulli(p) design with the threshold test, as a TestProcedure."""
    tau = threshold(network, variant)

    def batch(Z, Y):
        return (estimate_separation(network, Z, Y, p) >= tau).astype(np.float64)

    def test(z, y):
        return int(estimate_separation(network, z, y, p) >= tau)

    return TestProcedure(Bernoulli(p), test, f"lim-threshold({variant})", batch)


def simulate_g_hat(network, model, reps, seed, p=0.5, threads=None):
    """Monte Carlo draws of (g_hat, z) under Bernoulli(p); returns g_hat per replication."""
    design = Bernoulli(p)

    def run(b, start, stop):
        Z = sample_many(design, network.n, stop - start, rngmod.substream(seed, b))
        return estimate_separation(network, Z, model.evaluate(Z), p)

    parts = map_blocks(run, reps, threads, rngmod.block_size_for(network.n))
    return np.concatenate(parts) if parts else np.zeros(0)
