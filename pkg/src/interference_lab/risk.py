"""Testing procedures and their Type I / Type II / overall error.

Monte Carlo runs are split into blocks of ``rng.block_size_for(n)``
replications; block ``b`` draws from ``substream(seed, b)``.  Results are
therefore identical for any number of worker threads.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import rng as rngmod
from .designs import DEFAULT_ENUMERATION_CAP, Bernoulli, enumerate_design, sample_many
from .errors import UsageError
from .models import LimModel, fraction_treated
from .separation import lim_separation

THREADS_ENV = "INTERFERENCE_LAB_THREADS"


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    reps: int
    exact: bool = False

    def within(self, target, k=3.0):
        return abs(self.value - target) <= k * self.se


@dataclass(frozen=True)
class TestProcedure:
    """A design paired with a test ``(z, Y) -> {0, 1}``.

    ``batch``, when given, must agree with ``test`` row by row on ``(m, n)``
    arrays; it is only a faster path.
    """

    __test__ = False

    design: object
    test: Callable
    label: str
    batch: Optional[Callable] = None

    def apply(self, Z, Y):
        if self.batch is not None:
            return np.asarray(self.batch(Z, Y), dtype=np.float64)
        return np.array([float(self.test(z, y)) for z, y in zip(Z, Y)])


@dataclass(frozen=True)
class RiskEstimate:
    type1: Estimate
    type2: Estimate
    reps: int
    exact: bool

    @property
    def overall(self):
        return self.type1.value + self.type2.value

    @property
    def overall_se(self):
        return math.hypot(self.type1.se, self.type2.se)


def default_threads():
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def map_blocks(fn, reps, threads=None, block_size=rngmod.BLOCK_SIZE):
    """Run ``fn(block, start, stop)`` over replication blocks, in block order."""
    spans = list(rngmod.blocks(reps, block_size))
    threads = threads or default_threads()
    if threads <= 1 or len(spans) <= 1:
        return [fn(*s) for s in spans]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda s: fn(*s), spans))


def _binomial(total, reps):
    p = total / reps
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / reps)


# -- baseline tests ---------------------------------------------------------


def _never(Z, Y):
    return np.zeros(np.shape(Z)[0])


def _row_hash(seed, Z, Y):
    Z = np.asarray(Z)
    Y = np.asarray(Y, dtype=np.float64)
    code = Z.astype(np.int64) + 2 * np.rint(Y * 2.0**20).astype(np.int64)
    with np.errstate(over="ignore"):
        cells = rngmod.keyed_bits(rngmod.keyed_bits(seed, np.arange(Z.shape[1])) ^ code.astype(np.uint64))
        h = rngmod.keyed_bits(seed, cells.sum(axis=1, dtype=np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


def coin_flip(design, q, seed=0):
    """Rejects with probability q, ignoring the data.

    The coin is a hash of ``(seed, z, Y)``, so the test is a deterministic
    function of its inputs.
    """
    if not 0.0 <= q <= 1.0:
        raise UsageError("coin-flip probability must lie in [0, 1]")

    def batch(Z, Y):
        return (_row_hash(seed, Z, Y) < q).astype(np.float64)

    def test(z, y):
        return int(batch(np.asarray(z)[None, :], np.asarray(y)[None, :])[0])

    return TestProcedure(design, test, f"coin-flip({q:g})", batch)


def never_reject(design):
    return TestProcedure(design, lambda z, y: 0, "never-reject", _never)


def difference_in_means(design, network=None, crit=1.959963984540054):
    """Welch-type two-group comparison.

    Groups are units with at least half of their neighbors treated versus the
    rest when a network is given, otherwise treated versus control units.
    Rejects when |t| >= crit; groups with fewer than two units never reject.
    """

    def groups(Z):
        if network is None:
            return np.asarray(Z) == 1
        return fraction_treated(network, Z) >= 0.5

    def batch(Z, Y):
        Z = np.asarray(Z)
        Y = np.asarray(Y, dtype=np.float64)
        g = groups(Z)
        n1 = g.sum(axis=1)
        n0 = g.shape[1] - n1
        with np.errstate(invalid="ignore", divide="ignore"):
            m1 = np.where(g, Y, 0).sum(axis=1) / n1
            m0 = np.where(~g, Y, 0).sum(axis=1) / n0
            v1 = np.where(g, (Y - m1[:, None]) ** 2, 0).sum(axis=1) / (n1 - 1)
            v0 = np.where(~g, (Y - m0[:, None]) ** 2, 0).sum(axis=1) / (n0 - 1)
            se = np.sqrt(v1 / n1 + v0 / n0)
            gap = np.abs(m1 - m0)
            gap = np.where(gap > 1e-12, gap, 0.0)
            # zero spread with distinct means is perfect separation
            t = np.where(se > 0, gap / se, np.where(gap > 0, np.inf, 0.0))
        ok = (n1 >= 2) & (n0 >= 2)
        return np.where(ok & (t >= crit), 1.0, 0.0)

    def test(z, y):
        return int(batch(np.asarray(z)[None, :], np.asarray(y)[None, :])[0])

    label = "diff-in-means(neighbors)" if network is not None else "diff-in-means(own)"
    return TestProcedure(design, test, label, batch)


def baseline_tests(design=None, network=None, seed=0):
    """never-reject, coin-flip(0.05), coin-flip(0.5) and difference in means."""
    design = design or Bernoulli(0.5)
    return [
        never_reject(design),
        coin_flip(design, 0.05, seed=seed),
        coin_flip(design, 0.5, seed=seed + 1),
        difference_in_means(design, network),
    ]


# -- error evaluation -------------------------------------------------------


def rejection_rates(proc, models, reps=None, seed=None, exact=False, threads=None, cap=DEFAULT_ENUMERATION_CAP):
    """E_z[phi(z, y(z))] for several models sharing the same interventions."""
    models = list(models)
    if not models:
        return []
    n = models[0].n
    if any(m.n != n for m in models):
        raise UsageError("all models must have the same unit count")
    if exact:
        Z, probs = enumerate_design(proc.design, n, cap)
        return [Estimate(float(probs @ proc.apply(Z, m.evaluate(Z))), 0.0, len(probs), True) for m in models]
    if reps is None or reps < 1 or seed is None:
        raise UsageError("Monte Carlo rejection rates need reps >= 1 and a seed")

    def run(b, start, stop):
        Z = sample_many(proc.design, n, stop - start, rngmod.substream(seed, b))
        return [float(proc.apply(Z, m.evaluate(Z)).sum()) for m in models]

    totals = np.sum(map_blocks(run, reps, threads, rngmod.block_size_for(n)), axis=0)
    out = []
    for t in np.atleast_1d(totals):
        p, se = _binomial(float(t), reps)
        out.append(Estimate(p, se, reps))
    return out


def rejection_rate(proc, model, reps=None, seed=None, exact=False, threads=None, cap=DEFAULT_ENUMERATION_CAP):
    return rejection_rates(proc, [model], reps, seed, exact, threads, cap)[0]


def _default_separation(model):
    if isinstance(model, LimModel):
        return float(lim_separation(model).g)
    raise UsageError("pass `separation` to check exposure-model alternatives")


def risk_profile(proc, null_models, alt_models, reps=None, seed=None, delta=0.0, separation=None,
                 exact=False, threads=None, cap=DEFAULT_ENUMERATION_CAP):
    """Worst-case errors over explicit model lists.

    The maxima over the supplied lists are lower bounds on the suprema over
    the full null and separated alternative classes.
    """
    null_models, alt_models = list(null_models), list(alt_models)
    if not null_models or not alt_models:
        raise UsageError("risk_profile needs non-empty null and alternative lists")
    sep = separation or _default_separation
    for k, m in enumerate(alt_models):
        g = float(sep(m))
        if g < delta - 1e-12:
            raise UsageError(f"alternative model #{k} has separation {g:.6g} < delta={delta:g}")
    rates = rejection_rates(proc, null_models + alt_models, reps, seed, exact, threads, cap)
    nulls, alts = rates[: len(null_models)], rates[len(null_models):]
    t1 = max(nulls, key=lambda e: e.value)
    worst = min(alts, key=lambda e: e.value)
    t2 = Estimate(1.0 - worst.value, worst.se, worst.reps, worst.exact)
    return RiskEstimate(t1, t2, t1.reps, exact)


# -- consistency curves -----------------------------------------------------


def lim_null_models(network):
    """Zero outcomes plus the four no-interference vertex models (outcomes +/-1)."""
    models = [LimModel(network, (0.0, 0.0, 0.0))]
    for a0 in (-1.0, 1.0):
        for a1 in (-1.0, 1.0):
            models.append(LimModel(network, (a0, a1 - a0, 0.0)))
    return models


def lim_alt_model(network, delta):
    """Homogeneous linear-in-means model with separation exactly delta."""
    if delta < 0 or delta > 4.0:
        raise UsageError(f"delta={delta} is trivial or negative; need 0 <= delta <= 4")
    b3 = math.sqrt(delta)
    b1 = 0.0 if b3 <= 1.0 else -b3 / 2.0
    return LimModel(network, (b1, 0.0, b3))


CURVE_FIELDS = ["n", "delta", "type1", "type1_se", "type2", "type2_se", "overall", "reps", "seed"]


def consistency_curve(k, n_list, delta, reps, seed, p=0.5, alt_builder=None, null_builder=None,
                      variant="main", threads=None):
    """Estimated errors of the linear-in-means threshold test on k-regular graphs.

    One row per n (sorted).  The graph for each n is drawn with a seed keyed
    by ``(seed, n)``; interventions use the usual block substreams.
    """
    from .lim_test import lim_procedure
    from .network import gen_k_regular

    if delta <= 0 or delta > 4.0:
        raise UsageError(f"delta={delta} is trivial (alternative empty) or not positive")
    alt_builder = alt_builder or (lambda net: [lim_alt_model(net, delta)])
    null_builder = null_builder or lim_null_models
    rows = []
    for n in sorted(int(v) for v in n_list):
        net = gen_k_regular(n, k, int(rngmod.keyed_bits(seed, n) >> np.uint64(1)))
        proc = lim_procedure(net, p, variant)
        risk = risk_profile(proc, null_builder(net), alt_builder(net), reps=reps, seed=seed,
                            delta=delta, threads=threads)
        rows.append({
            "n": n,
            "delta": delta,
            "type1": risk.type1.value,
            "type1_se": risk.type1.se,
            "type2": risk.type2.value,
            "type2_se": risk.type2.se,
            "overall": risk.overall,
            "reps": reps,
            "seed": seed,
        })
    return rows
