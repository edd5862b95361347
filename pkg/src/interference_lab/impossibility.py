"""Adversarial null/alternative mixtures and the total-variation lower bound.

A mixture draw is identified by a 64-bit key.  Each coefficient block of a
draw carries one fair sign, generated on demand as
``keyed_signs(key, unit, block, tag)``, so evaluating a draw at an
intervention never materializes the full coefficient table.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .designs import DEFAULT_ENUMERATION_CAP, check_enumerable, enumerate_design, sample_many
from .errors import NotARefinementError, UsageError
from .exposure import NoEffect, OwnTreatment
from .models import ExposureOutcomeModel
from .refinement import check_refinement
from .risk import Estimate, map_blocks

SIGN_PLUS = 0.5
FULL_EXPANSION_CAP = 12
MAX_ENUMERATED_BLOCKS = 16

_TAG_NULL = 0
_TAG_ALT = 1


# -- marginal laws ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FactorizedSigns:
    """Independent coordinates on {-1, +1}; ``prob_plus[i] = P(y_i = +1)``."""

    prob_plus: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.prob_plus, dtype=np.float64)
        if p.ndim != 1 or np.any((p < 0) | (p > 1)):
            raise UsageError("coordinate probabilities must be a vector in [0, 1]")
        object.__setattr__(self, "prob_plus", p)

    @property
    def n(self):
        return len(self.prob_plus)

    def atoms(self, cap=DEFAULT_ENUMERATION_CAP):
        """Full product expansion: (outcome vectors, probabilities)."""
        check_enumerable(self.n, cap)
        k = np.arange(2**self.n, dtype=np.int64)[:, None]
        bits = (k >> np.arange(self.n)) & 1
        probs = np.prod(np.where(bits == 1, self.prob_plus, 1.0 - self.prob_plus), axis=1)
        return 2.0 * bits - 1.0, probs

    def to_finite(self, cap=DEFAULT_ENUMERATION_CAP):
        Y, probs = self.atoms(cap)
        return FiniteSupport.from_samples(Y, probs)


@dataclass(frozen=True, eq=False)
class FiniteSupport:
    """Arbitrary law with finitely many atoms, keyed by outcome tuples."""

    atoms: dict
    n: int

    def __post_init__(self):
        total = math.fsum(self.atoms.values())
        if any(p < 0 for p in self.atoms.values()) or abs(total - 1.0) > 1e-12:
            raise UsageError("atom probabilities must be nonnegative and sum to 1")

    @classmethod
    def from_samples(cls, Y, weights):
        """Aggregate weighted outcome rows into atoms."""
        Y = np.asarray(Y, dtype=np.float64)
        atoms = {}
        for row, w in zip(map(tuple, Y.tolist()), np.asarray(weights, dtype=np.float64).tolist()):
            atoms[row] = atoms.get(row, 0.0) + w
        return cls(atoms, Y.shape[1])

    def prob(self, y):
        return self.atoms.get(tuple(float(v) for v in y), 0.0)


def tv_distance(P, Q, cap=DEFAULT_ENUMERATION_CAP):
    """Exact total-variation distance (half the L1 distance of the laws).

    Two factorized laws with n <= 12 are expanded over all 2**n outcomes.
    Beyond that only coordinates whose laws differ are expanded; identical
    coordinates are a common independent factor and cancel.
    """
    if P.n != Q.n:
        raise UsageError(f"laws have different dimensions ({P.n} vs {Q.n})")
    if isinstance(P, FactorizedSigns) and isinstance(Q, FactorizedSigns):
        if P.n <= FULL_EXPANSION_CAP:
            _, p = P.atoms()
            _, q = Q.atoms()
            return 0.5 * float(np.abs(p - q).sum())
        diff = np.flatnonzero(P.prob_plus != Q.prob_plus)
        if len(diff) == 0:
            return 0.0
        check_enumerable(len(diff), cap)
        _, p = FactorizedSigns(P.prob_plus[diff]).atoms(cap)
        _, q = FactorizedSigns(Q.prob_plus[diff]).atoms(cap)
        return 0.5 * float(np.abs(p - q).sum())
    if isinstance(P, FactorizedSigns):
        P = P.to_finite(cap)
    if isinstance(Q, FactorizedSigns):
        Q = Q.to_finite(cap)
    keys = set(P.atoms) | set(Q.atoms)
    return 0.5 * math.fsum(abs(P.atoms.get(k, 0.0) - Q.atoms.get(k, 0.0)) for k in keys)


# -- mixtures ---------------------------------------------------------------


class MixturePair:
    """Null mixture over the coarse model, alternative over the fine model.

    Subclasses define the block structure: ``null_blocks``/``alt_blocks``
    list the (unit, block) pairs that carry one fair sign each, and the
    ``_*_model``/``_*_outcomes``/``_*_law`` hooks turn signs into
    coefficients, outcomes and exact coordinate laws.
    """

    def __init__(self, coarse, fine, report, forced=None):
        self.coarse = coarse
        self.fine = fine
        self.report = report
        self.forced = dict(forced or {})

    @property
    def n(self):
        return self.coarse.n

    def perturbed(self, unit, value=1.0):
        """Copy whose alternative draws always give ``unit`` the outcome ``value``."""
        if value not in (-1.0, 1.0):
            raise UsageError("forced outcomes must be -1 or +1")
        pair = object.__new__(type(self))
        pair.__dict__.update(self.__dict__)
        pair.forced = {**self.forced, int(unit): float(value)}
        return pair

    # draws ----------------------------------------------------------------

    def draw_null(self, key):
        return self._null_model(self._block_signs(key, self.null_blocks(), _TAG_NULL))

    def draw_alt(self, key):
        return self._apply_forced_model(self._alt_model(self._block_signs(key, self.alt_blocks(), _TAG_ALT)))

    def enumerate_draws(self, which):
        """Every draw of the mixture; all are equally likely."""
        blocks = self.null_blocks() if which == "null" else self.alt_blocks()
        if len(blocks) > MAX_ENUMERATED_BLOCKS:
            raise UsageError(f"{len(blocks)} sign blocks is too many to enumerate")
        out = []
        for signs in itertools.product((-1.0, 1.0), repeat=len(blocks)):
            s = np.array(signs)
            out.append(self._null_model(s) if which == "null" else self._apply_forced_model(self._alt_model(s)))
        return out

    @staticmethod
    def _block_signs(key, blocks, tag):
        if not blocks:
            return np.zeros(0)
        b = np.array(blocks, dtype=np.int64)
        return rngmod.keyed_signs(key, b[:, 0], b[:, 1], tag)

    def _apply_forced_model(self, model):
        if not self.forced:
            return model
        coeffs = [c.copy() for c in model.coeffs]
        for i, v in self.forced.items():
            coeffs[i][:] = v
        return ExposureOutcomeModel(model.spec, coeffs)

    # lazy evaluation ------------------------------------------------------

    def null_outcomes(self, keys, Z):
        """Outcomes of draw ``keys[r]`` at intervention ``Z[r]`` for each row."""
        return self._null_outcomes(np.asarray(keys, dtype=np.uint64)[:, None], np.asarray(Z))

    def alt_outcomes(self, keys, Z):
        Y = self._alt_outcomes(np.asarray(keys, dtype=np.uint64)[:, None], np.asarray(Z))
        for i, v in self.forced.items():
            Y[:, i] = v
        return Y

    # exact laws -----------------------------------------------------------

    def null_law(self, z):
        return self._null_law(np.asarray(z)[None, :])[0]

    def alt_law(self, z):
        return self.alt_laws(np.asarray(z)[None, :])[0]

    def null_laws(self, Z):
        return self._null_law(np.asarray(Z))

    def alt_laws(self, Z):
        P = self._alt_law(np.asarray(Z))
        for i, v in self.forced.items():
            P[:, i] = 1.0 if v > 0 else 0.0
        return P


class GeneralMixturePair(MixturePair):
    """Sign-block mixtures for any refinement.

    Null: every coarse coefficient is an independent fair sign.  Alternative:
    the fine coefficients in the split set of each coarse exposure are
    ``s * v`` with a fair sign ``s`` and ``v = (+1, -1, ..., -1)`` over the
    split set in increasing id order.
    """

    def __init__(self, coarse, fine, report, forced=None):
        super().__init__(coarse, fine, report, forced)
        sizes_c = coarse.sizes()
        sizes_f = fine.sizes()
        self._c_off = np.concatenate([[0], np.cumsum(sizes_c)]).astype(np.int64)
        self._f_off = np.concatenate([[0], np.cumsum(sizes_f)]).astype(np.int64)
        self._pi = np.concatenate(report.maps).astype(np.int64) if report.maps else np.zeros(0, np.int64)
        lead = [report.lead_flags(i) for i in range(coarse.n)]
        self._v = np.where(np.concatenate(lead), 1.0, -1.0) if lead else np.zeros(0)
        self._blocks = [(i, e0) for i in range(coarse.n) for e0 in range(int(sizes_c[i]))]

    def null_blocks(self):
        return self._blocks

    def alt_blocks(self):
        return self._blocks

    def _null_model(self, signs):
        return ExposureOutcomeModel(self.coarse, np.split(signs, self._c_off[1:-1]))

    def _alt_model(self, signs):
        s = signs[self._c_off[np.repeat(np.arange(self.n), np.diff(self._f_off))] + self._pi]
        return ExposureOutcomeModel(self.fine, np.split(s * self._v, self._f_off[1:-1]))

    def _null_outcomes(self, keys, Z):
        units = np.arange(self.n)
        return rngmod.keyed_signs(keys, units, self.coarse.exposures(Z), _TAG_NULL)

    def _alt_outcomes(self, keys, Z):
        units = np.arange(self.n)
        flat = self._f_off[:-1] + self.fine.exposures(Z)
        return rngmod.keyed_signs(keys, units, self._pi[flat], _TAG_ALT) * self._v[flat]

    def _null_law(self, Z):
        return np.full(np.shape(Z), SIGN_PLUS)

    def _alt_law(self, Z):
        v = self._v[self._f_off[:-1] + self.fine.exposures(Z)]
        return np.where(v > 0, SIGN_PLUS, 1.0 - SIGN_PLUS)


class SutvaMixturePair(MixturePair):
    """No effect (alpha_i fair signs) versus no interference with beta_1 = -beta_0."""

    def null_blocks(self):
        return [(i, 0) for i in range(self.n)]

    def alt_blocks(self):
        return [(i, 0) for i in range(self.n)]

    def _null_model(self, signs):
        return ExposureOutcomeModel(self.coarse, signs[:, None])

    def _alt_model(self, signs):
        return ExposureOutcomeModel(self.fine, np.column_stack([signs, -signs]))

    def _null_outcomes(self, keys, Z):
        return rngmod.keyed_signs(keys, np.arange(self.n), 0, _TAG_NULL) * np.ones(Z.shape)

    def _alt_outcomes(self, keys, Z):
        beta0 = rngmod.keyed_signs(keys, np.arange(self.n), 0, _TAG_ALT)
        return np.where(Z == 1, -beta0, beta0)

    def _null_law(self, Z):
        return np.full(np.shape(Z), SIGN_PLUS)

    def _alt_law(self, Z):
        # beta_{i,z_i} is beta_0 when z_i = 0 and -beta_0 otherwise
        return np.where(np.asarray(Z) == 1, 1.0 - SIGN_PLUS, SIGN_PLUS)


def sutva_mixtures(n):
    """Mixtures for no effect versus no interference."""
    if n < 1:
        raise UsageError("need at least one unit")
    coarse, fine = NoEffect(n), OwnTreatment(n)
    return SutvaMixturePair(coarse, fine, check_refinement(coarse, fine))


def general_mixtures(coarse, fine, report=None):
    """Mixtures for any coarse mapping and a refinement of it."""
    if report is None:
        report = check_refinement(coarse, fine)
    if not report.is_refinement:
        raise NotARefinementError("fine mapping does not refine the coarse one", report.witness)
    return GeneralMixturePair(coarse, fine, report)


def marginal_dist(pair, which, z):
    """Exact law of y(z) under the null or alternative mixture."""
    if which == "null":
        return FactorizedSigns(pair.null_law(z))
    if which == "alt":
        return FactorizedSigns(pair.alt_law(z))
    raise UsageError(f"which must be 'null' or 'alt', got {which!r}")


def support_marginal(pair, which, z):
    """Law of y(z) by pushing every mixture draw forward (small mixtures only)."""
    draws = pair.enumerate_draws(which)
    Y = np.array([m.evaluate(np.asarray(z)) for m in draws])
    return FiniteSupport.from_samples(Y, np.full(len(draws), 1.0 / len(draws)))


# -- bounds and error sums --------------------------------------------------


def tv_profile(pair, design, cap=DEFAULT_ENUMERATION_CAP):
    """Per-intervention TV between the two marginals: ``(Z, probs, tv)``."""
    Z, probs = enumerate_design(design, pair.n, cap)
    P0, P1 = pair.null_laws(Z), pair.alt_laws(Z)
    tv = np.array([tv_distance(FactorizedSigns(a), FactorizedSigns(b), cap) for a, b in zip(P0, P1)])
    return Z, probs, tv


def risk_lower_bound(pair, design, cap=DEFAULT_ENUMERATION_CAP):
    """1 - E_{z ~ design}[TV(null marginal at z, alternative marginal at z)]."""
    _, probs, tv = tv_profile(pair, design, cap)
    return 1.0 - math.fsum(probs * tv)


def mixture_error_sums(procs, pair, reps, seed, threads=None):
    """Monte Carlo E_null E_z[phi] + E_alt E_z[1 - phi] for tests sharing a design.

    Every replication draws a fresh mixture member and a fresh intervention
    on each side; all tests see the same draws.
    """
    procs = list(procs)
    if reps < 2:
        raise UsageError("need at least 2 replications")
    design = procs[0].design
    if any(p.design != design for p in procs):
        raise UsageError("all procedures must share one design")
    n = pair.n

    def run(b, start, stop):
        g = rngmod.substream(seed, b)
        m = stop - start
        reps_idx = np.arange(start, stop)
        Z0 = sample_many(design, n, m, g)
        Z1 = sample_many(design, n, m, g)
        Y0 = pair.null_outcomes(rngmod.keyed_bits(seed, reps_idx, _TAG_NULL), Z0)
        Y1 = pair.alt_outcomes(rngmod.keyed_bits(seed, reps_idx, _TAG_ALT), Z1)
        return [(p.apply(Z0, Y0).sum(), p.apply(Z1, Y1).sum()) for p in procs]

    parts = map_blocks(run, reps, threads, rngmod.block_size_for(n))
    out = []
    for k in range(len(procs)):
        r0 = sum(part[k][0] for part in parts) / reps
        r1 = sum(part[k][1] for part in parts) / reps
        se = math.sqrt((r0 * (1 - r0) + r1 * (1 - r1)) / reps)
        out.append(Estimate(r0 + (1.0 - r1), se, reps))
    return out


def mixture_error_sum(proc, pair, reps, seed, threads=None):
    return mixture_error_sums([proc], pair, reps, seed, threads)[0]


def mixture_error_sum_exact(proc, pair, cap=DEFAULT_ENUMERATION_CAP):
    """Same quantity by full enumeration over mixture draws and the design."""
    Z, probs = enumerate_design(proc.design, pair.n, cap)
    total = 0.0
    for which in ("null", "alt"):
        draws = pair.enumerate_draws(which)
        C = np.array([np.concatenate(m.coeffs) for m in draws])
        spec = draws[0].spec
        off = np.concatenate([[0], np.cumsum(spec.sizes())[:-1]])
        flat = off + spec.exposures(Z)
        # rows: (intervention, draw) pairs
        Y = C[:, flat].transpose(1, 0, 2).reshape(-1, pair.n)
        Zr = np.repeat(Z, len(draws), axis=0)
        phi = proc.apply(Zr, Y).reshape(len(Z), len(draws)).mean(axis=1)
        total += math.fsum(probs * (phi if which == "null" else 1.0 - phi))
    return Estimate(total, 0.0, len(Z), exact=True)
