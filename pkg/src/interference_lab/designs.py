"""Experimental designs: probability measures over binary interventions."""

from dataclasses import dataclass

import numpy as np

from .errors import UsageError

DEFAULT_ENUMERATION_CAP = 20


def as_intervention(z, n=None):
    """Validate and return a binary intervention as a uint8 vector."""
    arr = np.asarray(z)
    if arr.ndim != 1:
        raise UsageError("an intervention is a 1-d binary vector")
    if n is not None and arr.shape[0] != n:
        raise UsageError(f"intervention has length {arr.shape[0]}, expected {n}")
    if not np.all((arr == 0) | (arr == 1)):
        raise UsageError("intervention entries must be 0 or 1")
    return arr.astype(np.uint8)


def all_interventions(n, cap=DEFAULT_ENUMERATION_CAP):
    """Every z in {0,1}^n as rows of a (2**n, n) uint8 array.

    Row ``k`` has ``z[j] = (k >> j) & 1``.
    """
    check_enumerable(n, cap)
    k = np.arange(2**n, dtype=np.int64)[:, None]
    return ((k >> np.arange(n)) & 1).astype(np.uint8)


def intervention_index(Z):
    """Inverse of :func:`all_interventions` row ordering."""
    Z = np.asarray(Z, dtype=np.int64)
    return Z @ (np.int64(1) << np.arange(Z.shape[-1], dtype=np.int64))


def check_enumerable(n, cap=DEFAULT_ENUMERATION_CAP):
    if n > cap:
        raise UsageError(f"n={n} exceeds the enumeration cap {cap}")


@dataclass(frozen=True)
class Bernoulli:
    """Independent assignment with P(z_i = 1) = p."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise UsageError(f"Bernoulli probability must lie in (0, 1), got {self.p}")

    def __str__(self):
        return f"bernoulli:{self.p:g}"


@dataclass(frozen=True, eq=False)
class ExplicitFinite:
    """Finitely supported design given as (intervention, probability) pairs."""

    interventions: np.ndarray
    probs: np.ndarray

    def __init__(self, pairs):
        pairs = list(pairs)
        if not pairs:
            raise UsageError("explicit design needs at least one intervention")
        rows = [as_intervention(z) for z, _ in pairs]
        if len({len(z) for z in rows}) != 1:
            raise UsageError("explicit design interventions must share one length")
        Z = np.array(rows, dtype=np.uint8)
        w = np.array([float(q) for _, q in pairs])
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise UsageError("design probabilities must be nonnegative and sum to 1")
        Z.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "interventions", Z)
        object.__setattr__(self, "probs", w)

    @property
    def n(self):
        return self.interventions.shape[1]

    def __str__(self):
        return f"explicit:{len(self.probs)}"


def parse_design(text):
    """Parse the CLI design syntax ``bernoulli:<p>``."""
    kind, _, arg = text.partition(":")
    if kind.strip().lower() != "bernoulli" or not arg:
        raise UsageError(f"unrecognized design {text!r}; expected 'bernoulli:<p>'")
    try:
        p = float(arg)
    except ValueError:
        raise UsageError(f"bad probability in design {text!r}") from None
    return Bernoulli(p)


def sample_many(design, n, size, rng):
    """Draw ``size`` interventions as a (size, n) uint8 array."""
    if isinstance(design, Bernoulli):
        return (rng.random((size, n)) < design.p).astype(np.uint8)
    if design.n != n:
        raise UsageError(f"explicit design is over n={design.n}, not {n}")
    idx = rng.choice(len(design.probs), size=size, p=design.probs)
    return design.interventions[idx].copy()


def sample(design, n, rng):
    """Draw a single intervention."""
    return sample_many(design, n, 1, rng)[0]


def enumerate_design(design, n, cap=DEFAULT_ENUMERATION_CAP):
    """Support of the design with exact probabilities, as ``(Z, probs)``.

    For Bernoulli every one of the 2**n interventions is listed (in
    :func:`all_interventions` order) with probability p**k (1-p)**(n-k).
    """
    if isinstance(design, Bernoulli):
        Z = all_interventions(n, cap)
        k = Z.sum(axis=1)
        probs = design.p**k * (1.0 - design.p) ** (n - k)
        return Z, probs
    if design.n != n:
        raise UsageError(f"explicit design is over n={design.n}, not {n}")
    check_enumerable(n, cap)
    return design.interventions.copy(), design.probs.copy()
