"""Refinement analysis between a coarse and a fine exposure mapping."""

from dataclasses import dataclass, field

import numpy as np

from .designs import DEFAULT_ENUMERATION_CAP, all_interventions, check_enumerable
from .errors import UsageError
from .exposure import Tabulated


@dataclass(frozen=True)
class Witness:
    """Two interventions with equal fine but different coarse exposure for ``unit``."""

    unit: int
    z: np.ndarray
    z_prime: np.ndarray


@dataclass(frozen=True, eq=False)
class RefinementReport:
    coarse: object
    fine: object
    is_refinement: bool
    maps: list = field(default_factory=list)
    split_sets: list = field(default_factory=list)
    split_counts: np.ndarray = None
    s_avg: float = float("nan")
    witness: Witness = None

    def lead_flags(self, i):
        """True for the smallest fine id of each split set of unit ``i``."""
        pi = self.maps[i]
        lead = np.zeros(len(pi), dtype=bool)
        for members in self.split_sets[i]:
            lead[members[0]] = True
        return lead


def _local_key(coarse, fine, i):
    nets = {id(s.network) for s in (coarse, fine) if s.network is not None}
    if isinstance(coarse, Tabulated) or isinstance(fine, Tabulated) or len(nets) > 1:
        return None
    net = coarse.network if coarse.network is not None else fine.network
    if net is None:
        return ()
    nb = net.neighbors(i)
    return (len(nb), int(np.searchsorted(nb, i)))


def _unit_maps(coarse, fine, i, cap):
    cols = np.union1d(coarse.support(i), fine.support(i)).astype(np.int64)
    check_enumerable(len(cols), cap)
    B = all_interventions(len(cols), cap)
    c = np.asarray(coarse.local_exposures(i, cols, B), dtype=np.int64)
    f = np.asarray(fine.local_exposures(i, cols, B), dtype=np.int64)
    size_f = fine.size(i)
    pi = np.full(size_f, -1, dtype=np.int64)
    pi[f] = c
    clash = np.flatnonzero(pi[f] != c)
    if len(clash):
        row = clash[0]
        other = np.flatnonzero((f == f[row]) & (c != c[row]))[0]
        return None, (cols, B[other], B[row])
    if np.any(pi < 0):
        raise UsageError(f"unit {i}: fine exposures {np.flatnonzero(pi < 0).tolist()} are never realized")
    return pi, None


def check_refinement(coarse, fine, cap=DEFAULT_ENUMERATION_CAP):
    """Decide whether ``fine`` refines ``coarse`` and compute split sets.

    For each unit the exposures of both mappings depend only on the union of
    their supports, so enumerating that local block is exhaustive over
    {0,1}^n.  Tabulated specs read every unit and therefore need n <= cap.
    """
    if coarse.n != fine.n:
        raise UsageError(f"specs have different unit counts ({coarse.n} vs {fine.n})")
    if isinstance(coarse, Tabulated) or isinstance(fine, Tabulated):
        check_enumerable(coarse.n, cap)
    cache = {}
    maps, split_sets = [], []
    counts = np.zeros(coarse.n, dtype=np.int64)
    for i in range(coarse.n):
        key = _local_key(coarse, fine, i)
        if key is not None and key in cache:
            pi = cache[key]
        else:
            pi, bad = _unit_maps(coarse, fine, i, cap)
            if pi is None:
                cols, b, b2 = bad
                z = np.zeros(coarse.n, dtype=np.uint8)
                z2 = np.zeros(coarse.n, dtype=np.uint8)
                z[cols], z2[cols] = b, b2
                return RefinementReport(coarse, fine, False, witness=Witness(i, z, z2))
            if key is not None:
                cache[key] = pi
        size_c = coarse.size(i)
        sets = [np.flatnonzero(pi == e0) for e0 in range(size_c)]
        counts[i] = sum(len(s) > 1 for s in sets)
        maps.append(pi)
        split_sets.append(sets)
    s_avg = float(counts.mean()) if coarse.n else 0.0
    return RefinementReport(coarse, fine, True, maps, split_sets, counts, s_avg)
