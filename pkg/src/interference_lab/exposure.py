"""Exposure mappings.

Every spec maps a batch of interventions ``Z`` (shape ``(m, n)``) to dense
integer exposure ids (shape ``(m, n)``), with unit ``i`` taking ids in
``range(spec.size(i))``.  Encodings:

* ``NoEffect``: always 0.
* ``OwnTreatment``: ``z_i``.
* ``Stratified``: ``2 * t + z_i`` where ``t`` counts treated neighbors.
* ``ArbitraryNeighborhood``: bit ``k`` is the treatment of the ``k``-th
  element of the sorted closed neighborhood ``{i} | N(i)``.
* ``Tabulated``: explicit ``(n, 2**n)`` lookup table indexed by
  :func:`~interference_lab.designs.intervention_index`.

Each spec also knows the set of units its exposure for unit ``i`` reads
(``support(i)``) and can evaluate unit ``i`` on assignments of an arbitrary
superset of that support (``local_exposures``).  Refinement checks use this
to enumerate locally instead of over all of {0,1}^n.
"""

import numpy as np

from .designs import DEFAULT_ENUMERATION_CAP, check_enumerable, intervention_index
from .errors import DataError, UsageError
from .network import Network

MAX_ARBITRARY_DEGREE = 61


def _as_batch(Z):
    Z = np.asarray(Z)
    return Z[None, :] if Z.ndim == 1 else Z


class ExposureSpec:
    """Base class; subclasses define ``name``, ``size``, ``exposures``, ``support``."""

    name = "abstract"
    rank = None

    def __init__(self, n):
        self.n = int(n)

    def size(self, i):
        raise NotImplementedError

    def sizes(self):
        return np.array([self.size(i) for i in range(self.n)], dtype=np.int64)

    def exposures(self, Z):
        raise NotImplementedError

    def support(self, i):
        raise NotImplementedError

    def local_exposures(self, i, cols, B):
        """Exposure ids of unit ``i`` for rows of ``B``, which assign ``cols``."""
        Z = np.zeros((B.shape[0], self.n), dtype=np.uint8)
        Z[:, cols] = B
        return self.exposures(Z)[:, i]

    def exposure_of(self, i, z):
        if not 0 <= i < self.n:
            raise UsageError(f"unit {i} out of range for n={self.n}")
        return int(self.exposures(np.asarray(z)[None, :])[0, i])

    @property
    def network(self):
        return None

    def to_json(self):
        return {"type": self.name}

    def __eq__(self, other):
        return type(self) is type(other) and self.n == other.n and self.network == other.network

    def __hash__(self):
        return hash((type(self).__name__, self.n))

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


class NoEffect(ExposureSpec):
    name = "no-effect"
    rank = 0

    def size(self, i):
        return 1

    def sizes(self):
        return np.ones(self.n, dtype=np.int64)

    def exposures(self, Z):
        Z = _as_batch(Z)
        return np.zeros(Z.shape, dtype=np.int64)

    def support(self, i):
        return np.zeros(0, dtype=np.int64)

    def local_exposures(self, i, cols, B):
        return np.zeros(B.shape[0], dtype=np.int64)


class OwnTreatment(ExposureSpec):
    name = "own-treatment"
    rank = 1

    def size(self, i):
        return 2

    def sizes(self):
        return np.full(self.n, 2, dtype=np.int64)

    def exposures(self, Z):
        return _as_batch(Z).astype(np.int64)

    def support(self, i):
        return np.array([i], dtype=np.int64)

    def local_exposures(self, i, cols, B):
        return B[:, np.searchsorted(cols, i)].astype(np.int64)


class _NetworkSpec(ExposureSpec):
    def __init__(self, network):
        if not isinstance(network, Network):
            raise UsageError(f"{type(self).__name__} needs a Network")
        super().__init__(network.n)
        self._network = network

    @property
    def network(self):
        return self._network

    def support(self, i):
        return self._network.closed_neighborhood(i)

    def __hash__(self):
        return hash((type(self).__name__, self._network))


class Stratified(_NetworkSpec):
    """Own treatment and the number (not identity) of treated neighbors."""

    name = "stratified"
    rank = 2

    def size(self, i):
        return 2 * (int(self._network.degrees[i]) + 1)

    def sizes(self):
        return 2 * (self._network.degrees.astype(np.int64) + 1)

    def exposures(self, Z):
        Z = _as_batch(Z)
        t = np.asarray(self._network.matrix @ Z.T.astype(np.float64)).T
        return 2 * np.rint(t).astype(np.int64) + Z.astype(np.int64)

    def local_exposures(self, i, cols, B):
        nb = np.searchsorted(cols, self._network.neighbors(i))
        t = B[:, nb].astype(np.int64).sum(axis=1)
        return 2 * t + B[:, np.searchsorted(cols, i)].astype(np.int64)


class ArbitraryNeighborhood(_NetworkSpec):
    """Exact treatment pattern on the closed neighborhood."""

    name = "arbitrary"
    rank = 3

    def __init__(self, network):
        super().__init__(network)
        if network.n and network.d_max > MAX_ARBITRARY_DEGREE:
            raise UsageError(f"arbitrary-neighborhood ids need degree <= {MAX_ARBITRARY_DEGREE}")
        width = network.d_max + 1 if network.n else 0
        idx = np.full((network.n, width), -1, dtype=np.int64)
        for i in range(network.n):
            nb = network.closed_neighborhood(i)
            idx[i, : len(nb)] = nb
        self._idx = idx

    def size(self, i):
        return 2 ** (int(self._network.degrees[i]) + 1)

    def sizes(self):
        return np.int64(2) ** (self._network.degrees.astype(np.int64) + 1)

    def exposures(self, Z):
        Z = _as_batch(Z).astype(np.int64)
        out = np.zeros(Z.shape, dtype=np.int64)
        for k in range(self._idx.shape[1]):
            col = self._idx[:, k]
            valid = col >= 0
            bits = np.where(valid, Z[:, np.where(valid, col, 0)], 0)
            out |= bits << k
        return out

    def local_exposures(self, i, cols, B):
        pos = np.searchsorted(cols, self._network.closed_neighborhood(i))
        weights = np.int64(1) << np.arange(len(pos), dtype=np.int64)
        return B[:, pos].astype(np.int64) @ weights


class Tabulated(ExposureSpec):
    """Explicit exposure table over all of {0,1}^n (small n only).

    ``table[i, k]`` is unit ``i``'s exposure at the ``k``-th intervention of
    :func:`~interference_lab.designs.all_interventions`.  Ids of each unit
    must be exactly ``0 .. size(i) - 1``, every one realized.
    """

    name = "tabulated"

    def __init__(self, table, cap=DEFAULT_ENUMERATION_CAP):
        table = np.asarray(table, dtype=np.int64)
        if table.ndim != 2:
            raise DataError("exposure table must be 2-d (units x interventions)")
        n = table.shape[0]
        check_enumerable(n, cap)
        if table.shape[1] != 2**n:
            raise DataError(f"exposure table needs {2**n} columns for n={n}")
        super().__init__(n)
        sizes = np.empty(n, dtype=np.int64)
        for i in range(n):
            ids = np.unique(table[i])
            if ids[0] != 0 or ids[-1] != len(ids) - 1:
                raise DataError(f"exposure ids of unit {i} are not dense 0..k-1")
            sizes[i] = len(ids)
        table.flags.writeable = False
        self.table = table
        self._sizes = sizes

    @classmethod
    def from_spec(cls, spec, cap=DEFAULT_ENUMERATION_CAP):
        from .designs import all_interventions

        return cls(spec.exposures(all_interventions(spec.n, cap)).T, cap=cap)

    def size(self, i):
        return int(self._sizes[i])

    def sizes(self):
        return self._sizes.copy()

    def exposures(self, Z):
        k = intervention_index(_as_batch(Z))
        return self.table[:, k].T

    def support(self, i):
        return np.arange(self.n, dtype=np.int64)

    def to_json(self):
        return {"type": self.name, "table": self.table.tolist()}

    def __eq__(self, other):
        return isinstance(other, Tabulated) and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash(self.table.tobytes())


SPEC_NAMES = {
    "no-effect": NoEffect,
    "own-treatment": OwnTreatment,
    "stratified": Stratified,
    "arbitrary": ArbitraryNeighborhood,
}


def make_spec(name, n=None, network=None):
    """Build a structured spec from its CLI name."""
    key = name.strip().lower().replace("_", "-")
    aliases = {"sutva": "own-treatment", "none": "no-effect", "arbitrary-neighborhood": "arbitrary"}
    key = aliases.get(key, key)
    if key not in SPEC_NAMES:
        raise UsageError(f"unknown exposure spec {name!r}; choose from {sorted(SPEC_NAMES)}")
    cls = SPEC_NAMES[key]
    if issubclass(cls, _NetworkSpec):
        if network is None:
            raise UsageError(f"spec {key!r} needs a network")
        return cls(network)
    if n is None:
        if network is None:
            raise UsageError(f"spec {key!r} needs a unit count")
        n = network.n
    return cls(n)


def spec_from_json(obj, n=None, network=None):
    if isinstance(obj, str):
        return make_spec(obj, n=n, network=network)
    if obj.get("type") == "tabulated":
        return Tabulated(obj["table"])
    return make_spec(obj["type"], n=n, network=network)
