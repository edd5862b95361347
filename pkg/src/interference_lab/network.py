"""Undirected simple networks, edge-list I/O and the k-regular generator."""

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DataError, GenerationError, UsageError

_NODES_RE = re.compile(r"#\s*nodes\s*[:=]\s*(\d+)")


@dataclass(frozen=True, eq=False)
class Network:
    """Simple undirected graph in CSR form.

    ``indices[indptr[i]:indptr[i + 1]]`` is the strictly increasing neighbor
    list of unit ``i``.  Use :meth:`from_edges` rather than the constructor.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        for arr in (self.indptr, self.indices):
            arr.flags.writeable = False

    @classmethod
    def from_edges(cls, n, edges):
        n = int(n)
        if n < 0:
            raise UsageError("unit count must be nonnegative")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise DataError(f"edge endpoint out of range for n={n}")
        if np.any(e[:, 0] == e[:, 1]):
            raise DataError("self-loop")
        both = np.concatenate([e, e[:, ::-1]])
        both = np.unique(both, axis=0) if both.size else both
        counts = np.bincount(both[:, 0], minlength=n) if both.size else np.zeros(n, dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        indices = both[:, 1].astype(np.int64) if both.size else np.zeros(0, dtype=np.int64)
        return cls(n, indptr, indices)

    @cached_property
    def degrees(self):
        d = np.diff(self.indptr)
        d.flags.writeable = False
        return d

    @property
    def d_max(self):
        return int(self.degrees.max()) if self.n else 0

    @property
    def num_edges(self):
        return len(self.indices) // 2

    def neighbors(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def adjacency(self):
        return [self.neighbors(i) for i in range(self.n)]

    @cached_property
    def matrix(self):
        """Sparse 0/1 adjacency matrix (CSR, float64)."""
        data = np.ones(len(self.indices))
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def edges(self):
        """Edges as an (m, 2) array with u < v, lexicographically sorted."""
        rows = np.repeat(np.arange(self.n), self.degrees)
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    def closed_neighborhood(self, i):
        """Sorted array of ``{i} | N(i)``."""
        return np.sort(np.append(self.neighbors(i), i))

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self):
        return hash((self.n, self.indices.tobytes()))

    def __repr__(self):
        return f"Network(n={self.n}, edges={self.num_edges}, d_max={self.d_max})"


def load_network(text, n=None):
    """Parse an edge list.

    One ``u v`` pair per line, 0-based; ``#`` starts a comment and blank lines
    are skipped.  The unit count is ``n`` if given, else a ``# nodes: K``
    header if present, else one more than the largest index.
    """
    edges = []
    declared = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        m = _NODES_RE.match(raw.strip())
        if m:
            declared = int(m.group(1))
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"expected 'u v', got {raw.strip()!r}", line=lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"non-integer endpoint in {raw.strip()!r}", line=lineno) from None
        if u < 0 or v < 0:
            raise DataError(f"negative index in {raw.strip()!r}", line=lineno)
        if u == v:
            raise DataError(f"self-loop at unit {u}", line=lineno)
        edges.append((u, v, lineno))
    if n is None:
        n = declared
    if n is None:
        n = 1 + max((max(u, v) for u, v, _ in edges), default=-1)
    for u, v, lineno in edges:
        if u >= n or v >= n:
            raise DataError(f"index out of range for n={n}", line=lineno)
    return Network.from_edges(n, [(u, v) for u, v, _ in edges])


def read_network(path, n=None):
    with open(path) as fh:
        return load_network(fh.read(), n=n)


def dump_network(net):
    """Serialize to the edge-list format accepted by :func:`load_network`."""
    lines = [f"# nodes: {net.n}"]
    lines.extend(f"{u} {v}" for u, v in net.edges())
    return "\n".join(lines) + "\n"


def gen_k_regular(n, k, seed, max_tries=10_000):
    """Uniform simple k-regular graph by the pairing model with rejection.

    Stubs are shuffled and paired; any pairing with a self-loop or a repeated
    edge is discarded and redrawn.  Expected tries grow like
    ``exp((k**2 - 1) / 4)``, so this is meant for small k.
    """
    n, k = int(n), int(k)
    if k < 0 or n <= 0:
        raise UsageError("need n >= 1 and k >= 0")
    if k >= n:
        raise UsageError(f"degree k={k} must be below n={n}")
    if (n * k) % 2:
        raise UsageError(f"n*k must be even (n={n}, k={k})")
    if k == 0:
        return Network.from_edges(n, [])
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), k)
    for _ in range(max_tries):
        pairs = rng.permutation(stubs).reshape(-1, 2)
        pairs.sort(axis=1)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        codes = pairs[:, 0] * n + pairs[:, 1]
        if len(np.unique(codes)) != len(codes):
            continue
        return Network.from_edges(n, pairs)
    raise GenerationError(f"no simple {k}-regular pairing on {n} units after {max_tries} tries")


def cycle(n):
    return Network.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path(n):
    return Network.from_edges(n, [(i, i + 1) for i in range(n - 1)])
