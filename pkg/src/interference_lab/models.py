"""Potential outcome models: exposure-based tables and linear-in-means."""

import json

import numpy as np

from .errors import DataError, UsageError
from .exposure import ExposureSpec, spec_from_json
from .network import Network

BOUND = 1.0
_TOL = 1e-12


def fraction_treated(network, Z):
    """Fraction of each unit's neighbors that are treated.

    Accepts one intervention or a (m, n) batch; all degrees must be >= 1.
    """
    deg = network.degrees
    if network.n and deg.min() < 1:
        bad = np.flatnonzero(deg < 1)
        raise UsageError(f"fraction treated undefined for degree-0 units {bad[:10].tolist()}")
    Z = np.asarray(Z)
    single = Z.ndim == 1
    Zb = Z[None, :] if single else Z
    counts = np.asarray(network.matrix @ Zb.T.astype(np.float64)).T
    T = counts / deg
    return T[0] if single else T


class ExposureOutcomeModel:
    """y_i(z) = coeffs[i][exposure id of unit i at z].

    ``coeffs`` is ragged: one array of length ``spec.size(i)`` per unit.
    """

    def __init__(self, spec, coeffs):
        if not isinstance(spec, ExposureSpec):
            raise UsageError("spec must be an ExposureSpec")
        coeffs = [np.array(c, dtype=np.float64).reshape(-1) for c in coeffs]
        if len(coeffs) != spec.n:
            raise DataError(f"need coefficients for {spec.n} units, got {len(coeffs)}")
        sizes = spec.sizes()
        for i, c in enumerate(coeffs):
            if len(c) != sizes[i]:
                raise DataError(f"unit {i}: expected {sizes[i]} coefficients, got {len(c)}")
            if np.any(np.abs(c) > BOUND + _TOL) or not np.all(np.isfinite(c)):
                raise DataError(f"unit {i}: coefficients must lie in [-1, 1]")
        self.spec = spec
        self.coeffs = coeffs
        self._offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self._flat = np.concatenate(coeffs) if coeffs else np.zeros(0)

    @property
    def n(self):
        return self.spec.n

    def evaluate(self, Z):
        ids = self.spec.exposures(Z)
        Y = self._flat[self._offsets[:-1] + ids]
        return Y[0] if np.ndim(Z) == 1 else Y

    def scaled(self, gamma):
        return ExposureOutcomeModel(self.spec, [gamma * c for c in self.coeffs])

    def to_json(self):
        return {"kind": "exposure", "spec": self.spec.to_json(), "coeffs": [c.tolist() for c in self.coeffs]}


class LimModel:
    """Linear-in-means outcomes y_i = b1 + b2 z_i + b3 T_i(z)."""

    def __init__(self, network, beta):
        if not isinstance(network, Network):
            raise UsageError("LimModel needs a Network")
        beta = np.array(beta, dtype=np.float64)
        if beta.shape == (3,):
            beta = np.tile(beta, (network.n, 1))
        if beta.shape != (network.n, 3):
            raise DataError(f"beta must have shape ({network.n}, 3), got {beta.shape}")
        if network.n and network.degrees.min() < 1:
            bad = np.flatnonzero(network.degrees < 1)
            raise DataError(f"linear-in-means model needs degree >= 1; degree-0 units {bad[:10].tolist()}")
        b1, b2, b3 = beta.T
        corners = np.column_stack([b1, b1 + b2, b1 + b3, b1 + b2 + b3])
        over = np.flatnonzero(np.abs(corners).max(axis=1) > BOUND + _TOL)
        if len(over):
            raise DataError(f"outcome bound |y| <= 1 violated at units {over[:10].tolist()}")
        beta.flags.writeable = False
        self.network = network
        self.beta = beta

    @property
    def n(self):
        return self.network.n

    def evaluate(self, Z):
        Z = np.asarray(Z)
        T = fraction_treated(self.network, Z)
        b1, b2, b3 = self.beta.T
        return b1 + b2 * Z + b3 * T

    def scaled(self, gamma):
        return LimModel(self.network, gamma * self.beta)

    def to_json(self):
        return {"kind": "lim", "beta": self.beta.tolist()}


def sutva_lim(network, alpha0, alpha1):
    """No-interference outcomes written in linear-in-means form (b3 = 0)."""
    alpha0 = np.broadcast_to(np.asarray(alpha0, dtype=float), (network.n,))
    alpha1 = np.broadcast_to(np.asarray(alpha1, dtype=float), (network.n,))
    return LimModel(network, np.column_stack([alpha0, alpha1 - alpha0, np.zeros(network.n)]))


def evaluate_outcomes(model, z):
    """Outcome vector y(z), or a (m, n) matrix for a batch of interventions."""
    return model.evaluate(z)


def load_model(text, network=None, n=None):
    """Parse the JSON model file format.

    ``{"kind": "exposure", "spec": ..., "coeffs": [[...], ...]}`` or
    ``{"kind": "lim", "beta": [[b1, b2, b3], ...]}``.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model file is not valid JSON: {exc}") from None
    kind = obj.get("kind")
    if kind == "lim":
        if network is None:
            raise UsageError("a linear-in-means model needs a network")
        return LimModel(network, obj["beta"])
    if kind == "exposure":
        coeffs = obj["coeffs"]
        spec = spec_from_json(obj["spec"], n=len(coeffs) if n is None else n, network=network)
        return ExposureOutcomeModel(spec, coeffs)
    raise DataError(f"unknown model kind {kind!r}")


def dump_model(model):
    return json.dumps(model.to_json())
