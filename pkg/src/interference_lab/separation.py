"""Separation functionals: how far an alternative model is from the null."""

from dataclasses import dataclass

import numpy as np

from .designs import DEFAULT_ENUMERATION_CAP, all_interventions
from .errors import DataError, NotARefinementError, UsageError
from .models import ExposureOutcomeModel, LimModel
from .refinement import check_refinement

_SLACK = 1e-9


@dataclass(frozen=True)
class SeparationValue:
    """A separation value ``g`` with the largest attainable value ``max_g``.

    Any requested separation ``delta > max_g`` is trivial (empty alternative);
    ``delta == max_g`` is still attainable.
    """

    g: float
    max_g: float

    def __post_init__(self):
        if self.g < -_SLACK or self.max_g < 0 or self.g > self.max_g + _SLACK:
            raise DataError(f"separation {self.g} outside [0, {self.max_g}]")

    def __float__(self):
        return float(self.g)

    def is_trivial(self, delta):
        return delta > self.max_g


def _check_fine(model, fine):
    if not isinstance(model, ExposureOutcomeModel):
        raise UsageError("refinement separation needs an ExposureOutcomeModel")
    if model.spec != fine:
        raise UsageError("model is not defined on the report's fine mapping")


def refinement_separation_coeff(model, report):
    """Separation from split-set coefficient ranges.

    For each unit and coarse exposure the supremum of squared differences
    over a split set equals (max - min)**2 of its coefficients.
    """
    if not report.is_refinement:
        raise NotARefinementError("fine mapping does not refine the coarse one", report.witness)
    _check_fine(model, report.fine)
    total = 0.0
    for coeffs, sets in zip(model.coeffs, report.split_sets):
        for members in sets:
            vals = coeffs[members]
            total += (vals.max() - vals.min()) ** 2
    n = model.n
    return SeparationValue(total / n, 4.0 * report.s_avg)


def refinement_separation_exact(model, coarse, cap=DEFAULT_ENUMERATION_CAP, report=None):
    """Brute-force separation over every intervention.

    For each unit, interventions are grouped by coarse exposure; the largest
    squared difference is taken over all pairs of outcome values realized
    within a group.
    """
    if report is None:
        report = check_refinement(coarse, model.spec, cap=cap)
    if not report.is_refinement:
        raise NotARefinementError("fine mapping does not refine the coarse one", report.witness)
    Z = all_interventions(model.n, cap)
    Y = model.evaluate(Z)
    E0 = coarse.exposures(Z)
    total = 0.0
    for i in range(model.n):
        for e in np.unique(E0[:, i]):
            vals = np.unique(Y[E0[:, i] == e, i])
            total += float(np.max((vals[:, None] - vals[None, :]) ** 2))
    return SeparationValue(total / model.n, 4.0 * report.s_avg)


def lim_separation(model):
    """Mean squared spillover coefficient; at most 4 under the outcome bound."""
    if not isinstance(model, LimModel):
        raise UsageError("lim_separation needs a LimModel")
    return SeparationValue(float(np.mean(model.beta[:, 2] ** 2)), 4.0)
