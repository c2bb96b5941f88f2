"""Ageing diagnostics: Weibull shape classes, IPD ``zeta/alpha`` bands and
the shape of the discrete hazard (second differences, inflection points)."""

import csv
from dataclasses import dataclass, field
from enum import Enum
import io
import math

import numpy as np

from . import distributions as dist
from .distributions import IpdParams, W1Params, WeibullParams


class AgeingClass(str, Enum):
    REJUVENATION = "Rejuvenation"
    NO_AGEING = "NoAgeing"
    SOFT_DECELERATED = "SoftDeceleratedAgeing"
    DECELERATED = "DeceleratedAgeing"
    NON_ACCELERATED = "NonAcceleratedAgeing"
    ACCELERATED = "AcceleratedAgeing"
    STRONGLY_ACCELERATED = "StronglyAcceleratedAgeing"


class Plausibility(str, Enum):
    PLAUSIBLE = "Plausible"
    IMPLAUSIBLE_RATIO = "ImplausibleRatioAboveOne"
    BOUNDARY = "Boundary"


# Published zeta/alpha ranges for IPD fits on discretized Weibull samples,
# keyed by the Weibull shape of the generating law.
RATIO_BANDS = (
    (AgeingClass.NO_AGEING, 1.0, 8e-5, 1e-4),
    (AgeingClass.SOFT_DECELERATED, 1.2, 5.8e-4, 7e-4),
    (AgeingClass.DECELERATED, 1.5, 2.6e-3, 3.2e-3),
    (AgeingClass.DECELERATED, 1.8, 2e-2, 4e-2),
    (AgeingClass.NON_ACCELERATED, 2.0, 0.25, 0.35),
    (AgeingClass.ACCELERATED, 2.25, 1.28, 1.35),
    (AgeingClass.STRONGLY_ACCELERATED, 2.5, 1.48, 1.85),
)
REJUVENATION_CEILING = 1e-5


@dataclass(frozen=True)
class AgeingReport:
    model: str
    ageing_class: AgeingClass
    plausibility_flag: Plausibility = Plausibility.PLAUSIBLE
    ratio_zeta_alpha: float | None = None
    inflection_point: int | None = None
    annotations: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "ageing_class": self.ageing_class.value,
            "plausibility_flag": self.plausibility_flag.value,
            "ratio_zeta_alpha": self.ratio_zeta_alpha,
            "inflection_point": self.inflection_point,
            "annotations": list(self.annotations),
        }


def classify_beta(beta: float) -> AgeingClass:
    """Ageing class implied by a Weibull shape parameter."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    if beta < 1.0:
        return AgeingClass.REJUVENATION
    if beta == 1.0:
        return AgeingClass.NO_AGEING
    if beta < 2.0:
        return AgeingClass.DECELERATED
    if beta == 2.0:
        return AgeingClass.NON_ACCELERATED
    return AgeingClass.ACCELERATED


def classify_ipd_ratio(params: IpdParams):
    """Map ``zeta/alpha`` onto the published bands.

    Returns ``(ageing_class, plausibility_flag, annotations)``. A ratio between
    two bands goes to the band whose nearest edge is closer on a log scale and
    is annotated as such. Ratios at or below ``1e-5`` are flagged ``Boundary``:
    the IPD hazard cannot decrease, so rejuvenation and no ageing look alike.
    """
    ratio = params.ratio
    notes = []
    if ratio <= REJUVENATION_CEILING:
        notes.append("ratio <= 1e-5: rejuvenation and no ageing are indistinguishable")
        return AgeingClass.REJUVENATION, Plausibility.BOUNDARY, tuple(notes)

    cls = None
    for band_cls, _, low, high in RATIO_BANDS:
        if low <= ratio <= high:
            cls = band_cls
            break
    if cls is None:
        edges = [(AgeingClass.REJUVENATION, REJUVENATION_CEILING)]
        for band_cls, _, low, high in RATIO_BANDS:
            edges += [(band_cls, low), (band_cls, high)]
        log_r = math.log(ratio)
        cls = min(edges, key=lambda e: abs(math.log(e[1]) - log_r))[0]
        if ratio > RATIO_BANDS[-1][3]:
            notes.append("above the highest published band")
        else:
            notes.append("between published bands")

    flag = Plausibility.IMPLAUSIBLE_RATIO if ratio > 1.0 else Plausibility.PLAUSIBLE
    return cls, flag, tuple(notes)


def _hazard(model, n):
    if isinstance(model, IpdParams):
        return dist.ipd_hazard(model, n)
    if isinstance(model, (W1Params, WeibullParams)):
        return dist.w1_hazard(W1Params(model.eta, model.beta), n)
    raise TypeError(f"unsupported model {type(model).__name__}")


def hazard_second_difference(model, n):
    """``hazard(n) - 2 hazard(n-1) + hazard(n-2)`` by direct differencing."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 3):
        raise ValueError("second difference needs n >= 3")
    h0 = np.asarray(_hazard(model, n_arr))
    h1 = np.asarray(_hazard(model, n_arr - 1))
    h2 = np.asarray(_hazard(model, n_arr - 2))
    out = h0 - 2.0 * h1 + h2
    return float(out) if n_arr.ndim == 0 else out


def ipd_second_difference_closed_form(params: IpdParams, n):
    """``2 (alpha - 1) zeta^2 / ((1 + (n-1) zeta)(1 + (n-2) zeta)(1 + (n-3) zeta))``."""
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 3):
        raise ValueError("second difference needs n >= 3")
    z = params.zeta
    out = (
        2.0 * (params.alpha - 1.0) * z**2
        / ((1.0 + (n_arr - 1) * z) * (1.0 + (n_arr - 2) * z) * (1.0 + (n_arr - 3) * z))
    )
    return float(out) if np.ndim(n) == 0 else out


_SATURATION = 1e-12
_SCAN_CHUNK = 1 << 16


def find_w1_inflection(params: W1Params, n_max: int):
    """Inflection of the W1 hazard: the first ``n >= 3`` at which the second
    difference turns nonpositive after having been positive.

    Returns ``None`` when the hazard is concave from ``n = 3`` on, when no sign
    change happens up to ``n_max``, or when the hazard saturates (within 1e-12
    of one) before a change is seen.
    """
    if n_max < 3:
        raise ValueError("n_max must be >= 3")
    start = 3
    while start <= n_max:
        stop = min(n_max, start + _SCAN_CHUNK - 1)
        n = np.arange(start, stop + 1)
        d2 = hazard_second_difference(params, n)
        lam = np.asarray(dist.w1_hazard(params, n))
        if start == 3 and d2[0] <= 0:
            return None
        nonpos = np.nonzero(d2 <= 0)[0]
        saturated = np.nonzero(1.0 - lam < _SATURATION)[0]
        if saturated.size and (not nonpos.size or saturated[0] < nonpos[0]):
            return None
        if nonpos.size:
            return int(n[nonpos[0]])
        start = stop + 1
    return None


def inflection_map(eta_grid, beta_grid, n_max: int):
    """Inflection point for every ``(eta, beta)`` grid pair, row order
    ``eta`` outer, ``beta`` inner."""
    eta_grid, beta_grid = list(eta_grid), list(beta_grid)
    if not eta_grid or not beta_grid:
        raise ValueError("grids must be nonempty")
    return [
        (float(eta), float(beta), find_w1_inflection(W1Params(eta, beta), n_max))
        for eta in eta_grid
        for beta in beta_grid
    ]


def inflection_map_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["eta", "beta", "inflection_n"])
    for eta, beta, n in rows:
        writer.writerow([repr(eta), repr(beta), "" if n is None else n])
    return buf.getvalue()


def ageing_report(model, n_max: int = 100_000) -> AgeingReport:
    """Ageing report for fitted parameters of any of the three models."""
    if isinstance(model, IpdParams):
        cls, flag, notes = classify_ipd_ratio(model)
        return AgeingReport("ipd", cls, flag, model.ratio, None, notes)
    if isinstance(model, W1Params):
        inflection = find_w1_inflection(model, n_max)
        notes = ()
        if inflection is not None:
            surv = dist.w1_survival(model, inflection)
            notes = (f"hazard inflection at n={inflection}, survival {surv:.3g}",)
        return AgeingReport("w1", classify_beta(model.beta), inflection_point=inflection, annotations=notes)
    if isinstance(model, WeibullParams):
        return AgeingReport("weibull", classify_beta(model.beta))
    raise TypeError(f"unsupported model {type(model).__name__}")
