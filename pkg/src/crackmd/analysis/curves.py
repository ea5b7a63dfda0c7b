"""Stress-strain aggregation and critical-stress detection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import AnalysisError

#: Moving-average window for stress-strain curves, in strain.
SMOOTHING_WINDOW = 0.002

NO_YIELD = "no yield observed"


@dataclass
class StressStrain:
    strain: np.ndarray
    stress: np.ndarray  # GPa
    smoothed: np.ndarray
    critical_stress: float | None
    critical_strain: float | None
    status: str  # "yield" or NO_YIELD

    @property
    def yielded(self) -> bool:
        return self.critical_stress is not None


def moving_average(x: np.ndarray, y: np.ndarray, window: float) -> np.ndarray:
    """Mean of ``y`` over points with ``|x_k - x_i| <= window / 2``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    csum = np.concatenate([[0.0], np.cumsum(y)])
    lo = np.searchsorted(x, x - 0.5 * window, side="left")
    hi = np.searchsorted(x, x + 0.5 * window, side="right")
    return (csum[hi] - csum[lo]) / (hi - lo)


def first_local_max(y: np.ndarray, x: np.ndarray | None = None, span: float = 0.0) -> int | None:
    """Index of the first interior point higher than its left neighbor and
    not lower than its right one; plateaus resolve to their left edge.

    With ``x`` and ``span`` given, the point must also be the highest of all
    points within ``span`` of it in ``x``, so fluctuations narrower than the
    span do not count as peaks.
    """
    y = np.asarray(y)
    if x is not None:
        x = np.asarray(x, dtype=float)
        lo = np.searchsorted(x, x - span, side="left")
        hi = np.searchsorted(x, x + span, side="right")
    for i in range(1, len(y) - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1]:
            # walk across a plateau; a later rise means no peak here
            k = i
            while k + 1 < len(y) and y[k + 1] == y[i]:
                k += 1
            if k + 1 < len(y) and y[k + 1] > y[i]:
                continue
            if x is not None and y[lo[i]:hi[i]].max() > y[i]:
                continue
            return i
    return None


def stress_strain(strain: Sequence[float], stress: Sequence[float], window: float = SMOOTHING_WINDOW) -> StressStrain:
    strain = np.asarray(strain, dtype=float)
    stress = np.asarray(stress, dtype=float)
    if len(strain) == 0:
        raise AnalysisError("empty stress-strain series")
    if len(strain) != len(stress):
        raise AnalysisError("strain and stress series differ in length")
    if np.any(np.diff(strain) < 0):
        raise AnalysisError("strain series must be non-decreasing")
    smooth = moving_average(strain, stress, window)
    k = first_local_max(smooth, strain, window)
    if k is None:
        return StressStrain(strain, stress, smooth, None, None, NO_YIELD)
    return StressStrain(strain, stress, smooth, float(smooth[k]), float(strain[k]), "yield")


def global_stress_strain(records, window: float = SMOOTHING_WINDOW) -> StressStrain:
    """Stress-strain curve of a thermo series with its critical stress.

    The critical stress is the first local maximum of the moving-average
    curve that no point within one window on either side exceeds, so
    sampling noise left after smoothing does not register; with none in range the status is ``"no yield observed"``.
    """
    records = list(records)
    if not records:
        raise AnalysisError("empty thermo series")
    return stress_strain([r.strain for r in records], [r.sigma_zz for r in records], window)


def crack_onset(strain: Sequence[float], length: Sequence[float], threshold: float) -> float | None:
    """First strain at which the running-max crack length exceeds its
    initial value by more than ``threshold``."""
    strain = np.asarray(strain, dtype=float)
    length = np.asarray(length, dtype=float)
    ok = np.isfinite(length)
    if not ok.any():
        return None
    strain, length = strain[ok], np.fmax.accumulate(length[ok])
    grown = np.nonzero(length - length[0] > threshold)[0]
    return float(strain[grown[0]]) if len(grown) else None
