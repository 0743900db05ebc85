"""Model accuracy measures: RMS fit percentage and RMS error."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = ["Metric", "compute_metrics"]


@dataclass(frozen=True)
class Metric:
    fit_percent: float
    e_rms: float
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)


def compute_metrics(y_true, y_hat) -> Metric:
    """``FIT = 100 (1 - ||y - y_hat|| / ||y - mean(y)||)`` and ``e_RMS``.

    FIT is NaN when ``y_true`` is constant; ``e_RMS`` is always returned.
    """
    y = np.asarray(y_true, dtype=float).reshape(-1)
    yh = np.asarray(y_hat, dtype=float).reshape(-1)
    if y.shape != yh.shape:
        raise ValueError("y_true and y_hat must have equal length")
    if y.size < 2:
        raise ValueError("need at least two samples")
    err = y - yh
    sse = float(err @ err)
    dev = y - y.mean()
    sst = float(dev @ dev)
    e_rms = float(np.sqrt(sse / y.size))
    fit = 100.0 * (1.0 - np.sqrt(sse / sst)) if sst > 0 else float("nan")
    return Metric(float(fit), e_rms, int(y.size))
