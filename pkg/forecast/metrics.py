import logging
from dataclasses import asdict, dataclass

import numpy as np

logger = logging.getLogger(__name__)

MAPE_EPSILON = 1e-6


@dataclass
class MetricsReport:
    rmse: float
    mae: float
    mape: float
    count: int
    mape_excluded: int = 0

    def as_dict(self):
        return asdict(self)


def evaluate(predictions, truth, mape_epsilon=MAPE_EPSILON):
    """RMSE, MAE and MAPE (percent) over all entries.

    Entries with ``|truth| < mape_epsilon`` are left out of MAPE and counted
    in ``mape_excluded``; MAPE is NaN when every entry is excluded.
    """
    predictions = np.asarray(predictions, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predictions.shape != truth.shape:
        raise ValueError(f"shape mismatch: {predictions.shape} vs {truth.shape}")
    if truth.size == 0:
        raise ValueError("cannot evaluate empty predictions")
    residual = (predictions - truth).ravel()
    flat_truth = truth.ravel()
    kept = np.abs(flat_truth) >= mape_epsilon
    excluded = int(residual.size - kept.sum())
    if excluded:
        logger.debug("%d near-zero targets excluded from MAPE", excluded)
    mape = (
        float(np.mean(np.abs(residual[kept] / flat_truth[kept])) * 100.0)
        if kept.any()
        else float("nan")
    )
    return MetricsReport(
        rmse=float(np.sqrt(np.mean(residual * residual))),
        mae=float(np.mean(np.abs(residual))),
        mape=mape,
        count=int(residual.size),
        mape_excluded=excluded,
    )
