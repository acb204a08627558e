"""Blocked k-fold cross-validation for time series."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import Dataset
from .metrics import Metrics, evaluate


@dataclass(frozen=True)
class CvReport:
    k: int
    per_fold: tuple
    aggregate: Metrics
    blocks: tuple  # (start, stop) row range validated in each fold
    n_unscored: int = 0


def fold_blocks(n, k):
    """Contiguous validation blocks; the first ``n % k`` blocks get one extra row."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} usable rows")
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    stops = np.cumsum(sizes)
    return tuple((int(b - s), int(b)) for s, b in zip(sizes, stops))


def kfold_cv(data: Dataset, k: int, trainer: Callable) -> CvReport:
    """Each contiguous block is validated once, the rest is used for training.

    ``trainer(train_parts)`` receives the one or two contiguous training
    pieces and returns ``predict(block, history)``, which must return one
    prediction per row of ``block``; ``history`` is the data preceding the
    block (``None`` for the first). Rows predicted as NaN (not enough lag
    history) are counted in ``n_unscored`` and left out of the metrics.
    """
    if not data.has_target:
        raise ValueError("cross-validation needs pv_power")
    blocks = fold_blocks(len(data), k)
    per_fold = []
    unscored = 0
    for start, stop in blocks:
        parts = [p for p in (data[:start], data[stop:]) if len(p)]
        predict = trainer(parts)
        block = data[start:stop]
        history = data[:start] if start else None
        pred = np.asarray(predict(block, history), dtype=np.float64)
        if pred.shape != (len(block),):
            raise ValueError("predictor must return one value per validation row")
        ok = ~np.isnan(pred)
        unscored += int((~ok).sum())
        per_fold.append(evaluate(block.pv_power[ok], pred[ok]))
    agg = Metrics(
        float(np.mean([m.rmse for m in per_fold])),
        float(np.mean([m.mae for m in per_fold])),
        float(np.mean([m.mape for m in per_fold])),
        int(sum(m.n for m in per_fold)),
        int(sum(m.n_zero_skipped for m in per_fold)),
    )
    return CvReport(k, tuple(per_fold), agg, blocks, unscored)
