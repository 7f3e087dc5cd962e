"""Two-criterion Same/Different rule for a region pair.

A pair reads as the same practice only when the discriminator failed to
learn: the mean of the per-fold maximum accuracies must sit within two
standard deviations of the chance model's mean, and the single best fold
must stay under the finite-sampling threshold (both strictly).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discriminator import FoldAccuracies
from .rad import RadModel, ThresholdSpec, rad_zscore

SAME = "Same"
DIFFERENT = "Different"

#: Default z cutoff for the mean criterion.
DEFAULT_Z_THRESHOLD = 2.0


@dataclass(frozen=True)
class PairVerdict:
    """Decision and diagnostics for one region pair."""

    pair_id: str
    region_a: str
    region_b: str
    verdict: str  # SAME or DIFFERENT
    z: float
    max_observed: float
    threshold_accuracy: float
    rad_n: int
    rad_k: int


def classify_pair(
    acc: FoldAccuracies,
    rad: RadModel,
    thr: ThresholdSpec,
    z_threshold: float = DEFAULT_Z_THRESHOLD,
) -> PairVerdict:
    """Apply both criteria; Same only if both pass (strict inequalities)."""
    if rad.n_test != acc.n_test:
        raise ValueError(
            f"pair {acc.pair_id}: chance model built for n={rad.n_test} but "
            f"accuracies have n_test={acc.n_test}"
        )
    mean_acc = float(np.mean(acc.max_val_accuracies))
    z = rad_zscore(mean_acc, rad)
    max_observed = float(max(acc.max_val_accuracies))
    same = z < z_threshold and max_observed < thr.threshold_accuracy
    return PairVerdict(
        pair_id=acc.pair_id,
        region_a=acc.region_a,
        region_b=acc.region_b,
        verdict=SAME if same else DIFFERENT,
        z=z,
        max_observed=max_observed,
        threshold_accuracy=thr.threshold_accuracy,
        rad_n=rad.n_test,
        rad_k=rad.k_epochs,
    )
