"""Surface-roughness baseline and classification metrics.

The baseline distinguishes regions by their per-patch height standard
deviation (a scalar roughness), compared pairwise with a two-sided
Wilcoxon rank-sum test under a Bonferroni-corrected threshold.  The
metrics helpers score any Same/Different verdict table against ground
truth, treating each class as positives in turn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .decision import DIFFERENT, SAME
from .heightmap import PatchSet

#: Combined sample size up to which the exact rank-sum distribution is
#: enumerated; above it the tie-corrected normal approximation applies.
EXACT_LIMIT = 20


@dataclass(frozen=True)
class RoughnessProfile:
    """Per-patch height standard deviations of one region."""

    region_id: str
    patch_std: tuple[float, ...]

    def __post_init__(self):
        if any(v < 0 for v in self.patch_std):
            raise ValueError("standard deviations cannot be negative")


@dataclass(frozen=True)
class RoughnessVerdict:
    region_a: str
    region_b: str
    p_value: float
    verdict: str


@dataclass(frozen=True)
class ClassMetrics:
    precision: float | None
    recall: float | None
    f1: float | None


@dataclass(frozen=True)
class MetricsRow:
    """Per-class and macro-averaged precision/recall/F1 for one method."""

    method: str
    same: ClassMetrics
    different: ClassMetrics
    macro_precision: float | None
    macro_recall: float | None
    macro_f1: float | None
    incomplete: bool  # some metric was undefined and skipped in the macros


# ---------------------------------------------------------------------------
# Wilcoxon rank-sum


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled), dtype=np.float64)
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def wilcoxon_rank_sum(x, y) -> float:
    """Two-sided rank-sum p-value with midrank tie handling.

    Exact enumeration of the rank-sum distribution for combined sizes up
    to 20 (doubled smaller tail, capped at 1); beyond that a normal
    approximation with tie-corrected variance and continuity correction.
    Identical samples give p = 1.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be non-empty")
    n1, n2 = len(x), len(y)
    pooled = np.concatenate([x, y])
    if np.all(pooled == pooled[0]):
        return 1.0
    ranks = _midranks(pooled)
    w_obs = float(ranks[:n1].sum())

    if n1 + n2 <= EXACT_LIMIT:
        return _exact_two_sided(ranks, n1, w_obs)
    return _normal_two_sided(pooled, ranks, n1, n2, w_obs)


def _exact_two_sided(ranks: np.ndarray, n1: int, w_obs: float) -> float:
    # doubled ranks are integers, so equality comparisons are exact
    r2 = np.round(ranks * 2).astype(np.int64)
    w2 = int(round(w_obs * 2))
    total = 0
    le = 0
    ge = 0
    for combo in combinations(range(len(r2)), n1):
        s = int(r2[list(combo)].sum())
        total += 1
        if s <= w2:
            le += 1
        if s >= w2:
            ge += 1
    return min(1.0, 2.0 * min(le, ge) / total)


def _normal_two_sided(
    pooled: np.ndarray, ranks: np.ndarray, n1: int, n2: int, w_obs: float
) -> float:
    n = n1 + n2
    mu = n1 * (n + 1) / 2.0
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts.astype(np.float64) ** 3 - counts))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 1.0
    z = (abs(w_obs - mu) - 0.5) / math.sqrt(var)
    if z < 0:
        return 1.0
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


# ---------------------------------------------------------------------------
# roughness baseline


def roughness_profile(patchset: PatchSet) -> RoughnessProfile:
    """Std of raw (unmasked, unrotated) heights of every patch square."""
    return RoughnessProfile(
        region_id=patchset.region_id,
        patch_std=tuple(float(p.source.std()) for p in patchset.patches),
    )


def roughness_verdicts(
    profiles: list[RoughnessProfile], alpha: float = 0.01
) -> list[RoughnessVerdict]:
    """All-pairs rank-sum tests under a Bonferroni-corrected threshold.

    A pair is Same when the test cannot reject at alpha / n_comparisons
    (p above the threshold), Different otherwise.
    """
    if len(profiles) < 2:
        raise ValueError("need at least two profiles")
    n_comparisons = len(profiles) * (len(profiles) - 1) // 2
    threshold = alpha / n_comparisons
    out = []
    for a, b in combinations(sorted(profiles, key=lambda p: p.region_id), 2):
        p = wilcoxon_rank_sum(a.patch_std, b.patch_std)
        out.append(
            RoughnessVerdict(
                region_a=a.region_id,
                region_b=b.region_id,
                p_value=p,
                verdict=SAME if p > threshold else DIFFERENT,
            )
        )
    return out


def bonferroni_threshold(alpha: float, n_regions: int) -> float:
    return alpha / (n_regions * (n_regions - 1) // 2)


# ---------------------------------------------------------------------------
# classification metrics


def _prf(tp: int, fp: int, fn: int) -> ClassMetrics:
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = None
    return ClassMetrics(precision=precision, recall=recall, f1=f1)


def classification_metrics(
    predicted: list[str], actual: list[str], method: str = ""
) -> MetricsRow:
    """Per-class (Same, Different) precision/recall/F1 plus macro averages.

    Undefined metrics (zero denominators) are reported as None, excluded
    from the macro averages, and flagged.
    """
    if len(predicted) != len(actual):
        raise ValueError("predicted and actual must be aligned")
    for v in list(predicted) + list(actual):
        if v not in (SAME, DIFFERENT):
            raise ValueError(f"unknown verdict {v!r}")

    per_class = {}
    for positive in (SAME, DIFFERENT):
        tp = sum(1 for p, a in zip(predicted, actual) if p == positive and a == positive)
        fp = sum(1 for p, a in zip(predicted, actual) if p == positive and a != positive)
        fn = sum(1 for p, a in zip(predicted, actual) if p != positive and a == positive)
        per_class[positive] = _prf(tp, fp, fn)

    def macro(attr: str) -> tuple[float | None, bool]:
        vals = [getattr(per_class[c], attr) for c in (SAME, DIFFERENT)]
        defined = [v for v in vals if v is not None]
        if not defined:
            return None, True
        return sum(defined) / len(defined), len(defined) < len(vals)

    mp, inc_p = macro("precision")
    mr, inc_r = macro("recall")
    mf, inc_f = macro("f1")
    return MetricsRow(
        method=method,
        same=per_class[SAME],
        different=per_class[DIFFERENT],
        macro_precision=mp,
        macro_recall=mr,
        macro_f1=mf,
        incomplete=inc_p or inc_r or inc_f,
    )
