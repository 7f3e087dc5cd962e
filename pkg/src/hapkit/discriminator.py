"""Pair discriminator: fold harness and the built-in linear classifier.

For a pair of regions the harness runs a number of training folds.  Each
fold bootstraps an equal-size sample from both regions (with replacement,
so validation patches can duplicate training patches - deliberately), gives
every drawn instance a fresh random orientation, splits 70/30 per region,
trains the classifier and records the best validation accuracy over the
epochs.  The distribution of those per-fold maxima is what the decision
stage compares against the chance model.

The built-in classifier is a linear logistic model over log-magnitude
Fourier features, trained with plain SGD.  Externally computed fold
accuracies (e.g. from a deep model) enter through the exchange-file
loader and flow through the identical decision path.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .heightmap import N_ORIENTATIONS, PatchSet, octagon_orient

#: SGD step size of the built-in linear model (fixed; not a tuning knob).
LEARNING_RATE = 0.01

#: Central Fourier columns dropped from the feature vector; these carry
#: wavelengths comparable to the patch itself rather than stroke detail.
CENTER_COLS_EXCLUDED = 13


@dataclass(frozen=True)
class FoldConfig:
    """Fold protocol parameters."""

    folds: int = 26
    epochs: int = 25
    val_fraction: float = 0.30
    batch_size: int = 32
    base_seed: int = 0

    def __post_init__(self):
        if self.folds < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("folds, epochs and batch_size must be >= 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")


@dataclass(frozen=True)
class FoldAccuracies:
    """Per-fold maximum validation accuracies for one region pair."""

    pair_id: str
    region_a: str
    region_b: str
    n_test: int
    sample_size: int
    max_val_accuracies: tuple[float, ...]
    producer: str


class ExchangeFormatError(ValueError):
    """Raised when a fold-accuracy exchange file violates the schema."""


def make_pair_id(region_a: str, region_b: str) -> str:
    lo, hi = sorted((region_a, region_b))
    return f"{lo}__{hi}"


def fold_seed(base_seed: int, pair_id: str, fold_index: int) -> int:
    """Stable, process-independent per-fold seed."""
    digest = hashlib.sha256(f"{base_seed}|{pair_id}|{fold_index}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


# ---------------------------------------------------------------------------
# features


def fourier_features(pixels: np.ndarray) -> np.ndarray:
    """log(1 + |FFT|) over the upper half-plane, central columns dropped.

    The lower half-plane duplicates the upper by conjugate symmetry of the
    real-input transform and carries no extra information.
    """
    s = pixels.shape[0]
    mag = np.abs(np.fft.fftshift(np.fft.fft2(pixels)))
    center = s // 2
    lo = center - CENTER_COLS_EXCLUDED // 2
    hi = center + CENTER_COLS_EXCLUDED // 2 + 1
    kept = np.concatenate([mag[:center, :lo], mag[:center, hi:]], axis=1)
    return np.log1p(kept).ravel()


def feature_dim(side_px: int) -> int:
    return (side_px // 2) * (side_px - CENTER_COLS_EXCLUDED)


def feature_bank(patchset: PatchSet) -> np.ndarray:
    """Features of every patch at all eight orientations, shape (n, 8, d).

    Orientations are deterministic per (patch, orientation), so the bank is
    computed once per region and folds merely index into it.
    """
    n = len(patchset)
    side = patchset.patches[0].side_px
    bank = np.empty((n, N_ORIENTATIONS, feature_dim(side)), dtype=np.float64)
    for i, patch in enumerate(patchset.patches):
        for o in range(N_ORIENTATIONS):
            oriented = patch if o == 0 else octagon_orient(patch.source, o)
            bank[i, o] = fourier_features(oriented.pixels)
    return bank


# ---------------------------------------------------------------------------
# fold harness


def run_folds(
    a: PatchSet,
    b: PatchSet,
    cfg: FoldConfig,
    banks: tuple[np.ndarray, np.ndarray] | None = None,
) -> FoldAccuracies:
    """Produce the per-fold maximum validation accuracies for one pair.

    Deterministic given cfg.base_seed and the two region ids (argument
    order does not matter).  ``banks`` lets callers reuse precomputed
    feature banks; they must match the (a, b) argument order.
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both patch sets must be non-empty")
    if banks is not None:
        bank_a, bank_b = banks
    else:
        bank_a, bank_b = feature_bank(a), feature_bank(b)
    if b.region_id < a.region_id:
        a, b = b, a
        bank_a, bank_b = bank_b, bank_a

    sample_size = min(len(a), len(b))
    n_val = int(round(cfg.val_fraction * sample_size))
    if n_val < 1 or sample_size - n_val < 1:
        raise ValueError(
            f"sample size {sample_size} cannot support a {cfg.val_fraction:.0%} "
            "validation split"
        )
    n_test = 2 * n_val
    pair_id = make_pair_id(a.region_id, b.region_id)

    maxima = []
    for fold in range(cfg.folds):
        rng = np.random.default_rng(fold_seed(cfg.base_seed, pair_id, fold))
        rows = []
        for bank, n_avail in ((bank_a, len(a)), (bank_b, len(b))):
            idx = rng.integers(0, n_avail, size=sample_size)
            ori = rng.integers(0, N_ORIENTATIONS, size=sample_size)
            rows.append(bank[idx, ori])
        x = np.concatenate(rows, axis=0)
        y = np.repeat([0.0, 1.0], sample_size)

        val_mask = np.zeros(2 * sample_size, dtype=bool)
        for side in range(2):
            pick = rng.permutation(sample_size)[:n_val]
            val_mask[side * sample_size + pick] = True

        maxima.append(
            _train_linear_sgd(
                x[~val_mask], y[~val_mask], x[val_mask], y[val_mask], cfg, rng
            )
        )

    return FoldAccuracies(
        pair_id=pair_id,
        region_a=a.region_id,
        region_b=b.region_id,
        n_test=n_test,
        sample_size=sample_size,
        max_val_accuracies=tuple(maxima),
        producer="builtin/fourier-sgd",
    )


def _train_linear_sgd(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    cfg: FoldConfig,
    rng: np.random.Generator,
) -> float:
    """Train the linear logistic model; return max validation accuracy."""
    mu = x_train.mean(axis=0)
    sd = x_train.std(axis=0)
    sd[sd < 1e-12] = 1.0
    xt = (x_train - mu) / sd
    xv = (x_val - mu) / sd

    n_train, dim = xt.shape
    w = np.zeros(dim)
    bias = 0.0
    best = 0.0
    n_val = len(y_val)
    for _ in range(cfg.epochs):
        order = rng.permutation(n_train)
        for start in range(0, n_train, cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            xb = xt[sel]
            logits = xb @ w + bias
            probs = 1.0 / (1.0 + np.exp(-logits))
            err = (probs - y_train[sel]) / len(sel)
            w -= LEARNING_RATE * (xb.T @ err)
            bias -= LEARNING_RATE * err.sum()
        correct = int(np.sum(((xv @ w + bias) > 0.0) == (y_val == 1.0)))
        best = max(best, correct / n_val)
    return best


# ---------------------------------------------------------------------------
# exchange files

_EXCHANGE_KEYS = {
    "pair_id",
    "region_a",
    "region_b",
    "sample_size",
    "n_test",
    "folds",
    "max_val_accuracies",
    "producer",
}


def save_fold_accuracies(acc: FoldAccuracies, path: str | Path) -> None:
    doc = {
        "pair_id": acc.pair_id,
        "region_a": acc.region_a,
        "region_b": acc.region_b,
        "sample_size": acc.sample_size,
        "n_test": acc.n_test,
        "folds": len(acc.max_val_accuracies),
        "max_val_accuracies": list(acc.max_val_accuracies),
        "producer": acc.producer,
    }
    Path(path).write_text(json.dumps(doc, indent=2))


def load_fold_accuracies(path: str | Path, expected_folds: int | None = None) -> FoldAccuracies:
    """Read and validate one exchange file.

    Errors on structural violations; accuracies that are not integer
    multiples of 1/n_test only warn, since external trainers may average
    over batches.
    """
    path = Path(path)
    doc = json.loads(path.read_text())
    missing = _EXCHANGE_KEYS - doc.keys()
    if missing:
        raise ExchangeFormatError(f"{path}: missing fields {sorted(missing)}")

    accs = doc["max_val_accuracies"]
    if not isinstance(accs, list) or not accs:
        raise ExchangeFormatError(f"{path}: max_val_accuracies must be a non-empty array")
    if doc["folds"] != len(accs):
        raise ExchangeFormatError(
            f"{path}: declared folds={doc['folds']} but {len(accs)} accuracies"
        )
    if expected_folds is not None and doc["folds"] != expected_folds:
        raise ExchangeFormatError(
            f"{path}: fold count {doc['folds']} does not match configured {expected_folds}"
        )
    n_test = int(doc["n_test"])
    if n_test < 1 or int(doc["sample_size"]) < 1:
        raise ExchangeFormatError(f"{path}: n_test and sample_size must be >= 1")
    for value in accs:
        if not 0.0 <= value <= 1.0:
            raise ExchangeFormatError(f"{path}: accuracy {value} outside [0, 1]")
        if abs(value * n_test - round(value * n_test)) > 1e-6:
            warnings.warn(
                f"{path}: accuracy {value} is not a multiple of 1/{n_test}",
                stacklevel=2,
            )
    return FoldAccuracies(
        pair_id=str(doc["pair_id"]),
        region_a=str(doc["region_a"]),
        region_b=str(doc["region_b"]),
        n_test=n_test,
        sample_size=int(doc["sample_size"]),
        max_val_accuracies=tuple(float(v) for v in accs),
        producer=str(doc["producer"]),
    )
