"""Fold harness: structure, determinism, learnability, exchange files."""

import json

import numpy as np
import pytest

from hapkit.decision import SAME, classify_pair
from hapkit.discriminator import (
    CENTER_COLS_EXCLUDED,
    ExchangeFormatError,
    FoldAccuracies,
    FoldConfig,
    feature_bank,
    feature_dim,
    fold_seed,
    fourier_features,
    load_fold_accuracies,
    make_pair_id,
    run_folds,
    save_fold_accuracies,
)
from hapkit.heightmap import RegionSpec, detrend, patchify_region
from hapkit.rad import empirical_threshold, max_pmf, rad_zscore
from hapkit.synth import ArtistProfile, gen_painting, preset_profiles


def make_region(profile, seed, size_cm=5.0, region_id=None):
    hm = gen_painting(profile, size_cm, size_cm, 200.0, seed=seed,
                      painting_id=region_id or f"{profile.profile_id}-s{seed}")
    d = detrend(hm, 0.5)
    spec = RegionSpec(d.source_id, d.source_id, rect=(0, 0, d.width_px, d.height_px))
    return patchify_region(d, spec, 1.0)


FAST = FoldConfig(folds=8, epochs=15, base_seed=7)


@pytest.fixture(scope="module")
def same_pair_result():
    p = preset_profiles()[2]
    a, b = make_region(p, 11), make_region(p, 12)
    return run_folds(a, b, FAST), a, b


# ---------------------------------------------------------------------------
# features


def test_feature_dimension():
    assert fourier_features(np.zeros((50, 50))).shape == (feature_dim(50),)
    assert feature_dim(50) == 25 * (50 - CENTER_COLS_EXCLUDED)


def test_central_columns_carry_no_signal():
    # pure vertical-wavelength content lives in the excluded center columns
    y = np.arange(50)
    vertical = np.tile(np.sin(2 * np.pi * y / 10.0)[:, None], (1, 50))
    assert np.max(fourier_features(vertical)) < 1e-9
    # 5 px diagonal period -> +-10 column offset, outside the 13-col band
    diagonal = np.sin(2 * np.pi * (y[:, None] + y[None, :]) / 5.0)
    assert np.max(fourier_features(diagonal)) > 1.0


# ---------------------------------------------------------------------------
# harness structure


def test_structure_and_accuracy_grid(same_pair_result):
    acc, a, b = same_pair_result
    n = min(len(a), len(b))
    assert acc.sample_size == n
    assert acc.n_test == 2 * round(0.3 * n)
    assert len(acc.max_val_accuracies) == FAST.folds
    for v in acc.max_val_accuracies:
        assert 0.0 <= v <= 1.0
        assert abs(v * acc.n_test - round(v * acc.n_test)) < 1e-9


def test_determinism_and_argument_order(same_pair_result):
    acc, a, b = same_pair_result
    again = run_folds(a, b, FAST)
    swapped = run_folds(b, a, FAST)
    assert acc == again == swapped


def test_fold_seed_stability():
    assert fold_seed(1, "x__y", 3) == fold_seed(1, "x__y", 3)
    assert fold_seed(1, "x__y", 3) != fold_seed(1, "x__y", 4)
    assert fold_seed(1, "x__y", 3) != fold_seed(2, "x__y", 3)


def test_pair_id_canonical():
    assert make_pair_id("b", "a") == make_pair_id("a", "b") == "a__b"


def test_same_texture_pair_reads_same(same_pair_result):
    acc, _, _ = same_pair_result
    rad = max_pmf(acc.n_test, FAST.epochs)
    thr = empirical_threshold(acc.n_test, FAST.epochs)
    verdict = classify_pair(acc, rad, thr)
    assert verdict.verdict == SAME


def test_separated_textures_exceed_threshold_in_most_folds():
    fine = ArtistProfile("fine", 0.05, 1.0, 0.0, 1.0, 0.05)
    coarse = ArtistProfile("coarse", 0.30, 1.0, 0.0, 1.0, 0.05)
    acc = run_folds(make_region(fine, 1), make_region(coarse, 2), FAST)
    thr = empirical_threshold(acc.n_test, FAST.epochs)
    n_over = sum(v >= thr.threshold_accuracy for v in acc.max_val_accuracies)
    assert n_over >= FAST.folds - 1


def test_self_pair_sanity_zscore():
    # one painting split into disjoint halves: same texture, z < 2 in >= 90%
    p = preset_profiles()[4]
    passed = 0
    trials = 10
    for t in range(trials):
        hm = gen_painting(p, 8.0, 4.0, 200.0, seed=100 + t, painting_id=f"m{t}")
        d = detrend(hm, 0.5)
        left = patchify_region(d, RegionSpec("left", "m", rect=(0, 0, 200, 200)), 1.0)
        right = patchify_region(d, RegionSpec("right", "m", rect=(200, 0, 200, 200)), 1.0)
        acc = run_folds(left, right, FoldConfig(folds=8, epochs=15, base_seed=t))
        rad = max_pmf(acc.n_test, 15)
        z = rad_zscore(float(np.mean(acc.max_val_accuracies)), rad)
        if z < 2.0:
            passed += 1
    assert passed >= 0.9 * trials


def test_banks_match_internal_computation(same_pair_result):
    acc, a, b = same_pair_result
    with_banks = run_folds(a, b, FAST, banks=(feature_bank(a), feature_bank(b)))
    assert with_banks == acc


def test_too_small_validation_split_rejected():
    p = preset_profiles()[0]
    a = make_region(p, 1, size_cm=1.2)  # single patch
    with pytest.raises(ValueError, match="validation"):
        run_folds(a, a, FAST)


# ---------------------------------------------------------------------------
# exchange files


def test_exchange_roundtrip(tmp_path, same_pair_result):
    acc, _, _ = same_pair_result
    path = tmp_path / f"{acc.pair_id}.folds.json"
    save_fold_accuracies(acc, path)
    assert load_fold_accuracies(path) == acc


def test_exchange_fold_count_mismatch(tmp_path, same_pair_result):
    acc, _, _ = same_pair_result
    path = tmp_path / "x.folds.json"
    save_fold_accuracies(acc, path)
    doc = json.loads(path.read_text())
    doc["folds"] = len(doc["max_val_accuracies"]) + 1
    path.write_text(json.dumps(doc))
    with pytest.raises(ExchangeFormatError, match="folds"):
        load_fold_accuracies(path)


def test_exchange_expected_folds_check(tmp_path, same_pair_result):
    acc, _, _ = same_pair_result
    path = tmp_path / "x.folds.json"
    save_fold_accuracies(acc, path)
    with pytest.raises(ExchangeFormatError, match="configured"):
        load_fold_accuracies(path, expected_folds=FAST.folds + 1)


def test_exchange_range_error(tmp_path, same_pair_result):
    acc, _, _ = same_pair_result
    path = tmp_path / "x.folds.json"
    save_fold_accuracies(acc, path)
    doc = json.loads(path.read_text())
    doc["max_val_accuracies"][0] = 1.2
    path.write_text(json.dumps(doc))
    with pytest.raises(ExchangeFormatError, match="outside"):
        load_fold_accuracies(path)


def test_exchange_missing_field(tmp_path, same_pair_result):
    acc, _, _ = same_pair_result
    path = tmp_path / "x.folds.json"
    save_fold_accuracies(acc, path)
    doc = json.loads(path.read_text())
    del doc["producer"]
    path.write_text(json.dumps(doc))
    with pytest.raises(ExchangeFormatError, match="missing"):
        load_fold_accuracies(path)


def test_exchange_non_grid_accuracy_warns(tmp_path, same_pair_result):
    acc, _, _ = same_pair_result
    path = tmp_path / "x.folds.json"
    save_fold_accuracies(acc, path)
    doc = json.loads(path.read_text())
    doc["max_val_accuracies"][0] = 0.51234
    path.write_text(json.dumps(doc))
    with pytest.warns(UserWarning, match="multiple"):
        loaded = load_fold_accuracies(path)
    assert loaded.max_val_accuracies[0] == 0.51234


def test_fold_config_validation():
    with pytest.raises(ValueError):
        FoldConfig(folds=0)
    with pytest.raises(ValueError):
        FoldConfig(val_fraction=1.0)
