import hashlib

import numpy as np
import pytest

from wifimob import ingest, synth
from wifimob.features import stability_series
from wifimob.synth import SynthConfig, generate
from wifimob.trace import Activity

STATIONARY_ONLY = dict(walking_mean_s=0, running_mean_s=0)


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_pure_stationary_corpus_is_stable():
    tl, truth = generate(SynthConfig(**STATIONARY_ONLY))
    assert {a.label for a in tl.activities} == {Activity.STATIONARY}
    coeffs = [s.coefficient for s in stability_series(tl.scans, 1800)]
    assert np.mean(coeffs) >= 0.9


def test_noiseless_fixed_position_is_perfectly_stable():
    tl, _ = generate(SynthConfig(rssi_noise_std=0.0, stationary_speed=(0.0, 0.0), **STATIONARY_ONLY))
    assert len({s.ap_ids for s in tl.scans}) == 1
    assert all(s.coefficient == 1.0 for s in stability_series(tl.scans, 1800))


def test_full_dropout_means_no_fixes():
    tl, _ = generate(SynthConfig(gps_dropout_prob=1.0))
    assert tl.fixes == ()


def test_no_reported_speed():
    tl, _ = generate(SynthConfig())
    assert tl.fixes and all(f.reported_speed is None for f in tl.fixes)


def test_cadences():
    cfg = SynthConfig(duration_s=3600)
    tl, truth = generate(cfg)
    assert len(truth) == 3600
    assert len(tl.scans) == 3600 // cfg.scan_period_s
    assert len(tl.fixes) == 3600 // cfg.gps_period_s
    assert len(tl.activities) == 3600 // cfg.activity_period_s


def test_truth_is_physically_sane():
    cfg = SynthConfig(duration_s=5000)
    _, truth = generate(cfg)
    step = np.hypot(np.diff(truth.x), np.diff(truth.y))
    assert step.max() <= cfg.max_speed + 1e-9
    assert (truth.x >= 0).all() and (truth.x <= cfg.area_m).all()
    for i, (lo, hi) in enumerate(cfg.speed_ranges):
        sp = truth.speed[truth.regime == i]
        assert ((sp >= lo) & (sp <= hi)).all()


def test_all_regimes_appear_by_default():
    _, truth = generate(SynthConfig(duration_s=43200))
    assert set(truth.regime.tolist()) == {0, 1, 2}


def test_generation_is_deterministic():
    a, ta = generate(SynthConfig(duration_s=1200))
    b, tb = generate(SynthConfig(duration_s=1200))
    assert a == b
    np.testing.assert_array_equal(ta.speed, tb.speed)
    c, _ = generate(SynthConfig(duration_s=1200, seed=7))
    assert c != a


def test_corpus_files_deterministic_and_round_trip(tmp_path):
    cfg = SynthConfig(duration_s=1800)
    tl, truth = generate(cfg)
    p1 = synth.write_corpus(tmp_path / "a", tl, truth, {"seed": 42})
    p2 = synth.write_corpus(tmp_path / "b", *generate(cfg), {"seed": 42})
    for k in synth.CORPUS_FILES:
        assert _digest(tmp_path / "a" / synth.CORPUS_FILES[k]) == _digest(tmp_path / "b" / synth.CORPUS_FILES[k])
    assert ingest.parse_wifi(p1["wifi"]).records == list(tl.scans)
    assert ingest.parse_gps(p1["gps"]).records == list(tl.fixes)
    assert ingest.parse_activity(p1["activity"]).records == list(tl.activities)
    back = synth.read_truth(p2["truth"])
    np.testing.assert_array_equal(back.speed, truth.speed)
    np.testing.assert_array_equal(back.regime, truth.regime)


def test_zero_duration():
    tl, truth = generate(SynthConfig(duration_s=0))
    assert len(truth) == 0 and tl.scans == () and tl.fixes == () and tl.activities == ()


@pytest.mark.parametrize(
    "bad",
    [
        dict(scan_period_s=-1),
        dict(gps_period_s=0),
        dict(gps_dropout_prob=1.5),
        dict(walking_speed=(2.0, 0.5)),
        dict(walking_speed=(0.05, 2.0)),
        dict(stationary_mean_s=0, walking_mean_s=0, running_mean_s=0),
        dict(duration_s=-5),
    ],
)
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SynthConfig(**bad)


def test_config_dict_round_trip():
    cfg = SynthConfig(seed=9, walking_speed=(0.6, 1.9))
    assert SynthConfig.from_dict(cfg.to_dict()) == cfg


def _truth(regimes):
    n = len(regimes)
    z = np.zeros(n)
    return synth.GroundTruth(np.arange(n), z, z, z, np.array(regimes))


def test_truth_labels_for_windows():
    truth = _truth([2] * 10 + [1] * 6 + [0] * 4)
    assert synth.truth_labels_for_windows(truth, [(0, 10)]) == [Activity.RUNNING]
    assert synth.truth_labels_for_windows(truth, [(100, 200)]) == [None]
    assert synth.truth_labels_for_windows(truth, [(10, 20)]) == [Activity.WALKING]


def test_truth_label_ties_go_more_mobile():
    assert synth.truth_labels_for_windows(_truth([0, 0, 1, 1]), [(0, 4)]) == [Activity.WALKING]


def test_true_window_speed():
    truth = synth.GroundTruth(np.arange(4), np.zeros(4), np.zeros(4), np.array([1.0, 2.0, 3.0, 5.0]), np.zeros(4, int))
    assert synth.true_window_speed(truth, [(0, 2), (2, 4), (9, 10)]) == [1.5, 4.0, None]


def test_ap_grid_ids_unique():
    ids, pos, freqs = synth.ap_grid(SynthConfig())
    assert len(set(ids)) == len(ids) == len(pos) == len(freqs)
