import math

import numpy as np
import pytest

from dbbp.config import desk_config
from dbbp.dataset import (ChannelSample, Dataset, DatasetHeader,
                          generate_dataset, label_to_onehot, write_scores)
from dbbp.evaluate import (AlignmentError, FilePredictor, OraclePredictor,
                           PersistencePredictor, RandomPredictor,
                           best_n_accuracy, best_n_indicator,
                           header_to_config, make_predictor,
                           spectral_efficiency_report, write_report_csv)
from dbbp.precoding import RfSelection


@pytest.fixture(scope="module")
def labeled_ds():
    return generate_dataset(desk_config(seed=50), 40)


def _synthetic_label_dataset(count, codebook_size, n_rf, seed=0):
    rng = np.random.default_rng(seed)
    header = DatasetHeader(t=1, k=1, kbar=1, n_tx_sub6=1,
                           n_tx=codebook_size * n_rf, n_rx=1, n_rf=n_rf,
                           codebook_size=codebook_size, sample_count=count,
                           input_snr_db=math.inf, has_locations=False,
                           has_mmwave=False)
    sub6 = np.zeros((1, 1, 2), dtype="<c8")
    samples = []
    for _ in range(count):
        digits = rng.integers(0, codebook_size, size=2 * n_rf)
        samples.append(ChannelSample(
            sub6=sub6, locations=None, mmwave=None,
            label=RfSelection(tuple(int(d) for d in digits[:n_rf]),
                              tuple(int(d) for d in digits[n_rf:])),
            optimal_mi=0.0))
    return Dataset(header=header, samples=samples)


# indicator -------------------------------------------------------------------

def test_indicator_accepts_matching_one_hot():
    label = RfSelection((2, 1), (0, 3))
    scores = label_to_onehot(label, 4)
    for n in (1, 2, 4):
        assert best_n_indicator(scores, label, n) == 1


def test_indicator_rejects_single_row_miss():
    label = RfSelection((2,), (0,))
    scores = np.array([[0.1, 0.2, 0.9, 0.0],    # hit at n=1
                       [0.1, 0.9, 0.2, 0.8]])   # true index 0 not in top-2
    assert best_n_indicator(scores, label, 2) == 0
    assert best_n_indicator(scores, label, 4) == 1


def test_indicator_full_codebook_always_hits():
    label = RfSelection((3,), (1,))
    scores = np.zeros((2, 4))
    assert best_n_indicator(scores, label, 4) == 1


def test_indicator_tie_goes_to_smaller_index():
    # scores tied everywhere: top-1 is index 0
    scores = np.full((2, 4), 0.5)
    assert best_n_indicator(scores, RfSelection((0,), (0,)), 1) == 1
    assert best_n_indicator(scores, RfSelection((1,), (0,)), 1) == 0


def test_indicator_rejects_bad_n():
    scores = np.zeros((2, 4))
    with pytest.raises(ValueError):
        best_n_indicator(scores, RfSelection((0,), (0,)), 0)
    with pytest.raises(ValueError):
        best_n_indicator(scores, RfSelection((0,), (0,)), 5)


# accuracy ---------------------------------------------------------------------

def test_oracle_accuracy_is_one(labeled_ds):
    report = best_n_accuracy(labeled_ds, OraclePredictor(), (1, 3, 5))
    assert report.accuracy[0] == 1.0
    assert all(a == 1.0 for a in report.accuracy)
    assert report.sample_count == 40


def test_accuracy_monotone_and_full_width_one(labeled_ds):
    size = labeled_ds.header.codebook_size
    for predictor in (RandomPredictor(seed=1), OraclePredictor()):
        report = best_n_accuracy(labeled_ds, predictor, (1, 2, 4, size))
        assert all(b >= a for a, b in
                   zip(report.accuracy, report.accuracy[1:]))
        assert report.accuracy[-1] == 1.0
        assert all(0.0 <= a <= 1.0 for a in report.accuracy)


def test_random_accuracy_matches_binomial_expectation():
    # |C|=4, N_rf=1: two rows, each hits with prob 1/4, so 1/16 expected
    count = 100_000
    ds = _synthetic_label_dataset(count, codebook_size=4, n_rf=1, seed=3)
    report = best_n_accuracy(ds, RandomPredictor(seed=7), (1,))
    p = 1.0 / 16.0
    sigma = math.sqrt(p * (1 - p) / count)
    assert abs(report.accuracy[0] - p) <= 3 * sigma


def test_persistence_requires_linked_dataset(labeled_ds):
    predictor = PersistencePredictor()
    with pytest.raises(AlignmentError):
        best_n_accuracy(labeled_ds, predictor, (1,))


def test_persistence_tracks_windowed_dataset():
    cfg = desk_config(seed=51, k=4, kbar=8, t=2, cluster_count=2)
    ds = generate_dataset(cfg, 30, windowed=True)
    persistence = best_n_accuracy(ds, PersistencePredictor(), (1,))
    random_report = best_n_accuracy(ds, RandomPredictor(seed=0), (1,))
    # beam coherence across one 0.83 m step beats random selection
    assert persistence.accuracy[0] > random_report.accuracy[0]


def test_file_predictor_round_trip_and_alignment(labeled_ds, tmp_path):
    size = labeled_ds.header.codebook_size
    scores = np.stack([label_to_onehot(s.label, size)
                       for s in labeled_ds.samples])
    path = tmp_path / "oracle.dbpr"
    write_scores(scores, str(path))
    predictor = FilePredictor(str(path))
    report = best_n_accuracy(labeled_ds, predictor, (1,))
    assert report.accuracy[0] == 1.0

    short = tmp_path / "short.dbpr"
    write_scores(scores[:-1], str(short))
    with pytest.raises(AlignmentError):
        best_n_accuracy(labeled_ds, FilePredictor(str(short)), (1,))


def test_make_predictor_factory():
    assert make_predictor("oracle").name == "oracle"
    assert make_predictor("random", seed=3).name == "random"
    assert make_predictor("persistence").name == "persistence"
    with pytest.raises(ValueError):
        make_predictor("nope")
    with pytest.raises(ValueError):
        make_predictor("file")


# spectral efficiency -----------------------------------------------------------

def test_oracle_spectral_ratio_exactly_one(labeled_ds):
    rows = spectral_efficiency_report(labeled_ds, OraclePredictor(), (1, 3),
                                      snr_linear=1000.0,
                                      cfg=desk_config(seed=50))
    assert rows[0].n == 1
    assert rows[0].ratio == 1.0
    assert rows[0].configs_evaluated == 1
    for row in rows:
        assert row.ratio <= 1.0 + 1e-12
        assert row.mean_se_bits_per_subcarrier <= row.exhaustive_se + 1e-12


def test_candidate_counts_and_monotone_se(labeled_ds):
    rows = spectral_efficiency_report(labeled_ds, RandomPredictor(seed=2),
                                      (1, 3, 5), snr_linear=1000.0,
                                      cfg=desk_config(seed=50))
    assert [r.configs_evaluated for r in rows] == [1, 81, 625]
    ses = [r.mean_se_bits_per_subcarrier for r in rows]
    assert all(b >= a for a, b in zip(ses, ses[1:]))
    for row in rows:
        assert row.ratio <= 1.0 + 1e-12


def test_header_to_config_reconstructs_desk_dims(labeled_ds):
    cfg = header_to_config(labeled_ds.header)
    assert cfg.bs_mmwave_panel == (4, 4)
    assert cfg.bs_sub6_panel == (2, 2)
    assert cfg.n_rf == 2 and cfg.codebook_size == 8
    # reconstruction is good enough to reproduce the oracle closure
    rows = spectral_efficiency_report(labeled_ds, OraclePredictor(), (1,),
                                      snr_linear=1000.0)
    assert rows[0].ratio == 1.0


def test_report_csv_layout(labeled_ds, tmp_path):
    rows = spectral_efficiency_report(labeled_ds, OraclePredictor(), (1, 3),
                                      snr_linear=1000.0,
                                      cfg=desk_config(seed=50))
    path = tmp_path / "report.csv"
    write_report_csv(rows, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == ("predictor,input_snr_db,n,A_best_n,"
                        "mean_se_bits_per_subcarrier,exhaustive_se,ratio,"
                        "configs_evaluated,S,per_chain_hit_rate_supplementary")
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "oracle" and first[2] == "1"
    assert float(first[3]) == 1.0 and float(first[6]) == 1.0
