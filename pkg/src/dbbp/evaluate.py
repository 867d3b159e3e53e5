"""Predictor contract, built-in baselines, best-n accuracy and spectral
efficiency reports.

A predictor maps one dataset sample to a (2*N_rf, |C|) score matrix in
[0, 1]; rows [0, N_rf) are the +45 chains. Best-n accuracy counts a sample
as correct only when every row's true index lies in that row's top-n
scores (ties to the smaller index). Spectral efficiency is the top-n
candidate-set search objective divided by Kbar, reported next to the
exhaustive-search value stored at labeling time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook, build_codebook
from .config import ScenarioConfig
from .dataset import Dataset, label_to_onehot, read_scores, sample_seed
from .precoding import RfSelection, candidate_set_search, top_n_indices


class AlignmentError(Exception):
    """A scores file does not line up with the dataset under evaluation."""


class Predictor:
    """Base predictor: named, versioned provider of per-sample scores."""

    name = "base"
    version = 1

    def scores_for(self, ds: Dataset, index: int) -> np.ndarray:
        raise NotImplementedError

    def check_alignment(self, ds: Dataset) -> None:
        """Raise AlignmentError if this predictor cannot score ``ds``."""


class OraclePredictor(Predictor):
    """Emits the one-hot expansion of the stored label."""

    name = "oracle"

    def scores_for(self, ds: Dataset, index: int) -> np.ndarray:
        sample = ds.samples[index]
        if sample.label is None:
            raise ValueError("oracle predictor needs labeled samples")
        return label_to_onehot(sample.label, ds.header.codebook_size)


class RandomPredictor(Predictor):
    """Seeded uniform scores; per-sample streams are seed XOR index."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def scores_for(self, ds: Dataset, index: int) -> np.ndarray:
        rng = np.random.default_rng(sample_seed(self.seed, index))
        shape = (2 * ds.header.n_rf, ds.header.codebook_size)
        return rng.uniform(0.0, 1.0, shape).astype(np.float32)


class PersistencePredictor(Predictor):
    """One-hot on the previous sample's label along the same trajectory.

    Only valid for trajectory-linked (windowed) datasets. The first sample
    has no predecessor and scores all-zero.
    """

    name = "persistence"

    def check_alignment(self, ds: Dataset) -> None:
        if not ds.header.trajectory_linked:
            raise AlignmentError(
                "persistence predictor requires a trajectory-linked dataset")

    def scores_for(self, ds: Dataset, index: int) -> np.ndarray:
        self.check_alignment(ds)
        shape = (2 * ds.header.n_rf, ds.header.codebook_size)
        if index == 0:
            return np.zeros(shape, dtype=np.float32)
        prev = ds.samples[index - 1]
        if prev.label is None:
            raise ValueError("persistence predictor needs labeled samples")
        return label_to_onehot(prev.label, ds.header.codebook_size)


class FilePredictor(Predictor):
    """Scores read from a "DBPR" file aligned to the dataset order."""

    name = "file"

    def __init__(self, path: str):
        self.path = path
        self.scores = read_scores(path)

    def check_alignment(self, ds: Dataset) -> None:
        s, two_n_rf, size = self.scores.shape
        if s != ds.header.sample_count:
            raise AlignmentError(
                f"scores file has {s} samples, dataset has "
                f"{ds.header.sample_count}")
        if two_n_rf != 2 * ds.header.n_rf or size != ds.header.codebook_size:
            raise AlignmentError(
                f"scores shaped {(two_n_rf, size)} per sample, dataset needs "
                f"{(2 * ds.header.n_rf, ds.header.codebook_size)}")

    def scores_for(self, ds: Dataset, index: int) -> np.ndarray:
        return self.scores[index]


def make_predictor(spec: str, seed: int = 0,
                   scores_path: str | None = None) -> Predictor:
    if spec == "oracle":
        return OraclePredictor()
    if spec == "random":
        return RandomPredictor(seed=seed)
    if spec == "persistence":
        return PersistencePredictor()
    if spec == "file":
        if not scores_path:
            raise ValueError("file predictor needs a scores path")
        return FilePredictor(scores_path)
    raise ValueError(f"unknown predictor {spec!r}")


# Metrics --------------------------------------------------------------------

def best_n_indicator(scores: np.ndarray, label, n: int) -> int:
    """1 if every row's true index is within that row's top-n scores.

    ``label`` may be an RfSelection or a one-hot (2*N_rf, |C|) matrix.
    """
    scores = np.asarray(scores)
    if isinstance(label, RfSelection):
        truth = label.as_digits()
    else:
        truth = tuple(int(i) for i in np.argmax(np.asarray(label), axis=1))
    if not 1 <= n <= scores.shape[1]:
        raise ValueError(f"n={n} out of range [1, {scores.shape[1]}]")
    for r, true_idx in enumerate(truth):
        if true_idx not in top_n_indices(scores[r], n):
            return 0
    return 1


@dataclass(frozen=True)
class AccuracyReport:
    predictor: str
    input_snr_db: float
    n_values: tuple[int, ...]
    accuracy: tuple[float, ...]
    per_row_hit_rate: tuple[float, ...]   # supplementary, per-chain average
    sample_count: int


def best_n_accuracy(ds: Dataset, predictor: Predictor,
                    n_values) -> AccuracyReport:
    """Average the strict all-rows indicator over the dataset per n."""
    if not ds.header.has_labels:
        raise ValueError("dataset carries no labels")
    predictor.check_alignment(ds)
    n_values = tuple(int(n) for n in n_values)
    count = len(ds.samples)
    hits = np.zeros(len(n_values), dtype=np.int64)
    row_hits = np.zeros(len(n_values), dtype=np.int64)
    rows = 0
    for i, sample in enumerate(ds.samples):
        scores = predictor.scores_for(ds, i)
        truth = sample.label.as_digits()
        rows += len(truth)
        for j, n in enumerate(n_values):
            per_row = [truth[r] in top_n_indices(scores[r], n)
                       for r in range(len(truth))]
            row_hits[j] += sum(per_row)
            hits[j] += int(all(per_row))
    denom = max(count, 1)
    return AccuracyReport(
        predictor=predictor.name,
        input_snr_db=ds.header.input_snr_db,
        n_values=n_values,
        accuracy=tuple(float(h) / denom for h in hits),
        per_row_hit_rate=tuple(float(h) / max(rows, 1) for h in row_hits),
        sample_count=count)


@dataclass(frozen=True)
class ReportRow:
    predictor: str
    input_snr_db: float
    n: int
    a_best_n: float
    mean_se_bits_per_subcarrier: float | None
    exhaustive_se: float | None
    ratio: float | None
    configs_evaluated: int
    sample_count: int
    per_row_hit_rate: float


def header_to_config(header, seed: int = 0) -> ScenarioConfig:
    """Reconstruct a dimensionally-equivalent config from a file header.

    Panel shapes are not stored; they are inferred as the most-square
    factorization (rows = largest divisor <= sqrt(count)). Pass the
    generating config to evaluation entry points when the true panels
    differ from this rule.
    """
    def near_square(count):
        rows = int(math.isqrt(count))
        while count % rows != 0:
            rows -= 1
        return rows, count // rows

    return ScenarioConfig(
        k=header.k, kbar=header.kbar,
        bs_sub6_panel=near_square(header.n_tx_sub6),
        bs_mmwave_panel=near_square(header.n_tx),
        ue_mmwave_panel=near_square(header.n_rx),
        n_rf=header.n_rf, codebook_size=header.codebook_size,
        t=header.t, n_s=min(2, header.n_rf), seed=seed)


def spectral_efficiency_report(ds: Dataset, predictor: Predictor, n_values,
                               snr_linear: float,
                               cfg: ScenarioConfig | None = None,
                               codebook: Codebook | None = None,
                               threads: int = 1) -> list[ReportRow]:
    """Mean reduced-search spectral efficiency per n, with the exhaustive
    mean and their ratio.

    Spectral efficiency is the search objective divided by Kbar. The
    exhaustive column comes from the optimal values stored at labeling
    time; the candidate-set search shares its arithmetic, so an oracle
    predictor at n=1 reproduces it exactly.
    """
    if not ds.header.has_mmwave:
        raise ValueError("dataset carries no mmWave targets")
    if not ds.header.has_labels:
        raise ValueError("dataset carries no labels")
    predictor.check_alignment(ds)
    cfg = cfg or header_to_config(ds.header)
    cb = codebook or build_codebook(cfg)
    n_values = tuple(int(n) for n in n_values)
    count = len(ds.samples)
    acc = best_n_accuracy(ds, predictor, n_values)

    cand_mi = np.zeros((len(n_values), count))
    exh_mi = np.array([s.optimal_mi for s in ds.samples], dtype=np.float64)
    for i, sample in enumerate(ds.samples):
        scores = predictor.scores_for(ds, i)
        h = sample.mmwave.astype(np.complex128)
        for j, n in enumerate(n_values):
            res = candidate_set_search(h, cb, cfg, snr_linear, scores, n,
                                       threads=threads)
            cand_mi[j, i] = res.mutual_information

    rows = []
    kbar = ds.header.kbar
    exh_se = float(np.mean(exh_mi)) / kbar if count else None
    for j, n in enumerate(n_values):
        mean_se = float(np.mean(cand_mi[j])) / kbar if count else None
        ratio = (mean_se / exh_se) if count and exh_se else None
        rows.append(ReportRow(
            predictor=predictor.name,
            input_snr_db=ds.header.input_snr_db,
            n=n,
            a_best_n=acc.accuracy[j],
            mean_se_bits_per_subcarrier=mean_se,
            exhaustive_se=exh_se,
            ratio=ratio,
            configs_evaluated=n ** (2 * ds.header.n_rf),
            sample_count=count,
            per_row_hit_rate=acc.per_row_hit_rate[j]))
    return rows


def accuracy_only_rows(ds: Dataset, predictor: Predictor,
                       n_values) -> list[ReportRow]:
    """Report rows without spectral-efficiency columns (no mmWave block)."""
    acc = best_n_accuracy(ds, predictor, n_values)
    return [ReportRow(predictor=predictor.name,
                      input_snr_db=ds.header.input_snr_db, n=n,
                      a_best_n=acc.accuracy[j],
                      mean_se_bits_per_subcarrier=None, exhaustive_se=None,
                      ratio=None, configs_evaluated=n ** (2 * ds.header.n_rf),
                      sample_count=acc.sample_count,
                      per_row_hit_rate=acc.per_row_hit_rate[j])
            for j, n in enumerate(acc.n_values)]


REPORT_COLUMNS = ("predictor", "input_snr_db", "n", "A_best_n",
                  "mean_se_bits_per_subcarrier", "exhaustive_se", "ratio",
                  "configs_evaluated", "S", "per_chain_hit_rate_supplementary")


def write_report_csv(rows: list[ReportRow], path: str) -> None:
    """One CSV row per (predictor, n)."""
    def fmt(value):
        if value is None:
            return ""
        if isinstance(value, float):
            return repr(value)
        return str(value)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for r in rows:
            writer.writerow([
                r.predictor, fmt(r.input_snr_db), r.n, fmt(r.a_best_n),
                fmt(r.mean_se_bits_per_subcarrier), fmt(r.exhaustive_se),
                fmt(r.ratio), r.configs_evaluated, r.sample_count,
                fmt(r.per_row_hit_rate)])
