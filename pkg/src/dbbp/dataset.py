"""Labeled sample generation and the binary exchange formats.

Two little-endian file formats are owned here and shared with any external
trainer:

Dataset file ("DBBP")
    magic ``DBBP`` (4 bytes), version u16 = 1, flags u16
    (bit0 labels, bit1 locations, bit2 mmWave block, bit3 trajectory-linked),
    then u32: T, K, Kbar, N_tx_sub6, N_tx, N_rx, N_rf, codebook_size,
    sample_count, then input_snr_millibel as i32 (snr_db * 100; i32 min is
    the +inf sentinel). Per sample, in order:
    sub-6 block: T*K*(2*N_tx_sub6) complex64 (re, im float32 pairs),
    t-major, then k, then antenna port; locations block: T*3 float32
    (x, y, z); mmWave block: Kbar*(2*N_rx)*(2*N_tx) complex64, kbar-major,
    then rx, then tx; labels block: 2*N_rf u16 indices (+45 chains
    ascending, then -45), then optimal mutual information as float64.

Prediction-scores file ("DBPR")
    magic ``DBPR``, version u16 = 1, u32 sample_count, u32 N_rf,
    u32 codebook_size, then per sample 2*N_rf*|C| float32 scores in [0, 1],
    sample-major, chain-major (+45 first), codeword-index minor.

Writing then reading either file is value-identical including float bit
patterns, and regeneration from the same config and seed is byte-identical.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .channel import (add_measurement_noise, generate_trajectory,
                      mmwave_channel_at, noise_seed_for, sub6_channel_at)
from .codebook import build_codebook
from .config import ScenarioConfig
from .precoding import RfSelection, exhaustive_search

DATASET_MAGIC = b"DBBP"
SCORES_MAGIC = b"DBPR"
FORMAT_VERSION = 1

_FLAG_LABELS = 1 << 0
_FLAG_LOCATIONS = 1 << 1
_FLAG_MMWAVE = 1 << 2
_FLAG_LINKED = 1 << 3

_HEADER_STRUCT = struct.Struct("<4sHH9Ii")
_SNR_INF_SENTINEL = -(2 ** 31)

DEFAULT_LABEL_SNR_DB = 30.0


class DatasetFormatError(Exception):
    """Malformed dataset/scores file; carries the offending byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class DatasetHeader:
    t: int
    k: int
    kbar: int
    n_tx_sub6: int
    n_tx: int
    n_rx: int
    n_rf: int
    codebook_size: int
    sample_count: int
    input_snr_db: float
    has_labels: bool = True
    has_locations: bool = True
    has_mmwave: bool = True
    trajectory_linked: bool = False
    version: int = FORMAT_VERSION

    @property
    def flags(self) -> int:
        return ((_FLAG_LABELS if self.has_labels else 0)
                | (_FLAG_LOCATIONS if self.has_locations else 0)
                | (_FLAG_MMWAVE if self.has_mmwave else 0)
                | (_FLAG_LINKED if self.trajectory_linked else 0))

    def sample_nbytes(self) -> int:
        size = self.t * self.k * 2 * self.n_tx_sub6 * 8
        if self.has_locations:
            size += self.t * 3 * 4
        if self.has_mmwave:
            size += self.kbar * 2 * self.n_rx * 2 * self.n_tx * 8
        if self.has_labels:
            size += 2 * self.n_rf * 2 + 8
        return size


@dataclass(eq=False)
class ChannelSample:
    """One record: T noisy sub-6 snapshots, T locations, the clean mmWave
    target one step later, and (optionally) the searched label.

    Arrays are little-endian complex64/float32, exactly what the file
    stores. ``label`` and ``optimal_mi`` are present together or not at all.
    """

    sub6: np.ndarray                     # (T, K, 2*N_tx_sub6) complex64
    locations: np.ndarray | None         # (T, 3) float32
    mmwave: np.ndarray | None            # (Kbar, 2*N_rx, 2*N_tx) complex64
    label: RfSelection | None = None
    optimal_mi: float | None = None

    def __post_init__(self):
        if (self.label is None) != (self.optimal_mi is None):
            raise ValueError("label and optimal_mi must be present together")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChannelSample):
            return NotImplemented
        def arr_eq(a, b):
            return (a is None and b is None) or \
                   (a is not None and b is not None and np.array_equal(a, b))
        return (arr_eq(self.sub6, other.sub6)
                and arr_eq(self.locations, other.locations)
                and arr_eq(self.mmwave, other.mmwave)
                and self.label == other.label
                and self.optimal_mi == other.optimal_mi)


@dataclass(eq=False)
class Dataset:
    header: DatasetHeader
    samples: list[ChannelSample]

    def __len__(self) -> int:
        return len(self.samples)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.header == other.header and self.samples == other.samples


def label_to_onehot(sel: RfSelection, codebook_size: int) -> np.ndarray:
    """One-hot view of a stored label: (2*N_rf, |C|) with a single 1 per row."""
    digits = sel.as_digits()
    out = np.zeros((len(digits), codebook_size), dtype=np.float32)
    out[np.arange(len(digits)), digits] = 1.0
    return out


def sample_seed(seed: int, index: int) -> int:
    """Per-sample RNG stream id: seed XOR sample index (order-independent)."""
    return seed ^ index


# Generation ----------------------------------------------------------------

def _header_for(cfg: ScenarioConfig, sample_count: int, input_snr_db: float,
                linked: bool) -> DatasetHeader:
    return DatasetHeader(
        t=cfg.t, k=cfg.k, kbar=cfg.kbar, n_tx_sub6=cfg.n_tx_sub6,
        n_tx=cfg.n_tx, n_rx=cfg.n_rx, n_rf=cfg.n_rf,
        codebook_size=cfg.codebook_size, sample_count=sample_count,
        input_snr_db=input_snr_db, trajectory_linked=linked)


def generate_dataset(cfg: ScenarioConfig, sample_count: int,
                     input_snr_db: float = math.inf,
                     label_snr_db: float = DEFAULT_LABEL_SNR_DB,
                     windowed: bool = False, threads: int = 1) -> Dataset:
    """Generate a labeled dataset.

    Each sample takes a T+1-step trajectory, emits noisy sub-6 snapshots
    and locations for steps 1..T plus the clean mmWave channel at step
    T+1, then labels it by exhaustive search at ``label_snr_db``. By
    default every sample gets its own trajectory (seed XOR sample index);
    with ``windowed=True`` samples are sliding windows over one shared
    trajectory, which links consecutive samples for persistence baselines.
    Deterministic for a fixed config seed, independent of ``threads``.
    """
    if sample_count < 0:
        raise ValueError("sample_count must be >= 0")
    cb = build_codebook(cfg)
    rho = 10.0 ** (label_snr_db / 10.0)
    shared = generate_trajectory(cfg, sample_count + cfg.t) \
        if windowed and sample_count > 0 else None

    def build(i: int) -> ChannelSample:
        s_seed = sample_seed(cfg.seed, i)
        if windowed:
            traj, base = shared, i
        else:
            traj = generate_trajectory(cfg.with_overrides(seed=s_seed), cfg.t + 1)
            base = 0
        snaps = []
        locs = np.empty((cfg.t, 3), dtype="<f4")
        for t in range(cfg.t):
            snap = sub6_channel_at(cfg, traj, base + t)
            snap = add_measurement_noise(snap, input_snr_db,
                                         noise_seed_for(s_seed, t))
            snaps.append(np.ascontiguousarray(snap.h.T))   # (K, 2*N_tx_sub6)
            loc = traj.steps[base + t].location
            locs[t] = (loc.x_m, loc.y_m, loc.z_m)
        sub6 = np.stack(snaps).astype("<c8")
        mmw = mmwave_channel_at(cfg, traj, base + cfg.t).h.astype("<c8")
        # label on the quantized channel so re-evaluation from the file
        # reproduces the stored optimum bit for bit
        res = exhaustive_search(mmw.astype(np.complex128), cb, cfg, rho)
        return ChannelSample(sub6=sub6, locations=locs, mmwave=mmw,
                             label=res.selection,
                             optimal_mi=res.mutual_information)

    if threads > 1 and sample_count > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(build, range(sample_count)))
    else:
        samples = [build(i) for i in range(sample_count)]
    return Dataset(header=_header_for(cfg, sample_count, input_snr_db, windowed),
                   samples=samples)


# Serialization -------------------------------------------------------------

def _snr_to_millibel(snr_db: float) -> int:
    if math.isinf(snr_db) and snr_db > 0:
        return _SNR_INF_SENTINEL
    value = int(round(snr_db * 100.0))
    if not -(2 ** 31) < value < 2 ** 31:
        raise ValueError(f"input SNR {snr_db} dB out of range")
    return value


def _millibel_to_snr(value: int) -> float:
    return math.inf if value == _SNR_INF_SENTINEL else value / 100.0


def write_dataset(ds: Dataset, path: str) -> None:
    h = ds.header
    if h.sample_count != len(ds.samples):
        raise ValueError("header sample_count disagrees with sample list")
    with open(path, "wb") as fh:
        fh.write(_HEADER_STRUCT.pack(
            DATASET_MAGIC, h.version, h.flags, h.t, h.k, h.kbar, h.n_tx_sub6,
            h.n_tx, h.n_rx, h.n_rf, h.codebook_size, h.sample_count,
            _snr_to_millibel(h.input_snr_db)))
        for s in ds.samples:
            fh.write(np.ascontiguousarray(s.sub6, dtype="<c8").tobytes())
            if h.has_locations:
                fh.write(np.ascontiguousarray(s.locations, dtype="<f4").tobytes())
            if h.has_mmwave:
                fh.write(np.ascontiguousarray(s.mmwave, dtype="<c8").tobytes())
            if h.has_labels:
                fh.write(np.asarray(s.label.as_digits(), dtype="<u2").tobytes())
                fh.write(struct.pack("<d", s.optimal_mi))


def read_dataset(path: str) -> Dataset:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER_STRUCT.size:
        raise DatasetFormatError("file shorter than the dataset header", 0)
    (magic, version, flags, t, k, kbar, n_tx_sub6, n_tx, n_rx, n_rf,
     codebook_size, sample_count, snr_mb) = _HEADER_STRUCT.unpack_from(blob, 0)
    if magic != DATASET_MAGIC:
        raise DatasetFormatError(f"bad magic {magic!r}", 0)
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported version {version}", 4)
    header = DatasetHeader(
        t=t, k=k, kbar=kbar, n_tx_sub6=n_tx_sub6, n_tx=n_tx, n_rx=n_rx,
        n_rf=n_rf, codebook_size=codebook_size, sample_count=sample_count,
        input_snr_db=_millibel_to_snr(snr_mb),
        has_labels=bool(flags & _FLAG_LABELS),
        has_locations=bool(flags & _FLAG_LOCATIONS),
        has_mmwave=bool(flags & _FLAG_MMWAVE),
        trajectory_linked=bool(flags & _FLAG_LINKED),
        version=version)

    per_sample = header.sample_nbytes()
    payload = len(blob) - _HEADER_STRUCT.size
    if payload < per_sample * sample_count:
        incomplete = payload // per_sample if per_sample else 0
        raise DatasetFormatError(
            f"truncated file: sample {incomplete} incomplete",
            _HEADER_STRUCT.size + incomplete * per_sample)
    if payload > per_sample * sample_count:
        raise DatasetFormatError(
            "trailing bytes after the last sample",
            _HEADER_STRUCT.size + per_sample * sample_count)

    offset = _HEADER_STRUCT.size
    samples = []
    for _ in range(sample_count):
        sub6_n = t * k * 2 * n_tx_sub6
        sub6 = np.frombuffer(blob, "<c8", sub6_n, offset)
        sub6 = sub6.reshape(t, k, 2 * n_tx_sub6).copy()
        offset += sub6_n * 8
        locations = None
        if header.has_locations:
            locations = np.frombuffer(blob, "<f4", t * 3, offset)
            locations = locations.reshape(t, 3).copy()
            offset += t * 3 * 4
        mmwave = None
        if header.has_mmwave:
            mm_n = kbar * 2 * n_rx * 2 * n_tx
            mmwave = np.frombuffer(blob, "<c8", mm_n, offset)
            mmwave = mmwave.reshape(kbar, 2 * n_rx, 2 * n_tx).copy()
            offset += mm_n * 8
        label, mi = None, None
        if header.has_labels:
            digits = np.frombuffer(blob, "<u2", 2 * n_rf, offset)
            offset += 2 * n_rf * 2
            bad = np.nonzero(digits >= codebook_size)[0]
            if bad.size:
                raise DatasetFormatError(
                    f"label index {int(digits[bad[0]])} out of range "
                    f"[0, {codebook_size})", offset - 2 * n_rf * 2 + 2 * int(bad[0]))
            label = RfSelection(plus45_indices=tuple(int(d) for d in digits[:n_rf]),
                                minus45_indices=tuple(int(d) for d in digits[n_rf:]))
            (mi,) = struct.unpack_from("<d", blob, offset)
            offset += 8
        samples.append(ChannelSample(sub6=sub6, locations=locations,
                                     mmwave=mmwave, label=label, optimal_mi=mi))
    return Dataset(header=header, samples=samples)


def split_dataset(ds: Dataset, train_fraction: float,
                  seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffle-then-split into disjoint, exhaustive parts.

    The train size is round-half-up of fraction * sample_count.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    count = len(ds.samples)
    n_train = int(math.floor(count * train_fraction + 0.5))
    perm = np.random.default_rng(seed).permutation(count)
    train = [ds.samples[i] for i in perm[:n_train]]
    test = [ds.samples[i] for i in perm[n_train:]]
    def with_count(part):
        return Dataset(header=replace(ds.header, sample_count=len(part)),
                       samples=part)
    return with_count(train), with_count(test)


# Prediction-scores file ----------------------------------------------------

_SCORES_STRUCT = struct.Struct("<4sHIII")


def write_scores(scores: np.ndarray, path: str) -> None:
    """Write a (S, 2*N_rf, |C|) score tensor as a "DBPR" file."""
    scores = np.asarray(scores)
    if scores.ndim != 3 or scores.shape[1] % 2 != 0:
        raise ValueError(f"scores must be (S, 2*N_rf, |C|), got {scores.shape}")
    s, two_n_rf, size = scores.shape
    with open(path, "wb") as fh:
        fh.write(_SCORES_STRUCT.pack(SCORES_MAGIC, FORMAT_VERSION, s,
                                     two_n_rf // 2, size))
        fh.write(np.ascontiguousarray(scores, dtype="<f4").tobytes())


def read_scores(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _SCORES_STRUCT.size:
        raise DatasetFormatError("file shorter than the scores header", 0)
    magic, version, count, n_rf, size = _SCORES_STRUCT.unpack_from(blob, 0)
    if magic != SCORES_MAGIC:
        raise DatasetFormatError(f"bad magic {magic!r}", 0)
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported version {version}", 4)
    expected = count * 2 * n_rf * size * 4
    if len(blob) - _SCORES_STRUCT.size != expected:
        raise DatasetFormatError(
            f"scores payload must be {expected} bytes, found "
            f"{len(blob) - _SCORES_STRUCT.size}", _SCORES_STRUCT.size)
    scores = np.frombuffer(blob, "<f4", offset=_SCORES_STRUCT.size)
    scores = scores.reshape(count, 2 * n_rf, size).copy()
    if not np.all(np.isfinite(scores)) or scores.min(initial=0.0) < 0.0 \
            or scores.max(initial=0.0) > 1.0:
        raise DatasetFormatError("scores outside [0, 1]", _SCORES_STRUCT.size)
    return scores
