"""RF precoder representation, mutual-information objectives and searches.

The RF precoder is frequency-flat and block-diagonal: chain r applies one
codebook beam to its +45 subarray rows and one to its -45 rows, so a
selection is 2*N_rf codeword indices. The search objective is the sum over
mmWave subcarriers of log2 det(I + rho * H P H^H) with the projector
P = F_rf (F_rf^H F_rf)^{-1} F_rf^H, evaluated through the equivalent
N_rf x N_rf determinant.

Performance model: the searches precompute, per subcarrier and per
(chain, codeword-pair), the effective received column H * (block column),
so each candidate costs one small Gram plus a small determinant. Both
searches evaluate candidates through the same arithmetic on those tables,
which keeps reported mutual information bitwise identical for identical
candidates regardless of search type, chunking or thread count.

Ties in every argmax break to the lexicographically smallest index tuple
(+45 chain indices first, then -45), realized as the candidate's linear
rank in base |C|.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .config import ScenarioConfig

_CHUNK = 1 << 14


@dataclass(frozen=True)
class RfSelection:
    """Codeword indices identifying one block-diagonal RF precoder."""

    plus45_indices: tuple[int, ...]
    minus45_indices: tuple[int, ...]

    def as_digits(self) -> tuple[int, ...]:
        return self.plus45_indices + self.minus45_indices


@dataclass(frozen=True)
class SearchResult:
    selection: RfSelection
    mutual_information: float
    configs_evaluated: int


def _as_channel_array(h_all) -> np.ndarray:
    h = getattr(h_all, "h", h_all)
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim == 2:
        h = h[np.newaxis]
    if h.ndim != 3:
        raise ValueError(f"channel must be (Kbar, 2*N_rx, 2*N_tx), got {h.shape}")
    return h


def assemble_precoder(sel: RfSelection, cb: Codebook,
                      cfg: ScenarioConfig) -> np.ndarray:
    """Build the (2*N_tx, N_rf) block-diagonal RF precoding matrix.

    Rows [0, N_tx) hold the +45 blocks, rows [N_tx, 2*N_tx) the -45
    blocks; column r is nonzero only on chain r's subarray rows. With
    unit-norm codewords the Gram is 2*I.
    """
    n_tx, n_rf, n_sub = cfg.n_tx, cfg.n_rf, cfg.n_sub
    size = len(cb)
    for idx in sel.plus45_indices + sel.minus45_indices:
        if not 0 <= idx < size:
            raise ValueError(f"codeword index {idx} out of range [0, {size})")
    if len(sel.plus45_indices) != n_rf or len(sel.minus45_indices) != n_rf:
        raise ValueError("selection must carry n_rf indices per polarization")
    f = np.zeros((2 * n_tx, n_rf), dtype=np.complex128)
    for r in range(n_rf):
        f[r * n_sub:(r + 1) * n_sub, r] = cb[sel.plus45_indices[r]]
        f[n_tx + r * n_sub:n_tx + (r + 1) * n_sub, r] = cb[sel.minus45_indices[r]]
    return f


def received_signal(h_k: np.ndarray, f_rf: np.ndarray, f_dig_k: np.ndarray,
                    s: np.ndarray, n: np.ndarray) -> np.ndarray:
    """y = H * F_rf * F[k] * s + n, exactly."""
    h_k, f_rf = np.asarray(h_k), np.asarray(f_rf)
    f_dig_k, s, n = np.asarray(f_dig_k), np.asarray(s), np.asarray(n)
    if (h_k.shape[1] != f_rf.shape[0] or f_rf.shape[1] != f_dig_k.shape[0]
            or f_dig_k.shape[1] != s.shape[0] or n.shape[0] != h_k.shape[0]):
        raise ValueError(
            f"dimension mismatch: H{h_k.shape} F_rf{f_rf.shape} "
            f"F{f_dig_k.shape} s{s.shape} n{n.shape}")
    return h_k @ (f_rf @ (f_dig_k @ s)) + n


def mutual_information_rf(h_all, f_rf: np.ndarray, snr_linear: float) -> float:
    """Digital-stage-free mutual information of an RF precoder (bits).

    Sum over subcarriers of log2 det(I + rho H F (F^H F)^{-1} F^H H^H),
    computed through the N_rf x N_rf determinant
    det(I + rho (F^H F)^{-1} (HF)^H (HF)).
    """
    if snr_linear < 0:
        raise ValueError("snr_linear must be >= 0")
    h = _as_channel_array(h_all)
    f_rf = np.asarray(f_rf, dtype=np.complex128)
    n_rf = f_rf.shape[1]
    gram = f_rf.conj().T @ f_rf
    if np.linalg.cond(gram) > 1e12:
        raise np.linalg.LinAlgError("RF precoder Gram matrix is singular")
    hf = h @ f_rf                                        # (Kbar, 2N_rx, N_rf)
    inner = np.einsum("kmr,kms->krs", hf.conj(), hf)     # (HF)^H (HF)
    mats = np.eye(n_rf) + snr_linear * np.linalg.solve(gram, inner)
    dets = np.linalg.det(mats)
    return float(np.sum(np.log2(dets.real)))


def mutual_information_joint(h_all, f_rf: np.ndarray, f_dig_all: np.ndarray,
                             snr_linear: float) -> float:
    """Mutual information of a full hybrid precoder set (bits).

    ``f_dig_all`` is (Kbar, N_rf, N_s). The per-subcarrier power
    constraint sum ||F_rf F[k]||_F^2 = Kbar * N_s must hold.
    """
    if snr_linear < 0:
        raise ValueError("snr_linear must be >= 0")
    h = _as_channel_array(h_all)
    f_rf = np.asarray(f_rf, dtype=np.complex128)
    f_dig = np.asarray(f_dig_all, dtype=np.complex128)
    if f_dig.ndim != 3 or f_dig.shape[0] != h.shape[0] or f_dig.shape[1] != f_rf.shape[1]:
        raise ValueError(
            f"digital precoders must be (Kbar, N_rf, N_s), got {f_dig.shape}")
    kbar, _, n_s = f_dig.shape
    if not f_dig.any():
        return 0.0          # degenerate all-zero precoder set
    total = float(np.sum(np.abs(np.einsum("tr,krs->kts", f_rf, f_dig)) ** 2))
    budget = kbar * n_s
    if abs(total - budget) > 1e-6 * max(1.0, budget):
        raise ValueError(
            f"power constraint violated: sum ||F_rf F[k]||^2 = {total!r}, "
            f"expected {budget}")
    comp = np.einsum("kmt,tr,krs->kms", h, f_rf, f_dig)  # H F_rf F[k]
    m = h.shape[1]
    mats = np.eye(m) + snr_linear * np.einsum("kms,kns->kmn", comp, comp.conj())
    sign, logdet = np.linalg.slogdet(mats)
    return float(np.sum(logdet) / np.log(2.0))


# Search core ---------------------------------------------------------------

def _effective_pair_columns(h: np.ndarray, cb: Codebook, n_rf: int) -> list[np.ndarray]:
    """Per-chain tables W[r][k, a, :] = H[k] applied to the block column of
    chain r carrying codeword pair a = i_plus * |C| + i_minus."""
    kbar, m, two_n_tx = h.shape
    n_tx = two_n_tx // 2
    n_sub = n_tx // n_rf
    if n_sub * n_rf != n_tx or cb.codewords.shape[1] != n_sub:
        raise ValueError(
            f"channel width {two_n_tx} incompatible with n_rf={n_rf} and "
            f"codeword length {cb.codewords.shape[1]}")
    size = len(cb)
    tables = []
    for r in range(n_rf):
        plus = h[:, :, r * n_sub:(r + 1) * n_sub]
        minus = h[:, :, n_tx + r * n_sub:n_tx + (r + 1) * n_sub]
        u = np.einsum("kmn,in->kim", plus, cb.codewords)     # (Kbar, C, M)
        v = np.einsum("kmn,in->kim", minus, cb.codewords)
        w = u[:, :, None, :] + v[:, None, :, :]
        tables.append(w.reshape(kbar, size * size, m))
    return tables


def _mi_of_pairs(tables: list[np.ndarray], rho: float,
                 pairs: np.ndarray) -> np.ndarray:
    """Objective value for each candidate row of ``pairs`` (n, n_rf).

    Uses the Gram shortcut (F^H F = 2I for unit-norm codewords), so the
    effective per-column scale is rho/2. The reductions here are plain
    einsum dot products; identical candidates always produce identical
    bits no matter how callers batch them.
    """
    c = rho / 2.0
    n_rf = len(tables)
    sel = [tables[r][:, pairs[:, r], :] for r in range(n_rf)]
    if n_rf == 1:
        g = np.einsum("knm,knm->kn", sel[0].conj(), sel[0]).real
        return np.log2(1.0 + c * g).sum(axis=0)
    if n_rf == 2:
        g00 = np.einsum("knm,knm->kn", sel[0].conj(), sel[0]).real
        g11 = np.einsum("knm,knm->kn", sel[1].conj(), sel[1]).real
        g01 = np.einsum("knm,knm->kn", sel[0].conj(), sel[1])
        det = (1.0 + c * g00) * (1.0 + c * g11) \
            - c * c * (g01.real ** 2 + g01.imag ** 2)
        return np.log2(det).sum(axis=0)
    stacked = np.stack(sel, axis=-1)                     # (Kbar, n, M, n_rf)
    gram = np.einsum("knmr,knms->knrs", stacked.conj(), stacked)
    mats = np.eye(n_rf) + c * gram
    return np.log2(np.linalg.det(mats).real).sum(axis=0)


def _digits_to_pairs(digits: np.ndarray, size: int, n_rf: int) -> np.ndarray:
    return digits[:, :n_rf] * size + digits[:, n_rf:]


def _digits_to_rank(digits: np.ndarray, size: int) -> np.ndarray:
    rank = np.zeros(digits.shape[0], dtype=np.int64)
    for d in range(digits.shape[1]):
        rank = rank * size + digits[:, d]
    return rank


def _rank_to_selection(rank: int, size: int, n_rf: int) -> RfSelection:
    digits = []
    for _ in range(2 * n_rf):
        digits.append(rank % size)
        rank //= size
    digits.reverse()
    return RfSelection(plus45_indices=tuple(digits[:n_rf]),
                       minus45_indices=tuple(digits[n_rf:]))


def _best_of_chunk(tables, rho, size, n_rf, digits):
    pairs = _digits_to_pairs(digits, size, n_rf)
    mi = _mi_of_pairs(tables, rho, pairs)
    top = np.max(mi)
    ranks = _digits_to_rank(digits[mi == top], size)
    return float(top), int(ranks.min())


def _reduce_best(results) -> tuple[float, int]:
    best_mi, best_rank = -np.inf, -1
    for mi, rank in results:
        if mi > best_mi or (mi == best_mi and rank < best_rank):
            best_mi, best_rank = mi, rank
    return best_mi, best_rank


def _search(tables, rho, size, n_rf, digit_chunks, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda d: _best_of_chunk(tables, rho, size, n_rf, d),
                digit_chunks))
    else:
        results = [_best_of_chunk(tables, rho, size, n_rf, d)
                   for d in digit_chunks]
    return _reduce_best(results)


def _decode_range(lo: int, hi: int, size: int, n_digits: int) -> np.ndarray:
    rem = np.arange(lo, hi, dtype=np.int64)
    out = np.empty((rem.size, n_digits), dtype=np.int64)
    for d in range(n_digits - 1, -1, -1):
        out[:, d] = rem % size
        rem //= size
    return out


def exhaustive_search(h_all, cb: Codebook, cfg: ScenarioConfig,
                      snr_linear: float, threads: int = 1) -> SearchResult:
    """Enumerate all |C|^(2*N_rf) selections and return an argmax.

    Result is independent of enumeration order and thread count.
    """
    h = _as_channel_array(h_all)
    n_rf, size = cfg.n_rf, len(cb)
    tables = _effective_pair_columns(h, cb, n_rf)
    total = size ** (2 * n_rf)
    chunks = (_decode_range(lo, min(lo + _CHUNK, total), size, 2 * n_rf)
              for lo in range(0, total, _CHUNK))
    best_mi, best_rank = _search(tables, snr_linear, size, n_rf, chunks, threads)
    return SearchResult(selection=_rank_to_selection(best_rank, size, n_rf),
                        mutual_information=best_mi,
                        configs_evaluated=total)


def top_n_indices(score_row: np.ndarray, n: int) -> np.ndarray:
    """Indices of the n largest scores; ties break to the smaller index."""
    order = np.lexsort((np.arange(score_row.size), -np.asarray(score_row)))
    return order[:n]


def candidate_set_search(h_all, cb: Codebook, cfg: ScenarioConfig,
                         snr_linear: float, scores: np.ndarray, n: int,
                         threads: int = 1) -> SearchResult:
    """Exhaustive search restricted to each row's top-n scored beams.

    ``scores`` is (2*N_rf, |C|); rows [0, N_rf) are the +45 chains. The
    n^(2*N_rf) combinations are evaluated with the same objective and
    tie-breaking as :func:`exhaustive_search`.
    """
    h = _as_channel_array(h_all)
    n_rf, size = cfg.n_rf, len(cb)
    scores = np.asarray(scores)
    if scores.shape != (2 * n_rf, size):
        raise ValueError(f"scores must be (2*N_rf, |C|) = {(2 * n_rf, size)}, "
                         f"got {scores.shape}")
    if not 1 <= n <= size:
        raise ValueError(f"n={n} out of range [1, {size}]")
    tables = _effective_pair_columns(h, cb, n_rf)
    tops = [top_n_indices(scores[r], n) for r in range(2 * n_rf)]
    grids = np.meshgrid(*tops, indexing="ij")
    digits = np.stack([g.reshape(-1) for g in grids], axis=1).astype(np.int64)
    total = digits.shape[0]
    chunks = (digits[lo:lo + _CHUNK] for lo in range(0, total, _CHUNK))
    best_mi, best_rank = _search(tables, snr_linear, size, n_rf, chunks, threads)
    return SearchResult(selection=_rank_to_selection(best_rank, size, n_rf),
                        mutual_information=best_mi,
                        configs_evaluated=total)
