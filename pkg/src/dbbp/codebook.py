"""Beamforming codebook and UPA steering vectors.

The finite codebook holds constant-modulus unit-norm subarray beams. Beams
are 2-D DFT vectors on the subarray panel, i.e. the critically sampled
spatial-frequency grid when the codebook size equals the subarray element
count, in which case the codebook is orthonormal. Both polarizations draw
from the same codebook, and labels are codebook indices, so construction
must stay deterministic and index-stable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig


def steering_vector(panel: tuple[int, int], azimuth_rad: float,
                    elevation_rad: float) -> np.ndarray:
    """Array response of a half-wavelength UPA, flattened row-major.

    Separable direction-sine convention: element (r, c) has phase
    2*pi*0.5*(r*sin(el) + c*sin(az)). Entries have magnitude
    1/sqrt(rows*cols); broadside (0, 0) gives a constant vector.
    """
    rows, cols = panel
    if rows < 1 or cols < 1:
        raise ValueError(f"panel dims must be >= 1, got {panel}")
    row_phase = np.exp(1j * np.pi * np.arange(rows) * np.sin(elevation_rad))
    col_phase = np.exp(1j * np.pi * np.arange(cols) * np.sin(azimuth_rad))
    return np.kron(row_phase, col_phase) / np.sqrt(rows * cols)


@dataclass(frozen=True, eq=False)
class Codebook:
    """Ordered beam codebook on one subarray panel.

    ``codewords[i]`` is the unit-norm beam for index ``i``. Index order is
    elevation-major, azimuth-minor over the sorted angle grids:
    ``i = p * len(azimuth_grid) + q`` selects elevation ``p``, azimuth ``q``.
    """

    codewords: np.ndarray            # (size, n_sub) complex128
    azimuth_grid: np.ndarray         # (n_az,) radians, ascending
    elevation_grid: np.ndarray       # (n_el,) radians, ascending
    subarray_shape: tuple[int, int]

    def __len__(self) -> int:
        return self.codewords.shape[0]

    def __getitem__(self, index: int) -> np.ndarray:
        return self.codewords[index]


def subarray_shape(cfg: ScenarioConfig) -> tuple[int, int]:
    """Panel shape of one RF chain's subarray (row-block split).

    The mmWave panel is split along its rows into ``n_rf`` equal blocks;
    chain r drives rows [r*rows_sub, (r+1)*rows_sub). With row-major
    element ordering each block is a contiguous index range, which is what
    the block-diagonal precoder structure requires.
    """
    rows, cols = cfg.bs_mmwave_panel
    if rows % cfg.n_rf != 0:
        raise ValueError(
            f"mmWave panel rows ({rows}) not divisible by n_rf={cfg.n_rf}: "
            "subarray partition is non-factorable")
    return rows // cfg.n_rf, cols


def _wrapped_dft_angles(count: int) -> np.ndarray:
    """Angles whose direction sines form the length-`count` DFT grid."""
    freqs = np.arange(count) / count
    freqs = (freqs + 0.5) % 1.0 - 0.5          # wrap to [-1/2, 1/2)
    return np.sort(np.arcsin(2.0 * freqs))


def build_codebook(cfg: ScenarioConfig) -> Codebook:
    """Construct the DFT beam codebook on the subarray panel.

    The elevation grid has one point per subarray row; the azimuth grid
    has codebook_size / rows points (a configuration error if that does
    not divide). Equal to the subarray column count this is the critically
    sampled, orthonormal case.
    """
    rows, cols = subarray_shape(cfg)
    if cfg.codebook_size % rows != 0:
        raise ValueError(
            f"codebook_size={cfg.codebook_size} not divisible by subarray "
            f"rows ({rows}); cannot form an elevation x azimuth grid")
    n_az = cfg.codebook_size // rows
    el_grid = _wrapped_dft_angles(rows)
    az_grid = _wrapped_dft_angles(n_az)
    words = np.empty((cfg.codebook_size, rows * cols), dtype=np.complex128)
    for p, el in enumerate(el_grid):
        for q, az in enumerate(az_grid):
            words[p * n_az + q] = steering_vector((rows, cols), az, el)
    return Codebook(codewords=words, azimuth_grid=az_grid,
                    elevation_grid=el_grid, subarray_shape=(rows, cols))


def export_codebook_csv(cb: Codebook, path: str) -> None:
    """Write the codebook as CSV: index, elevation_rad, azimuth_rad, then
    interleaved re/im entries."""
    n_az = len(cb.azimuth_grid)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["index", "elevation_rad", "azimuth_rad"]
        for i in range(cb.codewords.shape[1]):
            header += [f"re{i}", f"im{i}"]
        writer.writerow(header)
        for idx in range(len(cb)):
            el = cb.elevation_grid[idx // n_az]
            az = cb.azimuth_grid[idx % n_az]
            row = [idx, repr(float(el)), repr(float(az))]
            for entry in cb.codewords[idx]:
                row += [repr(float(entry.real)), repr(float(entry.imag))]
            writer.writerow(row)
