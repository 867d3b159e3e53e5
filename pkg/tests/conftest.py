"""Shared fixtures and independent oracles for the test suite.

The naive search oracle deliberately avoids every optimization of the
library path: it assembles each precoder and evaluates the objective
directly, enumerating candidates with itertools in lexicographic order.
"""

import itertools

import numpy as np
import pytest

from dbbp.config import ScenarioConfig
from dbbp.precoding import (RfSelection, assemble_precoder,
                            mutual_information_rf)


def naive_exhaustive(h, cb, cfg, rho):
    """Double-loop argmax over all selections; first (lex-smallest) wins ties."""
    best_mi, best_sel = None, None
    for digits in itertools.product(range(len(cb)), repeat=2 * cfg.n_rf):
        sel = RfSelection(plus45_indices=digits[:cfg.n_rf],
                          minus45_indices=digits[cfg.n_rf:])
        mi = mutual_information_rf(h, assemble_precoder(sel, cb, cfg), rho)
        if best_mi is None or mi > best_mi:
            best_mi, best_sel = mi, sel
    return best_sel, best_mi


def random_channel(rng, kbar, n_rx2, n_tx2):
    return (rng.standard_normal((kbar, n_rx2, n_tx2))
            + 1j * rng.standard_normal((kbar, n_rx2, n_tx2))) / np.sqrt(2)


def search_config(codebook_size, n_rf, panel):
    """Minimal consistent config for search tests on synthetic channels."""
    return ScenarioConfig(
        k=2, kbar=2, bs_sub6_panel=(1, 1), bs_mmwave_panel=panel,
        ue_mmwave_panel=(1, 1), n_rf=n_rf, codebook_size=codebook_size,
        t=1, cluster_count=1, n_s=1, seed=0)


@pytest.fixture(scope="session")
def desk_cfg():
    from dbbp.config import desk_config
    return desk_config(seed=11)
