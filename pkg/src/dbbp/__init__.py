"""Dual-band beam prediction toolkit.

Synthesizes spatially and temporally consistent dual-band MIMO-OFDM
channels, computes codebook-constrained hybrid RF precoders by exhaustive
mutual-information search, and evaluates beam predictors through best-n
accuracy and reduced-search spectral efficiency.
"""

from .channel import (ClusterState, LocationSample, MmWaveChannel,
                      Sub6Snapshot, Trajectory, add_measurement_noise,
                      generate_trajectory, max_angle_drift, mmwave_channel_at,
                      sub6_channel_at)
from .codebook import (Codebook, build_codebook, export_codebook_csv,
                       steering_vector, subarray_shape)
from .config import ScenarioConfig, desk_config, table1_config
from .dataset import (ChannelSample, Dataset, DatasetFormatError,
                      DatasetHeader, generate_dataset, label_to_onehot,
                      read_dataset, read_scores, sample_seed, split_dataset,
                      write_dataset, write_scores)
from .evaluate import (AccuracyReport, AlignmentError, FilePredictor,
                       OraclePredictor, PersistencePredictor, Predictor,
                       RandomPredictor, ReportRow, best_n_accuracy,
                       best_n_indicator, header_to_config, make_predictor,
                       spectral_efficiency_report, write_report_csv)
from .precoding import (RfSelection, SearchResult, assemble_precoder,
                        candidate_set_search, exhaustive_search,
                        mutual_information_joint, mutual_information_rf,
                        received_signal, top_n_indices)

__version__ = "0.1.0"
