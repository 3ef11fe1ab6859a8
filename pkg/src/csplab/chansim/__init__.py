"""Synthetic multipath MISO-OFDM channels, pilot observation and MCSP datasets."""
from csplab.chansim.channel import (SPEED_OF_LIGHT, ArrayGeometry, OfdmNumerology, PathSet,
                                    max_doppler, sample_paths, synth_channel, upa_steering)
from csplab.chansim.dataset import (Dataset, DatasetConfig, FormatError, Sample, UserRealisation,
                                    generate_dataset, read_mcsp, synthesize_user, write_mcsp)
from csplab.chansim.observe import DmrsPattern, apply_dmrs_observation, interpolate_pilots

__all__ = [
    "SPEED_OF_LIGHT", "ArrayGeometry", "Dataset", "DatasetConfig", "DmrsPattern", "FormatError",
    "OfdmNumerology", "PathSet", "Sample", "UserRealisation", "apply_dmrs_observation",
    "generate_dataset", "interpolate_pilots", "max_doppler", "read_mcsp", "sample_paths",
    "synth_channel", "synthesize_user", "upa_steering", "write_mcsp",
]
