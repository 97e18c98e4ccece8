"""Bit-flip attack case study on a small quantized classifier."""

from .attack import (TrajectoryPoint, attack_loop, trajectory_csv,
                     write_defense_config, write_sharp_profile)
from .data import make_dataset, train_float_mlp
from .placement import PlacementFile
from .quantize import QuantizedModel, quantize_layer
from .ranking import BitTarget, bit_deltas, rank_bits

__version__ = "0.1.0"

__all__ = [
    "TrajectoryPoint", "attack_loop", "trajectory_csv",
    "write_defense_config", "write_sharp_profile",
    "make_dataset", "train_float_mlp",
    "PlacementFile",
    "QuantizedModel", "quantize_layer",
    "BitTarget", "bit_deltas", "rank_bits",
]
