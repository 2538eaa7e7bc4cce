from scneuro.config import (
    HardwareConfig,
    MeanFieldOptions,
    Mode,
    NetworkConfig,
    NeuronParams,
    Settings,
    load_settings,
)
from scneuro.core import RegisterSettings, SpikeEvent, map_params_to_registers
from scneuro.exceptions import ScneuroError

__all__ = [
    "HardwareConfig",
    "MeanFieldOptions",
    "Mode",
    "NetworkConfig",
    "NeuronParams",
    "RegisterSettings",
    "ScneuroError",
    "Settings",
    "SpikeEvent",
    "load_settings",
    "map_params_to_registers",
]
