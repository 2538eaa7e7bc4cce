import json

import pytest

from loguru import logger

from scneuro.config import (
    HardwareConfig,
    Mode,
    NetworkConfig,
    NeuronParams,
    Settings,
    SwitchTiming,
)
from scneuro.core import map_params_to_registers


@pytest.fixture
def neuron():
    return NeuronParams()


@pytest.fixture
def hardware():
    """Deterministic NCO switch timing, so runs can be compared bit for bit."""
    return HardwareConfig(switching=SwitchTiming.NCO)


@pytest.fixture
def registers(neuron, hardware):
    return map_params_to_registers(neuron, hardware)


@pytest.fixture
def small_net():
    """A closed-loop network small enough to simulate in a unit test."""
    return NetworkConfig(N=60, N_bg=30, p_rec=0.2, p_bg=0.4, f_bg=20.0, seed=7)


@pytest.fixture
def open_loop_net(small_net):
    return small_net.model_copy(update={"mode": Mode.OPEN_LOOP})


@pytest.fixture
def small_settings(small_net):
    return Settings(network=small_net)


@pytest.fixture
def config_file(tmp_path):
    """Write a JSON configuration for a small network and return its path."""
    path = tmp_path / "config.json"
    path.write_text(
        json.dumps(
            {
                "neuron": {"g_hat_rec": 4.0},
                "network": {"N": 40, "N_bg": 20, "p_rec": 0.25, "p_bg": 0.5, "seed": 3},
                "hardware": {"f_clk": 1_000_000.0},
            }
        ),
        encoding="utf-8",
    )
    return path


@pytest.fixture
def log_messages():
    """Capture loguru messages at WARNING and above."""
    messages = []
    handler = logger.add(lambda message: messages.append(str(message)), level="WARNING")
    yield messages
    logger.remove(handler)
