import math

import pytest

from scneuro.config import HardwareConfig, NeuronParams
from scneuro.core import (
    SpikeEvent,
    effective_tau,
    map_params_to_registers,
    synapse_channels,
    tau_register,
)
from scneuro.exceptions import UnrepresentableParameterError


class TestSpikeEvent:
    """Test cases for SpikeEvent."""

    def test_default_weight(self):
        """Test events default to the full STP weight."""
        assert SpikeEvent(10, 3).weight == 63

    def test_orders_by_time_then_source(self):
        """Test events sort by time, then source."""
        events = [SpikeEvent(5, 2), SpikeEvent(1, 9), SpikeEvent(5, 1)]
        assert sorted(events) == [SpikeEvent(1, 9), SpikeEvent(5, 1), SpikeEvent(5, 2)]

    @pytest.mark.parametrize("fields", [(-1, 0, 63), (0, -1, 63), (0, 0, -1), (0, 0, 64)])
    def test_rejects_out_of_range_fields(self, fields):
        """Test negative fields and weights beyond six bits are refused."""
        with pytest.raises(ValueError):
            SpikeEvent(*fields)


class TestTauRegister:
    """Test cases for the TAU_SYN counter mapping."""

    def test_synaptic_time_constant(self, hardware):
        """Test an 8 ms decay at 1 MHz maps to TAU_SYN = 125."""
        assert tau_register(8.0, hardware) == 125

    def test_adaptation_time_constant(self, hardware):
        """Test the 330 ms adaptation decay."""
        assert tau_register(330.0, hardware) == 5196

    def test_effective_tau_round_trip(self, hardware):
        """Test the realized time constant is within one update period of the target."""
        assert effective_tau(tau_register(8.0, hardware), hardware) == pytest.approx(8.0, abs=0.07)

    def test_update_factor(self):
        """Test -ln(1 - 2^-6) used by the mapping."""
        assert -math.log1p(-(2.0**-6)) == pytest.approx(0.015748, abs=1e-6)

    def test_rejects_counter_overflow(self, hardware):
        """Test time constants beyond the counter width are unrepresentable."""
        with pytest.raises(UnrepresentableParameterError):
            tau_register(10_000.0, hardware)

    def test_slower_clock_gives_smaller_counter(self):
        """Test the counter scales with the clock frequency."""
        slow = HardwareConfig(f_clk=250_000.0)
        assert tau_register(8.0, slow) == round(250_000 * 8e-3 * 0.0157484) - 1


class TestSynapseChannels:
    """Test cases for the multi-synapse layout."""

    def test_shared_excitatory_channel(self, neuron, hardware):
        """Test rec and bg share one circuit when tau and E agree."""
        channels = synapse_channels(neuron, hardware)
        assert [ch.kinds for ch in channels] == [("rec", "bg"), ("sfa",)]
        assert channels[0].tau_reg == 125

    def test_separate_channels(self, hardware):
        """Test differing time constants split rec and bg."""
        channels = synapse_channels(NeuronParams(tau_syn_bg=5.0), hardware)
        assert [ch.name for ch in channels] == ["rec", "bg", "sfa"]


class TestMapParamsToRegisters:
    """Test cases for map_params_to_registers."""

    def test_leak_switching(self, registers):
        """Test f_mem = 1 / (alpha * tau_mem) and its clock period."""
        assert registers.f_mem == pytest.approx(2500.0)
        assert registers.leak_period == 400

    def test_synapse_capacitor_and_switching(self, registers):
        """Test C_syn = alpha * C_mem and g = C_syn * f."""
        assert registers.C_syn == pytest.approx(0.05)
        assert registers.switch_frequency(5.0) == pytest.approx(100.0)

    def test_register_resolution(self, registers):
        """Test the conductance of one GSYN_REG unit."""
        assert registers.delta_gsyn == 4
        assert registers.g_unit == pytest.approx(0.05 * 1e6 / (4 * 2**20))

    def test_weights(self, registers):
        """Test conductance amplitudes map to the nearest register weight."""
        assert registers.weights["rec"] == 336
        assert registers.weights["bg"] == 419
        assert registers.weights["sfa"] == 0

    def test_weight_realizes_conductance(self, registers):
        """Test the rounded weight reproduces the amplitude to within one unit."""
        assert registers.conductance(registers.weights["rec"]) == pytest.approx(
            4.0, abs=registers.g_unit
        )

    def test_switch_frequency_consistency(self, registers):
        """Test register and conductance views of the switching rate agree."""
        gsyn = 1024
        assert registers.register_frequency(gsyn) == pytest.approx(
            registers.switch_frequency(registers.conductance(gsyn))
        )

    def test_increment_with_stp_weight(self, registers):
        """Test STP weights scale the increment by w / 63, rounding down."""
        assert registers.increment("rec") == 336
        assert registers.increment("rec", 63) == 336
        assert registers.increment("rec", 31) == 336 * 31 // 63

    def test_kind_channel_lookup(self, registers):
        """Test every synapse kind maps to its circuit."""
        assert dict(registers.kind_channel) == {"rec": 0, "bg": 0, "sfa": 1}

    def test_rejects_unrepresentable_weight(self, hardware):
        """Test amplitudes beyond the weight width are refused."""
        with pytest.raises(UnrepresentableParameterError, match="exceeds"):
            map_params_to_registers(NeuronParams(g_hat_rec=100.0), hardware)

    def test_unrepresentable_is_value_error(self, hardware):
        """Test the error is also a ValueError."""
        with pytest.raises(ValueError):
            map_params_to_registers(NeuronParams(g_hat_rec=100.0), hardware)

    def test_warns_on_zero_weight(self, hardware, log_messages):
        """Test a conductance that rounds to zero logs a warning."""
        map_params_to_registers(NeuronParams(g_sfa=0.001), hardware)
        assert any("rounds to a zero register weight" in message for message in log_messages)

    def test_is_pure(self, neuron, hardware):
        """Test repeated mappings give equal settings."""
        assert map_params_to_registers(neuron, hardware) == map_params_to_registers(
            neuron, hardware
        )
