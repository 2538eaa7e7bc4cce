import numpy as np
import pytest

from scneuro.config import HardwareConfig, NeuronParams, SwitchTiming
from scneuro.core import map_params_to_registers
from scneuro.engine import (
    MembraneState,
    NeuronPopulation,
    NeuronState,
    apply_switch,
    neuron_tick,
    relax,
    tick_segments,
)


class TestMembrane:
    """Test cases for the charge-equalization membrane update."""

    def test_single_switch(self):
        """Test v' = v + alpha (E - v)."""
        assert apply_switch(MembraneState(v=-65.0), 0.0, 0.05).v == pytest.approx(-61.75)

    def test_reversal_is_fixed_point(self):
        """Test a membrane at the reversal potential does not move."""
        assert apply_switch(MembraneState(v=-80.0), -80.0, 0.05).v == -80.0

    def test_relax_matches_repeated_switches(self):
        """Test k switches at once equal k single switches."""
        state = MembraneState(v=-70.0)
        for _ in range(7):
            state = apply_switch(state, 0.0, 0.05)
        assert relax(np.array([-70.0]), 0.0, 0.05, 7)[0] == pytest.approx(state.v)

    def test_relax_zero_switches(self):
        """Test zero switches leave the voltage unchanged."""
        v = np.array([-60.0, -55.0])
        np.testing.assert_array_equal(relax(v, 0.0, 0.05, np.array([0, 0])), v)


class TestTickSegments:
    """Test cases for splitting a tick at decay instants."""

    def test_no_decay_in_tick(self):
        """Test a tick without a decay instant is one segment."""
        assert tick_segments(0, 100, 126, 4) == [(25, False)]

    def test_decay_inside_tick(self):
        """Test the split at cycle 125 of the tick starting at cycle 100."""
        assert tick_segments(100, 100, 126, 4) == [(6, True), (19, False)]

    @pytest.mark.parametrize("c0", [0, 37, 100, 5000, 123_456])
    def test_update_count_preserved(self, c0):
        """Test the segments hold every NCO update of the tick."""
        segments = tick_segments(c0, 100, 30, 4)
        assert sum(n for n, _ in segments) == (c0 + 100) // 4 - c0 // 4
        assert sum(decays for _, decays in segments) == (c0 + 100) // 30 - c0 // 30


def drive(t: int, index: int) -> int:
    """Deterministic input weight for neuron ``index`` at tick ``t``."""
    return 300 * (index + 1) if (t // 40 + index) % 3 else 0


def run_scalar(neuron, registers, ticks, size):
    states = [NeuronState.initial(neuron, registers, source=i) for i in range(size)]
    history = []
    for t in range(ticks):
        spikes = []
        for i in range(size):
            weight = drive(t, i)
            inputs = ((0, weight),) if weight else ()
            states[i], events = neuron_tick(states[i], t, neuron, registers, inputs)
            spikes.extend(event.source for event in events)
        history.append(
            (
                spikes,
                [[s.gsyn_reg for s in state.synapses] for state in states],
                [[s.phase_reg for s in state.synapses] for state in states],
                [state.membrane.v for state in states],
            )
        )
    return history


def run_population(neuron, registers, ticks, size, workers=1):
    population = NeuronPopulation(size, neuron, registers, workers=workers)
    history = []
    try:
        for t in range(ticks):
            weights = np.array([drive(t, i) for i in range(size)])
            population.deliver(0, np.arange(size), weights)
            ids, _ = population.tick()
            history.append(
                (
                    ids.tolist(),
                    population.gsyn.T.tolist(),
                    population.phase.T.tolist(),
                    population.v.tolist(),
                )
            )
    finally:
        population.close()
    return history


class TestNeuronTick:
    """Test cases for the scalar per-cycle neuron."""

    def test_rest_without_input(self, neuron, registers):
        """Test a neuron without input stays at rest and never fires."""
        state = NeuronState.initial(neuron, registers)
        for t in range(500):
            state, events = neuron_tick(state, t, neuron, registers)
            assert not events
        assert state.membrane.v == pytest.approx(neuron.v_rest)

    def test_refractory_bounds_rate(self, neuron, registers):
        """Test a saturated input keeps inter-spike intervals at or above T_refrac."""
        state = NeuronState.initial(neuron, registers)
        times = []
        for t in range(300):
            state, events = neuron_tick(state, t, neuron, registers, ((0, 4000),))
            times.extend(event.time for event in events)
        assert len(times) > 5
        assert np.diff(times).min() >= 25

    def test_spike_resets_and_adapts(self):
        """Test a spike resets the membrane and steps the SFA register."""
        neuron = NeuronParams(g_sfa=2.0)
        regs = map_params_to_registers(neuron, HardwareConfig(switching=SwitchTiming.NCO))
        state = NeuronState.initial(neuron, regs)
        for t in range(200):
            state, events = neuron_tick(state, t, neuron, regs, ((0, 4000),))
            if events:
                break
        assert events[0].weight == 63
        assert state.membrane.v == neuron.v_reset
        assert state.membrane.refrac_until == events[0].time + 25
        sfa = regs.kind_channel["sfa"]
        assert state.synapses[sfa].gsyn_reg == regs.increment("sfa")


class TestNeuronPopulation:
    """Test cases for the vectorized population engine."""

    def test_matches_scalar_engine(self, neuron, registers):
        """Test registers and spike times agree bit for bit with the scalar engine."""
        ticks, size = 240, 3
        scalar = run_scalar(neuron, registers, ticks, size)
        vector = run_population(neuron, registers, ticks, size)
        fired = 0
        for (s_ids, s_gsyn, s_phase, s_v), (p_ids, p_gsyn, p_phase, p_v) in zip(
            scalar, vector, strict=True
        ):
            assert s_ids == p_ids
            assert s_gsyn == p_gsyn
            assert s_phase == p_phase
            np.testing.assert_allclose(s_v, p_v, rtol=0, atol=1e-9)
            fired += len(s_ids)
        assert fired > 0

    def test_matches_scalar_with_adaptation(self):
        """Test the equivalence holds with an active SFA channel."""
        neuron = NeuronParams(g_sfa=3.0)
        registers = map_params_to_registers(neuron, HardwareConfig(switching=SwitchTiming.NCO))
        scalar = run_scalar(neuron, registers, 200, 2)
        vector = run_population(neuron, registers, 200, 2)
        assert [step[0] for step in scalar] == [step[0] for step in vector]
        assert [step[1] for step in scalar] == [step[1] for step in vector]

    def test_worker_count_does_not_change_results(self, neuron, registers):
        """Test 1 and 4 workers give identical state."""
        single = run_population(neuron, registers, 150, 10, workers=1)
        parallel = run_population(neuron, registers, 150, 10, workers=4)
        assert single == parallel

    def test_rejects_empty_population(self, neuron, registers):
        """Test a population needs at least one neuron."""
        with pytest.raises(ValueError):
            NeuronPopulation(0, neuron, registers)

    def test_conductances(self, neuron, registers):
        """Test conductances are GSYN_REG times the register resolution."""
        population = NeuronPopulation(2, neuron, registers)
        population.deliver(0, np.array([1]), 336)
        population.tick()
        g = population.conductances()
        assert g[0, 0] == 0.0
        assert g[0, 1] == pytest.approx(4.0, rel=0.01)

    def test_static_stp_weights(self, neuron, registers):
        """Test every emitted spike carries weight 63 in static mode."""
        population = NeuronPopulation(4, neuron, registers)
        weights = []
        for _ in range(100):
            population.deliver(0, np.arange(4), 4000)
            _, w = population.tick()
            weights.extend(w.tolist())
        assert weights
        assert set(weights) == {63}


def run_steady_drive(registers, neuron, ticks, size=50, seed=0):
    """Every neuron gets weight 100 every 10 ticks; returns the population and mean v."""
    population = NeuronPopulation(size, neuron, registers, seed=seed)
    trace = []
    for t in range(ticks):
        if t % 10 == 0:
            population.deliver(0, np.arange(size), 100)
        population.tick()
        if t >= ticks // 2:
            trace.append(population.v.mean())
    return population, float(np.mean(trace))


class TestPoissonSwitching:
    """Test cases for Poisson switch timing."""

    @pytest.fixture
    def poisson_registers(self, neuron):
        return map_params_to_registers(neuron, HardwareConfig(switching=SwitchTiming.POISSON))

    def test_registers_match_nco_timing(self, neuron, registers, poisson_registers):
        """Test switch timing leaves the GSYN and phase registers untouched."""
        nco, _ = run_steady_drive(registers, neuron, 600)
        poisson, _ = run_steady_drive(poisson_registers, neuron, 600)
        np.testing.assert_array_equal(nco.gsyn, poisson.gsyn)
        np.testing.assert_array_equal(nco.phase, poisson.phase)

    def test_mean_voltage_matches_nco_timing(self, neuron, registers, poisson_registers):
        """Test random switch instants keep the mean membrane voltage."""
        _, nco_mean = run_steady_drive(registers, neuron, 6000)
        _, poisson_mean = run_steady_drive(poisson_registers, neuron, 6000)
        assert nco_mean == pytest.approx(poisson_mean, abs=0.3)

    def test_neurons_decorrelate(self, neuron, poisson_registers):
        """Test identically driven neurons no longer share one trajectory."""
        population, _ = run_steady_drive(poisson_registers, neuron, 1000)
        assert np.unique(population.v).size > 1

    def test_seed_fixes_the_draws(self, neuron, poisson_registers):
        """Test one seed reproduces the voltages and another changes them."""
        first, _ = run_steady_drive(poisson_registers, neuron, 300, seed=4)
        again, _ = run_steady_drive(poisson_registers, neuron, 300, seed=4)
        other, _ = run_steady_drive(poisson_registers, neuron, 300, seed=5)
        np.testing.assert_array_equal(first.v, again.v)
        assert not np.array_equal(first.v, other.v)

    def test_worker_count_does_not_change_results(self, neuron, poisson_registers):
        """Test the draws do not depend on how neurons are chunked over workers."""
        single = run_population(neuron, poisson_registers, 150, 10, workers=1)
        parallel = run_population(neuron, poisson_registers, 150, 10, workers=4)
        assert single == parallel

    def test_silent_neuron_stays_at_rest(self, neuron, poisson_registers):
        """Test leak switches alone keep the membrane at v_rest."""
        population = NeuronPopulation(5, neuron, poisson_registers)
        for _ in range(500):
            ids, _ = population.tick()
            assert ids.size == 0
        np.testing.assert_allclose(population.v, neuron.v_rest)
