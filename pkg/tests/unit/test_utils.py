import numpy as np
import pytest

from scneuro.netsim import Topology
from scneuro.netsim.topology import BG
from scneuro.utils import InputSchedule, ScheduleFactory, parse_grid, validate_sweep


class FixedSchedule(ScheduleFactory):
    def __init__(self, n_ticks: int):
        self.n_ticks = n_ticks

    def _build_schedule(self, topology):
        sources = np.arange(topology.n_neurons, topology.n_sources)
        return InputSchedule(np.zeros(sources.size, np.int64), sources, self.n_ticks)


class TestParseGrid:
    """Test cases for parse_grid."""

    def test_inclusive_range(self):
        """Test both ends of the range are included."""
        assert parse_grid("0:180:60") == [0.0, 60.0, 120.0, 180.0]

    def test_float_step_keeps_stop(self):
        """Test a float step still reaches the stop value."""
        assert parse_grid("3:4.5:0.5") == [3.0, 3.5, 4.0, 4.5]
        assert parse_grid("0:0.3:0.1")[-1] == pytest.approx(0.3)

    def test_single_value(self):
        """Test a bare number is a one-point grid."""
        assert parse_grid("4") == [4.0]

    def test_step_not_dividing_range(self):
        """Test the grid stops at the last step below the stop value."""
        assert parse_grid("0:10:4") == [0.0, 4.0, 8.0]

    @pytest.mark.parametrize("spec", ["1:4:0", "1:4:-1", "4:1:1", "1:2", "x", "1:2:3:4"])
    def test_invalid(self, spec):
        """Test malformed ranges are rejected."""
        with pytest.raises(ValueError):
            parse_grid(spec)


class TestValidateSweep:
    """Test cases for validate_sweep."""

    def test_sorted_unique(self):
        """Test values come back sorted without duplicates."""
        assert validate_sweep({"g_sfa": [4, 1, 1], "g_rec": [3.0]}) == {
            "g_sfa": [1.0, 4.0],
            "g_rec": [3.0],
        }

    def test_unknown_axis(self):
        """Test only the sweepable parameters are accepted."""
        with pytest.raises(ValueError, match="tau_mem"):
            validate_sweep({"tau_mem": [8.0]})

    def test_empty_values(self):
        """Test an axis needs at least one value."""
        with pytest.raises(ValueError):
            validate_sweep({"g_rec": []})

    def test_negative_values(self):
        """Test conductances and rates cannot be negative."""
        with pytest.raises(ValueError, match="non-negative"):
            validate_sweep({"f_bg": [-1.0, 2.0]})

    def test_not_a_dict(self):
        """Test the sweep must be a mapping."""
        with pytest.raises(ValueError):
            validate_sweep([("g_rec", [1.0])])


class TestScheduleFactory:
    """Test cases for the schedule factory base."""

    def test_execute_builds_for_topology(self):
        """Test execute forwards constructor arguments and builds for the topology."""
        topo = Topology.from_edges([1, 2], [0, 0], [BG, BG], n_neurons=1, n_external=2)
        schedule = FixedSchedule.execute(topo, n_ticks=10)
        assert schedule.sources.tolist() == [1, 2]
        assert schedule.n_ticks == 10
        assert len(schedule) == 2
        assert schedule.windows == []

    def test_abstract(self):
        """Test the base factory cannot be instantiated."""
        with pytest.raises(TypeError):
            ScheduleFactory()
