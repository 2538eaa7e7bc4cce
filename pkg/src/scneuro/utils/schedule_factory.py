from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from scneuro.netsim.topology import Topology


@dataclass(frozen=True, eq=False)
class MeasurementWindow:
    """Ticks [start, stop) over which rates are measured at one input rate."""

    f_in: float
    start: int
    stop: int


@dataclass(frozen=True, eq=False)
class InputSchedule:
    ticks: np.ndarray
    sources: np.ndarray
    n_ticks: int
    windows: list[MeasurementWindow] = field(default_factory=list)

    def __len__(self) -> int:
        return self.ticks.size


class ScheduleFactory(ABC):
    """Base factory for the input spike schedules of an experiment.

    Subclasses decide which non-neuron sources of a topology fire, when and
    at what rate.
    """

    @abstractmethod
    def _build_schedule(self, topology: "Topology") -> InputSchedule:
        """Create the schedule for the given topology.

        This method must be implemented by subclasses.
        """
        pass

    @classmethod
    def execute(cls, topology: "Topology", *args, **kwargs) -> InputSchedule:
        """Factory method to create an instance and build its schedule.

        Args:
            topology: The routing table whose sources are driven
            *args: Additional positional arguments for the factory constructor
            **kwargs: Additional keyword arguments for the factory constructor

        Returns:
            The input schedule
        """
        factory = cls(*args, **kwargs)
        return factory._build_schedule(topology)
