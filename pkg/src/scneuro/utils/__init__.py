from scneuro.utils.schedule_factory import InputSchedule, MeasurementWindow, ScheduleFactory
from scneuro.utils.utils import parse_grid, validate_sweep

__all__ = [
    "InputSchedule",
    "MeasurementWindow",
    "ScheduleFactory",
    "parse_grid",
    "validate_sweep",
]
