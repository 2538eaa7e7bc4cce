import numpy as np

from scneuro.constants import SWEEP_AXES


def parse_grid(spec: str) -> list[float]:
    """
    Parses an inclusive "start:stop:step" range.

    Args:
        spec (str): Range such as "0:180:20", or a single value such as "4"

    Returns:
        list[float]: Grid values from start to stop, both included

    Raises:
        ValueError: If the range is malformed

    Example:
        >>> parse_grid("0:180:60")
        [0.0, 60.0, 120.0, 180.0]

        >>> parse_grid("1:4:0")
        ValueError: Grid step must be positive: 1:4:0
    """
    parts = spec.split(":")
    try:
        values = [float(part) for part in parts]
    except ValueError:
        raise ValueError(f"Invalid grid: {spec}") from None

    if len(values) == 1:
        return values
    if len(values) != 3:
        raise ValueError(f"Grid must be 'start:stop:step', got {spec}")

    start, stop, step = values
    if step <= 0:
        raise ValueError(f"Grid step must be positive: {spec}")
    if stop < start:
        raise ValueError(f"Grid stop lies below its start: {spec}")

    # Tolerance keeps the stop value despite float steps like 0.1.
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def validate_sweep(sweep: dict) -> dict:
    """
    Validates and deduplicates a parameter sweep.

    Args:
        sweep (dict): Dictionary with configuration {axis: [values]}

    Returns:
        dict: Validated sweep with sorted, unique, non-negative values

    Raises:
        ValueError: If the sweep is invalid

    Example:
        >>> validate_sweep({"g_sfa": [4, 1, 1], "g_rec": [3.0]})
        {"g_sfa": [1.0, 4.0], "g_rec": [3.0]}

        >>> validate_sweep({"tau_mem": [8]})
        ValueError: Invalid sweep axis: tau_mem
    """

    if not isinstance(sweep, dict):
        raise ValueError("Sweep must be a dictionary")

    result = {}

    for axis, values in sweep.items():
        if axis not in SWEEP_AXES:
            raise ValueError(f"Invalid sweep axis: {axis}")

        if not isinstance(values, list) or not values:
            raise ValueError(f"Values for axis {axis} must be a non-empty list")

        unique = sorted({float(value) for value in values})
        if unique[0] < 0:
            raise ValueError(f"Sweep values for {axis} must be non-negative")

        result[axis] = unique

    return result
