import csv

import numpy as np

from quicksim.errors import ProblemError


def ceil_div(a: int, b: int) -> int:
    """Integer ceiling division for non-negative operands."""
    return -(-a // b)


def to_half(values) -> np.ndarray:
    """Rounds to IEEE half precision (round-to-nearest-even)."""
    return np.asarray(values).astype(np.float16)


def parse_dims(text: str, count: int = 3) -> tuple[int, ...]:
    """Parses an ``AxBxC`` dimension string.

    :param text: e.g. ``"64x8192x8192"``.
    :param count: number of dimensions expected.
    :return: tuple of non-negative ints.
    """
    parts = text.lower().replace("×", "x").split("x")
    if len(parts) != count:
        raise ProblemError(f"expected {count} dimensions like {'x'.join(['N'] * count)}, got '{text}'")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise ProblemError(f"dimensions must be integers, got '{text}'") from None
    if any(d < 0 for d in dims):
        raise ProblemError(f"dimensions must be non-negative, got '{text}'")
    return dims


def parse_batches(text: str) -> list[int]:
    """Parses a comma-separated list of batch sizes such as ``1,16,64``."""
    try:
        batches = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ProblemError(f"batch sizes must be integers, got '{text}'") from None
    if not batches or min(batches) <= 0:
        raise ProblemError(f"batch sizes must be positive integers, got '{text}'")
    return batches


def format_record(fields: dict) -> str:
    """Renders one line-oriented ``key=value`` record with stable field order."""
    return " ".join(f"{key}={_format_value(value)}" for key, value in fields.items())


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return "-"
    return str(value).replace(" ", "_")


def write_csv(path, records: list[dict]) -> None:
    """Writes records sharing one field order as CSV (header from the first record)."""
    if not records:
        return
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(records[0]), extrasaction="ignore")
        writer.writeheader()
        for record in records:
            writer.writerow({key: _format_value(value) for key, value in record.items()})
