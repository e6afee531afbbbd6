"""
Dense matrix input for ``quantize``.

Supported forms:
  * ``.npy``
  * ``.txt`` / ``.csv``: one row per line, whitespace or comma separated
  * ``.bin``: raw little-endian float32, row-major, with a YAML sidecar
    ``<file>.bin.yaml`` (or ``<file>.yaml``) giving ``rows_k`` and ``cols_n``
"""

from pathlib import Path

import numpy as np
import yaml

from quicksim.errors import ContainerFormatError, ShapeError
from quicksim.logger import logger


def _sidecar(path: Path) -> Path:
    for candidate in (path.with_name(path.name + ".yaml"), path.with_suffix(".yaml")):
        if candidate.exists():
            return candidate
    raise ContainerFormatError(f"raw matrix {path} needs a sidecar {path.name}.yaml with rows_k and cols_n")


def _load_raw(path: Path) -> np.ndarray:
    with open(_sidecar(path), "r") as f:
        shape: dict = yaml.safe_load(f) or {}
    try:
        rows, cols = int(shape["rows_k"]), int(shape["cols_n"])
    except (TypeError, KeyError, ValueError) as e:
        raise ContainerFormatError(f"sidecar for {path} must define integer rows_k and cols_n") from e
    values = np.fromfile(path, dtype="<f4")
    if values.size != rows * cols:
        raise ShapeError(f"{path} holds {values.size} floats, sidecar declares {rows}x{cols}")
    return values.reshape(rows, cols)


def _load_text(path: Path) -> np.ndarray:
    with open(path, "r") as f:
        text = f.read().replace(",", " ")
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    try:
        return np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    except ValueError as e:
        raise ContainerFormatError(f"{path} is not a numeric matrix: {e}") from e


def load_matrix(path) -> np.ndarray:
    """Reads a dense 2-D matrix; the format follows the file suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".npy":
        try:
            matrix = np.load(path, allow_pickle=False)
        except ValueError as e:
            raise ContainerFormatError(f"{path} is not a readable .npy matrix: {e}") from e
    elif suffix == ".bin":
        matrix = _load_raw(path)
    elif suffix in (".txt", ".csv"):
        matrix = _load_text(path)
    else:
        raise ContainerFormatError(f"unsupported matrix format '{suffix}' (use .npy, .txt, .csv or .bin)")

    if matrix.ndim != 2:
        raise ShapeError(f"{path} must hold a 2-D matrix, got shape {matrix.shape}")
    logger.info(f"Loaded {matrix.shape[0]}x{matrix.shape[1]} matrix from {path}")
    return matrix


def save_raw(path, matrix) -> None:
    """Writes ``matrix`` as raw float32 plus its YAML sidecar."""
    path = Path(path)
    matrix = np.asarray(matrix, dtype="<f4")
    matrix.tofile(path)
    with open(path.with_name(path.name + ".yaml"), "w") as f:
        yaml.safe_dump({"rows_k": matrix.shape[0], "cols_n": matrix.shape[1]}, f, sort_keys=True)
