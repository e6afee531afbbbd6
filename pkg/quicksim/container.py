"""
QWK1 weight container.

Byte layout (little-endian)::

    magic        4 bytes   b"QWK1"
    version      u32       1
    header_len   u64       length of the YAML header that follows
    header       YAML      rows_k, cols_n, group_size, layout, load_vector_words,
                           sections: {name: {offset, length}} (absolute offsets)
    sections     words (u32), scales (f16, group-major then column),
                 zeros (u8, same order), tile_crc (u32)

``tile_crc`` holds one CRC-32 per 16×8 weight tile (n-block major, then
K-tile) over the tile's natural-layout words. It does not depend on the
layout tag, so transforms copy it unchanged.
"""

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from quicksim.errors import ContainerFormatError, IntegrityError, QuickError
from quicksim.layout import deinterleave_quick
from quicksim.logger import logger, tracer
from quicksim.models.schedule import MMA_K, MMA_N, KernelSchedule
from quicksim.quantcore import Layout, PackedWeights, QuantParams

MAGIC = b"QWK1"
FORMAT_VERSION = 1
PREAMBLE = struct.Struct("<4sIQ")
SECTION_ALIGN = 8
TILE_ROWS = MMA_K
SECTIONS = ("words", "scales", "zeros", "tile_crc")
_DTYPES = {"words": "<u4", "scales": "<f2", "zeros": "u1", "tile_crc": "<u4"}


@dataclass(frozen=True)
class WeightContainer:
    packed: PackedWeights
    params: QuantParams
    tile_crc: np.ndarray
    load_vector_words: int = 1

    @classmethod
    def from_parts(cls, packed: PackedWeights, params: QuantParams, schedule: KernelSchedule | None = None):
        """Builds a container and seals every tile with its checksum."""
        schedule = schedule or KernelSchedule()
        return cls(packed, params, compute_tile_crc(packed, schedule), schedule.load_vector_words)

    @property
    def schedule(self) -> KernelSchedule:
        return KernelSchedule(load_vector_words=self.load_vector_words)

    @property
    def layout(self) -> Layout:
        return self.packed.layout

    def with_packed(self, packed: PackedWeights, schedule: KernelSchedule | None = None) -> "WeightContainer":
        """Same params and checksums, new word stream (a layout transform)."""
        vector = (schedule or self.schedule).load_vector_words
        return WeightContainer(packed, self.params, self.tile_crc, vector)


def natural_words(packed: PackedWeights, schedule: KernelSchedule) -> np.ndarray:
    if packed.layout == Layout.QUICK:
        packed = deinterleave_quick(packed, schedule)
    return packed.words


def compute_tile_crc(packed: PackedWeights, schedule: KernelSchedule | None = None) -> np.ndarray:
    schedule = schedule or KernelSchedule()
    rows_k, cols_n = packed.shape
    tiles = natural_words(packed, schedule).astype("<u4").reshape(cols_n // MMA_N, rows_k // TILE_ROWS, TILE_ROWS)
    return np.array([zlib.crc32(tile.tobytes()) for tile in tiles.reshape(-1, TILE_ROWS)], dtype=np.uint32)


def corrupted_tiles(container: WeightContainer) -> list[dict]:
    """Tiles whose words no longer match their checksum, in stream order."""
    actual = compute_tile_crc(container.packed, container.schedule)
    rows_k, _ = container.packed.shape
    k_tiles = rows_k // TILE_ROWS
    bad = np.flatnonzero(actual != container.tile_crc)
    return [
        {
            "stage": "tile_crc",
            "n_block": int(index // k_tiles),
            "k_tile": int(index % k_tiles),
            "k_rows": f"{(index % k_tiles) * TILE_ROWS}-{(index % k_tiles + 1) * TILE_ROWS - 1}",
            "cols": f"{(index // k_tiles) * MMA_N}-{(index // k_tiles + 1) * MMA_N - 1}",
        }
        for index in bad
    ]


def _header(container: WeightContainer, sections: dict) -> bytes:
    rows_k, cols_n = container.packed.shape
    header = {
        "rows_k": rows_k,
        "cols_n": cols_n,
        "group_size": container.params.group_size,
        "layout": container.layout.value,
        "load_vector_words": container.load_vector_words,
        "sections": sections,
    }
    return yaml.safe_dump(header, sort_keys=True).encode("utf-8")


def _pad(length: int) -> int:
    return -length % SECTION_ALIGN


def encode_container(container: WeightContainer) -> bytes:
    payloads = {
        "words": container.packed.words.astype("<u4").tobytes(),
        "scales": container.params.scales.astype("<f2").tobytes(),
        "zeros": container.params.zeros.astype("u1").tobytes(),
        "tile_crc": container.tile_crc.astype("<u4").tobytes(),
    }

    # Offsets live in the header, so iterate until the header length settles.
    header_len = 0
    while True:
        offset = PREAMBLE.size + header_len + _pad(header_len)
        sections = {}
        for name in SECTIONS:
            sections[name] = {"offset": offset, "length": len(payloads[name])}
            offset += len(payloads[name]) + _pad(len(payloads[name]))
        header = _header(container, sections)
        if len(header) == header_len:
            break
        header_len = len(header)

    out = bytearray(PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header)))
    out += header + b"\n" * _pad(len(header))
    for name in SECTIONS:
        out += payloads[name] + b"\0" * _pad(len(payloads[name]))
    return bytes(out)


def _expected_lengths(rows_k: int, cols_n: int, group_size: int) -> dict:
    cells = rows_k // group_size * cols_n
    return {
        "words": rows_k * cols_n // 2,
        "scales": 2 * cells,
        "zeros": cells,
        "tile_crc": 4 * (rows_k // TILE_ROWS) * (cols_n // MMA_N),
    }


def decode_container(data: bytes) -> WeightContainer:
    if len(data) < PREAMBLE.size:
        raise IntegrityError(f"container truncated: {len(data)} bytes, preamble needs {PREAMBLE.size}")
    magic, version, header_len = PREAMBLE.unpack_from(data)
    if magic != MAGIC:
        raise ContainerFormatError(f"not a QWK1 container (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise ContainerFormatError(f"unsupported QWK1 version {version}")
    if PREAMBLE.size + header_len > len(data):
        raise IntegrityError("container truncated inside the header")

    try:
        header = yaml.safe_load(data[PREAMBLE.size:PREAMBLE.size + header_len].decode("utf-8"))
        rows_k, cols_n = int(header["rows_k"]), int(header["cols_n"])
        group_size = int(header["group_size"])
        layout = Layout(header["layout"])
        vector = int(header.get("load_vector_words", 1))
        sections = header["sections"]
    except (yaml.YAMLError, UnicodeDecodeError, TypeError, KeyError, ValueError) as e:
        raise ContainerFormatError(f"malformed QWK1 header: {e}") from e
    if vector not in (1, 2, 4):
        raise ContainerFormatError(f"load_vector_words must be 1, 2 or 4, got {vector}")
    if group_size <= 0 or rows_k % TILE_ROWS or rows_k % group_size:
        raise ContainerFormatError(f"header shape {rows_k}x{cols_n} is inconsistent with group_size {group_size}")

    expected = _expected_lengths(rows_k, cols_n, group_size)
    arrays = {}
    end = PREAMBLE.size + header_len
    for name in SECTIONS:
        try:
            offset, length = int(sections[name]["offset"]), int(sections[name]["length"])
        except (TypeError, KeyError, ValueError) as e:
            raise ContainerFormatError(f"section table entry '{name}' is malformed") from e
        if offset < PREAMBLE.size + header_len:
            raise ContainerFormatError(f"section '{name}' overlaps the header")
        if offset + length > len(data):
            raise IntegrityError(f"container truncated inside section '{name}'")
        if length != expected[name]:
            raise IntegrityError(f"section '{name}' holds {length} bytes, shape requires {expected[name]}")
        arrays[name] = np.frombuffer(data, dtype=_DTYPES[name], count=length // np.dtype(_DTYPES[name]).itemsize, offset=offset)
        end = max(end, offset + length + _pad(length))
    if end != len(data):
        raise IntegrityError(f"container has {len(data) - end} unexpected trailing bytes")

    groups = rows_k // group_size
    try:
        packed = PackedWeights((rows_k, cols_n), layout, arrays["words"].astype(np.uint32))
        params = QuantParams(
            group_size,
            arrays["scales"].astype(np.float16).reshape(groups, cols_n),
            arrays["zeros"].astype(np.uint8).reshape(groups, cols_n),
        )
    except QuickError as e:
        raise ContainerFormatError(f"container payload is invalid: {e}") from e
    return WeightContainer(packed, params, arrays["tile_crc"].astype(np.uint32), vector)


def write_container(path, container: WeightContainer) -> None:
    with tracer.start_as_current_span("container.write"):
        data = encode_container(container)
        Path(path).write_bytes(data)
        logger.info(f"Wrote {len(data)} bytes ({container.layout.value}) to {path}")


def read_container(path) -> WeightContainer:
    with tracer.start_as_current_span("container.read"):
        data = Path(path).read_bytes()
        logger.debug(f"Read {len(data)} bytes from {path}")
        return decode_container(data)
