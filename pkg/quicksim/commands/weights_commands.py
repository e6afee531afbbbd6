import sys
from pathlib import Path

from quicksim import util
from quicksim.container import WeightContainer, corrupted_tiles, read_container, write_container
from quicksim.errors import IntegrityError
from quicksim.layout import deinterleave_quick, interleave_quick
from quicksim.logger import logger, tracer
from quicksim.matrix_io import load_matrix
from quicksim.models import KernelSchedule
from quicksim.quantcore import Layout, WeightMatrix, pack_natural, quantization_error, quantize


def cmd_quantize(app, input_path, output_path, group_size=None, out=sys.stdout):
    """Quantize a dense matrix into a natural-layout container.

    :param input_path: matrix file (.npy, .txt, .csv or .bin with sidecar)
    :type input_path: str
    :param output_path: container to write
    :type output_path: str
    :param group_size: K-rows per (scale, zero) pair; settings default when None
    :type group_size: int

    :rtype: int
    """
    group_size = group_size or app.settings.DEFAULT_GROUP_SIZE
    with tracer.start_as_current_span("command.quantize"):
        weights = WeightMatrix(load_matrix(input_path))
        quantized = quantize(weights, group_size)
        container = WeightContainer.from_parts(pack_natural(quantized), quantized.params)
        write_container(output_path, container)
        max_error, mean_error = quantization_error(weights, quantized)

    record = {
        "command": "quantize",
        "input": input_path,
        "output": output_path,
        "rows_k": weights.rows_k,
        "cols_n": weights.cols_n,
        "group_size": group_size,
        "words": container.packed.words.size,
        "scales": "x".join(str(d) for d in container.params.scales.shape),
        "max_abs_error": max_error,
        "mean_abs_error": mean_error,
    }
    print(util.format_record(record), file=out)
    return 0


def cmd_transform(app, input_path, to, output_path, load_vector_words=None, out=sys.stdout):
    """Interleave or de-interleave a container's word stream.

    Requesting the layout the container already has is a no-op: the bytes
    are copied unchanged and a warning is logged. A QUICK container asked
    for a different load vector width is re-interleaved instead.

    :param to: target layout, ``quick`` or ``natural``
    :type to: str
    :param load_vector_words: words per lane load for the QUICK stream
    :type load_vector_words: int

    :rtype: int
    """
    target = Layout(to)
    data = Path(input_path).read_bytes()
    container = read_container(input_path)

    record = {"command": "transform", "input": input_path, "output": output_path, "from": container.layout.value}
    requested = KernelSchedule(load_vector_words=load_vector_words or container.load_vector_words)
    regroup = target == Layout.QUICK and requested.load_vector_words != container.load_vector_words
    if container.layout == target and not regroup:
        logger.warning(f"{input_path} is already in {target.value} layout; nothing to do")
        if Path(output_path) != Path(input_path):
            Path(output_path).write_bytes(data)
        print(util.format_record({**record, "to": target.value, "status": "unchanged"}), file=out)
        return 0

    bad = corrupted_tiles(container)
    if bad:
        raise IntegrityError(f"tile checksum mismatch at {util.format_record(bad[0])}")

    with tracer.start_as_current_span("command.transform"):
        if target == Layout.QUICK:
            natural = container.packed
            if container.layout == Layout.QUICK:
                logger.info(
                    f"Regrouping {input_path} from {container.load_vector_words} to {requested.load_vector_words} word loads"
                )
                natural = deinterleave_quick(natural, container.schedule)
            result = container.with_packed(interleave_quick(natural, requested), requested)
        else:
            # Natural streams carry the default schedule.
            result = container.with_packed(deinterleave_quick(container.packed, container.schedule), KernelSchedule())
        write_container(output_path, result)

    record.update(
        {
            "to": target.value,
            "status": "written",
            "words": result.packed.words.size,
            "load_vector_words": result.load_vector_words,
        }
    )
    print(util.format_record(record), file=out)
    return 0
