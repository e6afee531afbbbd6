"""
Command-line front end.

Exit codes: 0 success (or no-op warning), 1 verification failure,
2 usage error, 3 I/O or container format error.
"""

import argparse
import sys

from pydantic import ValidationError

from quicksim import create_app
from quicksim.commands import cmd_cost, cmd_quantize, cmd_simulate, cmd_transform, cmd_verify
from quicksim.errors import QuickError
from quicksim.logger import logger

EXIT_USAGE = 2
EXIT_IO = 3


def _quantize(app, args):
    return cmd_quantize(app, args.input, args.output, group_size=args.group_size, out=sys.stdout)


def _transform(app, args):
    return cmd_transform(app, args.input, args.to, args.output, load_vector_words=args.vector_words, out=sys.stdout)


def _verify(app, args):
    return cmd_verify(app, args.container, args.problem, seed=args.seed, smem_layout=args.layout, out=sys.stdout)


def _simulate(app, args):
    return cmd_simulate(
        app,
        args.container,
        args.problem,
        smem_layout=args.layout,
        seed=args.seed,
        metric=args.metric,
        csv_path=args.csv,
        out=sys.stdout,
    )


def _cost(app, args):
    return cmd_cost(
        app,
        args.problem,
        tiles=args.tiles,
        hardware=args.hw,
        variant=args.variant,
        stages=args.stages,
        warps=args.warps,
        regs=args.regs,
        group_size=args.group_size,
        tradeoff=args.tradeoff,
        batches=args.batch,
        csv_path=args.csv,
        out=sys.stdout,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quicksim",
        description="Offline interleaving of 4-bit quantized weights and a functional model of the kernels that use it.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    quantize = commands.add_parser("quantize", help="Quantize a dense K×N matrix into a natural-layout container.")
    quantize.add_argument("input", help="Matrix file: .npy, .txt, .csv, or .bin with a YAML sidecar.")
    quantize.add_argument("output", help="Container to write.")
    quantize.add_argument("--group-size", type=int, default=None, help="K-rows per (scale, zero) pair.")
    quantize.set_defaults(handler=_quantize)

    transform = commands.add_parser("transform", help="Interleave or de-interleave a container.")
    transform.add_argument("input", help="Container to read.")
    transform.add_argument("output", help="Container to write.")
    transform.add_argument("--to", required=True, choices=["quick", "natural"], help="Target layout.")
    transform.add_argument(
        "--vector-words", type=int, choices=[1, 2, 4], default=None, help="Words per lane load in the QUICK stream."
    )
    transform.set_defaults(handler=_transform)

    verify = commands.add_parser("verify", help="Check baseline and QUICK data paths for bit-exact agreement.")
    verify.add_argument("container")
    verify.add_argument("--problem", required=True, help="GEMM shape MxNxK.")
    verify.add_argument("--seed", type=int, default=None, help="Activation seed (default from settings).")
    verify.add_argument("--layout", default=None, help="Baseline shared-memory layout preset.")
    verify.set_defaults(handler=_verify)

    simulate = commands.add_parser("simulate", help="Report shared-memory bank conflicts of both pipelines.")
    simulate.add_argument("container")
    simulate.add_argument("--problem", required=True, help="GEMM shape MxNxK.")
    simulate.add_argument("--layout", default=None, help="Baseline shared-memory layout preset.")
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--metric", choices=["bank_sum", "wavefront"], default=None)
    simulate.add_argument("--csv", default=None, help="Also write the records as CSV.")
    simulate.set_defaults(handler=_simulate)

    cost = commands.add_parser("cost", help="Analytical shared-memory, occupancy and DRAM traffic report.")
    cost.add_argument("--problem", required=True, help="GEMM shape MxNxK.")
    cost.add_argument("--tiles", default="64x64x64", help="Block tile MxNxK.")
    cost.add_argument("--hw", default=None, help="Hardware preset.")
    cost.add_argument("--variant", choices=["baseline", "quick", "both"], default="both")
    cost.add_argument("--stages", type=int, default=1)
    cost.add_argument("--warps", type=int, default=4)
    cost.add_argument("--regs", type=int, default=128, help="Registers per thread (estimate).")
    cost.add_argument("--group-size", type=int, default=None)
    cost.add_argument("--tradeoff", action="store_true", help="Also evaluate QUICK at doubled block_tile_n.")
    cost.add_argument(
        "--batch", default=None, help="Comma-separated batch sizes to sweep in place of M, e.g. 1,16,64."
    )
    cost.add_argument("--csv", default=None, help="Also write the records as CSV.")
    cost.set_defaults(handler=_cost)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        app = create_app()
        return args.handler(app, args)
    except QuickError as e:
        logger.debug(f"{args.command} failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"error: invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
