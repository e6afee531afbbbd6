import csv
import logging

import numpy as np
import pytest

from quicksim.cli import main
from quicksim.container import WeightContainer, read_container, write_container
from quicksim.quantcore import PackedWeights


def _records(text: str) -> list[dict]:
    return [dict(field.split("=", 1) for field in line.split()) for line in text.splitlines() if line]


def _run(capsys, *argv) -> tuple[int, list[dict], str]:
    code = main([str(arg) for arg in argv])
    captured = capsys.readouterr()
    return code, _records(captured.out), captured.err


@pytest.fixture
def natural_container(tmp_path, capsys):
    weights = np.random.default_rng(21).uniform(-1.0, 1.0, size=(64, 64))
    np.save(tmp_path / "w.npy", weights)
    code, _, _ = _run(capsys, "quantize", tmp_path / "w.npy", tmp_path / "w.qwk", "--group-size", 32)
    assert code == 0
    return tmp_path / "w.qwk"


@pytest.fixture
def quick_container(tmp_path, capsys, natural_container):
    code, _, _ = _run(capsys, "transform", natural_container, tmp_path / "q.qwk", "--to", "quick")
    assert code == 0
    return tmp_path / "q.qwk"


def test_quantize_reports_shape_and_error(tmp_path, capsys):
    np.save(tmp_path / "w.npy", np.random.default_rng(1).uniform(-1.0, 1.0, size=(128, 16)))
    code, records, _ = _run(capsys, "quantize", tmp_path / "w.npy", tmp_path / "w.qwk", "--group-size", 64)

    assert code == 0
    record = records[0]
    assert (record["rows_k"], record["cols_n"], record["group_size"]) == ("128", "16", "64")
    assert record["words"] == "256"
    assert record["scales"] == "2x16"
    assert 0.0 < float(record["max_abs_error"]) < 0.1


def test_quantize_constant_matrix_is_exact(tmp_path, capsys):
    (tmp_path / "w.txt").write_text("\n".join(" ".join(["0.875"] * 8) for _ in range(32)))
    code, records, _ = _run(capsys, "quantize", tmp_path / "w.txt", tmp_path / "w.qwk", "--group-size", 16)
    assert code == 0
    assert records[0]["max_abs_error"] == "0.0"


def test_quantize_rejects_k_not_multiple_of_16(tmp_path, capsys):
    np.save(tmp_path / "w.npy", np.zeros((40, 8)))
    code, _, err = _run(capsys, "quantize", tmp_path / "w.npy", tmp_path / "w.qwk")
    assert code == 2
    assert err.startswith("error:")
    assert not (tmp_path / "w.qwk").exists()


def test_quantize_missing_input_is_io_error(tmp_path, capsys):
    code, _, _ = _run(capsys, "quantize", tmp_path / "absent.npy", tmp_path / "w.qwk")
    assert code == 3


def test_transform_round_trip_is_byte_identical(tmp_path, capsys, natural_container, quick_container):
    code, records, _ = _run(capsys, "transform", quick_container, tmp_path / "back.qwk", "--to", "natural")

    assert code == 0
    assert records[0]["status"] == "written"
    assert (tmp_path / "back.qwk").read_bytes() == natural_container.read_bytes()
    assert quick_container.read_bytes() != natural_container.read_bytes()


def test_transform_to_same_layout_is_a_noop(tmp_path, capsys, caplog, natural_container):
    with caplog.at_level(logging.WARNING, logger="quicksim"):
        code, records, _ = _run(capsys, "transform", natural_container, tmp_path / "same.qwk", "--to", "natural")

    assert code == 0
    assert records[0]["status"] == "unchanged"
    assert (tmp_path / "same.qwk").read_bytes() == natural_container.read_bytes()
    assert any("already in natural layout" in r.getMessage() for r in caplog.records)


def test_transform_with_vector_loads(tmp_path, capsys, natural_container):
    code, records, _ = _run(
        capsys, "transform", natural_container, tmp_path / "v.qwk", "--to", "quick", "--vector-words", "2"
    )
    assert code == 0
    assert records[0]["load_vector_words"] == "2"
    assert read_container(tmp_path / "v.qwk").load_vector_words == 2


def test_transform_regroups_quick_vector_loads(tmp_path, capsys, quick_container):
    code, records, _ = _run(
        capsys, "transform", quick_container, tmp_path / "v2.qwk", "--to", "quick", "--vector-words", "2"
    )
    assert code == 0
    assert records[0]["status"] == "written"
    assert read_container(tmp_path / "v2.qwk").load_vector_words == 2

    code, records, _ = _run(capsys, "verify", tmp_path / "v2.qwk", "--problem", "16x64x64")
    assert (code, records[0]["status"]) == (0, "PASS")

    _run(capsys, "transform", tmp_path / "v2.qwk", tmp_path / "v1.qwk", "--to", "quick", "--vector-words", "1")
    assert (tmp_path / "v1.qwk").read_bytes() == quick_container.read_bytes()


def test_truncated_container_exits_3(tmp_path, capsys, natural_container):
    data = natural_container.read_bytes()
    (tmp_path / "cut.qwk").write_bytes(data[: len(data) // 2])
    code, _, err = _run(capsys, "transform", tmp_path / "cut.qwk", tmp_path / "out.qwk", "--to", "quick")
    assert code == 3
    assert "truncated" in err


def test_unknown_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["shuffle"])
    assert exc.value.code == 2


@pytest.mark.parametrize("layout", ["unpadded", "padded"])
def test_verify_passes(capsys, quick_container, layout):
    code, records, _ = _run(capsys, "verify", quick_container, "--problem", "32x64x64", "--layout", layout)
    assert code == 0
    assert records[0]["status"] == "PASS"
    assert records[0]["tiles"] == "32"


def test_verify_natural_container_and_is_deterministic(capsys, natural_container):
    first = _run(capsys, "verify", natural_container, "--problem", "16x64x64", "--seed", "9")
    second = _run(capsys, "verify", natural_container, "--problem", "16x64x64", "--seed", "9")
    assert first[0] == 0
    assert first[1] == second[1]


def test_verify_locates_corrupted_word(tmp_path, capsys, quick_container):
    container = read_container(quick_container)
    words = container.packed.words.copy()
    words[100] ^= 0x00F0_0000
    damaged = WeightContainer(
        PackedWeights(container.packed.shape, container.layout, words),
        container.params,
        container.tile_crc,
        container.load_vector_words,
    )
    write_container(tmp_path / "bad.qwk", damaged)

    code, records, _ = _run(capsys, "verify", tmp_path / "bad.qwk", "--problem", "16x64x64")
    assert code == 1
    assert records[0]["status"] == "FAIL"
    assert records[0]["stage"] == "tile_crc"
    assert {"n_block", "k_tile", "k_rows", "cols"} <= set(records[0])


@pytest.mark.parametrize("m", [1, 5])
def test_verify_accepts_small_batches(capsys, quick_container, m):
    code, records, _ = _run(capsys, "verify", quick_container, "--problem", f"{m}x64x64")
    assert code == 0
    assert records[0]["status"] == "PASS"
    assert records[0]["problem"] == f"{m}x64x64"


@pytest.mark.parametrize("problem", ["0x64x64", "16x64x32", "16x64", "16xAx64"])
def test_verify_rejects_bad_problem(capsys, natural_container, problem):
    code, _, _ = _run(capsys, "verify", natural_container, "--problem", problem)
    assert code == 2


def test_simulate_reports_conflicts(tmp_path, capsys, quick_container):
    code, records, _ = _run(capsys, "simulate", quick_container, "--problem", "16x64x64", "--csv", tmp_path / "s.csv")
    baseline, direct = records

    assert code == 0
    assert baseline["pipeline"] == "baseline"
    assert int(baseline["writeback_store_conflicts"]) > 0
    assert direct["pipeline"] == "quick"
    assert direct["writeback_store_conflicts"] == direct["ldmatrix_load_conflicts"] == "0"
    assert baseline["c_bit_identical"] == "true"

    with open(tmp_path / "s.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [row["pipeline"] for row in rows] == ["baseline", "quick"]
    assert rows[0]["writeback_store_conflicts"] == baseline["writeback_store_conflicts"]


def test_simulate_padding_lowers_conflicts(capsys, natural_container):
    _, unpadded, _ = _run(capsys, "simulate", natural_container, "--problem", "16x64x64")
    _, padded, _ = _run(capsys, "simulate", natural_container, "--problem", "16x64x64", "--layout", "padded")
    assert int(padded[0]["writeback_store_conflicts"]) < int(unpadded[0]["writeback_store_conflicts"])


def test_simulate_is_deterministic(capsys, natural_container):
    first = _run(capsys, "simulate", natural_container, "--problem", "16x64x64", "--metric", "wavefront")
    second = _run(capsys, "simulate", natural_container, "--problem", "16x64x64", "--metric", "wavefront")
    assert first[1] == second[1]
    assert first[1][0]["metric"] == "wavefront"


def test_simulate_unknown_layout_is_usage_error(capsys, natural_container):
    code, _, err = _run(capsys, "simulate", natural_container, "--problem", "16x64x64", "--layout", "skewed")
    assert code == 2
    assert "unknown shared-memory layout" in err


def test_cost_reports_both_variants(capsys):
    code, records, _ = _run(capsys, "cost", "--problem", "64x8192x8192", "--tiles", "64x64x64")
    header, baseline, quick = records

    assert code == 0
    assert header["hardware"] == "consumer"
    assert header["smem_per_sm"] == "102400"
    assert header["max_warps_per_sm"] == "48"
    assert (baseline["smem_bytes_per_block"], quick["smem_bytes_per_block"]) == ("16384", "8192")
    assert baseline["dram_weights"] == quick["dram_weights"] == "33554432"


def test_cost_infeasible_is_reported_not_failed(capsys):
    code, records, _ = _run(
        capsys, "cost", "--problem", "64x8192x8192", "--tiles", "128x128x128", "--stages", "4", "--variant", "baseline"
    )
    assert code == 0
    assert records[1]["theoretical_active_warps"] == "0"
    assert records[1]["limiter"] == "infeasible"
    assert records[1]["diagnostic"] != "-"


def test_cost_tradeoff(tmp_path, capsys):
    code, records, _ = _run(
        capsys, "cost", "--problem", "64x8192x8192", "--stages", "2", "--tradeoff", "--csv", tmp_path / "c.csv"
    )
    assert code == 0
    assert records[-2]["tiles"] == "64x128x64"
    assert records[-1] == {"tradeoff_holds": "true", "wide_tile": "64x128x64"}
    assert len((tmp_path / "c.csv").read_text().splitlines()) == 4


def test_cost_rejects_bad_tiles(capsys):
    code, _, err = _run(capsys, "cost", "--problem", "64x64x64", "--tiles", "64x12x64")
    assert code == 2
    assert "invalid configuration" in err


def test_cost_unknown_hardware(capsys):
    code, _, _ = _run(capsys, "cost", "--problem", "64x64x64", "--hw", "mainframe")
    assert code == 2


def test_cost_batch_sweep(tmp_path, capsys):
    code, records, _ = _run(
        capsys, "cost", "--problem", "1x8192x8192", "--batch", "1,8,16,64", "--csv", tmp_path / "sweep.csv"
    )
    header, *points, summary = records

    assert code == 0
    assert header["hardware"] == "consumer"
    assert [p["batch"] for p in points] == ["1", "8", "16", "64"]
    assert [p["activation_bound"] for p in points] == ["false", "false", "true", "true"]
    assert summary == {"crossover_batch": "16"}
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 5


@pytest.mark.parametrize("batches", ["0,4", "1,a", ","])
def test_cost_rejects_bad_batches(capsys, batches):
    code, _, _ = _run(capsys, "cost", "--problem", "1x64x64", "--batch", batches)
    assert code == 2


def test_unknown_log_level_is_usage_error(capsys, monkeypatch):
    monkeypatch.setenv("QUICKSIM_LOG_LEVEL", "LOUD")
    code, _, err = _run(capsys, "cost", "--problem", "64x64x64")
    assert code == 2
    assert "invalid configuration" in err
