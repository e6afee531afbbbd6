import logging

import pytest
from pydantic import ValidationError

from quicksim import QuickApp, create_app
from quicksim.errors import ContainerFormatError, ProblemError
from quicksim.extensions.presets import PresetRegistry, get_preset_registry
from quicksim.settings import Settings


def test_create_app_registers_extensions(app: QuickApp):
    """The factory wires settings and presets into the app."""
    assert isinstance(app.settings, Settings)
    assert app.presets is get_preset_registry()
    assert app.settings.DEFAULT_GROUP_SIZE == 128
    assert logging.getLogger("quicksim").level == logging.WARNING


def test_presets_defaults(app: QuickApp):
    assert app.presets.get_hardware().name == "consumer"
    assert app.presets.get_smem_layout().row_stride_bytes == 128
    assert app.presets.get_smem_layout("padded").row_stride_bytes == 136
    assert set(app.presets.hardware) == {"consumer", "workstation", "datacenter"}


def test_unknown_preset(app: QuickApp):
    with pytest.raises(ProblemError, match="known: consumer, datacenter, workstation"):
        app.presets.get_hardware("mainframe")


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("QUICKSIM_DEFAULT_GROUP_SIZE", "32")
    monkeypatch.setenv("QUICKSIM_CONFLICT_METRIC", "wavefront")
    app = create_app(Settings(_env_file=None))
    assert app.settings.DEFAULT_GROUP_SIZE == 32
    assert app.settings.CONFLICT_METRIC == "wavefront"


def test_azure_tracing_needs_connection_string():
    with pytest.raises(ValueError):
        Settings(_env_file=None, OTEL_ENABLED=True, OTEL_PROVIDER="azure")


def test_invalid_preset_file(tmp_path):
    path = tmp_path / "presets.yaml"
    path.write_text("hardware:\n  tiny:\n    smem_per_sm: -1\n    regs_per_sm: 1\n    max_warps_per_sm: 1\n")
    with pytest.raises(ContainerFormatError):
        PresetRegistry().load(path)


def test_custom_preset_file(tmp_path):
    path = tmp_path / "presets.yaml"
    path.write_text(
        "hardware:\n  tiny:\n    smem_per_sm: 4096\n    regs_per_sm: 8192\n    max_warps_per_sm: 8\n"
        "default_hardware: tiny\n"
    )
    app = create_app(Settings(_env_file=None, PRESETS_PATH=path))
    assert app.presets.get_hardware().smem_per_sm == 4096
    with pytest.raises(ProblemError):
        app.presets.get_smem_layout()


def test_log_level_is_validated():
    assert Settings(_env_file=None, LOG_LEVEL="debug").LOG_LEVEL == "DEBUG"
    with pytest.raises(ValidationError):
        Settings(_env_file=None, LOG_LEVEL="loud")
