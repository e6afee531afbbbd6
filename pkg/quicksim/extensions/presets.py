"""
Preset registry extension.

Loads named hardware profiles and baseline shared-memory layouts from a YAML
file and exposes them to commands through ``app.extensions["presets"]``.
"""

from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import ValidationError

from quicksim.errors import ContainerFormatError, ProblemError
from quicksim.logger import logger
from quicksim.models import BaselineSmemLayout, HardwareProfile


class PresetRegistry:
    """
    Named hardware profiles and shared-memory layouts.
    """

    def __init__(self, app=None):
        self.config: Optional[Dict[str, Any]] = None
        self.hardware: Dict[str, HardwareProfile] = {}
        self.smem_layouts: Dict[str, BaselineSmemLayout] = {}
        if app is not None:
            self.init_app(app)

    def init_app(self, app) -> None:
        """
        Load the presets file named by the app settings and register the registry.

        Args:
            app: QuickApp instance
        """
        settings = app.extensions["settings"]
        try:
            self.load(Path(settings.PRESETS_PATH))
        except Exception as e:
            logger.error(f"Failed to load presets: {e}")
            raise

        app.extensions["presets"] = self
        logger.info(
            f"Loaded {len(self.hardware)} hardware profiles and {len(self.smem_layouts)} shared-memory layouts"
        )

    def load(self, path: Path) -> None:
        logger.info(f"Loading presets from: {path}")
        with open(path, "r") as f:
            config: dict = yaml.safe_load(f) or {}

        try:
            self.hardware = {
                name: HardwareProfile(name=name, **values) for name, values in config.get("hardware", {}).items()
            }
            self.smem_layouts = {
                name: BaselineSmemLayout(name=name, **values)
                for name, values in config.get("smem_layouts", {}).items()
            }
        except (TypeError, ValidationError) as e:
            raise ContainerFormatError(f"invalid preset file {path}: {e}") from e
        self.config = config

    def get_config(self) -> Dict[str, Any]:
        if self.config is not None:
            return self.config
        raise ProblemError("No presets loaded")

    def get_hardware(self, name: Optional[str] = None) -> HardwareProfile:
        name = name or self.get_config().get("default_hardware", "consumer")
        try:
            return self.hardware[name]
        except KeyError:
            raise ProblemError(f"unknown hardware preset '{name}' (known: {', '.join(sorted(self.hardware))})") from None

    def get_smem_layout(self, name: Optional[str] = None) -> BaselineSmemLayout:
        name = name or self.get_config().get("default_smem_layout", "unpadded")
        try:
            return self.smem_layouts[name]
        except KeyError:
            raise ProblemError(
                f"unknown shared-memory layout '{name}' (known: {', '.join(sorted(self.smem_layouts))})"
            ) from None


# Global instance
preset_registry = PresetRegistry()


def init_presets(app) -> None:
    preset_registry.init_app(app)


def get_preset_registry() -> PresetRegistry:
    return preset_registry
