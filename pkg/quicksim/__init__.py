from dataclasses import dataclass, field

from quicksim.extensions.presets import init_presets
from quicksim.logger import configure_logging_and_tracing, logger
from quicksim.settings import Settings


@dataclass
class QuickApp:
    """Process-wide state shared by the commands: settings and extensions."""

    extensions: dict = field(default_factory=dict)

    @property
    def settings(self) -> Settings:
        return self.extensions["settings"]

    @property
    def presets(self):
        return self.extensions["presets"]


def init_settings(app: QuickApp, settings: Settings | None = None):
    if not hasattr(app, "extensions"):
        app.extensions = {}

    app.extensions["settings"] = settings or Settings()


def create_app(settings: Settings | None = None) -> QuickApp:
    """
    Application factory function.
    """

    app = QuickApp()
    init_settings(app, settings)
    configure_logging_and_tracing(app)

    init_presets(app)

    logger.info("quicksim setup is completed.")
    return app
