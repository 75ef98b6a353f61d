from .config import LoadedConfig, RunConfig, bundled_config, load_config, load_config_text
from .main import main
from .report import format_csv, format_json, write_report

__all__ = (
    "LoadedConfig",
    "RunConfig",
    "bundled_config",
    "format_csv",
    "format_json",
    "load_config",
    "load_config_text",
    "main",
    "write_report",
)
