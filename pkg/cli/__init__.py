"""Командная строка codetune: настройки, CSV, отчёты и команды.

Использование:
    from cli.config import load_config
    from cli.commands import cmd_calibrate
"""

from .config import COMMAND_CONFIGS, load_config, resolve_jobs
from .commands import cmd_benchmark, cmd_calibrate, cmd_design, cmd_fit, cmd_report

__all__ = [
    # Настройки
    "COMMAND_CONFIGS",
    "load_config",
    "resolve_jobs",
    # Команды
    "cmd_fit",
    "cmd_calibrate",
    "cmd_benchmark",
    "cmd_design",
    "cmd_report",
]
