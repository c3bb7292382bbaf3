"""Адаптер внешнего симулятора.

Протокол: процесс запускается на каждую строку плана, получает в stdin одну
строку CSV со значениями входов и печатает в stdout одно число.
"""

import logging
import shlex
import subprocess
from collections.abc import Sequence

import numpy as np

from core.errors import SimulatorError

logger = logging.getLogger(__name__)


class SubprocessSimulator:
    """Вызов исполняемого файла как функции строка плана → отклик."""

    def __init__(self, command: str | Sequence[str], timeout: float | None = 600.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise SimulatorError("Пустая команда симулятора")
        self.timeout = timeout

    def __call__(self, row: np.ndarray) -> float:
        line = ",".join(repr(float(v)) for v in np.ravel(row)) + "\n"
        try:
            result = subprocess.run(
                self.command, input=line, text=True, capture_output=True, timeout=self.timeout
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise SimulatorError(f"Не удалось выполнить {self.command[0]}: {exc}") from exc

        output = result.stdout + result.stderr
        if result.returncode != 0:
            raise SimulatorError(f"{self.command[0]} завершился с кодом {result.returncode}", output=output)
        lines = [s.strip() for s in result.stdout.splitlines() if s.strip()]
        if len(lines) != 1:
            raise SimulatorError(f"{self.command[0]}: ожидалась одна строка с числом, получено {len(lines)}", output=output)
        try:
            value = float(lines[0])
        except ValueError as exc:
            raise SimulatorError(f"{self.command[0]}: не число {lines[0]!r}", output=output) from exc
        logger.debug("%s(%s) = %.6g", self.command[0], line.strip(), value)
        return value
