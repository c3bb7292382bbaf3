"""Исключения codetune.

Все ошибки пакета наследуют CodetuneError. Ошибки неверных аргументов
дополнительно наследуют ValueError, чтобы вызывающий код мог ловить их
привычным образом.
"""


class CodetuneError(Exception):
    """Базовая ошибка пакета."""


class DimensionError(CodetuneError, ValueError):
    """Несогласованные размерности входных данных."""


class DomainError(CodetuneError, ValueError):
    """Аргумент вне области определения."""


class CovarianceNotPDError(CodetuneError):
    """Ковариационная матрица не положительно определена даже после jitter."""


class SingularGLSError(CodetuneError):
    """Система ОМНК FᵀV⁻¹F вырождена."""


class VariantError(CodetuneError, ValueError):
    """Вариант предиктора несовместим с обучающей выборкой модели."""


class FitError(CodetuneError):
    """Не удалось оценить гиперпараметры ГП."""


class OptimizationError(CodetuneError):
    """Ни один старт оптимизатора не дал конечного значения."""


class CalibrationError(CodetuneError):
    """Сбой одного из шагов калибровки.

    Attributes:
        trace: Итерации, выполненные до сбоя.
    """

    def __init__(self, message: str, trace: list | None = None):
        super().__init__(message)
        self.trace = list(trace or [])


class SimulatorError(CodetuneError):
    """Сбой внешнего симулятора.

    Attributes:
        stage: Номер этапа плана (с 1), на котором произошёл сбой.
        output: Перехваченный вывод процесса.
    """

    def __init__(self, message: str, stage: int | None = None, output: str = ""):
        super().__init__(message)
        self.stage = stage
        self.output = output


class DataFileError(CodetuneError, ValueError):
    """Ошибка чтения CSV с указанием файла, строки и столбца."""

    def __init__(self, message: str, path: str = "", row: int | None = None, column: str | None = None):
        location = path
        if row is not None:
            location += f", строка {row}"
        if column is not None:
            location += f", столбец {column!r}"
        super().__init__(f"{location}: {message}" if location else message)
        self.path = path
        self.row = row
        self.column = column


class ConfigError(CodetuneError, ValueError):
    """Некорректная конфигурация запуска."""
