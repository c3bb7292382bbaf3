"""Чтение CSV с данными кода и эксперимента, запись плана.

Данные кода: заголовок `t1,…,tq,x1,…,xp,y`; эксперимент: `x1,…,xp,y`.
Разделитель — запятая, десятичная точка, UTF-8, заголовок обязателен.
"""

import re
from pathlib import Path

import numpy as np
import pandas as pd

from core.errors import DataFileError
from core.models import ComputerData, ExperimentalData

_T_COLUMN = re.compile(r"^t(\d+)$")
_X_COLUMN = re.compile(r"^x(\d+)$")


def _numbered(columns: list[str], pattern: re.Pattern, prefix: str, path: str) -> list[str]:
    found = [c for c in columns if pattern.match(c)]
    expected = [f"{prefix}{k}" for k in range(1, len(found) + 1)]
    if found != expected:
        raise DataFileError(f"Столбцы {prefix}: ожидается {expected}, найдено {found}", path, row=1)
    return found


def read_table(path: str | Path) -> pd.DataFrame:
    """Таблица чисел; ошибка указывает строку файла (заголовок — строка 1) и столбец."""
    path = str(path)
    try:
        raw = pd.read_csv(path, dtype=str, skipinitialspace=True, encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataFileError("файл не найден", path) from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataFileError(f"не удалось разобрать CSV: {exc}", path) from exc

    raw.columns = [str(c).strip() for c in raw.columns]
    if raw.empty:
        raise DataFileError("нет строк данных", path)
    table = pd.DataFrame(index=raw.index)
    for column in raw.columns:
        values = pd.to_numeric(raw[column].str.strip(), errors="coerce")
        bad = values.isna() | ~np.isfinite(values.astype(float))
        if bad.any():
            i = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataFileError(f"не число: {raw[column].iloc[i]!r}", path, row=i + 2, column=column)
        table[column] = values.astype(float)
    return table


def _split(table: pd.DataFrame, path: str, with_t: bool) -> tuple[np.ndarray | None, np.ndarray, np.ndarray]:
    columns = list(table.columns)
    if "y" not in columns:
        raise DataFileError("нет столбца 'y'", path, row=1)
    t_cols = _numbered(columns, _T_COLUMN, "t", path) if with_t else []
    x_cols = _numbered(columns, _X_COLUMN, "x", path)
    unknown = [c for c in columns if c not in t_cols + x_cols + ["y"]]
    if unknown:
        raise DataFileError(f"неизвестные столбцы {unknown}", path, row=1)
    T = table[t_cols].to_numpy() if with_t else None
    return T, table[x_cols].to_numpy(), table["y"].to_numpy()


def read_computer_csv(path: str | Path) -> ComputerData:
    T, X, y = _split(read_table(path), str(path), with_t=True)
    return ComputerData(t_inputs=T, x_inputs=X, responses=y)


def read_experimental_csv(path: str | Path) -> ExperimentalData:
    _, X, y = _split(read_table(path), str(path), with_t=False)
    return ExperimentalData(x_inputs=X, responses=y)


def write_design_csv(
    path: str | Path, design: np.ndarray, columns: list[str], stages, responses: np.ndarray
) -> Path:
    """План по этапам: входы, номер этапа и отклик (пусто, если ещё не получен)."""
    frame = pd.DataFrame(design, columns=columns)
    frame["stage"] = list(stages)
    y = np.full(design.shape[0], np.nan)
    y[: responses.shape[0]] = responses
    frame["y"] = y
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path
