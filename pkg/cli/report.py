"""JSON-отчёты запусков и их печать.

Отчёт — один JSON-документ: команда, действующие настройки, результаты,
трассы и данные для графиков. Рядом пишется `<отчёт>.config.toml` с
действующими настройками; большие решётки дублируются в CSV.
"""

import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from cli.config import RunConfig, dump_config
from core.errors import DataFileError


def to_jsonable(value):
    """numpy и pandas → встроенные типы; неконечные числа → None."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, pd.DataFrame):
        return {c: to_jsonable(value[c].tolist()) for c in value.columns}
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def config_path(report_path: str | Path) -> Path:
    report_path = Path(report_path)
    return report_path.with_name(report_path.stem + ".config.toml")


def write_report(
    path: str | Path,
    command: str,
    config: RunConfig,
    results: dict,
    tables: dict[str, pd.DataFrame] | None = None,
) -> Path:
    """Записать отчёт, эхо настроек и CSV-таблицы (`<отчёт>.<имя>.csv`)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    side_files = {}
    for name, table in (tables or {}).items():
        side = path.with_name(f"{path.stem}.{name}.csv")
        table.to_csv(side, index=False)
        side_files[name] = side.name

    document = {
        "command": command,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config.model_dump(),
        "results": results,
        "files": side_files,
    }
    path.write_text(json.dumps(to_jsonable(document), ensure_ascii=False, indent=2), encoding="utf-8")
    config_path(path).write_text(dump_config(config), encoding="utf-8")
    return path


def read_report(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DataFileError("файл отчёта не найден", str(path)) from exc
    except json.JSONDecodeError as exc:
        raise DataFileError(f"не JSON: {exc.msg}", str(path), row=exc.lineno) from exc


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, list) and all(isinstance(v, (int, float)) or v is None for v in value):
        return "(" + ", ".join("-" if v is None else f"{v:.6g}" for v in value) + ")"
    return str(value)


def format_report(document: dict) -> str:
    """Текстовое представление отчёта для команды report."""
    lines = [f"Команда: {document.get('command')}", f"Создан: {document.get('created')}"]
    results = document.get("results", {})
    for key, value in results.items():
        if isinstance(value, dict) and value and all(isinstance(v, list) for v in value.values()):
            lines.append(f"\n{key}:")
            lines.append(pd.DataFrame(value).to_string(index=False))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f"\n{key}:")
            lines.append(pd.DataFrame(value).to_string(index=False))
        else:
            lines.append(f"{key}: {_format_value(value)}")
    for name, file in document.get("files", {}).items():
        lines.append(f"{name}: {file}")
    return "\n".join(lines)
