"""codetune: калибровка параметров вычислительного кода по экспериментальным данным.

    python main.py calibrate --config input_calibrate.toml --method anls
    python main.py report report.json
"""

import argparse
import logging
import sys
import typing

from pydantic import ValidationError

from cli.commands import cmd_benchmark, cmd_calibrate, cmd_design, cmd_fit, cmd_report
from cli.config import COMMAND_CONFIGS, load_config
from core.errors import CodetuneError

COMMANDS = {
    "fit": cmd_fit,
    "calibrate": cmd_calibrate,
    "design": cmd_design,
}

# Поле jobs задаётся только через --jobs, чтобы действовал приоритет CODETUNE_JOBS
CLI_ONLY_FIELDS = {"jobs"}


def _is_list(annotation) -> bool:
    if typing.get_origin(annotation) is list:
        return True
    return any(typing.get_origin(arg) is list for arg in typing.get_args(annotation))


def build_parser() -> argparse.ArgumentParser:
    """Подкоманды и опции --key value по полям моделей настроек."""
    parser = argparse.ArgumentParser(
        prog="codetune", description="Калибровка параметров кода по суррогатной модели ГП"
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Подробнее (-vv — отладка)")
    parser.add_argument("-q", "--quiet", action="store_true", help="Только ошибки")
    sub = parser.add_subparsers(dest="command", required=True)

    for command, model in COMMAND_CONFIGS.items():
        cmd = sub.add_parser(command, help=model.__doc__.splitlines()[0])
        cmd.add_argument("--config", help="TOML-файл настроек")
        for name, field in model.model_fields.items():
            if name in CLI_ONLY_FIELDS:
                continue
            flags = [f"--{name}"]
            if "_" in name:
                flags.append(f"--{name.replace('_', '-')}")
            # Значения остаются строками: приводит их pydantic вместе с файлом настроек
            cmd.add_argument(
                *flags,
                dest=name,
                nargs="+" if _is_list(field.annotation) else None,
                default=None,
                help=field.description,
            )
        if command == "benchmark":
            cmd.add_argument("--jobs", type=int, default=None, help="Процессов (иначе CODETUNE_JOBS, файл, число ядер)")

    report = sub.add_parser("report", help="Напечатать сохранённый отчёт")
    report.add_argument("path", help="JSON-отчёт")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Разбор аргументов → настройки → команда → сводка. Код возврата: 0 или 2."""
    args = build_parser().parse_args(argv)
    if args.quiet:
        level = logging.ERROR
    else:
        level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "report":
            text = cmd_report(args.path)
        else:
            fields = COMMAND_CONFIGS[args.command].model_fields
            overrides = {name: getattr(args, name) for name in fields if name not in CLI_ONLY_FIELDS}
            config = load_config(args.command, args.config, overrides)
            if args.command == "benchmark":
                _, text = cmd_benchmark(config, args.jobs)
            else:
                _, text = COMMANDS[args.command](config)
    except (CodetuneError, ValidationError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 2

    print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
