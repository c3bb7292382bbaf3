"""Ядро codetune: калибровка параметров кода по суррогатной модели ГП.

Модули:
- models: Типы данных (ComputerData, ExperimentalData, CalibrationDataset, ...)
- datamodel: Сборка объединённых матриц и ковариаций
- optimizer: Мультистарт-оптимизатор, F-квантиль, потоки ГСЧ, ЛГК
- gp: Гауссовский процесс (правдоподобие, ММП-оценка, прогноз)
- calibrate: Методы ANLS, SMLE, полный ММП, Max-min и доверительная область
- calculator: Выбор метода калибровки
- design: ЛГК и последовательный IMSE/MMSE-план
- bench: Тестовые функции и повторные калибровки

Использование:
    from core.models import CalibrationDataset, ComputerData, ExperimentalData
    from core.calculator import calibrate_dataset
"""

from .models import CalibrationDataset, ComputerData, ExperimentalData, TuningEstimate

__all__ = ["CalibrationDataset", "ComputerData", "ExperimentalData", "TuningEstimate"]
