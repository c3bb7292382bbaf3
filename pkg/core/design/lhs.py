"""Латинские гиперкубы: случайный и maximin по конечному набору кандидатов."""

import logging

import numpy as np
from scipy.spatial.distance import pdist

from core.models import DesignSpec
from core.optimizer import latin_hypercube

logger = logging.getLogger(__name__)


def min_distance(points: np.ndarray, lower, upper) -> float:
    """Минимальное попарное расстояние в нормированных на [0, 1] координатах."""
    lower = np.asarray(lower, dtype=float)
    width = np.asarray(upper, dtype=float) - lower
    if points.shape[0] < 2:
        return float("inf")
    return float(pdist((points - lower) / width).min())


def lhs(spec: DesignSpec, rng: np.random.Generator) -> np.ndarray:
    """План n × d по схеме spec.scheme.

    "maximin" последовательно порождает spec.n_candidates случайных ЛГК
    тем же генератором и выбирает план с наибольшим минимальным расстоянием;
    первый кандидат совпадает с планом "random" при том же генераторе.
    """
    lower, upper = np.array(spec.lower), np.array(spec.upper)
    if spec.scheme == "random":
        return latin_hypercube(spec.n_points, lower, upper, rng)

    best = latin_hypercube(spec.n_points, lower, upper, rng)
    best_distance = min_distance(best, lower, upper)
    for _ in range(spec.n_candidates - 1):
        candidate = latin_hypercube(spec.n_points, lower, upper, rng)
        distance = min_distance(candidate, lower, upper)
        if distance > best_distance:
            best, best_distance = candidate, distance
    logger.debug("maximin-ЛГК %d×%d: минимальное расстояние %.4g", spec.n_points, spec.dimension, best_distance)
    return best
