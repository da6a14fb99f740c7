"""
CPTrap - Parameter Sweeps

One row per grid point, always in grid order. Bath sweeps (N, beta, omega)
rebuild the susceptivity set at every point and may run on a thread pool;
the s sweep tabulates family members at the configured Einstein ratio.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

from cptrap.bath import BathConfig, OccupationSpectrum, build_susceptivity_set
from cptrap.config import RunConfig
from cptrap.errors import UsageError
from cptrap.results import FAMILY_COLUMNS, family_rows
from cptrap.stationary import admissible_interval, min_ground_population

logger = logging.getLogger(__name__)

BATH_COLUMNS = (
    "value", "re_minus", "re_plus", "im_minus", "im_plus",
    "R", "s_max", "min_ground_population",
)


def bath_at(bath: BathConfig, parameter: str, value: float) -> BathConfig:
    """Copy of the bath with one parameter replaced."""
    if parameter == "N":
        flat = OccupationSpectrum("flat", level=value)
        return replace(bath, occupations=(flat, flat))
    if parameter == "beta":
        planck = OccupationSpectrum("planck", beta=value)
        return replace(bath, occupations=(planck, planck))
    if parameter == "omega":
        return replace(bath, bohr_frequency=value)
    raise UsageError(f"{parameter!r} is not a bath parameter")


def bath_row(bath: BathConfig, value: float) -> List[float]:
    sus = build_susceptivity_set(bath)
    R = sus.einstein_ratio
    nan = float("nan")
    return [
        value,
        sus.re_sum(1, 1, "-"),
        sus.re_sum(1, 1, "+"),
        sus.im_sum(1, 1, "-"),
        sus.im_sum(1, 1, "+"),
        nan if R is None else R,
        nan if R is None else admissible_interval(min(R, 1.0))[1],
        min_ground_population(bath.occupation_at_resonance(1)),
    ]


def run_sweep(config: RunConfig, parameter: str, grid: Sequence[float], ratio: Optional[float] = None) -> Tuple[Tuple[str, ...], List[list]]:
    """
    Evaluate the sweep and return (columns, rows).

    `ratio` is the Einstein ratio used by the s sweep.
    """
    if parameter == "s":
        if ratio is None:
            raise UsageError("an s sweep needs the Einstein ratio of the bath")
        return FAMILY_COLUMNS, list(family_rows(ratio, grid))

    baths = [bath_at(config.bath, parameter, value) for value in grid]
    workers = config.numerics.workers
    logger.info(f"Sweeping {parameter} over {len(grid)} points with {workers} worker(s)")
    if workers == 1:
        rows = [bath_row(b, v) for b, v in zip(baths, grid)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(bath_row, baths, grid))
    return BATH_COLUMNS, rows
