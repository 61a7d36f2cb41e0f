# orbital_stability/scan.py
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """
    Map ``fn`` over ``items`` and return results in input order.

    ``fn`` must be a picklable top-level callable (or a functools.partial of
    one) when workers > 1. With one worker the map runs inline.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunksize = max(1, len(items) // (4 * workers))
    logger.info("scanning %d items on %d workers (chunksize %d)", len(items), workers, chunksize)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
