"""Thread fan-out for ensemble chunks.

Work items carry their own random stream ids, so results are identical for any
thread count; ``ensemble_map`` only has to preserve input order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ensemble_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Apply ``fn`` to every item, on ``threads`` worker threads, keeping order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug(f"fanning {len(items)} chunks out over {threads} threads")
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, items))


def chunk_sizes(total: int, batch: int) -> List[int]:
    """Split ``total`` members into chunks of at most ``batch``."""
    if total <= 0:
        return []
    batch = max(1, batch)
    sizes = [batch] * (total // batch)
    if total % batch:
        sizes.append(total % batch)
    return sizes
