from __future__ import annotations

import logging
from typing import Callable, Iterable, List, Optional, TypeVar

from joblib import Parallel, delayed

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[..., R], items: Iterable[T], n_jobs: Optional[int] = 1) -> List[R]:
    """Order-preserving map; ``n_jobs=None``/``-1`` uses every core, 1 runs inline."""
    items = list(items)
    if n_jobs == 1 or len(items) <= 1:
        return [func(x) for x in items]
    n_jobs = -1 if n_jobs is None else n_jobs
    logger.debug("parallel_map: %d tasks on n_jobs=%s", len(items), n_jobs)
    return Parallel(n_jobs=n_jobs)(delayed(func)(x) for x in items)
