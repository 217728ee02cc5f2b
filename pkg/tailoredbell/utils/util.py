from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar, Union

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

SeedLike = Union[None, int, np.random.Generator]


def omega_power(d: int, x: Union[float, np.ndarray]) -> Union[complex, np.ndarray]:
    """omega**x with omega = exp(2*pi*i/d); x may be fractional."""
    return np.exp(2j * np.pi * np.asarray(x, dtype=float) / d)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """
    Ordered map over a thread pool.
    Runs serially when workers is None or 1, so results never depend on scheduling.
    :param fn: function applied to every item
    :param items: iterable of work items
    :param workers: number of threads
    :return: list of results in input order
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def make_rng(seed: SeedLike = None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
