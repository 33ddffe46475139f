from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

from netkernel.core.errors import ConfigError
from netkernel.globals import Config

T = TypeVar("T")
R = TypeVar("R")

_thread_override: Optional[int] = None


def set_threads(threads: Optional[int]) -> None:
    """Set a process-wide worker count (the CLI ``--threads`` flag)."""
    global _thread_override
    if threads is not None and threads < 1:
        raise ConfigError(f"Invalid thread count {threads}. Must be >= 1", threads=threads)
    _thread_override = threads


def resolve_threads(threads: Optional[int] = None) -> int:
    """Explicit argument, then ``--threads``, then NETKERNEL_THREADS, then 1."""
    for candidate in (threads, _thread_override, Config.THREADS):
        if candidate is not None:
            return max(1, int(candidate))
    return 1


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """Map ``fn`` over ``items`` and return results in input order.

    Results never depend on the worker count: each item is computed independently and the output
    order is the input order.
    """
    items = list(items)
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


def chunk_ranges(total: int, chunk: int) -> Sequence[range]:
    """Split ``range(total)`` into consecutive ranges of at most ``chunk`` items."""
    chunk = max(1, int(chunk))
    return [range(start, min(start + chunk, total)) for start in range(0, total, chunk)]
