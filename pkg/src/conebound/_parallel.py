"""Order-preserving parallel map capped by ``CONEBOUND_THREADS``."""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    try:
        n = int(os.environ.get("CONEBOUND_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def pmap(fn, items):
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 64:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
