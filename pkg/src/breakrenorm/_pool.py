import os
from concurrent.futures import ThreadPoolExecutor


def n_workers():
    env = os.environ.get("RENORM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


def pmap(fn, items):
    """Ordered parallel map; results come back in input order."""
    items = list(items)
    w = n_workers()
    if w == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))
