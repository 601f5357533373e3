"""Process-wide named locks for work that must not run twice concurrently."""

import threading
from collections import defaultdict

_guard = threading.Lock()
_locks: "defaultdict[str, threading.Lock]" = defaultdict(threading.Lock)


def named_lock(key: str) -> threading.Lock:
    with _guard:
        return _locks[key]
