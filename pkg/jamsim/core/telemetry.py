import threading
from collections import Counter

HELPER_HELD = "controller.helper_held"
BACKTRACKED = "controller.backtracked"
PLACEMENT_RETRY = "harness.placement_retry"
CELL_FAILED = "harness.cell_failed"
START_DROPPED = "harness.start_dropped"

_lock = threading.Lock()
_events: Counter[str] = Counter()


def record_event(event_type: str, count: int = 1) -> None:
    with _lock:
        _events[event_type] += count


def get_event_counts() -> dict[str, int]:
    with _lock:
        return dict(sorted(_events.items()))


def reset_events() -> None:
    with _lock:
        _events.clear()
