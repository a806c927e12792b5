"""Pass/fail record of the acceptance criteria, printed at the end of the run."""

import time
from contextlib import contextmanager

RESULTS: dict[int, tuple[bool, str, float]] = {}


@contextmanager
def criterion(number: int, title: str):
    detail: dict = {}
    start = time.perf_counter()
    ok = False
    try:
        yield detail
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        extra = ", ".join(f"{k}={_fmt(v)}" for k, v in detail.items())
        RESULTS[number] = (ok, f"{title}" + (f" [{extra}]" if extra else ""), elapsed)


def _fmt(v):
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def summary_lines() -> list[str]:
    return [
        f"criterion {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s) {text}"
        for n, (ok, text, elapsed) in sorted(RESULTS.items())
    ]
