"""Collects one pass/fail line per acceptance criterion."""

from __future__ import annotations

import functools
import time

RESULTS: dict[int, str] = {}


def criterion(number: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                line = f"criterion {number} FAIL  {title} ({time.perf_counter() - start:.1f}s): {exc}".splitlines()[0]
                RESULTS[number] = line
                print(line)
                raise
            line = f"criterion {number} PASS  {title} ({time.perf_counter() - start:.1f}s)"
            if detail:
                line += f" {detail}"
            RESULTS[number] = line
            print(line)

        return run

    return wrap
