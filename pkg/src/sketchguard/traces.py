"""Synthetic Zipf traces and the on-disk trace format.

A trace file starts with ``#mid=<bits>`` and then lists one identifier per
line, in decimal or ``0x`` hex. A line ``count,id`` stands for ``count``
consecutive arrivals of ``id``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator

import numpy as np


class TraceFormatError(ValueError):
    pass


def zipf_trace(
    n_flows: int, n_items: int, s: float = 1.0, seed: int = 0, bits_mid: int = 64
) -> list[int]:
    """``n_items`` arrivals over exactly ``n_flows`` flows with Zipf(``s``) popularity.

    Each flow appears at least once; the remaining arrivals are drawn with
    probability proportional to ``rank**-s`` and the whole stream is shuffled.
    """
    if not 1 <= n_flows <= n_items:
        raise ValueError("need 1 <= flows <= items")
    if s < 0:
        raise ValueError("zipf exponent must be non-negative")
    rng = np.random.default_rng(seed)
    ids: set[int] = set()
    limit = 1 << min(bits_mid, 64)
    order = []
    while len(order) < n_flows:
        x = int(rng.integers(0, limit, dtype=np.uint64)) if bits_mid >= 64 else int(rng.integers(0, limit))
        if x not in ids:
            ids.add(x)
            order.append(x)
    weights = np.arange(1, n_flows + 1, dtype=float) ** -s
    draws = rng.choice(n_flows, size=n_items - n_flows, p=weights / weights.sum())
    ranks = np.concatenate([np.arange(n_flows), draws])
    rng.shuffle(ranks)
    return [order[r] for r in ranks]


def parse_id(text: str, bits_mid: int) -> int:
    text = text.strip()
    try:
        value = int(text, 16) if text.lower().startswith("0x") else int(text, 10)
    except ValueError:
        raise TraceFormatError(f"not an identifier: {text!r}") from None
    if value < 0 or value.bit_length() > bits_mid:
        raise TraceFormatError(f"identifier {text} does not fit {bits_mid} bits")
    return value


def iter_trace(path: str | Path) -> Iterator[int]:
    with open(path, encoding="ascii") as fh:
        first = fh.readline().strip()
        if not first.startswith("#mid="):
            raise TraceFormatError("trace files start with a '#mid=<bits>' header")
        try:
            bits = int(first[5:])
        except ValueError:
            raise TraceFormatError(f"bad header {first!r}") from None
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "," in line:
                count, ident = line.split(",", 1)
                try:
                    n = int(count)
                except ValueError:
                    raise TraceFormatError(f"line {lineno}: bad count {count!r}") from None
                if n < 1:
                    raise TraceFormatError(f"line {lineno}: count must be positive")
                x = parse_id(ident, bits)
                for _ in range(n):
                    yield x
            else:
                yield parse_id(line, bits)


def read_trace(path: str | Path) -> list[int]:
    return list(iter_trace(path))


def read_bits_mid(path: str | Path) -> int:
    with open(path, encoding="ascii") as fh:
        first = fh.readline().strip()
    if not first.startswith("#mid="):
        raise TraceFormatError("trace files start with a '#mid=<bits>' header")
    return int(first[5:])


def write_trace(path: str | Path, items: Iterable[int], bits_mid: int = 64, hex_ids: bool = True) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"#mid={bits_mid}\n")
        for x in items:
            if x.bit_length() > bits_mid:
                raise TraceFormatError(f"identifier {x} does not fit {bits_mid} bits")
            fh.write(f"{x:#x}\n" if hex_ids else f"{x}\n")
