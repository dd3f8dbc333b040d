"""Regenerate the committed share byte vectors in tests/golden/shares.json.

Each case fixes a tiny sketch, a mapping, a partition scheme and a batch of
identifiers, and records the bytes node 1 sends to its first destination
together with the decoded content. Run only when the wire format changes on
purpose; the test suite pins the recorded bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

from sketchguard.batching import INCREMENTAL_KINDS, BatchConfig, RepKind, ShareCodec, SmartCMS
from sketchguard.redundancy import PartitionScheme, build_coverage
from sketchguard.sketch import Sketch, SketchParams

OUT = Path(__file__).resolve().parent.parent / "tests" / "golden" / "shares.json"

PARAMS = dict(epsilon=0.5, delta=0.1, seed=11)
ITEMS = [5, 7, 5, 1 << 40, 9, 5, 0xDEADBEEF, 7]
CASES = {
    "single": ("dedicated", 1),
    "rows": ("sweet_spot", 2),
    "cells": ("sweet_spot", 2),
}


def build(kind: RepKind, scheme_name: str):
    params = SketchParams.from_guarantees(**PARAMS)
    mapping_kind, p = CASES[scheme_name]
    mapping = build_coverage(mapping_kind, 4, 1, p)
    config = BatchConfig(B=8, kind=kind)
    codec = ShareCodec(params, config, PartitionScheme(scheme_name, p), mapping)
    fw = SmartCMS(Sketch(params), config)
    for x in ITEMS:
        fw.update(x)
    return codec, fw


def main() -> None:
    cases = []
    for scheme_name in CASES:
        for kind in INCREMENTAL_KINDS:
            codec, fw = build(kind, scheme_name)
            shares = codec.encode_batch(fw.batch, sender=1, cycle=7)
            dest = min(shares)
            decoded = codec.decode(shares[dest].to_bytes(), dest)
            cases.append(
                {
                    "representation": kind.value,
                    "partition": scheme_name,
                    "sender": 1,
                    "dest": dest,
                    "cycle": 7,
                    "hex": shares[dest].to_bytes().hex(),
                    "items": [list(t) for t in decoded.items],
                    "cells": [list(t) for t in decoded.cells],
                }
            )
    doc = {"params": PARAMS, "B": 8, "items": ITEMS, "mappings": CASES, "cases": cases}
    OUT.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
