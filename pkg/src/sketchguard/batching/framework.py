"""SmartCMS: a data node's sketch plus the batch of the current cycle."""

from __future__ import annotations

from ..sketch import Sketch
from .config import BatchConfig, RepKind
from .representations import BatchRepresentation, make_representation


class SmartCMS:
    """Delayed-update wrapper around a data sketch.

    ``sketch`` holds the state as of the last share; the current cycle's
    arrivals live in ``batch`` until :meth:`flush` merges them. Under the
    full-share policy there is no batch and updates go straight to the sketch.
    """

    def __init__(self, sketch: Sketch, config: BatchConfig) -> None:
        self.sketch, self.config = sketch, config
        self.batch: BatchRepresentation | None = (
            None if config.kind is RepKind.FULL else make_representation(sketch.params.d, sketch.params.w, config)
        )
        self.local_hashes = 0
        self.arrivals = 0

    @property
    def fill(self) -> int:
        return self.batch.fill if self.batch is not None else 0

    def update(self, x: int) -> bool:
        """Record one arrival; True means the batch must be shared now."""
        indices = self.sketch.hashes.indices(x)
        self.arrivals += 1
        if self.batch is None:
            self.sketch.add_indices(indices)
            return False
        before = self.batch.ht_ops
        self.batch.record(x, indices)
        self.local_hashes += self.batch.ht_ops - before
        return self.batch.fill >= self.batch.limit or self.batch.saturated

    def query(self, x: int) -> int:
        if self.batch is None:
            return self.sketch.query(x)
        return self.batch.in_batch(self.sketch, x)

    def flush(self) -> BatchRepresentation | None:
        """Merge the batch into the sketch and hand it back; a fresh batch takes its place."""
        batch = self.batch
        if batch is None:
            return None
        deltas = batch.cell_deltas(self.sketch.hashes.indices)
        for (row, col), delta in deltas.items():
            self.sketch.add_cell(row, col, delta)
        self.sketch.total += batch.fill
        self.batch = make_representation(self.sketch.params.d, self.sketch.params.w, self.config)
        return batch
