"""Encode a cycle's batch into per-destination shares and apply them at holders.

Every destination receives only the partitions it covers for the sender.
Payload layouts (see ``wire`` for field widths):

* item buffer: ``count`` identifiers in arrival order
* flow table: ``count`` ``(identifier, frequency)`` pairs
* index buffer under Single/Rows: for each destination row, ``count = B'`` indices
* Cells index buffer, index tables and difference matrices: for each
  destination row a row element count, then that row's elements; an element
  is an index (index buffer) or an ``(index, delta)`` pair
* full share: the counters of the covered cells in row-major order

Operation counters are logical: they count the tests and hash evaluations the
protocol needs, independent of caching inside the hash family.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping

from ..redundancy.coverage import CoverageMapping
from ..redundancy.partition import PartitionKind, PartitionScheme
from ..sketch import Sketch, SketchParams, hash_family
from .config import BatchConfig, RepKind
from .representations import BatchRepresentation, CntBuff
from .wire import MalformedShareError, Policy, Reader, RepTag, Share, Writer

_TAGS = {
    RepKind.ITEM_BUFF: RepTag.ITEM_BUFF,
    RepKind.CNT_BUFF: RepTag.CNT_BUFF,
    RepKind.FLW_HASH: RepTag.FLW_HASH,
    RepKind.CNT_HASH: RepTag.CNT_HASH,
    RepKind.CNT_DIFF: RepTag.CNT_DIFF,
}
_KIND_OF = {tag: kind for kind, tag in _TAGS.items()}


@dataclass
class OpCounts:
    traffic_bits: int = 0
    header_bits: int = 0
    wire_bytes: int = 0
    shares: int = 0
    membership_tests: int = 0
    local_hashes: int = 0
    remote_hashes: int = 0

    def add(self, other: OpCounts) -> None:
        for name, value in asdict(other).items():
            setattr(self, name, getattr(self, name) + value)

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class Decoded:
    """Content of one share: identifier frequencies or ``(row, col, delta)`` cells."""

    policy: Policy
    items: tuple[tuple[int, int], ...] = ()
    cells: tuple[tuple[int, int, int], ...] = ()


@dataclass
class FullShareMemory:
    """Last full-share counters a holder received, per sender."""

    last: dict[int, dict[tuple[int, int], int]] = field(default_factory=dict)


class ShareCodec:
    def __init__(
        self,
        params: SketchParams,
        config: BatchConfig,
        scheme: PartitionScheme,
        mapping: CoverageMapping,
    ) -> None:
        if scheme.p != mapping.p:
            raise ValueError(f"scheme has {scheme.p} partitions, mapping expects {mapping.p}")
        scheme.validate(params.d, params.w)
        self.params, self.config, self.scheme, self.mapping = params, config, scheme, mapping
        self.widths = config.widths(params)
        self.d, self.w = params.d, params.w
        self.layout = scheme.layout(self.d, self.w)
        self.hashes = hash_family(params.seed, self.d, self.w)
        self._nb = {f: self.widths.nbytes(f) for f in ("mid", "w", "B", "N")}
        # coverage is static for a run, so lookups are memoised per (dest, sender)
        self._cache: dict[tuple, object] = {}

    def _memo(self, key: tuple, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    # -- coverage helpers -------------------------------------------------

    def covered(self, dest: int, sender: int) -> tuple[int, ...]:
        return self._memo(("covered", dest, sender), lambda: self.mapping.covered_partitions(dest, sender))

    def destinations(self, sender: int) -> tuple[int, ...]:
        return self._memo(("dest", sender), lambda: self.mapping.destinations(sender))

    def dest_rows(self, dest: int, sender: int) -> tuple[int, ...]:
        def build():
            rows: set[int] = set()
            for part in self.covered(dest, sender):
                rows.update(self.scheme.rows_of(part, self.d, self.w))
            return tuple(sorted(rows))

        return self._memo(("rows", dest, sender), build)

    def _row_partition(self, row: int, ops: OpCounts) -> int:
        # Rows: one test per row; Single: every row is partition 1
        if self.scheme.kind is PartitionKind.SINGLE:
            return 1
        ops.membership_tests += 1
        return int(self.layout[row, 0])

    def _cell_partition(self, row: int, col: int, ops: OpCounts) -> int:
        ops.membership_tests += 1
        return int(self.layout[row, col])

    def _share(self, sender, cycle, policy, rep, dest, count, payload, bits, ops) -> Share:
        covered = self.covered(dest, sender)
        part = covered[0] if len(covered) == 1 else 0
        share = Share(cycle, sender, policy, rep, part, count, payload)
        ops.shares += 1
        ops.traffic_bits += bits
        ops.header_bits += share.header_bits
        ops.wire_bytes += len(payload) + share.header_bits // 8
        return share

    # -- encoding ---------------------------------------------------------

    def encode_alive(self, sender: int, cycle: int, ops: OpCounts | None = None) -> dict[int, Share]:
        ops = ops if ops is not None else OpCounts()
        return {
            dest: self._share(sender, cycle, Policy.ALIVE, RepTag.NONE, dest, 0, b"", 0, ops)
            for dest in self.destinations(sender)
        }

    def encode_batch(
        self, rep: BatchRepresentation, sender: int, cycle: int, ops: OpCounts | None = None
    ) -> dict[int, Share]:
        ops = ops if ops is not None else OpCounts()
        if rep.empty:
            return self.encode_alive(sender, cycle, ops)
        if rep.kind.item_based:
            return self.encode_items(rep, sender, cycle, ops)
        if rep.kind is RepKind.CNT_BUFF and self.scheme.kind is not PartitionKind.CELLS:
            return self.encode_fixed(rep, sender, cycle, ops)
        return self.encode_var(rep, sender, cycle, ops)

    def encode_items(self, rep, sender, cycle, ops: OpCounts) -> dict[int, Share]:
        nb, out = self._nb, Writer()
        if rep.kind is RepKind.ITEM_BUFF:
            out.put_many(rep.items, nb["mid"])
            count, bits = len(rep.items), len(rep.items) * self.widths.mid
        else:
            for x, freq in rep.table.items():
                out.put(x, nb["mid"])
                out.put(freq, nb["B"])
            count = len(rep.table)
            bits = count * (self.widths.mid + self.widths.B)
        payload, tag = out.getvalue(), _TAGS[rep.kind]
        return {
            dest: self._share(sender, cycle, Policy.INCREMENTAL, tag, dest, count, payload, bits, ops)
            for dest in self.destinations(sender)
        }

    def encode_fixed(self, rep: CntBuff, sender, cycle, ops: OpCounts) -> dict[int, Share]:
        for row in range(self.d):
            self._row_partition(row, ops)
        shares = {}
        for dest in self.destinations(sender):
            out = Writer()
            rows = self.dest_rows(dest, sender)
            for row in rows:
                out.put_many(rep.columns(row), self._nb["w"])
            bits = len(rows) * rep.fill * self.widths.w
            shares[dest] = self._share(
                sender, cycle, Policy.INCREMENTAL, RepTag.CNT_BUFF, dest, rep.fill, out.getvalue(), bits, ops
            )
        return shares

    def _row_groups(self, rep: BatchRepresentation, ops: OpCounts) -> dict[int, dict[int, list]]:
        """``{row: {partition: [elements]}}`` after the sender's membership tests."""
        groups: dict[int, dict[int, list]] = {}
        cells = self.scheme.kind is PartitionKind.CELLS
        for row in range(self.d):
            if isinstance(rep, CntBuff):
                elements = [(col, None) for col in rep.columns(row)]
            else:
                elements = rep.row_elements(row)
            by_part: dict[int, list] = {}
            if cells:
                for col, delta in elements:
                    by_part.setdefault(self._cell_partition(row, col, ops), []).append((col, delta))
            else:
                by_part[self._row_partition(row, ops)] = list(elements)
            groups[row] = by_part
        return groups

    def encode_var(self, rep, sender, cycle, ops: OpCounts) -> dict[int, Share]:
        groups = self._row_groups(rep, ops)
        paired = not isinstance(rep, CntBuff)
        elem_bits = self.widths.w + (self.widths.B if paired else 0)
        shares = {}
        for dest in self.destinations(sender):
            covered = set(self.covered(dest, sender))
            out, count, bits = Writer(), 0, 0
            for row in self.dest_rows(dest, sender):
                elements = [e for part, es in groups[row].items() if part in covered for e in es]
                if paired:
                    elements.sort()
                out.put(len(elements), self._nb["B"])
                for col, delta in elements:
                    out.put(col, self._nb["w"])
                    if paired:
                        out.put(delta, self._nb["B"])
                count += len(elements)
                bits += self.widths.B + len(elements) * elem_bits
            shares[dest] = self._share(
                sender, cycle, Policy.INCREMENTAL, _TAGS[rep.kind], dest, count, out.getvalue(), bits, ops
            )
        return shares

    def encode_full(
        self, sketch: Sketch, sender: int, cycle: int, ops: OpCounts | None = None
    ) -> dict[int, Share]:
        ops = ops if ops is not None else OpCounts()
        kind = self.scheme.kind
        if kind is PartitionKind.CELLS:
            for row in range(self.d):
                for col in range(self.w):
                    self._cell_partition(row, col, ops)
        elif kind is PartitionKind.ROWS:
            for row in range(self.d):
                self._row_partition(row, ops)
        shares = {}
        for dest in self.destinations(sender):
            out = Writer()
            cells = self.covered_cells(dest, sender)
            out.put_many((int(sketch.counts[row, col]) for row, col in cells), self._nb["N"])
            bits = len(cells) * self.widths.N
            shares[dest] = self._share(
                sender, cycle, Policy.FULL, RepTag.NONE, dest, len(cells), out.getvalue(), bits, ops
            )
        return shares

    def covered_cells(self, dest: int, sender: int) -> list[tuple[int, int]]:
        def build():
            covered = set(self.covered(dest, sender))
            return [
                (row, col)
                for row in range(self.d)
                for col in range(self.w)
                if int(self.layout[row, col]) in covered
            ]

        return self._memo(("cells", dest, sender), build)

    # -- decoding ---------------------------------------------------------

    def decode(self, share: Share | bytes, dest: int) -> Decoded:
        if isinstance(share, (bytes, bytearray)):
            share = Share.from_bytes(share)
        sender = share.sender
        covered = self.covered(dest, sender)
        if not covered:
            raise MalformedShareError(f"node {dest} does not cover node {sender}")
        if share.partition and share.partition not in covered:
            raise MalformedShareError(f"partition {share.partition} is not covered at node {dest}")
        if share.policy is Policy.ALIVE:
            return Decoded(Policy.ALIVE)
        nb, inp = self._nb, Reader(share.payload)
        if share.policy is Policy.FULL:
            cells = self.covered_cells(dest, sender)
            if share.count != len(cells):
                raise MalformedShareError(f"full share holds {share.count} counters, expected {len(cells)}")
            out = tuple((r, c, v) for (r, c), v in zip(cells, inp.take_many(len(cells), nb["N"])))
            inp.finish()
            return Decoded(Policy.FULL, cells=out)
        kind = _KIND_OF.get(share.rep)
        if kind is None:
            raise MalformedShareError("incremental share without a representation tag")
        if kind is RepKind.ITEM_BUFF:
            items = tuple((x, 1) for x in inp.take_many(share.count, nb["mid"]))
            inp.finish()
            return Decoded(Policy.INCREMENTAL, items=items)
        if kind is RepKind.FLW_HASH:
            pairs = []
            for _ in range(share.count):
                x, freq = inp.take(nb["mid"]), inp.take(nb["B"])
                if freq == 0:
                    raise MalformedShareError("zero frequencies are never encoded")
                pairs.append((x, freq))
            inp.finish()
            return Decoded(Policy.INCREMENTAL, items=tuple(pairs))
        rows = self.dest_rows(dest, sender)
        cells_out: list[tuple[int, int, int]] = []
        if kind is RepKind.CNT_BUFF and self.scheme.kind is not PartitionKind.CELLS:
            for row in rows:
                cells_out.extend((row, col, 1) for col in inp.take_many(share.count, nb["w"]))
        else:
            paired = kind is not RepKind.CNT_BUFF
            total = 0
            for row in rows:
                n = inp.take(nb["B"])
                total += n
                for _ in range(n):
                    col = inp.take(nb["w"])
                    delta = inp.take(nb["B"]) if paired else 1
                    if delta == 0:
                        raise MalformedShareError("zero deltas are never encoded")
                    cells_out.append((row, col, delta))
            if total != share.count:
                raise MalformedShareError(f"header count {share.count} != {total} elements")
        inp.finish()
        for row, col, _ in cells_out:
            if col >= self.w:
                raise MalformedShareError(f"column {col} outside width {self.w}")
        return Decoded(Policy.INCREMENTAL, cells=tuple(cells_out))

    # -- applying ---------------------------------------------------------

    def coefficients(self, dest: int, sender: int) -> dict[int, int]:
        return self._memo(
            ("coeffs", dest, sender),
            lambda: {
                part: self.mapping.sumpart_at(dest, part).coeff(sender)  # type: ignore[union-attr]
                for part in self.covered(dest, sender)
            },
        )

    def apply(
        self,
        share: Share | bytes,
        dest: int,
        sums: Mapping[int, Sketch],
        ops: OpCounts | None = None,
        memory: FullShareMemory | None = None,
    ) -> None:
        """Add ``coeff * content`` of ``share`` into the holder's per-partition sum-sketches."""
        ops = ops if ops is not None else OpCounts()
        if isinstance(share, (bytes, bytearray)):
            share = Share.from_bytes(share)
        decoded = self.decode(share, dest)
        coeffs = self.coefficients(dest, share.sender)
        if decoded.policy is Policy.ALIVE:
            return
        if decoded.policy is Policy.FULL:
            if memory is None:
                raise ValueError("full shares need the holder's memory of previous shares")
            last = memory.last.setdefault(share.sender, {})
            for row, col, value in decoded.cells:
                delta = value - last.get((row, col), 0)
                last[row, col] = value
                if delta:
                    part = int(self.layout[row, col])
                    sums[part].add_cell(row, col, coeffs[part] * delta)
            return
        if decoded.items:
            self._apply_items(decoded.items, dest, share.sender, coeffs, sums, ops)
            return
        for row, col, delta in decoded.cells:
            part = int(self.layout[row, col])
            if part not in coeffs:
                raise MalformedShareError(f"cell ({row}, {col}) is outside the covered partitions")
            sums[part].add_cell(row, col, coeffs[part] * delta)

    def _apply_items(self, items: Iterable[tuple[int, int]], dest, sender, coeffs, sums, ops) -> None:
        rows = self.dest_rows(dest, sender)
        # repeated identifiers are grouped; operations are still counted per entry
        entries: dict[int, list[int]] = {}
        for x, freq in items:
            acc = entries.setdefault(x, [0, 0])
            acc[0] += freq
            acc[1] += 1
        cells = self.scheme.kind is PartitionKind.CELLS
        row_part = {row: int(self.layout[row, 0]) for row in rows}
        deltas: dict[tuple[int, int, int], int] = {}
        for x, (freq, n) in entries.items():
            idx = self.hashes.indices(x)
            ops.remote_hashes += n * len(rows)
            for row in rows:
                col = idx[row]
                if cells:
                    ops.membership_tests += n
                    part = int(self.layout[row, col])
                    if part not in coeffs:
                        continue
                else:
                    part = row_part[row]
                key = (part, row, col)
                deltas[key] = deltas.get(key, 0) + freq
        for (part, row, col), delta in deltas.items():
            sums[part].add_cell(row, col, coeffs[part] * delta)
