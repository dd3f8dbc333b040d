"""Deterministic cycle-based simulation of data nodes and their redundancy.

Every cycle each live data node ingests its slice of the trace, ships its
batch (or an alive message) to the holders covering it, and holders apply
their inbox at the end of the cycle. Crash failures erase a node at a point
inside its cycle; detection happens at the cycle boundary, where recovery
restores the failed data to its last shared state and rebuilds the
redundancy the node held.

The simulator keeps, as an oracle outside the nodes, a copy of every data
sketch as of its last share. Recovered sketches are checked against it.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .batching import (
    BatchConfig,
    CostParams,
    FullShareMemory,
    OpCounts,
    RepKind,
    Share,
    ShareCodec,
    SmartCMS,
    cost_model,
)
from .redundancy import (
    D,
    CoverageMapping,
    MappingKind,
    PartitionKind,
    PartitionScheme,
    RecoveryPlan,
    RecoveryStatus,
    Ref,
    Strategy,
    build_coverage,
)
from .sketch import Sketch, SketchParams, linear_combine, mix64, splitmix64


class ShardPolicy(str, enum.Enum):
    HASH = "hash"
    ROUND_ROBIN = "round_robin"


class SimConfigError(ValueError):
    pass


_NATURAL_P = {MappingKind.CLIQUE: 3, MappingKind.IMBALANCED_SPACE: 3, MappingKind.SWEET_SPOT: 2}


@dataclass(frozen=True)
class SimConfig:
    """One simulation.

    ``p`` defaults to the mapping's own partition count, or to 1 for the
    Single scheme and 2 otherwise. ``strategy`` is implied by the mapping
    and only checked when given.
    """

    k: int = 4
    f: int = 1
    mapping: MappingKind = MappingKind.DEDICATED
    partition: PartitionKind = PartitionKind.SINGLE
    p: int | None = None
    epsilon: float = 0.01
    delta: float = 0.01
    sketch_seed: int = 0
    counter_bits: int = 32
    sum_bits: int = 64
    batch: BatchConfig = field(default_factory=lambda: BatchConfig(B=1000))
    q: int = 10
    seed: int = 0
    shard: ShardPolicy = ShardPolicy.HASH
    strategy: Strategy | None = None
    verify_sums: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "mapping", MappingKind(self.mapping))
        object.__setattr__(self, "partition", PartitionKind(self.partition))
        object.__setattr__(self, "shard", ShardPolicy(self.shard))
        if isinstance(self.batch, dict):
            object.__setattr__(self, "batch", BatchConfig(**self.batch))
        if self.q < 1:
            raise SimConfigError("at least one cycle is required")
        if self.k < 1:
            raise SimConfigError("at least one data node is required")
        implied = Strategy.DEDICATED if self.mapping is MappingKind.DEDICATED else Strategy.DISTRIBUTED
        if self.strategy is not None and Strategy(self.strategy) is not implied:
            raise SimConfigError(f"{self.mapping.value} mappings use the {implied.value} strategy")
        object.__setattr__(self, "strategy", implied)
        natural = _NATURAL_P.get(self.mapping)
        if self.p is None:
            p = natural or (1 if self.partition is PartitionKind.SINGLE else 2)
            object.__setattr__(self, "p", p)
        elif natural and self.p != natural:
            raise SimConfigError(f"{self.mapping.value} mappings use {natural} partitions")
        if self.partition is PartitionKind.SINGLE and self.p != 1:
            raise SimConfigError(f"{self.mapping.value} needs {self.p} partitions; Single has one")

    @property
    def params(self) -> SketchParams:
        return SketchParams.from_guarantees(self.epsilon, self.delta, self.sketch_seed, self.counter_bits)

    @property
    def sum_params(self) -> SketchParams:
        return self.params.with_counter_bits(self.sum_bits)

    def build_mapping(self) -> CoverageMapping:
        f = self.k // 2 if self.mapping is MappingKind.DISTRIBUTED else self.f
        return build_coverage(self.mapping, self.k, f, self.p or 1)

    def to_dict(self) -> dict:
        doc = asdict(self)
        for key in ("mapping", "partition", "shard", "strategy"):
            doc[key] = getattr(self, key).value
        doc["batch"]["kind"] = self.batch.kind.value
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> SimConfig:
        doc = dict(doc)
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise SimConfigError(f"unknown config fields: {sorted(unknown)}")
        if "batch" in doc and isinstance(doc["batch"], dict):
            doc["batch"] = BatchConfig(**doc["batch"])
        return cls(**doc)


@dataclass(frozen=True)
class Failure:
    node: int
    cycle: int
    point: float = 0.5


@dataclass(frozen=True)
class FailureScript:
    """Crash failures: ``point`` is the fraction of the node's cycle slice ingested before it dies."""

    failures: tuple[Failure, ...] = ()

    @classmethod
    def of(cls, *entries: tuple[int, int, float] | tuple[int, int]) -> FailureScript:
        return cls(tuple(Failure(*e) for e in entries))

    def validate(self, q: int, nodes: Iterable[int]) -> None:
        nodes = set(nodes)
        seen = set()
        for fl in self.failures:
            if not 0 <= fl.cycle < q:
                raise SimConfigError(f"failure cycle {fl.cycle} outside 0..{q - 1}")
            if not 0 <= fl.point <= 1:
                raise SimConfigError("failure point must be within [0, 1]")
            if fl.node not in nodes:
                raise SimConfigError(f"unknown node {fl.node}")
            if (fl.node, fl.cycle) in seen:
                raise SimConfigError(f"node {fl.node} fails twice in cycle {fl.cycle}")
            seen.add((fl.node, fl.cycle))

    def at(self, cycle: int) -> dict[int, float]:
        return {fl.node: fl.point for fl in self.failures if fl.cycle == cycle}

    def to_list(self) -> list[list]:
        return [[fl.node, fl.cycle, fl.point] for fl in self.failures]

    @classmethod
    def from_list(cls, rows: Sequence[Sequence]) -> FailureScript:
        return cls(tuple(Failure(int(r[0]), int(r[1]), float(r[2]) if len(r) > 2 else 0.5) for r in rows))


@dataclass
class CycleRecord:
    cycle: int
    arrivals: int = 0
    shares: int = 0
    early_shares: int = 0
    traffic_bits: int = 0
    header_bits: int = 0
    wire_bytes: int = 0
    membership_tests: int = 0
    local_hashes: int = 0
    remote_hashes: int = 0
    failed: list[int] = field(default_factory=list)
    sum_digests: dict[str, str] = field(default_factory=dict)


@dataclass
class RecoveryRecord:
    cycle: int
    failed: list[int]
    status: str
    verified: bool
    items_lost: int
    partitions: dict[str, str] = field(default_factory=dict)
    reason: str = ""


@dataclass
class CostCheck:
    events: int = 0
    predicted_traffic: int = 0
    measured_traffic: int = 0
    predicted_tests: int = 0
    measured_tests: int = 0
    predicted_local: int = 0
    measured_local: int = 0
    predicted_remote: int = 0
    measured_remote: int = 0
    mismatched_events: int = 0

    @property
    def exact(self) -> bool:
        return self.mismatched_events == 0


@dataclass
class SimReport:
    config: dict
    failures: list[list]
    cycles: list[CycleRecord]
    recoveries: list[RecoveryRecord]
    cost_check: CostCheck
    data_digests: dict[str, str]
    sum_digests: dict[str, str]
    lost_nodes: list[int]

    @property
    def unrecoverable(self) -> bool:
        return any(r.status == RecoveryStatus.UNRECOVERABLE.value for r in self.recoveries)

    @property
    def all_verified(self) -> bool:
        return all(r.verified for r in self.recoveries)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["cost_check"]["exact"] = self.cost_check.exact
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    CSV_COLUMNS = (
        "cycle",
        "arrivals",
        "shares",
        "early_shares",
        "traffic_bits",
        "header_bits",
        "wire_bytes",
        "membership_tests",
        "local_hashes",
        "remote_hashes",
        "failed",
        "sum_digest",
    )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_COLUMNS)
        for rec in self.cycles:
            combined = ";".join(f"{k}={v}" for k, v in sorted(rec.sum_digests.items()))
            row = [getattr(rec, c) for c in self.CSV_COLUMNS[:10]]
            writer.writerow(row + [" ".join(map(str, rec.failed)), combined])
        return buf.getvalue()


def shard_of(x: int, position: int, k: int, policy: ShardPolicy, seed: int) -> int:
    if policy is ShardPolicy.ROUND_ROBIN:
        return position % k + 1
    return splitmix64(mix64(x) ^ (seed & ((1 << 64) - 1))) % k + 1


def cycle_slices(trace: Sequence[int], q: int) -> list[tuple[int, int]]:
    n = len(trace)
    return [(c * n // q, (c + 1) * n // q) for c in range(q)]


def _sum_key(holder: int, part: int) -> str:
    return f"h{holder}p{part}"


class World:
    """Mutable state of one run; :func:`run` drives it cycle by cycle."""

    def __init__(self, config: SimConfig, trace: Sequence[int], script: FailureScript) -> None:
        self.config = config
        self.params = config.params
        self.sum_params = config.sum_params
        self.mapping = config.build_mapping()
        self.scheme = PartitionScheme(config.partition, config.p or 1)
        self.codec = ShareCodec(self.params, config.batch, self.scheme, self.mapping)
        self.layout = self.scheme.layout(self.params.d, self.params.w)
        script.validate(config.q, self.mapping.nodes)
        self.script = script
        self.trace = trace
        self.slices = cycle_slices(trace, config.q)
        self.cycle = 0
        self.nodes = {i: SmartCMS(Sketch(self.params), config.batch) for i in self.mapping.data_nodes}
        self.backup = {i: Sketch(self.params) for i in self.mapping.data_nodes}
        self.sums = {(sp.holder, sp.partition): Sketch(self.sum_params) for sp in self.mapping.sumparts}
        self.memory = {h: FullShareMemory() for h in self.mapping.redundant_nodes}
        self.lost: set[int] = set()
        self.cycles: list[CycleRecord] = []
        self.recoveries: list[RecoveryRecord] = []
        self.cost = CostCheck()

    # -- per-cycle work ---------------------------------------------------

    def _holder_sums(self, holder: int) -> dict[int, Sketch]:
        return {part: s for (h, part), s in self.sums.items() if h == holder}

    def _ship(self, sender: int, rec: CycleRecord, inbox: list, early: bool) -> None:
        fw = self.nodes[sender]
        ops = OpCounts()
        cycle = self.cycle
        kind = self.config.batch.kind
        if kind is RepKind.FULL:
            shares = self.codec.encode_full(fw.sketch, sender, cycle, ops)
            self.backup[sender] = fw.sketch.copy()
            batch = None
        else:
            batch = fw.batch
            shares = self.codec.encode_batch(batch, sender, cycle, ops)
            fw.flush()
            self.backup[sender] = fw.sketch.copy()
        for dest in sorted(shares):
            # shares cross the wire as bytes
            inbox.append((dest, shares[dest].to_bytes(), ops))
        rec.shares += len(shares)
        rec.early_shares += int(early)
        self._predict(sender, batch, ops, fw)
        return None

    def _predict(self, sender: int, batch, ops: OpCounts, fw: SmartCMS) -> None:
        kind = self.config.batch.kind
        if kind is not RepKind.FULL and (batch is None or batch.empty):
            return
        ops.local_hashes += fw.local_hashes
        fw.local_hashes = 0
        self._pending.append((sender, batch, ops))

    def _settle_costs(self, down: set[int]) -> None:
        cfg = self.config.batch
        widths = cfg.widths(self.params)
        for sender, batch, ops in self._pending:
            dests = self.mapping.destinations(sender)
            dest_rows = tuple(len(self.codec.dest_rows(dest, sender)) for dest in dests)
            kind = cfg.kind
            fill = batch.fill if batch is not None else 0
            b = batch.distinct_flows if batch is not None and kind.item_based else 0
            c = batch.modified_counters if batch is not None and not kind.item_based else 0
            params = CostParams(
                d=self.params.d,
                w=self.params.w,
                B=cfg.B,
                fill=fill,
                b=b,
                c=c,
                copies=self.mapping.copies(sender, 1),
                dest_rows=dest_rows,
                bits_mid=widths.mid,
                bits_w=widths.w,
                bits_B=widths.B,
                bits_N=widths.N,
                buckets=cfg.buckets,
                partition=self.scheme.kind,
            )
            pred = cost_model(kind, params)
            if kind.item_based and down & set(dests):
                # a holder that is down never hashes the identifiers it was sent
                live = tuple(r for dest, r in zip(dests, dest_rows) if dest not in down)
                at_live = cost_model(kind, replace(params, dest_rows=live))
                pred = replace(pred, remote_ops=at_live.remote_ops, membership_tests=at_live.membership_tests)
            chk = self.cost
            chk.events += 1
            chk.predicted_traffic += pred.traffic_bits
            chk.measured_traffic += ops.traffic_bits
            chk.predicted_tests += pred.membership_tests
            chk.measured_tests += ops.membership_tests
            chk.predicted_local += pred.local_ops
            chk.measured_local += ops.local_hashes
            chk.predicted_remote += pred.remote_ops
            chk.measured_remote += ops.remote_hashes
            if (pred.traffic_bits, pred.membership_tests, pred.local_ops, pred.remote_ops) != (
                ops.traffic_bits,
                ops.membership_tests,
                ops.local_hashes,
                ops.remote_hashes,
            ):
                chk.mismatched_events += 1
        self._pending = []

    def step_cycle(self) -> CycleRecord:
        cfg = self.config
        rec = CycleRecord(self.cycle)
        failing = {n: p for n, p in self.script.at(self.cycle).items() if n not in self.lost}
        start, end = self.slices[self.cycle]
        per_node: dict[int, list[int]] = {i: [] for i in self.nodes}
        for pos in range(start, end):
            x = self.trace[pos]
            per_node[shard_of(x, pos, cfg.k, cfg.shard, cfg.seed)].append(x)
        inbox: list = []
        self._pending: list = []
        crashed: dict[int, int] = {}
        for i in sorted(self.nodes):
            if i in self.lost:
                continue
            items = per_node[i]
            fw = self.nodes[i]
            cut = int(failing[i] * len(items)) if i in failing else len(items)
            sent = False
            for x in items[:cut]:
                rec.arrivals += 1
                if fw.update(x):
                    self._ship(i, rec, inbox, early=True)
                    sent = True
            if i in failing:
                crashed[i] = fw.fill if fw.batch is not None else self._unshared(i)
                continue
            if fw.batch is None:
                if items or not sent:
                    if items:
                        self._ship(i, rec, inbox, early=False)
                    else:
                        self._alive(i, rec, inbox)
            elif not fw.batch.empty:
                self._ship(i, rec, inbox, early=False)
            elif not sent:
                self._alive(i, rec, inbox)
        down = set(failing) | self.lost
        # holders drain their inbox at the end of the cycle
        for dest, data, ops in inbox:
            if dest in down:
                continue
            self.codec.apply(Share.from_bytes(data), dest, self._holder_sums(dest), ops, self.memory.get(dest))
        self._settle_costs(down)
        for ops_rec in {id(o): o for _, _, o in inbox}.values():
            for name in ("traffic_bits", "header_bits", "wire_bytes", "membership_tests", "local_hashes", "remote_hashes"):
                setattr(rec, name, getattr(rec, name) + getattr(ops_rec, name))
        if failing:
            rec.failed = sorted(failing)
            self.detect_and_recover(set(failing), crashed)
        if cfg.verify_sums:
            self._verify_sums()
        rec.sum_digests = {_sum_key(h, p): s.digest() for (h, p), s in sorted(self.sums.items())}
        self.cycles.append(rec)
        self.cycle += 1
        return rec

    def _alive(self, sender: int, rec: CycleRecord, inbox: list) -> None:
        ops = OpCounts()
        shares = self.codec.encode_alive(sender, self.cycle, ops)
        for dest in sorted(shares):
            inbox.append((dest, shares[dest].to_bytes(), ops))
        rec.shares += len(shares)

    def _unshared(self, node: int) -> int:
        return int(self.nodes[node].sketch.total - self.backup[node].total)

    # -- recovery ---------------------------------------------------------

    def _mask(self, part: int) -> np.ndarray:
        return (self.layout == part).astype(np.int64)

    def _piece(self, sketch: Sketch, part: int) -> Sketch:
        return Sketch(self.params, sketch.counts * self._mask(part), 0)

    def _source(self, ref: Ref, part: int, data: dict[int, Sketch]) -> Sketch:
        if ref.kind == "D":
            return self._piece(data[ref.index], part)
        s = self.sums[ref.index, part]
        return Sketch(self.params, s.counts.copy(), 0)

    def detect_and_recover(self, failed: set[int], crashed: dict[int, int]) -> RecoveryRecord:
        cfg = self.config
        data_failed = sorted(n for n in failed if n in self.nodes)
        rec = RecoveryRecord(self.cycle, sorted(failed), RecoveryStatus.EXACT.value, True, sum(crashed.values()))
        # erase the failed nodes atomically
        for n in failed:
            for key in [key for key in self.sums if key[0] == n]:
                self.sums[key] = Sketch(self.sum_params)
            if n in self.memory:
                self.memory[n] = FullShareMemory()
        live_data = {i: self.nodes[i].sketch for i in self.nodes if i not in failed and i not in self.lost}
        statuses = []
        recovered: dict[int, np.ndarray] = {}
        over = cfg.strategy is Strategy.DISTRIBUTED and len(failed | self.lost) > cfg.k // 2
        for part in range(1, self.scheme.p + 1):
            if over:
                plan = RecoveryPlan(RecoveryStatus.UNRECOVERABLE, reason="more concurrent failures than floor(k/2)")
            else:
                plan = self.mapping.plan_partition(part, failed | self.lost)
            statuses.append(plan.status)
            rec.partitions[str(part)] = plan.status.value
            if plan.reason and not rec.reason:
                rec.reason = plan.reason
            if plan.status is RecoveryStatus.UNRECOVERABLE:
                continue
            for n in data_failed:
                if plan.status is RecoveryStatus.EXACT:
                    combo = plan.combos[D(n)]
                    refs = sorted(combo)
                    piece = linear_combine([combo[r] for r in refs], [self._source(r, part, live_data) for r in refs])
                    counts = piece.counts
                else:
                    counts = self._semi_piece(plan, n, part, live_data)
                mask = self._mask(part)
                recovered[n] = recovered.get(n, 0) + counts * mask
        status = RecoveryStatus.worst(statuses)
        rec.status = status.value
        for n in data_failed:
            if status is RecoveryStatus.UNRECOVERABLE:
                self.lost.add(n)
                rec.verified = False
                continue
            counts = recovered[n]
            sk = Sketch(self.params, np.asarray(counts, dtype=object).copy(), 0)
            sk.total = int(sum(sk.counts[0]))
            if status is RecoveryStatus.EXACT:
                rec.verified &= sk == self.backup[n]
            else:
                rec.verified &= sk.dominates(self.backup[n])
            self.nodes[n] = SmartCMS(sk, cfg.batch)
            self.backup[n] = sk.copy()
        if status is not RecoveryStatus.UNRECOVERABLE:
            # upper bounds replace the data, so every sum covering it is refreshed
            refreshed = set(data_failed) if status is RecoveryStatus.SEMI else set()
            self._rebuild(failed, refreshed)
        self.recoveries.append(rec)
        return rec

    def _semi_piece(self, plan: RecoveryPlan, node: int, part: int, data: dict[int, Sketch]):
        best = None
        for bound in plan.bounds[D(node)]:
            acc = None
            for ref, c in bound.combo.items():
                term = self._source(ref, part, data).counts * c
                acc = term if acc is None else acc + term
            acc = acc // bound.divisor
            best = acc if best is None else np.minimum(best, acc)
        return best

    def _rebuild(self, failed: set[int], refreshed: set[int] = frozenset()) -> None:  # type: ignore[assignment]
        """Reconstruct the sum-sketches a failed holder kept, from current data sketches."""
        for sp in self.mapping.sumparts:
            if sp.holder not in failed and not refreshed & set(sp.members):
                continue
            if sp.holder in self.lost:
                continue
            mask = self._mask(sp.partition)
            acc = Sketch(self.sum_params)
            for m, c in sp.coeffs:
                if m in self.lost:
                    continue
                acc.counts = acc.counts + c * self.backup[m].counts * mask
            acc.check_bounds()
            self.sums[sp.holder, sp.partition] = acc
            if self.config.batch.kind is RepKind.FULL:
                mem = self.memory[sp.holder]
                for m, _ in sp.coeffs:
                    cells = self.codec.covered_cells(sp.holder, m)
                    mem.last[m] = {cell: int(self.backup[m].counts[cell]) for cell in cells}

    def _verify_sums(self) -> None:
        for sp in self.mapping.sumparts:
            if sp.holder in self.lost:
                continue
            mask = self._mask(sp.partition)
            expect = sum((c * self.backup[m].counts * mask for m, c in sp.coeffs if m not in self.lost), start=0)
            got = self.sums[sp.holder, sp.partition].counts
            if not bool((got == expect).all()) and not self.lost:
                raise AssertionError(f"sum-sketch at node {sp.holder}, partition {sp.partition} drifted")

    def report(self) -> SimReport:
        return SimReport(
            config=self.config.to_dict(),
            failures=self.script.to_list(),
            cycles=self.cycles,
            recoveries=self.recoveries,
            cost_check=self.cost,
            data_digests={f"n{i}": fw.sketch.digest() for i, fw in sorted(self.nodes.items())},
            sum_digests={_sum_key(h, p): s.digest() for (h, p), s in sorted(self.sums.items())},
            lost_nodes=sorted(self.lost),
        )


def run(config: SimConfig, trace: Sequence[int], script: FailureScript | None = None) -> SimReport:
    world = World(config, trace, script or FailureScript())
    for _ in range(config.q):
        world.step_cycle()
    return world.report()
