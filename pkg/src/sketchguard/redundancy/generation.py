"""Generation matrices and exact recovery plans.

A plan expresses every erased sketch as a rational combination of surviving
ones. Erased data rows are replaced, in node order, by the first unused
surviving redundant row with a non-zero coefficient for that node; the
resulting ``k x k`` system is inverted exactly. If that choice is singular,
the other assignments of surviving rows are tried in order. Only when all of
them are singular does the plan degrade to semi-recovery (upper bounds) or,
failing that, to unrecoverable.
"""

from __future__ import annotations

import enum
import re
from itertools import chain, combinations, permutations
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from ..sketch import Sketch, linear_combine
from .exact import SingularMatrixError, inverse
from .matrices import IntMatrix, circular_displacement, mr_full, mr_generate


class Strategy(str, enum.Enum):
    DEDICATED = "dedicated"
    DISTRIBUTED = "distributed"


class RecoveryStatus(str, enum.Enum):
    EXACT = "exact"
    SEMI = "semi"
    UNRECOVERABLE = "unrecoverable"

    @staticmethod
    def worst(statuses: Iterable[RecoveryStatus]) -> RecoveryStatus:
        order = [RecoveryStatus.EXACT, RecoveryStatus.SEMI, RecoveryStatus.UNRECOVERABLE]
        return max(statuses, key=order.index, default=RecoveryStatus.EXACT)


_REF_RE = re.compile(r"^([DR])(\d+)$")


@dataclass(frozen=True, order=True)
class Ref:
    """A sketch in the system: ``D3`` is data node 3, ``R2`` is redundant vector 2."""

    kind: str
    index: int

    @classmethod
    def parse(cls, text: str | Ref) -> Ref:
        if isinstance(text, Ref):
            return text
        m = _REF_RE.match(text.strip().upper())
        if not m:
            raise ValueError(f"not a sketch reference: {text!r}")
        return cls(m.group(1), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.kind}{self.index}"


def D(i: int) -> Ref:
    return Ref("D", i)


def R(i: int) -> Ref:
    return Ref("R", i)


@dataclass(frozen=True)
class GenerationMatrix:
    """Identity over the data nodes stacked on the redundant rows.

    ``redundant[r]`` is the coefficient vector of ``R_{r+1}``; ``holders[r]`` is
    the node id storing it. Dedicated holders are ``k+1 .. k+f``; distributed
    holders are the data nodes themselves.
    """

    strategy: Strategy
    k: int
    redundant: IntMatrix
    holders: tuple[int, ...]

    @classmethod
    def dedicated(cls, k: int, f: int) -> GenerationMatrix:
        return cls(Strategy.DEDICATED, k, mr_generate(k, f), tuple(range(k + 1, k + f + 1)))

    @classmethod
    def distributed(cls, k: int) -> GenerationMatrix:
        return cls(Strategy.DISTRIBUTED, k, circular_displacement(mr_full(k)), tuple(range(1, k + 1)))

    @property
    def f(self) -> int:
        return len(self.redundant)

    @property
    def tolerance(self) -> int:
        return self.f if self.strategy is Strategy.DEDICATED else self.k // 2

    def rows(self) -> list[list[int]]:
        ident = [[int(i == j) for j in range(self.k)] for i in range(self.k)]
        return ident + [list(r) for r in self.redundant]

    def physical_redundant(self) -> IntMatrix:
        """Stored coefficients: a distributed node never sums its own sketch."""
        if self.strategy is Strategy.DEDICATED:
            return self.redundant
        return tuple(
            tuple(0 if j + 1 == holder else c for j, c in enumerate(row))
            for row, holder in zip(self.redundant, self.holders)
        )

    def refs_of_node(self, node: int) -> list[Ref]:
        if self.strategy is Strategy.DISTRIBUTED:
            if not 1 <= node <= self.k:
                raise ValueError(f"unknown node {node}")
            return [D(node), R(node)]
        if 1 <= node <= self.k:
            return [D(node)]
        if self.k < node <= self.k + self.f:
            return [R(node - self.k)]
        raise ValueError(f"unknown node {node}")

    def erased_refs(self, failed: Iterable[int | str | Ref]) -> set[Ref]:
        out: set[Ref] = set()
        for item in failed:
            if isinstance(item, int):
                out.update(self.refs_of_node(item))
            else:
                ref = Ref.parse(item)
                if self.strategy is Strategy.DISTRIBUTED:
                    out.update(self.refs_of_node(ref.index))
                else:
                    out.add(ref)
        return out


@dataclass(frozen=True)
class SemiBound:
    """``failed <= floor(X / divisor)`` with ``X = sum(combo)`` over surviving sketches."""

    source: Ref
    divisor: int
    combo: dict[Ref, int]


@dataclass
class RecoveryPlan:
    status: RecoveryStatus
    sources: tuple[Ref, ...] = ()
    combos: dict[Ref, dict[Ref, Fraction]] = field(default_factory=dict)
    bounds: dict[Ref, list[SemiBound]] = field(default_factory=dict)
    reason: str = ""

    def coefficients(self, target: Ref | str) -> dict[Ref, Fraction]:
        return self.combos[Ref.parse(target)]

    def describe(self) -> dict[str, str]:
        out = {}
        for target, combo in sorted(self.combos.items()):
            terms = [f"{c}*{src}" for src, c in combo.items()]
            out[str(target)] = " + ".join(terms) if terms else "0"
        return out


def _nonzero(combo: Mapping[Ref, Fraction]) -> dict[Ref, Fraction]:
    return {ref: c for ref, c in combo.items() if c != 0}


def solve_erasures(
    k: int,
    failed_data: Iterable[int],
    redundant: Sequence[tuple[Ref, Sequence[int]]],
) -> RecoveryPlan:
    """Plan for erased data nodes given surviving redundant rows (in preference order).

    Surviving data rows are the identity rows of the nodes not in ``failed_data``.
    Only data targets appear in the returned plan.
    """
    failed = sorted(set(failed_data))
    if not failed:
        return RecoveryPlan(RecoveryStatus.EXACT, tuple(D(j) for j in range(1, k + 1)))
    first = _first_available(k, failed, redundant)
    rest = (c for c in _alternatives(k, failed, redundant) if c != first)
    for choice in chain([first] if first is not None else [], rest):
        sources, rows = _system(k, failed, redundant, choice)
        try:
            inv = inverse(rows)
        except SingularMatrixError:
            continue
        combos = {D(j): _nonzero(dict(zip(sources, inv[j - 1]))) for j in failed}
        return RecoveryPlan(RecoveryStatus.EXACT, tuple(sources), combos)
    return _semi_plan(k, failed, redundant)


def _first_available(k, failed, redundant) -> tuple[int, ...] | None:
    used: list[int] = []
    for j in failed:
        pick = next((n for n, (_, vec) in enumerate(redundant) if n not in used and vec[j - 1] != 0), None)
        if pick is None:
            return None
        used.append(pick)
    return tuple(used)


def _alternatives(k, failed, redundant):
    """Other injective row choices, in lexicographic order of row positions."""
    for combo in combinations(range(len(redundant)), len(failed)):
        for perm in permutations(combo):
            if all(redundant[n][1][j - 1] != 0 for n, j in zip(perm, failed)):
                yield perm


def _system(k, failed, redundant, choice):
    pick = dict(zip(failed, choice))
    sources: list[Ref] = []
    rows: list[Sequence[int]] = []
    for j in range(1, k + 1):
        if j in pick:
            ref, vec = redundant[pick[j]]
            sources.append(ref)
            rows.append(list(vec))
        else:
            sources.append(D(j))
            rows.append([int(i == j) for i in range(1, k + 1)])
    return sources, rows


def _semi_plan(k: int, failed: list[int], redundant) -> RecoveryPlan:
    bounds: dict[Ref, list[SemiBound]] = {}
    for j in failed:
        for ref, vec in redundant:
            if vec[j - 1] == 0:
                continue
            combo = {ref: 1}
            for i in range(1, k + 1):
                if i not in failed and vec[i - 1] != 0:
                    combo[D(i)] = -vec[i - 1]
            bounds.setdefault(D(j), []).append(SemiBound(ref, vec[j - 1], combo))
    missing = [j for j in failed if D(j) not in bounds]
    if missing:
        return RecoveryPlan(
            RecoveryStatus.UNRECOVERABLE,
            bounds=bounds,
            reason=f"no surviving redundancy covers node(s) {missing}",
        )
    return RecoveryPlan(RecoveryStatus.SEMI, bounds=bounds, reason="surviving rows are linearly dependent")


def recovery_plan(g: GenerationMatrix, failed: Iterable[int | str | Ref]) -> RecoveryPlan:
    """Plan recovery of every erased sketch in ``g``.

    ``failed`` holds node ids or references such as ``"D2"``/``"R1"``. In the
    distributed strategy a reference names its node, which erases both of
    that node's sketches.
    """
    erased = g.erased_refs(failed)
    if g.strategy is Strategy.DISTRIBUTED:
        nodes = {ref.index for ref in erased}
        if len(nodes) > g.tolerance:
            return RecoveryPlan(
                RecoveryStatus.UNRECOVERABLE,
                reason=f"{len(nodes)} concurrent failures exceed floor(k/2) = {g.tolerance}",
            )
    failed_data = sorted(ref.index for ref in erased if ref.kind == "D")
    surviving = [(R(r + 1), row) for r, row in enumerate(g.redundant) if R(r + 1) not in erased]
    plan = solve_erasures(g.k, failed_data, surviving)
    if plan.status is not RecoveryStatus.EXACT:
        return plan
    # redundancy is rebuilt from data once the data is back
    for ref in sorted(erased):
        if ref.kind != "R":
            continue
        combo: dict[Ref, Fraction] = {}
        for j, c in enumerate(g.redundant[ref.index - 1], start=1):
            if c == 0:
                continue
            parts = plan.combos[D(j)] if j in failed_data else {D(j): Fraction(1)}
            for src, v in parts.items():
                combo[src] = combo.get(src, Fraction(0)) + c * v
        plan.combos[ref] = _nonzero(combo)
    return plan


def apply_plan(plan: RecoveryPlan, sketches: Mapping[Ref, Sketch]) -> dict[Ref, Sketch]:
    """Rebuild every planned target from the surviving ``sketches``."""
    if plan.status is not RecoveryStatus.EXACT:
        raise ValueError(f"cannot apply a {plan.status.value} plan exactly")
    out = {}
    for target, combo in plan.combos.items():
        refs = list(combo)
        out[target] = linear_combine([combo[r] for r in refs], [sketches[r] for r in refs])
    return out


def semi_bound(bounds: Sequence[SemiBound], sketches: Mapping[Ref, Sketch]) -> Sketch:
    """Element-wise minimum of ``floor(X / divisor)`` over the available bounds."""
    best = None
    for b in bounds:
        refs = list(b.combo)
        x = linear_combine([b.combo[r] for r in refs], [sketches[r] for r in refs])
        counts = x.counts // b.divisor
        best = counts if best is None else _elementwise_min(best, counts)
    first = sketches[bounds[0].source]
    out = Sketch(first.params, best, 0)
    out.total = int(sum(out.counts[0]))
    return out


def _elementwise_min(a, b):
    out = a.copy()
    mask = b < a
    out[mask] = b[mask]
    return out


def semi_recover(
    g: GenerationMatrix, failed: Iterable[int | str | Ref], sketches: Mapping[Ref, Sketch]
) -> dict[Ref, Sketch]:
    """Upper-bound sketches for erased data when exact recovery is impossible.

    Example: ``X = D1 + 2*D2`` known gives ``D1' = X`` and ``D2' = floor(X/2)``.
    """
    plan = recovery_plan(g, failed)
    if plan.status is not RecoveryStatus.SEMI:
        raise ValueError(f"semi-recovery needs a semi plan, got {plan.status.value}")
    return {target: semi_bound(bounds, sketches) for target, bounds in plan.bounds.items()}


def to_physical(plan: RecoveryPlan, g: GenerationMatrix) -> RecoveryPlan:
    """Rewrite a distributed plan over stored sum-sketches ``S_i = R_i - c_ii * D_i``."""
    if g.strategy is Strategy.DEDICATED or plan.status is RecoveryStatus.UNRECOVERABLE:
        return plan

    def rewrite(combo):
        out = dict(combo)
        for src, c in combo.items():
            if src.kind == "R":
                own = D(g.holders[src.index - 1])
                self_coeff = g.redundant[src.index - 1][own.index - 1]
                out[own] = out.get(own, 0) + c * self_coeff
        return {ref: c for ref, c in out.items() if c != 0}

    combos = {target: rewrite(combo) for target, combo in plan.combos.items()}
    bounds = {
        target: [SemiBound(b.source, b.divisor, rewrite(b.combo)) for b in bs]
        for target, bs in plan.bounds.items()
    }
    return RecoveryPlan(plan.status, plan.sources, combos, bounds, plan.reason)
