"""
Cut planning: group crossing gates into jointly cut blocks and count paths.

Grouping is a greedy left-to-right cascade collection. Starting from the
earliest ungrouped crossing gate, later crossing gates that share an anchor
qubit with it are pulled backwards next to it, provided every gate they skip
commutes with them and the block support stays under the qubit cap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import Circuit, CutSpec, Gate, GateSide, build_gate, classify_gate
from .errors import BlockTooLarge
from .linalg import apply_matrix
from .schmidt import (
    DEFAULT_MAX_BLOCK_QUBITS,
    SchmidtDecomposition,
    analytic_cascade_decomposition,
    assemble_block_matrix,
    block_support,
    schmidt_decompose,
)

COMMUTE_ATOL = 1e-12
# numeric commutator fallback is skipped above this union size
COMMUTE_MAX_QUBITS = 10

STANDARD = "standard"
JOINT = "joint"


def commutes(g1: Gate, g2: Gate) -> bool:
    """Conservative commutation test; ``False`` means "not shown to commute"."""
    q1, q2 = set(g1.qubits), set(g2.qubits)
    if q1.isdisjoint(q2):
        return True
    if g1.is_diagonal and g2.is_diagonal:
        return True
    support = sorted(q1 | q2, reverse=True)
    if len(support) > COMMUTE_MAX_QUBITS:
        return False
    a = assemble_block_matrix([g1, g2], support, COMMUTE_MAX_QUBITS)
    b = assemble_block_matrix([g2, g1], support, COMMUTE_MAX_QUBITS)
    return bool(np.max(np.abs(a - b)) < COMMUTE_ATOL)


@dataclass
class CutUnit:
    gates: tuple[Gate, ...]
    support_high: tuple[int, ...]
    support_low: tuple[int, ...]
    position: int
    decomposition: SchmidtDecomposition | None = None

    @property
    def support(self) -> tuple[int, ...]:
        return self.support_high + self.support_low

    @property
    def is_block(self) -> bool:
        return len(self.gates) > 1

    @property
    def rank(self) -> int:
        if self.decomposition is None:
            raise ValueError("unit has not been decomposed")
        return self.decomposition.rank

    @property
    def rank_bound(self) -> int:
        return min(4 ** len(self.support_high), 4 ** len(self.support_low))

    def matrix(self, max_qubits: int = DEFAULT_MAX_BLOCK_QUBITS) -> np.ndarray:
        return assemble_block_matrix(self.gates, self.support, max_qubits)

    def decompose(self, max_qubits: int = DEFAULT_MAX_BLOCK_QUBITS, analytic: bool = True) -> CutUnit:
        """Attach the operator Schmidt decomposition.

        Uniform cascades use the closed form and skip assembling the dense
        block; everything else goes through the SVD.
        """
        if len(self.support) > max_qubits:
            raise BlockTooLarge(f"block on {len(self.support)} qubits exceeds cap {max_qubits}")
        shape = cascade_shape(self) if analytic else None
        if shape is not None:
            self.decomposition = analytic_cascade_decomposition(*shape)
        else:
            self.decomposition = schmidt_decompose(self.matrix(max_qubits), len(self.support_low))
        return self


_CASCADE_KINDS = {"cnot", "cz", "rzz"}


def cascade_shape(unit: CutUnit) -> tuple[str, int, str, float | None] | None:
    """``(kind, fan, anchor_side, theta)`` if ``unit`` is a uniform cascade, else ``None``.

    Uniform means identical library gates (same name, angle and matrix) that
    all share one anchor qubit and hit distinct qubits on the other side; for
    CNOT the anchor must be the control.
    """
    first = unit.gates[0]
    if first.name not in _CASCADE_KINDS:
        return None
    if len(unit.support_low) == 1:
        anchor, side, others = unit.support_low[0], "low", unit.support_high
    elif len(unit.support_high) == 1:
        anchor, side, others = unit.support_high[0], "high", unit.support_low
    else:
        return None
    if len(others) != len(unit.gates):
        return None
    ref = build_gate(first.name, first.params, (0, 1)).matrix
    for g in unit.gates:
        if g.name != first.name or g.params != first.params or anchor not in g.qubits:
            return None
        if first.name == "cnot" and g.qubits[0] != anchor:
            return None
        if not np.array_equal(g.matrix, ref):
            return None
    theta = first.params[0] if first.name == "rzz" else None
    return first.name, len(unit.gates), side, theta


def make_unit(gates: Sequence[Gate], cut: CutSpec, position: int = 0) -> CutUnit:
    high, low = block_support(gates, cut.l)
    if not high or not low:
        raise ValueError("a cut unit must touch both sides of the cut")
    return CutUnit(tuple(gates), high, low, position)


@dataclass(frozen=True)
class CutPlan:
    """Partitioned schedule.

    Execution order is ``segment[0], unit[0], segment[1], unit[1], ...,
    segment[m]`` where ``segment[k]`` is ``local_low[k]`` on the low half and
    ``local_high[k]`` on the high half (they act on disjoint qubits).
    """

    cut: CutSpec
    mode: str
    units: tuple[CutUnit, ...]
    local_low: tuple[tuple[Gate, ...], ...]
    local_high: tuple[tuple[Gate, ...], ...]

    @property
    def n_p(self) -> int:
        return math.prod(u.rank for u in self.units)

    @property
    def radices(self) -> tuple[int, ...]:
        return tuple(u.rank for u in self.units)

    @property
    def num_gates(self) -> int:
        return (
            sum(len(u.gates) for u in self.units)
            + sum(map(len, self.local_low))
            + sum(map(len, self.local_high))
        )

    def replay_unitary(self, max_qubits: int = 12) -> np.ndarray:
        """Dense unitary of the plan, applying each unit as its Schmidt reconstruction."""
        n = self.cut.num_qubits
        if n > max_qubits:
            raise ValueError(f"dense replay refused for {n} > {max_qubits} qubits")
        u = np.eye(2**n, dtype=complex)
        for k in range(len(self.units) + 1):
            for g in self.local_low[k] + self.local_high[k]:
                u = apply_matrix(u, g.matrix, g.qubits, g.is_diagonal)
            if k < len(self.units):
                unit = self.units[k]
                u = apply_matrix(u, unit.decomposition.reconstruct(), unit.support)
        return u


@dataclass(frozen=True)
class PathCountReport:
    n_p_standard: int
    n_p_joint: int
    block_bounds: tuple[int, ...]
    block_ranks: tuple[int, ...]
    block_count: int
    separate_count: int
    crossing_count: int

    def to_dict(self) -> dict:
        return {
            "n_p_standard": self.n_p_standard,
            "n_p_joint": self.n_p_joint,
            "log2_n_p_standard": math.log2(self.n_p_standard),
            "log2_n_p_joint": math.log2(self.n_p_joint),
            "block_bounds": list(self.block_bounds),
            "block_ranks": list(self.block_ranks),
            "blocks": self.block_count,
            "separate": self.separate_count,
            "separate_cuts_standard": self.crossing_count,
        }


def _anchor_candidates(g: Gate, cut: CutSpec) -> list[int]:
    low = sorted(q for q in g.qubits if cut.is_low(q))
    high = sorted(q for q in g.qubits if not cut.is_low(q))
    return low + high


def _collect(
    seq: list[Gate], start: int, anchor: int, cut: CutSpec, cap: int
) -> list[int]:
    """Indices of later crossing gates that can join the block begun at ``seq[start]``."""
    head = seq[start]
    support = set(head.qubits)
    picked: list[int] = []
    blockers: dict[int, list[Gate]] = {}
    for j in range(start + 1, len(seq)):
        h = seq[j]
        if (
            anchor in h.qubits
            and classify_gate(h, cut) is GateSide.CROSSING
            and len(support | set(h.qubits)) <= cap
            and all(commutes(h, b) for q in h.qubits for b in blockers.get(q, ()))
        ):
            picked.append(j)
            support.update(h.qubits)
            continue
        for q in h.qubits:
            blockers.setdefault(q, []).append(h)
    return picked


def _schedule(circuit: Circuit, cut: CutSpec, mode: str, cap: int) -> list:
    """Reordered gate sequence; crossing groups appear as lists of gates."""
    seq = list(circuit.gates)
    out: list = []
    i = 0
    while i < len(seq):
        g = seq[i]
        if classify_gate(g, cut) is not GateSide.CROSSING:
            out.append(g)
            i += 1
            continue
        best: list[int] = []
        if mode == JOINT and g.num_qubits <= cap:
            for anchor in _anchor_candidates(g, cut):
                picked = _collect(seq, i, anchor, cut, cap)
                if len(picked) > len(best):
                    best = picked
        out.append([g] + [seq[j] for j in best])
        for j in reversed(best):
            del seq[j]
        i += 1
    return out


def find_blocks(
    circuit: Circuit, cut: CutSpec, max_block_qubits: int = DEFAULT_MAX_BLOCK_QUBITS
) -> list[CutUnit]:
    """Cut units (undecomposed) in schedule order for joint cutting."""
    if max_block_qubits < 2:
        raise ValueError("max_block_qubits must be at least 2")
    items = _schedule(circuit, cut, JOINT, max_block_qubits)
    units = [item for item in items if isinstance(item, list)]
    return [make_unit(gs, cut, k) for k, gs in enumerate(units)]


def path_counts(circuit: Circuit, cut: CutSpec, units: Sequence[CutUnit]) -> PathCountReport:
    """Standard (per-gate) versus joint (per-unit) path counts.

    ``circuit`` is only used to cross-check that ``units`` cover all of its
    crossing gates.
    """
    n_crossing = sum(classify_gate(g, cut) is GateSide.CROSSING for g in circuit.gates)
    covered = sum(len(u.gates) for u in units)
    if covered != n_crossing:
        raise ValueError(f"units cover {covered} of {n_crossing} crossing gates")
    n_std, n_joint = 1, 1
    bounds, ranks = [], []
    blocks = separate = 0
    for u in units:
        if u.decomposition is None:
            raise ValueError("path_counts needs decomposed units")
        if u.is_block:
            member = math.prod(make_unit([g], cut).decompose().rank for g in u.gates)
            if u.rank > member:
                raise AssertionError(
                    f"block rank {u.rank} exceeds product of member ranks {member}"
                )
            blocks += 1
            bounds.append(u.rank_bound)
            ranks.append(u.rank)
        else:
            member = u.rank
            separate += 1
        n_std *= member
        n_joint *= u.rank
    return PathCountReport(
        n_std, n_joint, tuple(bounds), tuple(ranks), blocks, separate, n_crossing
    )


def build_plan(
    circuit: Circuit,
    cut: CutSpec,
    mode: str = JOINT,
    max_block_qubits: int = DEFAULT_MAX_BLOCK_QUBITS,
) -> CutPlan:
    """Partition ``circuit`` at ``cut`` and decompose every cut unit.

    Blocks that fail dense assembly (support above ``DEFAULT_MAX_BLOCK_QUBITS``)
    are split back into separately cut gates.
    """
    if mode not in (STANDARD, JOINT):
        raise ValueError(f"unknown mode {mode!r}")
    if cut.num_qubits != circuit.num_qubits:
        raise ValueError("cut and circuit disagree on the qubit count")
    items = _schedule(circuit, cut, mode, max_block_qubits)

    units: list[CutUnit] = []
    low: list[list[Gate]] = [[]]
    high: list[list[Gate]] = [[]]
    for item in items:
        if isinstance(item, Gate):
            side = classify_gate(item, cut)
            (low if side is GateSide.LOCAL_LOW else high)[-1].append(item)
            continue
        try:
            parts = [make_unit(item, cut).decompose()]
        except BlockTooLarge:
            parts = [make_unit([g], cut).decompose() for g in item]
        for unit in parts:
            unit.position = len(units)
            units.append(unit)
            low.append([])
            high.append([])
    return CutPlan(
        cut,
        mode,
        tuple(units),
        tuple(map(tuple, low)),
        tuple(map(tuple, high)),
    )


def plan_report(circuit: Circuit, plan: CutPlan) -> PathCountReport:
    return path_counts(circuit, plan.cut, plan.units)
