"""
Hybrid Schrödinger-Feynman execution of a :class:`~jointhsf.planner.CutPlan`.

Paths are indexed mixed-radix with unit 0 as the most significant digit.
They are visited depth-first, so the half-states reached after unit ``k``
are computed once and shared by every path with the same leading digits.
Leaf contributions are summed in batches with one matrix product per batch:
``psi[(i_high, i_low)] += sum_p c_p high_p[i_high] low_p[i_low]``.
"""
from __future__ import annotations

import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .circuit import Circuit, CutSpec
from .errors import MemoryCapExceeded, PathBudgetExceeded
from .linalg import apply_matrix, zero_state
from .planner import JOINT, CutPlan, build_plan
from .schmidt import DEFAULT_MAX_BLOCK_QUBITS
from .schrodinger import DEFAULT_MAX_QUBITS, SimulationResult, resolve_amp_count

DEFAULT_PATH_BUDGET = 2**26
BATCH_PATHS = 64


@dataclass(frozen=True)
class PathIndex:
    linear: int
    digits: tuple[int, ...]


def digits_of(linear: int, radices: Sequence[int]) -> tuple[int, ...]:
    out = []
    for r in reversed(radices):
        linear, d = divmod(linear, r)
        out.append(d)
    if linear:
        raise ValueError("path index out of range")
    return tuple(reversed(out))


def linear_of(digits: Sequence[int], radices: Sequence[int]) -> int:
    p = 0
    for d, r in zip(digits, radices):
        if not 0 <= d < r:
            raise ValueError(f"digit {d} outside radix {r}")
        p = p * r + d
    return p


def check_budget(plan: CutPlan, budget: int | None) -> int:
    n_p = plan.n_p
    if budget is not None and n_p > budget:
        raise PathBudgetExceeded(n_p, budget)
    return n_p


def enumerate_paths(
    plan: CutPlan,
    start: int = 0,
    stop: int | None = None,
    budget: int | None = DEFAULT_PATH_BUDGET,
) -> Iterator[PathIndex]:
    """Path indices ``[start, stop)`` in ascending order."""
    n_p = check_budget(plan, budget)
    stop = n_p if stop is None else min(stop, n_p)
    radices = plan.radices
    for p in range(start, stop):
        yield PathIndex(p, digits_of(p, radices))


def split_range(n_p: int, parts: int) -> list[tuple[int, int]]:
    """Contiguous, near-equal ``[start, stop)`` chunks covering ``[0, n_p)``."""
    parts = max(1, min(parts, n_p))
    bounds = [n_p * k // parts for k in range(parts + 1)]
    return [(bounds[k], bounds[k + 1]) for k in range(parts)]


@dataclass
class PathResult:
    index: PathIndex
    coefficient: complex
    low: np.ndarray
    high: np.ndarray


@dataclass
class HalfStateTracker:
    """Counts half-state allocations made while walking paths."""

    max_len: int = 0
    allocations: int = 0

    def record(self, arr: np.ndarray) -> np.ndarray:
        self.allocations += 1
        if arr.size > self.max_len:
            self.max_len = arr.size
        return arr

    def merge(self, other: HalfStateTracker) -> None:
        self.max_len = max(self.max_len, other.max_len)
        self.allocations += other.allocations


# (matrix, half-local qubits, is_diagonal)
_Op = tuple


@dataclass
class _CompiledPlan:
    n_low: int
    n_high: int
    radices: tuple[int, ...]
    low_segments: list[list[_Op]]
    high_segments: list[list[_Op]]
    # per unit, per digit: (sigma, low op, high op)
    factors: list[list[tuple[float, _Op, _Op]]] = field(default_factory=list)


def _compile(plan: CutPlan) -> _CompiledPlan:
    nb = plan.cut.n_low

    def local(gates, shift):
        return [(g.matrix, tuple(q - shift for q in g.qubits), g.is_diagonal) for g in gates]

    factors = []
    for unit in plan.units:
        lq = tuple(unit.support_low)
        hq = tuple(q - nb for q in unit.support_high)
        factors.append(
            [(t.sigma, (t.low, lq, None), (t.high, hq, None)) for t in unit.decomposition.terms]
        )
    return _CompiledPlan(
        nb,
        plan.cut.n_high,
        plan.radices,
        [local(seg, 0) for seg in plan.local_low],
        [local(seg, nb) for seg in plan.local_high],
        factors,
    )


def _run(state: np.ndarray, ops: Iterable[_Op], tracker: HalfStateTracker | None) -> np.ndarray:
    for m, qs, diag in ops:
        state = apply_matrix(state, m, qs, diag)
        if tracker is not None:
            tracker.record(state)
    return state


def _walk(
    cp: _CompiledPlan,
    start: int,
    stop: int,
    tracker: HalfStateTracker | None = None,
) -> Iterator[tuple[int, tuple[int, ...], float, np.ndarray, np.ndarray]]:
    m = len(cp.radices)
    strides = [math.prod(cp.radices[k + 1 :]) for k in range(m)]
    low = _run(zero_state(cp.n_low), cp.low_segments[0], tracker)
    high = _run(zero_state(cp.n_high), cp.high_segments[0], tracker)

    def descend(k, base, low, high, coef, digits):
        if k == m:
            yield base, digits, coef, low, high
            return
        stride = strides[k]
        for d, (sigma, lop, hop) in enumerate(cp.factors[k]):
            lo = base + d * stride
            if lo + stride <= start or lo >= stop:
                continue
            lo_state = _run(low, [lop, *cp.low_segments[k + 1]], tracker)
            hi_state = _run(high, [hop, *cp.high_segments[k + 1]], tracker)
            yield from descend(k + 1, lo, lo_state, hi_state, coef * sigma, digits + (d,))

    yield from descend(0, 0, low, high, 1.0, ())


def simulate_path(plan: CutPlan, p: PathIndex | int) -> PathResult:
    """Simulate one path from scratch (no prefix reuse)."""
    if isinstance(p, int):
        p = PathIndex(p, digits_of(p, plan.radices))
    if not 0 <= p.linear < plan.n_p:
        raise ValueError(f"path {p.linear} outside [0, {plan.n_p})")
    cp = _compile(plan)
    low = _run(zero_state(cp.n_low), cp.low_segments[0], None)
    high = _run(zero_state(cp.n_high), cp.high_segments[0], None)
    coef = 1.0
    for k, d in enumerate(p.digits):
        sigma, lop, hop = cp.factors[k][d]
        coef *= sigma
        low = _run(low, [lop, *cp.low_segments[k + 1]], None)
        high = _run(high, [hop, *cp.high_segments[k + 1]], None)
    return PathResult(p, complex(coef), low, high)


def iter_path_results(
    plan: CutPlan,
    start: int = 0,
    stop: int | None = None,
    tracker: HalfStateTracker | None = None,
) -> Iterator[PathResult]:
    """All path results in ``[start, stop)``, ascending, with half-state reuse."""
    stop = plan.n_p if stop is None else stop
    for linear, digits, coef, low, high in _walk(_compile(plan), start, stop, tracker):
        yield PathResult(PathIndex(linear, digits), complex(coef), low, high)


class _Accumulator:
    def __init__(self, amp_count: int, n_low: int, n_high: int, batch: int = BATCH_PATHS):
        self.amp_count = amp_count
        self.low_dim = 2**n_low
        self.rows = min(-(-amp_count // self.low_dim), 2**n_high)
        self.buf = np.zeros((self.rows, self.low_dim), dtype=complex)
        self.hs = np.empty((batch, self.rows), dtype=complex)
        self.ls = np.empty((batch, self.low_dim), dtype=complex)
        self.fill = 0
        self.count = 0

    @property
    def batch_buffer_len(self) -> int:
        return self.hs.size + self.ls.size

    def add(self, coef: complex, low: np.ndarray, high: np.ndarray) -> None:
        np.multiply(high[: self.rows], coef, out=self.hs[self.fill])
        self.ls[self.fill] = low
        self.fill += 1
        self.count += 1
        if self.fill == len(self.hs):
            self.flush()

    def flush(self) -> None:
        if self.fill:
            self.buf += self.hs[: self.fill].T @ self.ls[: self.fill]
            self.fill = 0

    def amplitudes(self) -> np.ndarray:
        self.flush()
        return self.buf.reshape(-1)[: self.amp_count]


def recombine(
    results: Iterable[PathResult],
    amp_count: int,
    n_low: int,
    n_high: int,
    n_p: int | None = None,
) -> SimulationResult:
    """Sum ``c_p * high_p (x) low_p`` over a stream of path results.

    With ``n_p`` given, a missing or repeated path index raises ``ValueError``.
    """
    t0 = time.perf_counter()
    acc = _Accumulator(amp_count, n_low, n_high)
    seen: set[int] = set()
    for r in results:
        if n_p is not None:
            if r.index.linear in seen:
                raise ValueError(f"path {r.index.linear} seen twice")
            seen.add(r.index.linear)
        acc.add(r.coefficient, r.low, r.high)
    if n_p is not None and acc.count != n_p:
        raise ValueError(f"expected {n_p} paths, got {acc.count}")
    amps = acc.amplitudes()
    elapsed = time.perf_counter() - t0
    return SimulationResult(
        amps, n_low + n_high, elapsed, "hsf", n_p=acc.count, simulation_seconds=elapsed
    )


def _run_range(cp: _CompiledPlan, start: int, stop: int, amp_count: int):
    tracker = HalfStateTracker()
    acc = _Accumulator(amp_count, cp.n_low, cp.n_high)
    for _, _, coef, low, high in _walk(cp, start, stop, tracker):
        acc.add(coef, low, high)
    if acc.count != stop - start:
        raise RuntimeError(f"range [{start}, {stop}) produced {acc.count} paths")
    return start, acc.amplitudes(), tracker, acc.batch_buffer_len


def _mp_context():
    methods = multiprocessing.get_all_start_methods()
    return multiprocessing.get_context("fork" if "fork" in methods else "spawn")


def execute_plan(
    plan: CutPlan,
    amp_count: int | None = None,
    workers: int = 1,
    deterministic: bool = True,
    path_budget: int | None = DEFAULT_PATH_BUDGET,
) -> tuple[np.ndarray, dict]:
    """Run every path of ``plan``; returns the amplitude prefix and run stats.

    Each worker owns a contiguous path range and a private partial buffer.
    Buffers are merged in range order when ``deterministic``, otherwise in
    completion order.
    """
    n_p = check_budget(plan, path_budget)
    k = resolve_amp_count(amp_count, plan.cut.num_qubits)
    cp = _compile(plan)
    ranges = split_range(n_p, workers)
    tracker = HalfStateTracker()
    if len(ranges) == 1:
        _, amps, tracker, batch_len = _run_range(cp, 0, n_p, k)
    else:
        with ProcessPoolExecutor(len(ranges), mp_context=_mp_context()) as pool:
            futures = [pool.submit(_run_range, cp, a, b, k) for a, b in ranges]
            if deterministic:
                parts = [f.result() for f in futures]
            else:
                parts = [f.result() for f in as_completed(futures)]
        amps = np.zeros(k, dtype=complex)
        for _, part, t, batch_len in parts:
            amps += part
            tracker.merge(t)
    stats = {
        "workers": len(ranges),
        "max_half_state_len": tracker.max_len,
        "half_state_allocations": tracker.allocations,
        "batch_buffer_len": batch_len,
        "output_buffer_len": int(amps.size),
    }
    return amps, stats


def hsf_simulate(
    circuit: Circuit,
    cut: CutSpec,
    mode: str = JOINT,
    amp_count: int | None = None,
    workers: int = 1,
    deterministic: bool = True,
    max_block_qubits: int = DEFAULT_MAX_BLOCK_QUBITS,
    path_budget: int | None = DEFAULT_PATH_BUDGET,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> SimulationResult:
    """Plan, decompose and simulate ``circuit`` split at ``cut``.

    ``preprocessing_seconds`` covers grouping and decompositions;
    ``simulation_seconds`` covers path simulation and recombination.
    """
    if max(cut.n_low, cut.n_high) > max_qubits:
        raise MemoryCapExceeded(
            f"half-state of {max(cut.n_low, cut.n_high)} qubits exceeds cap {max_qubits}"
        )
    k = resolve_amp_count(amp_count, circuit.num_qubits)
    t0 = time.perf_counter()
    plan = build_plan(circuit, cut, mode, max_block_qubits)
    t1 = time.perf_counter()
    amps, stats = execute_plan(plan, k, workers, deterministic, path_budget)
    t2 = time.perf_counter()
    stats.update(
        units=len(plan.units),
        blocks=sum(u.is_block for u in plan.units),
        separate=sum(not u.is_block for u in plan.units),
    )
    return SimulationResult(
        amps,
        circuit.num_qubits,
        t2 - t0,
        f"hsf-{mode}",
        n_p=plan.n_p,
        preprocessing_seconds=t1 - t0,
        simulation_seconds=t2 - t1,
        stats=stats,
    )
