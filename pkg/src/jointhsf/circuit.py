"""
Circuit IR: gates with dense matrices, circuits, cut positions and the text format.

Bit convention: qubit 0 is the least-significant bit of a basis index, and a
gate's ``qubits[0]`` is the most-significant (leftmost) tensor factor of its
matrix. CNOT on ``(control, target)`` is therefore ``P0 (x) I + P1 (x) X``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CircuitError, ParseError

UNITARY_ATOL = 1e-12

_SQRT2_INV = 1 / math.sqrt(2)

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)


def _rx(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _ry(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def _rzz(t: float) -> np.ndarray:
    # exp(-i t/2 Z(x)Z); ZZ eigenvalue is +1 on |00>,|11> and -1 on |01>,|10>
    a, b = np.exp(-0.5j * t), np.exp(0.5j * t)
    return np.diag([a, b, b, a])


_CNOT = np.kron(P0, _I2) + np.kron(P1, _X)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)

# name -> (qubit count, param count, matrix factory)
GATE_LIBRARY: dict[str, tuple[int, int, Callable[..., np.ndarray]]] = {
    "h": (1, 0, lambda: _H),
    "x": (1, 0, lambda: _X),
    "y": (1, 0, lambda: _Y),
    "z": (1, 0, lambda: _Z),
    "rx": (1, 1, _rx),
    "ry": (1, 1, _ry),
    "rz": (1, 1, _rz),
    "cnot": (2, 0, lambda: _CNOT),
    "cz": (2, 0, lambda: _CZ),
    "rzz": (2, 1, _rzz),
    "swap": (2, 0, lambda: _SWAP),
}
_ALIASES = {"cx": "cnot"}


@dataclass(frozen=True, eq=False)
class Gate:
    name: str
    params: tuple[float, ...]
    qubits: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    @cached_property
    def is_diagonal(self) -> bool:
        m = self.matrix
        return not np.any(m - np.diag(np.diagonal(m)))

    def dagger(self) -> Gate:
        return make_gate("u", (), self.qubits, self.matrix.conj().T)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Gate):
            return NotImplemented
        return (
            self.name == other.name
            and self.params == other.params
            and self.qubits == other.qubits
            and np.array_equal(self.matrix, other.matrix)
        )

    __hash__ = None  # type: ignore[assignment]


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex)
    m.flags.writeable = False
    return m


def make_gate(name: str, params: Sequence[float], qubits: Sequence[int], matrix) -> Gate:
    """Wrap an explicit matrix as a gate. No unitarity check, used for factors."""
    qubits = tuple(int(q) for q in qubits)
    matrix = _frozen(matrix)
    if len(set(qubits)) != len(qubits):
        raise CircuitError(f"duplicate qubits {qubits}")
    if any(q < 0 for q in qubits):
        raise CircuitError(f"negative qubit index in {qubits}")
    dim = 2 ** len(qubits)
    if matrix.shape != (dim, dim):
        raise CircuitError(
            f"matrix shape {matrix.shape} does not match {len(qubits)} qubits"
        )
    return Gate(name, tuple(float(p) for p in params), qubits, matrix)


def build_gate(
    name: str,
    params: Sequence[float] = (),
    qubits: Sequence[int] = (),
    matrix=None,
) -> Gate:
    """Build a library gate (or ``"u"`` with an explicit matrix) on the given qubits."""
    key = _ALIASES.get(name.lower(), name.lower())
    if key == "u":
        if matrix is None:
            raise CircuitError("gate 'u' requires a matrix")
        if params:
            raise CircuitError("gate 'u' takes no params")
        return make_gate("u", (), qubits, matrix)
    if key not in GATE_LIBRARY:
        raise CircuitError(f"unknown gate {name!r}")
    nq, npar, factory = GATE_LIBRARY[key]
    if len(params) != npar:
        raise CircuitError(f"gate {key!r} takes {npar} params, got {len(params)}")
    if len(qubits) != nq:
        raise CircuitError(f"gate {key!r} acts on {nq} qubits, got {len(qubits)}")
    return make_gate(key, params, qubits, factory(*[float(p) for p in params]))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise CircuitError("circuit needs at least one qubit")
        for g in self.gates:
            if max(g.qubits) >= self.num_qubits:
                raise CircuitError(
                    f"gate {g.name} on {g.qubits} outside {self.num_qubits} qubits"
                )

    @classmethod
    def from_ops(cls, num_qubits: int, ops: Iterable[tuple]) -> Circuit:
        """Build from ``(name, params, qubits)`` tuples."""
        return cls(num_qubits, [build_gate(name, p, q) for name, p, q in ops])

    def __len__(self) -> int:
        return len(self.gates)


@dataclass(frozen=True)
class CutSpec:
    """Cut between qubit ``l`` and ``l + 1``; qubits ``0..l`` form the low partition."""

    l: int
    num_qubits: int

    def __post_init__(self):
        if not 0 <= self.l < self.num_qubits - 1:
            raise CircuitError(
                f"cut position {self.l} invalid for {self.num_qubits} qubits"
            )

    @property
    def n_low(self) -> int:
        return self.l + 1

    @property
    def n_high(self) -> int:
        return self.num_qubits - self.n_low

    def is_low(self, q: int) -> bool:
        return q <= self.l


class GateSide(enum.Enum):
    LOCAL_LOW = "local_low"
    LOCAL_HIGH = "local_high"
    CROSSING = "crossing"


def classify_gate(gate: Gate, cut: CutSpec) -> GateSide:
    if all(q <= cut.l for q in gate.qubits):
        return GateSide.LOCAL_LOW
    if all(q > cut.l for q in gate.qubits):
        return GateSide.LOCAL_HIGH
    return GateSide.CROSSING


# -- text format -------------------------------------------------------------


def _u_arity(ntokens: int) -> int | None:
    # a k-qubit 'u' line carries 2 * 4**k floats followed by k qubits
    for k in range(1, 8):
        if 2 * 4**k + k == ntokens:
            return k
    return None


def parse_circuit(text: str) -> Circuit:
    num_qubits = None
    gates: list[Gate] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head, args = tokens[0].lower(), tokens[1:]
        if num_qubits is None:
            if head != "qubits" or len(args) != 1:
                raise ParseError(line_no, "expected 'qubits <n>' header")
            try:
                num_qubits = int(args[0])
            except ValueError:
                raise ParseError(line_no, f"bad qubit count {args[0]!r}") from None
            if num_qubits < 1:
                raise ParseError(line_no, "qubit count must be positive")
            continue
        if head == "qubits":
            raise ParseError(line_no, "duplicate 'qubits' header")
        name = _ALIASES.get(head, head)
        if name == "u":
            k = _u_arity(len(args))
            if k is None:
                raise ParseError(line_no, "cannot infer arity of 'u' gate")
            npar = 2 * 4**k
        elif name in GATE_LIBRARY:
            k, npar, _ = GATE_LIBRARY[name]
            if len(args) != k + npar:
                raise ParseError(
                    line_no, f"{name} expects {npar} params and {k} qubits"
                )
        else:
            raise ParseError(line_no, f"unknown gate {head!r}")
        try:
            params = [float(a) for a in args[:npar]]
            qubits = [int(a) for a in args[npar:]]
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from None
        for q in qubits:
            if not 0 <= q < num_qubits:
                raise ParseError(line_no, f"qubit {q} out of range [0, {num_qubits})")
        try:
            if name == "u":
                flat = np.array(params[0::2]) + 1j * np.array(params[1::2])
                gate = build_gate("u", (), qubits, flat.reshape(2**k, 2**k))
            else:
                gate = build_gate(name, params, qubits)
        except CircuitError as exc:
            raise ParseError(line_no, str(exc)) from None
        gates.append(gate)
    if num_qubits is None:
        raise ParseError(0, "missing 'qubits <n>' header")
    return Circuit(num_qubits, gates)


def serialize_circuit(circuit: Circuit) -> str:
    lines = [f"qubits {circuit.num_qubits}"]
    for g in circuit.gates:
        if g.name == "u":
            vals = []
            for z in g.matrix.ravel():
                vals += [repr(float(z.real)), repr(float(z.imag))]
        else:
            vals = [repr(p) for p in g.params]
        lines.append(" ".join([g.name, *vals, *map(str, g.qubits)]))
    return "\n".join(lines) + "\n"
