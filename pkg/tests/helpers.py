"""Circuit builders shared by the test modules."""
from __future__ import annotations

import numpy as np

from jointhsf.circuit import Circuit, build_gate

LOCAL_1Q = ("h", "x", "y", "z", "rx", "ry", "rz")
TWO_Q = ("cnot", "cz", "rzz", "swap")
PARAMETRIC = {"rx", "ry", "rz", "rzz"}


def gate(rng, name, qubits):
    params = [float(rng.uniform(-np.pi, np.pi))] if name in PARAMETRIC else []
    return build_gate(name, params, qubits)


def bell_circuit() -> Circuit:
    return Circuit.from_ops(2, [("h", [], [0]), ("cnot", [], [0, 1])])


def random_circuit(rng, n, l, depth=30, n_crossing=4, cascade=True) -> Circuit:
    """Random local layer mix plus ``n_crossing`` crossing two-qubit gates.

    With ``cascade`` some crossing gates share an anchor qubit and diagonal
    gates are common, so the planner has reordering opportunities.
    """
    low = list(range(l + 1))
    high = list(range(l + 1, n))
    gates = []
    for _ in range(depth):
        side = low if rng.random() < 0.5 else high
        if len(side) >= 2 and rng.random() < 0.4:
            a, b = rng.choice(side, 2, replace=False)
            gates.append(gate(rng, str(rng.choice(TWO_Q)), [int(a), int(b)]))
        else:
            gates.append(gate(rng, str(rng.choice(LOCAL_1Q)), [int(rng.choice(side))]))
    anchor = int(rng.choice(low))
    for _ in range(n_crossing):
        a = anchor if cascade and rng.random() < 0.6 else int(rng.choice(low))
        b = int(rng.choice(high))
        pair = [a, b] if rng.random() < 0.5 else [b, a]
        pos = int(rng.integers(len(gates) + 1))
        gates.insert(pos, gate(rng, str(rng.choice(TWO_Q)), pair))
    return Circuit(n, gates)


def cascade_circuit(rng, kind, k, n=8, l=1, anchor=0, theta=0.6) -> Circuit:
    """``k`` two-qubit gates sharing ``anchor`` with targets across the cut,
    wrapped in random local layers on both halves."""
    targets = list(range(l + 1, l + 1 + k))
    pre = [gate(rng, "ry", [q]) for q in range(n)]
    params = [theta] if kind == "rzz" else []
    body = [build_gate(kind, params, [anchor, t]) for t in targets]
    post = [gate(rng, "rx", [q]) for q in range(n)]
    return Circuit(n, pre + body + post)
