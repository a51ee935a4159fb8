"""Dense complex kernels: products, SVD, and gate application to statevectors."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import CircuitError


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def svd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``m = u @ diag(s) @ vh`` with ``s`` descending.

    Non-finite input raises ``ValueError``; LAPACK non-convergence surfaces as
    ``numpy.linalg.LinAlgError``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"svd expects a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("svd input contains NaN or Inf")
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return u, s, vh


def num_qubits_of(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def apply_matrix(
    state: np.ndarray,
    matrix: np.ndarray,
    qubits: Sequence[int],
    diagonal: bool | None = None,
) -> np.ndarray:
    """Apply a ``2^k x 2^k`` matrix to ``qubits`` of ``state``; returns a new array.

    ``state`` has shape ``(2^n,)`` or ``(2^n, *batch)``; trailing axes are
    carried along untouched, so a matrix can be multiplied from the left by
    passing it as a batch of columns. The matrix need not be unitary.
    """
    dim = state.shape[0]
    n = num_qubits_of(dim)
    rest = state.shape[1:]
    k = len(qubits)
    if any(not 0 <= q < n for q in qubits):
        raise CircuitError(f"qubits {tuple(qubits)} out of range for {n} qubits")
    if matrix.shape != (2**k, 2**k):
        raise CircuitError(f"matrix shape {matrix.shape} does not fit {k} qubits")
    psi = state.reshape((2,) * n + rest)
    # tensor axis 0 holds the most significant bit, i.e. qubit n-1
    axes = [n - 1 - q for q in qubits]
    if diagonal is None:
        diagonal = not np.any(matrix - np.diag(np.diagonal(matrix)))
    if diagonal:
        d = np.diagonal(matrix).reshape((2,) * k)
        order = np.argsort(axes)
        shape = [1] * n
        for a in axes:
            shape[a] = 2
        d = d.transpose(order).reshape(shape + [1] * len(rest))
        return (psi * d).reshape(state.shape)
    op = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return np.ascontiguousarray(out).reshape(state.shape)


def apply_gate(state: np.ndarray, gate) -> np.ndarray:
    return apply_matrix(state, gate.matrix, gate.qubits, gate.is_diagonal)


def embed_gate(matrix: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Dense ``2^n`` embedding by Kronecker padding plus a basis permutation.

    Deliberately independent of :func:`apply_matrix`; used as an oracle.
    """
    qubits = list(qubits)
    k = len(qubits)
    order = qubits + [q for q in range(n - 1, -1, -1) if q not in qubits]
    perm = np.empty(2**n, dtype=np.int64)
    for x in range(2**n):
        y = 0
        for pos, q in enumerate(order):
            y |= ((x >> q) & 1) << (n - 1 - pos)
        perm[x] = y
    big = np.kron(np.asarray(matrix, dtype=complex), np.eye(2 ** (n - k)))
    return big[np.ix_(perm, perm)]


def circuit_unitary(circuit, max_qubits: int = 12, embed: bool = False) -> np.ndarray:
    """Dense unitary of a circuit, built column-wise with the gate kernel.

    ``embed=True`` multiplies explicit embeddings instead; that path is
    independent of :func:`apply_matrix` but costs ``O(8^n)`` per gate.
    """
    n = circuit.num_qubits
    if n > max_qubits:
        raise ValueError(f"dense unitary refused for {n} > {max_qubits} qubits")
    u = np.eye(2**n, dtype=complex)
    for g in circuit.gates:
        if embed:
            u = embed_gate(g.matrix, g.qubits, n) @ u
        else:
            u = apply_gate(u, g)
    return u
