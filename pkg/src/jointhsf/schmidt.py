"""
Operator Schmidt decomposition across a cut.

A block acting on ``k`` qubits is handled over its *support*, a qubit list
ordered most-significant first with the high-side qubits before the low-side
ones. With that ordering the block matrix index splits as ``i = (i_high, i_low)``
and the decomposition reads ``A = sum_m sigma_m high_m (x) low_m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import P0, P1, Gate, _X, _Z, _rz
from .errors import BlockTooLarge, CircuitError
from .linalg import apply_matrix, num_qubits_of, svd

TRUNCATION_RTOL = 1e-12
DEFAULT_MAX_BLOCK_QUBITS = 12


@dataclass(frozen=True)
class SchmidtTerm:
    sigma: float
    high: np.ndarray
    low: np.ndarray


@dataclass(frozen=True)
class SchmidtDecomposition:
    terms: tuple[SchmidtTerm, ...]
    n_high: int
    n_low: int

    @property
    def rank(self) -> int:
        return len(self.terms)

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([t.sigma for t in self.terms])

    @property
    def rank_bound(self) -> int:
        return min(4**self.n_high, 4**self.n_low)

    def reconstruct(self) -> np.ndarray:
        dim = 2 ** (self.n_high + self.n_low)
        out = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            out += t.sigma * np.kron(t.high, t.low)
        return out


def reshape_for_cut(a: np.ndarray, n_low: int) -> np.ndarray:
    """Regroup ``A[(ia, ib), (ja, jb)]`` into ``M[(ib, jb), (ia, ja)]``.

    Pure permutation of entries; the result is ``4^n_low x 4^n_high``.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got {a.shape}")
    n = num_qubits_of(a.shape[0])
    if not 0 < n_low < n:
        raise ValueError(f"n_low={n_low} must lie strictly between 0 and {n}")
    dl, dh = 2**n_low, 2 ** (n - n_low)
    t = a.reshape(dh, dl, dh, dl).transpose(1, 3, 0, 2)
    return t.reshape(dl * dl, dh * dh)


def restore_from_cut(m: np.ndarray, n_low: int) -> np.ndarray:
    """Inverse of :func:`reshape_for_cut`."""
    dl = 2**n_low
    dh = math.isqrt(m.shape[1])
    if m.shape[0] != dl * dl or dh * dh != m.shape[1]:
        raise ValueError(f"shape {m.shape} is not a reshaped operator for n_low={n_low}")
    return m.reshape(dl, dl, dh, dh).transpose(2, 0, 3, 1).reshape(dh * dl, dh * dl)


def schmidt_decompose(
    a: np.ndarray, n_low: int, tol: float = TRUNCATION_RTOL
) -> SchmidtDecomposition:
    """Schmidt-decompose ``a`` with the lowest ``n_low`` qubits on the low side.

    Terms with ``sigma <= tol * sigma_0`` are dropped. Factors keep unit
    Frobenius norm; the weight stays in ``sigma``.
    """
    m = reshape_for_cut(a, n_low)
    n_high = num_qubits_of(np.asarray(a).shape[0]) - n_low
    u, s, vh = svd(m)
    dl, dh = 2**n_low, 2**n_high
    cutoff = tol * s[0] if s.size else 0.0
    terms = []
    for idx in range(s.size):
        if s[idx] <= cutoff:
            break
        high = vh[idx].reshape(dh, dh)
        low = u[:, idx].reshape(dl, dl)
        high.flags.writeable = False
        low.flags.writeable = False
        terms.append(SchmidtTerm(float(s[idx]), high, low))
    return SchmidtDecomposition(tuple(terms), n_high, n_low)


def block_support(gates: Sequence[Gate], l: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """High-side and low-side support of a gate group, each sorted descending."""
    qs = {q for g in gates for q in g.qubits}
    high = tuple(sorted((q for q in qs if q > l), reverse=True))
    low = tuple(sorted((q for q in qs if q <= l), reverse=True))
    return high, low


def assemble_block_matrix(
    gates: Sequence[Gate],
    support: Sequence[int],
    max_qubits: int = DEFAULT_MAX_BLOCK_QUBITS,
) -> np.ndarray:
    """Product of ``gates`` (first gate rightmost) over the ``2^k`` support space.

    ``support[0]`` is the most-significant qubit of the result.
    """
    support = list(support)
    k = len(support)
    if k > max_qubits:
        raise BlockTooLarge(f"block spans {k} qubits, cap is {max_qubits}")
    local = {q: k - 1 - j for j, q in enumerate(support)}
    block = np.eye(2**k, dtype=complex)
    for g in gates:
        try:
            qs = [local[q] for q in g.qubits]
        except KeyError:
            raise CircuitError(f"gate {g.name} on {g.qubits} leaves support {support}") from None
        block = apply_matrix(block, g.matrix, qs, g.is_diagonal)
    return block


def _fan_factor(single: np.ndarray, fan: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(fan):
        out = np.kron(out, single)
    return out


def analytic_cascade_decomposition(
    kind: str,
    fan: int,
    anchor_side: str = "low",
    theta: float | None = None,
) -> SchmidtDecomposition:
    """Closed-form decomposition of a cascade of ``fan`` two-qubit gates.

    All gates share one anchor qubit on ``anchor_side`` and each targets a
    distinct qubit on the other side. Any such block equals
    ``P0 (x) F0 + P1 (x) F1`` with ``F0``, ``F1`` tensor powers of one-qubit
    operators; the two terms are orthogonalised in closed form using
    ``<F0, F1> = tr(F0^dag F1)``, which factorises over the fan.

    ``kind`` is ``"cnot"`` (anchor = control), ``"cz"`` or ``"rzz"`` (needs
    ``theta``). Support ordering follows :func:`block_support`.
    """
    kind = kind.lower()
    if fan < 1:
        raise ValueError("fan must be at least 1")
    if anchor_side not in ("low", "high"):
        raise ValueError("anchor_side must be 'low' or 'high'")
    if kind in ("cnot", "cx"):
        f0, f1 = np.eye(2, dtype=complex), _X
    elif kind == "cz":
        f0, f1 = np.eye(2, dtype=complex), _Z
    elif kind == "rzz":
        if theta is None:
            raise ValueError("rzz cascade needs theta")
        f0, f1 = _rz(theta), _rz(-theta)
    else:
        raise ValueError(f"unsupported cascade kind {kind!r}")

    inner = complex(np.trace(f0.conj().T @ f1)) ** fan
    norm0 = math.sqrt(float(np.vdot(f0, f0).real) ** fan)
    norm1 = math.sqrt(float(np.vdot(f1, f1).real) ** fan)
    fan0, fan1 = _fan_factor(f0, fan), _fan_factor(f1, fan)
    if abs(inner) <= TRUNCATION_RTOL * norm0 * norm1:
        pairs = [(P0, fan0 / norm0, norm0), (P1, fan1 / norm1, norm1)]
    else:
        # equal norms: rotate to (P0 +- w P1)/sqrt2 (x) (F0 +- conj(w) F1)/sqrt2
        w = inner / abs(inner)
        plus = (fan0 + np.conj(w) * fan1) / math.sqrt(2)
        minus = (fan0 - np.conj(w) * fan1) / math.sqrt(2)
        # sigma^2 = |F|^2 +- |<F0, F1>|, taken as norms to avoid cancellation
        s_plus = float(np.linalg.norm(plus))
        s_minus = float(np.linalg.norm(minus))
        pairs = [
            ((P0 + w * P1) / math.sqrt(2), plus / s_plus, s_plus),
        ]
        if s_minus > TRUNCATION_RTOL * s_plus:
            pairs.append(((P0 - w * P1) / math.sqrt(2), minus / s_minus, s_minus))
    pairs.sort(key=lambda p: -p[2])

    terms = []
    for anchor_op, fan_op, sigma in pairs:
        if anchor_side == "high":
            terms.append(SchmidtTerm(sigma, anchor_op, fan_op))
        else:
            terms.append(SchmidtTerm(sigma, fan_op, anchor_op))
    if anchor_side == "high":
        return SchmidtDecomposition(tuple(terms), 1, fan)
    return SchmidtDecomposition(tuple(terms), fan, 1)

