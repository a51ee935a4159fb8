"""Full-statevector simulation, the result record, and amplitude dumps."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuit import Circuit
from .errors import MemoryCapExceeded
from .linalg import apply_gate, zero_state

DEFAULT_MAX_QUBITS = 28


@dataclass
class SimulationResult:
    amplitudes: np.ndarray
    num_qubits: int
    elapsed: float
    engine: str
    n_p: int | None = None
    preprocessing_seconds: float = 0.0
    simulation_seconds: float = 0.0
    stats: dict = field(default_factory=dict)

    @property
    def amp_count(self) -> int:
        return len(self.amplitudes)

    def to_record(self) -> dict:
        return {
            "engine": self.engine,
            "n_p": self.n_p,
            "preprocessing_seconds": self.preprocessing_seconds,
            "simulation_seconds": self.simulation_seconds,
            "full_seconds": self.elapsed,
            "amp_count": self.amp_count,
        }


def resolve_amp_count(amp_count: int | None, n: int) -> int:
    if amp_count is None:
        return 2**n
    if not 1 <= amp_count <= 2**n:
        raise ValueError(f"amp_count {amp_count} outside [1, 2^{n}]")
    return int(amp_count)


def simulate(
    circuit: Circuit,
    amp_count: int | None = None,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> SimulationResult:
    """Apply the gates to ``|0...0>`` and return amplitudes ``[0, amp_count)``."""
    n = circuit.num_qubits
    if n > max_qubits:
        raise MemoryCapExceeded(f"{n} qubits exceeds the statevector cap of {max_qubits}")
    k = resolve_amp_count(amp_count, n)
    t0 = time.perf_counter()
    psi = zero_state(n)
    for g in circuit.gates:
        psi = apply_gate(psi, g)
    amps = psi[:k].copy() if k < psi.size else psi
    elapsed = time.perf_counter() - t0
    return SimulationResult(
        amps, n, elapsed, "schrodinger", simulation_seconds=elapsed
    )


def write_amplitudes(path: str | Path, amplitudes: np.ndarray) -> None:
    """JSON list of ``[re, im]`` for ``*.json``, else little-endian f64 re/im pairs."""
    path = Path(path)
    amps = np.asarray(amplitudes, dtype=complex)
    if path.suffix == ".json":
        path.write_text(json.dumps([[float(z.real), float(z.imag)] for z in amps]))
    else:
        amps.astype("<c16").tofile(path)


def read_amplitudes(path: str | Path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".json":
        pairs = json.loads(path.read_text())
        return np.array([complex(re, im) for re, im in pairs], dtype=complex)
    return np.fromfile(path, dtype="<c16").astype(complex)
