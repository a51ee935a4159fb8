"""Hybrid Schrödinger-Feynman simulation with joint cutting of crossing-gate blocks."""

from .circuit import Circuit, CutSpec, Gate, GateSide, build_gate, classify_gate, parse_circuit, serialize_circuit
from .hsf import hsf_simulate
from .planner import CutPlan, CutUnit, build_plan, commutes, find_blocks, path_counts
from .qaoa import qaoa_circuit, sbm_graph
from .schmidt import analytic_cascade_decomposition, assemble_block_matrix, schmidt_decompose
from .schrodinger import SimulationResult, simulate

__version__ = "0.1.0"
