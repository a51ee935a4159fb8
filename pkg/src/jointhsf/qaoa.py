"""Stochastic-block-model MaxCut graphs and single-cut QAOA circuits."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import networkx as nx

from .circuit import Circuit, CutSpec, build_gate

DEFAULT_GAMMA = 0.4
DEFAULT_BETA = 0.7


@dataclass(frozen=True)
class BlockModelGraph:
    sizes: tuple[int, int]
    p_intra: float
    p_inter: float
    seed: int | None
    edges: tuple[tuple[int, int], ...]

    @property
    def num_vertices(self) -> int:
        return sum(self.sizes)

    def partition_of(self, v: int) -> int:
        return 0 if v < self.sizes[0] else 1

    def inter_edges(self) -> list[tuple[int, int]]:
        return [e for e in self.edges if self.partition_of(e[0]) != self.partition_of(e[1])]

    def intra_edges(self) -> list[tuple[int, int]]:
        return [e for e in self.edges if self.partition_of(e[0]) == self.partition_of(e[1])]


def sbm_graph(
    sizes: Sequence[int], p_intra: float, p_inter: float, seed: int | None = None
) -> BlockModelGraph:
    """Two-block stochastic block model; vertices ``0..n1-1`` form block one."""
    if len(sizes) != 2:
        raise ValueError("exactly two partition sizes expected")
    for p in (p_intra, p_inter):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")
    probs = [[p_intra, p_inter], [p_inter, p_intra]]
    g = nx.stochastic_block_model(list(sizes), probs, seed=seed)
    edges = tuple(sorted((min(u, v), max(u, v)) for u, v in g.edges() if u != v))
    return BlockModelGraph(tuple(int(s) for s in sizes), p_intra, p_inter, seed, edges)


@dataclass(frozen=True)
class QAOAInstance:
    graph: BlockModelGraph
    layers: int
    gammas: tuple[float, ...]
    betas: tuple[float, ...]
    initial_h: bool
    circuit: Circuit
    cut: CutSpec

    def manifest(self) -> dict:
        g = self.graph
        return {
            "sizes": list(g.sizes),
            "p_intra": g.p_intra,
            "p_inter": g.p_inter,
            "seed": g.seed,
            "cut": self.cut.l,
            "layers": self.layers,
            "gammas": list(self.gammas),
            "betas": list(self.betas),
            "initial_h": self.initial_h,
            "edges": [list(e) for e in g.edges],
            "num_two_qubit_gates": sum(g.num_qubits == 2 for g in self.circuit.gates),
        }


def ordered_edges(graph: BlockModelGraph) -> list[tuple[int, int]]:
    """Intra edges lexicographically, then inter edges grouped by their low vertex."""
    return sorted(graph.intra_edges()) + sorted(graph.inter_edges())


def qaoa_circuit(
    graph: BlockModelGraph,
    layers: int = 1,
    gammas: Sequence[float] | None = None,
    betas: Sequence[float] | None = None,
    initial_h: bool = True,
) -> QAOAInstance:
    """Problem layer ``RZZ(2 gamma)`` per edge, mixer ``RX(2 beta)`` per qubit."""
    gammas = tuple(gammas) if gammas is not None else (DEFAULT_GAMMA,) * layers
    betas = tuple(betas) if betas is not None else (DEFAULT_BETA,) * layers
    if len(gammas) != layers or len(betas) != layers:
        raise ValueError("need one gamma and one beta per layer")
    n = graph.num_vertices
    gates = []
    if initial_h:
        gates += [build_gate("h", [], [q]) for q in range(n)]
    edges = ordered_edges(graph)
    for gamma, beta in zip(gammas, betas):
        gates += [build_gate("rzz", [2 * gamma], [u, v]) for u, v in edges]
        gates += [build_gate("rx", [2 * beta], [q]) for q in range(n)]
    cut = CutSpec(graph.sizes[0] - 1, n)
    return QAOAInstance(graph, layers, gammas, betas, initial_h, Circuit(n, gates), cut)


def instance_from_manifest(manifest: dict) -> QAOAInstance:
    graph = BlockModelGraph(
        tuple(manifest["sizes"]),
        manifest["p_intra"],
        manifest["p_inter"],
        manifest.get("seed"),
        tuple(tuple(e) for e in manifest["edges"]),
    )
    return qaoa_circuit(
        graph,
        manifest["layers"],
        manifest["gammas"],
        manifest["betas"],
        manifest.get("initial_h", True),
    )
