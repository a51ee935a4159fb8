"""Command-line front end: single runs, benchmark suites and instance generation."""
from __future__ import annotations

import argparse
import json
import logging
import math
import multiprocessing
import statistics
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .circuit import Circuit, CutSpec, parse_circuit, serialize_circuit
from .errors import CircuitError, PathBudgetExceeded
from .hsf import DEFAULT_PATH_BUDGET, hsf_simulate
from .planner import JOINT, STANDARD, build_plan, plan_report
from .qaoa import qaoa_circuit, sbm_graph
from .schmidt import DEFAULT_MAX_BLOCK_QUBITS
from .schrodinger import SimulationResult, simulate, write_amplitudes

log = logging.getLogger("jointhsf")

ENGINES = ("schrodinger", "hsf-standard", "hsf-joint")
DEFAULT_AMPS = 10**6
DEFAULT_TIMEOUT = 3600.0
DEVIATION_TOL = 1e-10

EXIT_OK = 0
EXIT_DEVIATION = 2
EXIT_TIMEOUT = 3
EXIT_CONFIG = 4


@dataclass
class RunConfig:
    circuit: Circuit
    cut: CutSpec
    engines: tuple[str, ...] = ENGINES
    amp_count: int = DEFAULT_AMPS
    workers: int = 1
    timeout: float | None = DEFAULT_TIMEOUT
    deterministic: bool = False
    max_block_qubits: int = DEFAULT_MAX_BLOCK_QUBITS
    path_budget: int | None = DEFAULT_PATH_BUDGET
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.engines:
            raise ValueError("select at least one engine")
        unknown = set(self.engines) - set(ENGINES)
        if unknown:
            raise ValueError(f"unknown engines {sorted(unknown)}")
        if self.amp_count < 1:
            raise ValueError("amp_count must be at least 1")
        self.amp_count = min(self.amp_count, 2**self.circuit.num_qubits)


def run_engine(engine: str, cfg: RunConfig) -> SimulationResult:
    if engine == "schrodinger":
        return simulate(cfg.circuit, cfg.amp_count)
    mode = STANDARD if engine == "hsf-standard" else JOINT
    return hsf_simulate(
        cfg.circuit,
        cfg.cut,
        mode,
        cfg.amp_count,
        workers=cfg.workers,
        deterministic=cfg.deterministic,
        max_block_qubits=cfg.max_block_qubits,
        path_budget=cfg.path_budget,
    )


def _child(conn, fn, args):
    try:
        conn.send(("ok", fn(*args)))
    except BaseException as exc:  # forwarded to the parent
        conn.send(("error", exc))
    finally:
        conn.close()


def call_with_timeout(fn: Callable, args: tuple, timeout: float | None):
    """Run ``fn(*args)`` in a child process; returns ``(value, timed_out)``."""
    if timeout is None or not math.isfinite(timeout):
        return fn(*args), False
    methods = multiprocessing.get_all_start_methods()
    ctx = multiprocessing.get_context("fork" if "fork" in methods else "spawn")
    recv, send = ctx.Pipe(duplex=False)
    proc = ctx.Process(target=_child, args=(send, fn, args))
    proc.start()
    send.close()
    try:
        if not recv.poll(timeout):
            return None, True
        status, value = recv.recv()
    finally:
        if proc.is_alive():
            proc.terminate()
        proc.join()
        recv.close()
    if status == "error":
        raise value
    return value, False


def _engine_row(engine: str, res: SimulationResult | None, timed_out: bool, error=None) -> dict:
    row = {"engine": engine, "timed_out": timed_out}
    if res is not None:
        row.update(
            full_seconds=res.elapsed,
            sim_seconds=res.simulation_seconds,
            preprocessing_seconds=res.preprocessing_seconds,
            n_p=res.n_p,
            amp_count=res.amp_count,
            stats=res.stats,
        )
    if error is not None:
        row["error"] = error
    return row


def ratios(rows: dict[str, dict], timeout: float | None) -> dict:
    """``S/J`` and ``T/J``: full Schrödinger / standard time over full joint time."""
    out = {}
    joint = rows.get("hsf-joint")
    if not joint or "full_seconds" not in joint:
        return out
    for key, engine in (("S/J", "schrodinger"), ("T/J", "hsf-standard")):
        row = rows.get(engine)
        if not row:
            continue
        if "full_seconds" in row:
            out[key] = row["full_seconds"] / joint["full_seconds"]
        elif row.get("timed_out") and timeout:
            out[key] = timeout / joint["full_seconds"]
            out[key + " lower bound"] = True
    return out


def run(cfg: RunConfig, dump: str | Path | None = None) -> tuple[dict, dict[str, np.ndarray]]:
    """Run each selected engine on the same circuit; returns the report and amplitudes."""
    rows: dict[str, dict] = {}
    amps: dict[str, np.ndarray] = {}
    for engine in cfg.engines:
        log.info("running %s", engine)
        try:
            res, timed_out = call_with_timeout(run_engine, (engine, cfg), cfg.timeout)
        except PathBudgetExceeded as exc:
            rows[engine] = _engine_row(engine, None, False, str(exc))
            rows[engine]["n_p"] = exc.n_paths
            continue
        rows[engine] = _engine_row(engine, res, timed_out)
        if res is not None:
            amps[engine] = res.amplitudes
    deviation = None
    done = list(amps.values())
    if len(done) > 1:
        deviation = max(float(np.max(np.abs(a - done[0]))) for a in done[1:])
    report = {
        "circuit": {
            "num_qubits": cfg.circuit.num_qubits,
            "num_gates": len(cfg.circuit),
            "num_two_qubit_gates": sum(g.num_qubits == 2 for g in cfg.circuit.gates),
            "cut": cfg.cut.l,
            **cfg.meta,
        },
        "plan": plan_summary(cfg),
        "amp_count": cfg.amp_count,
        "engines": [rows[e] for e in cfg.engines],
        "max_deviation": deviation,
        "deviation_ok": deviation is None or deviation < DEVIATION_TOL,
        "ratios": ratios(rows, cfg.timeout),
    }
    if dump is not None and amps:
        first = next(iter(amps.values()))
        write_amplitudes(dump, first)
    return report, amps


def plan_summary(cfg: RunConfig) -> dict:
    plan = build_plan(cfg.circuit, cfg.cut, JOINT, cfg.max_block_qubits)
    return plan_report(cfg.circuit, plan).to_dict()


def exit_code(report: dict) -> int:
    if not report["deviation_ok"]:
        return EXIT_DEVIATION
    rows = report["engines"]
    if rows and all(r.get("timed_out") for r in rows):
        return EXIT_TIMEOUT
    return EXIT_OK


def _fmt_seconds(row: dict, key: str) -> str:
    if row.get("timed_out"):
        return "timed out"
    if "error" in row:
        return "refused"
    return f"{row[key]:.3f}"


def format_run(report: dict) -> str:
    lines = [
        f"{'engine':<14} {'full (s)':>10} {'sim (s)':>10} {'paths':>12}",
    ]
    for r in report["engines"]:
        n_p = r.get("n_p")
        paths = "-" if n_p is None else f"2^{math.log2(n_p):.1f}"
        lines.append(
            f"{r['engine']:<14} {_fmt_seconds(r, 'full_seconds'):>10} "
            f"{_fmt_seconds(r, 'sim_seconds'):>10} {paths:>12}"
        )
    plan = report["plan"]
    lines.append(
        f"blocks + sep.: {plan['blocks']}+{plan['separate']}   "
        f"sep. cuts: {plan['separate_cuts_standard']}"
    )
    for key, value in report["ratios"].items():
        if not key.endswith("lower bound"):
            bound = ">= " if report["ratios"].get(key + " lower bound") else ""
            lines.append(f"{key}: {bound}{value:.3f}")
    if report["max_deviation"] is not None:
        lines.append(f"max amplitude deviation: {report['max_deviation']:.3e}")
    return "\n".join(lines)


# -- benchmark suites ------------------------------------------------------


def bench(suite: dict) -> list[dict]:
    """One row per instance: circuit specification plus mean/std timings.

    ``suite`` keys: ``instances`` (list of ``{name, sizes, p_intra, p_inter,
    seed}``), optional ``repeats``, ``engines``, ``amps``, ``timeout``,
    ``workers``, ``max_block_qubits``, ``path_budget``.
    """
    repeats = int(suite.get("repeats", 1))
    engines = tuple(suite.get("engines", ENGINES))
    rows = []
    for spec in suite.get("instances", []):
        inst = qaoa_circuit(
            sbm_graph(spec["sizes"], spec["p_intra"], spec["p_inter"], spec.get("seed")),
            layers=spec.get("layers", 1),
        )
        cut = CutSpec(spec["cut"], inst.circuit.num_qubits) if "cut" in spec else inst.cut
        cfg = RunConfig(
            inst.circuit,
            cut,
            engines=engines,
            amp_count=int(suite.get("amps", DEFAULT_AMPS)),
            workers=int(suite.get("workers", 1)),
            timeout=suite.get("timeout", DEFAULT_TIMEOUT),
            deterministic=True,
            max_block_qubits=int(suite.get("max_block_qubits", DEFAULT_MAX_BLOCK_QUBITS)),
            path_budget=suite.get("path_budget", DEFAULT_PATH_BUDGET),
        )
        plan = plan_summary(cfg)
        full: dict[str, list[float]] = {e: [] for e in engines}
        sim: dict[str, list[float]] = {e: [] for e in engines}
        status: dict[str, str] = {}
        n_p: dict[str, int | None] = {}
        deviation = 0.0
        for _ in range(repeats):
            live = tuple(e for e in engines if e not in status)
            if not live:
                break
            cfg.engines = live
            report, _ = run(cfg)
            if report["max_deviation"] is not None:
                deviation = max(deviation, report["max_deviation"])
            for r in report["engines"]:
                n_p[r["engine"]] = r.get("n_p")
                if r.get("timed_out"):
                    status[r["engine"]] = "timed out"
                elif "error" in r:
                    status[r["engine"]] = "refused"
                else:
                    full[r["engine"]].append(r["full_seconds"])
                    sim[r["engine"]].append(r["sim_seconds"])
        row = {
            "name": spec.get("name", f"q{inst.circuit.num_qubits}"),
            "qubits": inst.circuit.num_qubits,
            "cut": cut.l,
            "two_qubit_gates": sum(g.num_qubits == 2 for g in inst.circuit.gates),
            "sizes": list(spec["sizes"]),
            "p_inter": spec["p_inter"],
            "p_intra": spec["p_intra"],
            "blocks": plan["blocks"],
            "separate": plan["separate"],
            "separate_cuts": plan["separate_cuts_standard"],
            "max_deviation": deviation,
            "engines": {},
        }
        for e in engines:
            row["engines"][e] = {
                "status": status.get(e, "ok"),
                "n_p": n_p.get(e),
                "full_mean": statistics.fmean(full[e]) if full[e] else None,
                "full_std": statistics.pstdev(full[e]) if len(full[e]) > 1 else 0.0,
                "sim_mean": statistics.fmean(sim[e]) if sim[e] else None,
                "sim_std": statistics.pstdev(sim[e]) if len(sim[e]) > 1 else 0.0,
            }
        timeout = cfg.timeout
        means = {
            e: (v["full_mean"] if v["full_mean"] is not None else (timeout if v["status"] == "timed out" else None))
            for e, v in row["engines"].items()
        }
        j = means.get("hsf-joint")
        if j:
            if means.get("schrodinger"):
                row["S/J"] = means["schrodinger"] / j
            if means.get("hsf-standard"):
                row["T/J"] = means["hsf-standard"] / j
                row["T/J lower bound"] = row["engines"]["hsf-standard"]["status"] != "ok"
        rows.append(row)
    return rows


def format_bench(rows: Sequence[dict]) -> str:
    head = (
        f"{'circuit':<10} {'q':>3} {'cut':>4} {'#2q':>5} {'blocks+sep':>11} {'sep.cuts':>9}"
    )
    out = [head]
    for r in rows:
        out.append(
            f"{r['name']:<10} {r['qubits']:>3} {r['cut']:>4} {r['two_qubit_gates']:>5} "
            f"{str(r['blocks']) + '+' + str(r['separate']):>11} {r['separate_cuts']:>9}"
        )
        for e, v in r["engines"].items():
            if v["full_mean"] is None:
                out.append(f"    {e:<13} {v['status']}")
                continue
            paths = f"2^{math.log2(v['n_p']):.1f}" if v["n_p"] else "-"
            out.append(
                f"    {e:<13} {v['full_mean']:.3f} ({v['full_std']:.3f}) "
                f"{v['sim_mean']:.3f} ({v['sim_std']:.3f})  paths {paths}"
            )
        for key in ("S/J", "T/J"):
            if key in r:
                bound = ">= " if r.get(key + " lower bound") else ""
                out.append(f"    {key}: {bound}{r[key]:.3f}")
    return "\n".join(out)


# -- argument parsing ------------------------------------------------------


def _gen_spec(text: str) -> tuple[list[int], float, float, int]:
    parts = text.split(",")
    if len(parts) != 5:
        raise ValueError("--gen-qaoa expects n1,n2,p_intra,p_inter,seed")
    return [int(parts[0]), int(parts[1])], float(parts[2]), float(parts[3]), int(parts[4])


def _load_circuit(args) -> tuple[Circuit, CutSpec, dict]:
    if args.gen_qaoa:
        sizes, p_intra, p_inter, seed = _gen_spec(args.gen_qaoa)
        inst = qaoa_circuit(sbm_graph(sizes, p_intra, p_inter, seed), layers=args.layers)
        cut = CutSpec(args.cut, inst.circuit.num_qubits) if args.cut is not None else inst.cut
        meta = {k: v for k, v in inst.manifest().items() if k != "edges"}
        return inst.circuit, cut, meta
    circuit = parse_circuit(Path(args.circuit).read_text())
    l = args.cut if args.cut is not None else circuit.num_qubits // 2 - 1
    return circuit, CutSpec(l, circuit.num_qubits), {"source": str(args.circuit)}


def _add_run_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--circuit", metavar="FILE", help="circuit text file")
    src.add_argument("--gen-qaoa", metavar="n1,n2,p_intra,p_inter,seed")
    p.add_argument("--layers", type=int, default=1, help="QAOA layers for --gen-qaoa")
    p.add_argument("--cut", type=int, help="cut after this qubit (default: generator's or n/2-1)")
    p.add_argument("--engines", default=",".join(ENGINES))
    p.add_argument("--amps", type=int, default=DEFAULT_AMPS)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--max-block-qubits", type=int, default=DEFAULT_MAX_BLOCK_QUBITS)
    p.add_argument("--path-budget", type=int, default=DEFAULT_PATH_BUDGET)
    p.add_argument("--out", metavar="report.json")
    p.add_argument("--dump-amplitudes", metavar="FILE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jointhsf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_args(sub.add_parser("run", help="simulate one circuit with selected engines"))
    b = sub.add_parser("bench", help="run a QAOA benchmark suite from JSON")
    b.add_argument("suite", help="suite JSON file")
    b.add_argument("--out", metavar="table.json")
    g = sub.add_parser("generate", help="write a QAOA circuit and its manifest")
    g.add_argument("spec", metavar="n1,n2,p_intra,p_inter,seed")
    g.add_argument("--layers", type=int, default=1)
    g.add_argument("--circuit-out", required=True)
    g.add_argument("--manifest-out")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    if args.command == "generate":
        try:
            sizes, p_intra, p_inter, seed = _gen_spec(args.spec)
            inst = qaoa_circuit(sbm_graph(sizes, p_intra, p_inter, seed), layers=args.layers)
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        Path(args.circuit_out).write_text(serialize_circuit(inst.circuit))
        if args.manifest_out:
            Path(args.manifest_out).write_text(json.dumps(inst.manifest(), indent=2))
        return EXIT_OK

    if args.command == "bench":
        try:
            suite = json.loads(Path(args.suite).read_text())
        except (OSError, ValueError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        rows = bench(suite)
        print(format_bench(rows))
        if args.out:
            Path(args.out).write_text(json.dumps(rows, indent=2))
        if any(r["max_deviation"] >= DEVIATION_TOL for r in rows):
            return EXIT_DEVIATION
        return EXIT_OK

    try:
        circuit, cut, meta = _load_circuit(args)
        cfg = RunConfig(
            circuit,
            cut,
            engines=tuple(e.strip() for e in args.engines.split(",") if e.strip()),
            amp_count=args.amps,
            workers=args.workers,
            timeout=args.timeout if args.timeout > 0 else None,
            deterministic=args.deterministic,
            max_block_qubits=args.max_block_qubits,
            path_budget=args.path_budget,
            meta=meta,
        )
    except (OSError, ValueError, CircuitError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report, _ = run(cfg, args.dump_amplitudes)
    print(format_run(report))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, default=float))
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
