"""Command-line driver: parse instances and update traces, run the dynamic
engine (optionally verified against the from-scratch oracle), benchmark, and
report exact optima for small instances.

Trace format (UTF-8, line based):
    + <cid> <point-index>     insert a client ("P3" is accepted for "3")
    - <cid>                   delete a live client
    ? cost                    print the current cost estimate
    ? solution                print the open facilities, sorted
    # ...                     comment
"""

from __future__ import annotations

import argparse
import os
import random
import statistics
import sys
import time
from dataclasses import dataclass

from .engine import Engine
from .hierarchy import PAYMENT_BOUND_FACTOR
from .instance import Instance, InstanceError, NetflocError
from .oracle import OracleView, compare_states, engine_snapshot, \
    brute_force_opt, logical_violations

PAYMENT_SLACK = 1e-9  # relative slack for float distance sums


class TraceError(NetflocError):
    """Malformed trace file."""


class VerificationError(NetflocError):
    """Engine state diverged from the from-scratch recomputation."""

    def __init__(self, event_index: int, details: list[str]):
        super().__init__(f"event {event_index}: {details[0]}")
        self.event_index = event_index
        self.details = details


@dataclass(frozen=True)
class TraceEvent:
    kind: str            # "insert" | "delete" | "cost" | "solution"
    cid: str | None = None
    point: int | None = None


@dataclass
class RunReport:
    """Query outputs plus aggregate work counters for one trace replay."""

    outputs: list[str]
    queries: int
    mutations: int
    affected_total: int
    heap_pulls_total: int
    flips_total: int
    elapsed: float

    def render(self) -> str:
        return "\n".join(self.outputs)


def fmt_number(x) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.12g}"


def _parse_point(token: str, line_no: int) -> int:
    raw = token[1:] if token[:1] in ("P", "p") else token
    try:
        value = int(raw)
    except ValueError:
        raise TraceError(f"line {line_no}: bad point index {token!r}") from None
    if value < 0:
        raise TraceError(f"line {line_no}: bad point index {token!r}")
    return value


def parse_trace_text(text: str) -> list[TraceEvent]:
    """Parse a trace, enforcing insert-before-delete client id consistency."""
    events: list[TraceEvent] = []
    live: set[str] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "+" and len(parts) == 3:
            cid = parts[1]
            if cid in live:
                raise TraceError(f"line {line_no}: client {cid!r} already live")
            live.add(cid)
            events.append(TraceEvent("insert", cid, _parse_point(parts[2], line_no)))
        elif parts[0] == "-" and len(parts) == 2:
            cid = parts[1]
            if cid not in live:
                raise TraceError(f"line {line_no}: delete of non-live client {cid!r}")
            live.remove(cid)
            events.append(TraceEvent("delete", cid))
        elif parts[0] == "?" and len(parts) == 2 and parts[1] in ("cost", "solution"):
            events.append(TraceEvent(parts[1]))
        else:
            raise TraceError(f"line {line_no}: unrecognized event {line!r}")
    return events


def parse_trace(path) -> list[TraceEvent]:
    with open(path, encoding="utf-8") as fh:
        return parse_trace_text(fh.read())


def parse_instance(path) -> Instance:
    """Load and validate an instance file."""
    return Instance.load(path)


def _apply_event(engine: Engine, event: TraceEvent, outputs: list[str]) -> None:
    if event.kind == "insert":
        engine.insert_client(event.cid, event.point)
    elif event.kind == "delete":
        engine.delete_client(event.cid)
    elif event.kind == "cost":
        outputs.append(fmt_number(engine.cost_query()))
    else:
        outputs.append(" ".join(f"F{fid}" for fid in sorted(engine.solution_query())))


def run_trace(instance: Instance, trace, mode: str = "fast") -> RunReport:
    """Replay a trace; in "verified" mode every mutation is cross-checked
    against the from-scratch recomputation and a mismatch aborts the run."""
    if mode not in ("fast", "verified"):
        raise ValueError(f"unknown mode {mode!r}")
    engine = Engine(instance)
    view: OracleView | None = None
    outputs: list[str] = []
    affected = pulls = flips = mutations = 0
    started = time.perf_counter()
    for index, event in enumerate(trace):
        _apply_event(engine, event, outputs)
        if event.kind in ("insert", "delete"):
            mutations += 1
            affected += engine.last_update.affected
            pulls += engine.last_update.heap_pulls
            flips += engine.last_update.flips
            if mode == "verified":
                if view is None or view.hierarchy is not engine.hierarchy:
                    view = OracleView(instance, engine.hierarchy)
                expected = view.recompute_state(dict(engine.registry.items()))
                mismatches = compare_states(engine_snapshot(engine), expected)
                if mismatches:
                    raise VerificationError(index, mismatches)
    elapsed = time.perf_counter() - started
    return RunReport(outputs, len(outputs), mutations, affected, pulls, flips, elapsed)


def verify_trace(instance: Instance, trace, corruption=None) -> tuple[int, list[str]]:
    """Verified replay plus the per-state invariant suite.

    Returns (exit status, diagnostic lines); status 0 means every mutation
    matched the oracle and every invariant held.  ``corruption`` is a test
    hook called as corruption(engine, event_index) after each event.
    """
    engine = Engine(instance)
    view: OracleView | None = None
    outputs: list[str] = []
    for index, event in enumerate(trace):
        try:
            _apply_event(engine, event, outputs)
        except RuntimeError as exc:
            return 1, [f"event {index}: {exc}"]
        if corruption is not None:
            corruption(engine, index)
        if event.kind not in ("insert", "delete"):
            continue
        if view is None or view.hierarchy is not engine.hierarchy:
            view = OracleView(instance, engine.hierarchy)
        expected = view.recompute_state(dict(engine.registry.items()))
        mismatches = compare_states(engine_snapshot(engine), expected)
        if mismatches:
            return 1, [f"event {index}: {m}" for m in mismatches]
        problems = logical_violations(view, engine)
        if problems:
            return 1, [f"event {index}: {p}" for p in problems]
        realized = engine.realized_cost()
        bound = PAYMENT_BOUND_FACTOR * engine.cost_query()
        if realized > bound * (1 + PAYMENT_SLACK):
            return 1, [f"event {index}: realized cost {realized} above {bound}"]
    return 0, outputs


def bench_trace(instance: Instance, trace, repetitions: int = 1) -> str:
    """Replay timings as CSV: one row per event with work counters; with
    repetitions > 1 a median-microseconds column is appended."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    timings: list[list[float]] = [[] for _ in trace]
    rows: list[tuple] = []
    for rep in range(repetitions):
        engine = Engine(instance)
        sink: list[str] = []
        for index, event in enumerate(trace):
            before = time.perf_counter_ns()
            _apply_event(engine, event, sink)
            micros = (time.perf_counter_ns() - before) / 1000.0
            timings[index].append(micros)
            if rep == 0:
                if event.kind in ("insert", "delete"):
                    stats = engine.last_update
                    rows.append((index, event.kind, stats.heap_pulls, stats.flips))
                else:
                    rows.append((index, event.kind, 0, 0))
    header = "event_index,op,micros,heap_pulls,flips"
    if repetitions > 1:
        header += ",micros_median"
    lines = [header]
    for index, kind, pulls, flips in rows:
        line = f"{index},{kind},{timings[index][0]:.1f},{pulls},{flips}"
        if repetitions > 1:
            line += f",{statistics.median(timings[index]):.1f}"
        lines.append(line)
    return "\n".join(lines)


def opt_command(instance: Instance, trace) -> str:
    """Apply a trace's mutations, then report the exact optimum next to the
    engine's estimate and the cost of the realized solution."""
    engine = Engine(instance)
    sink: list[str] = []
    for event in trace:
        if event.kind in ("insert", "delete"):
            _apply_event(engine, event, sink)
    opt = brute_force_opt(instance, dict(engine.registry.items()))
    cost = engine.cost_query()
    realized = engine.realized_cost()
    if opt.cost > 0:
        ratio_realized = realized / opt.cost
        ratio_cost = cost / opt.cost
    else:
        ratio_realized = ratio_cost = 1.0
    return "\n".join([
        f"OPT={fmt_number(opt.cost)}",
        f"opt_open={' '.join(f'F{f}' for f in sorted(opt.open_set))}",
        f"cost_query={fmt_number(cost)}",
        f"realized={fmt_number(realized)}",
        f"ratio_realized={fmt_number(ratio_realized)}",
        f"ratio_cost={fmt_number(ratio_cost)}",
    ])


# -- fuzz generation ---------------------------------------------------------

def default_seed() -> int:
    return int(os.environ.get("NETFLOC_SEED", "0"))


def random_instance(rng: random.Random, n_facilities: int = 8,
                    n_pool_points: int = 40, grid: int = 1000,
                    cost_range: tuple[int, int] = (1, 500),
                    kappa=None) -> Instance:
    """Uniform random instance: integer grid points under L2, facility
    locations distinct, opening costs uniform integers."""
    fac_points: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    while len(fac_points) < n_facilities:
        p = (rng.randint(0, grid), rng.randint(0, grid))
        if p not in seen:
            seen.add(p)
            fac_points.append(p)
    pool = [(rng.randint(0, grid), rng.randint(0, grid)) for _ in range(n_pool_points)]
    facilities = [(i, rng.randint(*cost_range)) for i in range(n_facilities)]
    return Instance("euclidean-L2", points=fac_points + pool,
                    facilities=facilities, kappa=kappa)


def random_trace(rng: random.Random, instance: Instance,
                 n_events: int) -> list[TraceEvent]:
    """Insert/delete stream at a 2:1 ratio; deletions pick a uniformly
    random live client."""
    events: list[TraceEvent] = []
    live: list[str] = []
    serial = 0
    for _ in range(n_events):
        if live and rng.random() < 1 / 3:
            pick = rng.randrange(len(live))
            cid = live[pick]
            live[pick] = live[-1]
            live.pop()
            events.append(TraceEvent("delete", cid))
        else:
            serial += 1
            cid = f"c{serial}"
            live.append(cid)
            events.append(TraceEvent("insert", cid, rng.randrange(instance.n_points)))
    return events


# -- command line ------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="netfloc",
        description="Dynamic facility location engine with O(1) cost queries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="replay a trace, printing query outputs")
    p_run.add_argument("instance")
    p_run.add_argument("trace")
    p_run.add_argument("--verified", action="store_true",
                       help="cross-check every mutation against the oracle")

    p_verify = sub.add_parser("verify", help="verified replay plus invariant suite")
    p_verify.add_argument("instance")
    p_verify.add_argument("trace")

    p_bench = sub.add_parser("bench", help="per-event timing table (CSV)")
    p_bench.add_argument("instance")
    p_bench.add_argument("trace")
    p_bench.add_argument("--reps", type=int, default=1)

    p_opt = sub.add_parser("opt", help="exact optimum vs the engine's solution")
    p_opt.add_argument("instance")
    p_opt.add_argument("trace")

    p_dump = sub.add_parser("dump-tree", help="print the dependency tree")
    p_dump.add_argument("instance")

    args = parser.parse_args(argv)
    try:
        instance = parse_instance(args.instance)
        if args.command == "dump-tree":
            print(Engine(instance).hierarchy.dump())
            return 0
        trace = parse_trace(args.trace)
        if args.command == "run":
            report = run_trace(instance, trace,
                               mode="verified" if args.verified else "fast")
            if report.outputs:
                print(report.render())
            return 0
        if args.command == "verify":
            code, lines = verify_trace(instance, trace)
            if code == 0:
                if lines:
                    print("\n".join(lines))
            else:
                for line in lines:
                    print(line, file=sys.stderr)
            return code
        if args.command == "bench":
            print(bench_trace(instance, trace, repetitions=args.reps))
            return 0
        print(opt_command(instance, trace))
        return 0
    except VerificationError as exc:
        for line in exc.details:
            print(f"event {exc.event_index}: {line}", file=sys.stderr)
        return 1
    except (InstanceError, TraceError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
