"""Protective-device coordination.

Breaker trip times come from parameterized long-time/short-time curves with
no instantaneous element; selectivity relies on zone-selective interlocking
instead: the breakers nearest a fault emit lock signals that push every
other fault-carrying breaker onto its extended delay, while the backup
obligation (locked breakers still trip) is preserved.  Fuses clear when the
integrated let-through energy of the fault waveform reaches their total
clearing I^2t.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .grid import FuseSpec, GridError, GridModel, TccCurve
from .sc_ac import FaultSummary
from .sc_dc import DcScTrace


class ProtectionError(GridError):
    pass


class NoDetectionError(ProtectionError):
    pass


class TraceTooShortError(ProtectionError):
    """Let-through still rising at the end of the trace, below the rating."""


@dataclass(frozen=True)
class FaultLocation:
    """Either on a bus, or on the stub between an element and its breaker."""

    kind: str       # "bus" | "element_terminal"
    target: str

    @staticmethod
    def at_bus(bus_id: str) -> "FaultLocation":
        return FaultLocation("bus", bus_id)

    @staticmethod
    def at_element_terminal(element_id: str) -> "FaultLocation":
        return FaultLocation("element_terminal", element_id)


@dataclass(frozen=True)
class TripEvent:
    breaker_id: str
    time_s: float
    cause: str      # short_time | long_time | zsi_backup
    locked: bool


@dataclass
class BreakerFlow:
    breaker_id: str
    current_a: float          # at the breaker's own voltage level
    toward: str               # node on the fault side of the breaker
    adjacent_to_fault: bool


@dataclass
class BreakerGraph:
    fault: FaultLocation
    fault_node: str
    flows: dict[str, BreakerFlow]
    paths: dict[str, tuple[str, ...]]   # contributor -> breakers walked to fault


@dataclass(frozen=True)
class ZsiResult:
    nearest: frozenset[str]
    locked: frozenset[str]
    trace: tuple[tuple[str, str], ...]   # (emitting breaker, locked breaker)


@dataclass(frozen=True)
class SelectivityReport:
    selective: bool
    cleared_within_cct: bool
    first_trip_s: float
    cct_margin_s: float
    coordination_margin_s: float | None


def trip_time(curve: TccCurve, current: float,
              direction_matches: bool = True) -> float | None:
    """Fastest element trip time, or None below pickup / wrong direction.

    Definite-time elements trip at their configured delay for any current
    above pickup; the inverse long-time characteristic is
    ``t = TD / ((I/pickup)^2 - 1)``, with no trip at the pickup pole.
    """
    if current < 0:
        raise ValueError("current must be >= 0")
    candidates = []
    st = curve.short_time
    if current > st.pickup and (not st.directional or direction_matches):
        candidates.append((st.delay, "short_time"))
    lt = curve.long_time
    if current > lt.pickup:
        if lt.kind == "definite":
            candidates.append((lt.delay, "long_time"))
        else:
            m = current / lt.pickup
            candidates.append((lt.delay / (m * m - 1.0), "long_time"))
    if not candidates:
        return None
    return float(min(t for t, _ in candidates))


def _trip_cause(curve: TccCurve, current: float) -> str:
    st = curve.short_time
    best = (math.inf, "none")
    if current > st.pickup:
        best = (st.delay, "short_time")
    lt = curve.long_time
    if current > lt.pickup:
        t = (lt.delay if lt.kind == "definite"
             else lt.delay / ((current / lt.pickup) ** 2 - 1.0))
        if t < best[0]:
            best = (t, "long_time")
    return best[1]


# ---------------------------------------------------------------------------
# fault-current topology


def _stub(element_id: str) -> str:
    return f"stub:{element_id}"


def _connectivity(grid: GridModel):
    """Adjacency over buses and element stubs; edges carry a breaker id.

    Element ports covered by a breaker connect through it (open breaker:
    no edge); remaining ports connect directly.  Stubs never act as transit
    nodes, so fault current cannot shortcut through a converter.
    """
    adj: dict[str, list[tuple[str, str | None]]] = {}

    def link(a, b, breaker=None):
        adj.setdefault(a, []).append((b, breaker))
        adj.setdefault(b, []).append((a, breaker))

    bus_ids = grid.bus_ids()
    for br in grid.branches:
        link(br.from_bus, br.to_bus)
    breakered_ports: set[tuple[str, str]] = set()
    for bk in grid.breakers:
        a, b = bk.from_element, bk.to_element
        if a in bus_ids and b in bus_ids:
            if bk.closed:
                link(a, b, bk.id)
            continue
        element, bus = (b, a) if a in bus_ids else (a, b)
        breakered_ports.add((element, bus))
        if bk.closed:
            link(_stub(element), bus, bk.id)
    for e in grid.elements():
        ports = [e.bus]
        ac = getattr(e, "ac_bus", None)
        if ac is not None:
            ports.append(ac)
        for port in ports:
            if (e.id, port) not in breakered_ports:
                link(_stub(e.id), port)
    return adj


def _breaker_voltage(grid: GridModel, breaker_id: str) -> float:
    bk = grid.breaker(breaker_id)
    for end in (bk.to_element, bk.from_element):
        if end in grid.bus_ids():
            return grid.bus(end).nominal_voltage
    return grid.bus(grid.element(bk.from_element).bus).nominal_voltage


def build_breaker_graph(grid: GridModel, fault: FaultLocation,
                        summary: FaultSummary) -> BreakerGraph:
    """Trace each contribution from its source to the fault location.

    Contributor magnitudes are the half-cycle AC values from the fault
    summary (already referred to the fault bus); the current through each
    breaker is re-referred to that breaker's voltage level.
    """
    adj = _connectivity(grid)
    if fault.kind == "bus":
        fault_node = fault.target
        grid.bus(fault.target)
    else:
        fault_node = _stub(fault.target)
        grid.element(fault.target)
    if fault_node not in adj:
        raise ProtectionError(f"fault location {fault.target!r} unreachable")

    # BFS tree rooted at the fault: parent pointers give each path.
    # Stub nodes are terminal (no transit through elements).
    parent: dict[str, tuple[str, str | None]] = {fault_node: (fault_node, None)}
    dq = deque([fault_node])
    while dq:
        node = dq.popleft()
        if node.startswith("stub:") and node != fault_node:
            continue
        for nb, breaker in adj.get(node, ()):
            if nb not in parent:
                parent[nb] = (node, breaker)
                dq.append(nb)

    v_fault = grid.bus(summary.bus).nominal_voltage
    flows: dict[str, BreakerFlow] = {}
    paths: dict[str, tuple[str, ...]] = {}
    for contributor, trace in summary.traces.items():
        node = _stub(contributor)
        if fault.kind == "element_terminal" and contributor == fault.target:
            paths[contributor] = ()
            continue   # feeds the stub directly, crosses no breaker
        if node not in parent:
            continue
        walked = []
        while node != fault_node:
            nxt, breaker = parent[node]
            if breaker is not None:
                walked.append((breaker, nxt))
            node = nxt
        paths[contributor] = tuple(b for b, _ in walked)
        for breaker, toward in walked:
            amps = trace.iac_half * v_fault / _breaker_voltage(grid, breaker)
            if breaker not in flows:
                flows[breaker] = BreakerFlow(breaker, 0.0, toward, False)
            flows[breaker].current_a += amps
            flows[breaker].toward = toward

    for flow in flows.values():
        bk = grid.breaker(flow.breaker_id)
        flow.adjacent_to_fault = fault.target in (bk.from_element, bk.to_element)

    return BreakerGraph(fault=fault, fault_node=fault_node,
                        flows=flows, paths=paths)


def apply_zsi(graph: BreakerGraph, fault: FaultLocation | None = None) -> ZsiResult:
    """Lock every fault-carrying breaker that is not nearest the fault.

    The nearest breakers (seeing current toward the fault, adjacent to it)
    emit the lock; tie breakers on a path forward it outward, which the
    propagation trace records hop by hop.  `fault` defaults to the location
    the graph was built for.
    """
    fault = fault or graph.fault
    nearest = frozenset(
        b for b, f in graph.flows.items() if f.adjacent_to_fault and f.current_a > 0)
    locked = frozenset(graph.flows) - nearest
    hops: list[tuple[str, str]] = []
    for path in graph.paths.values():
        # path is ordered source -> fault; locks propagate fault -> source
        chain = [b for b in path]
        for i, b in enumerate(chain):
            if b in nearest:
                continue
            downstream = next((c for c in chain[i + 1:]), None)
            emitter = downstream if downstream is not None else min(nearest) if nearest else None
            if emitter is not None and (emitter, b) not in hops:
                hops.append((emitter, b))
    return ZsiResult(nearest=nearest, locked=locked, trace=tuple(hops))


def sequence_of_operations(grid: GridModel, fault: FaultLocation,
                           summary: FaultSummary, zsi_enabled: bool = True,
                           failed_breakers: frozenset[str] | set[str] = frozenset(),
                           ) -> list[TripEvent]:
    """Ordered breaker trips for one fault, with or without lock signals."""
    graph = build_breaker_graph(grid, fault, summary)
    locked = apply_zsi(graph).locked if zsi_enabled else frozenset()

    events = []
    for breaker_id, flow in sorted(graph.flows.items()):
        if breaker_id in failed_breakers:
            continue
        bk = grid.breaker(breaker_id)
        if bk.tcc is None:
            continue
        t = trip_time(bk.tcc, flow.current_a, direction_matches=True)
        if t is None:
            continue
        if breaker_id in locked:
            events.append(TripEvent(breaker_id, t + bk.tcc.zsi_extended_delay,
                                    "zsi_backup", True))
        else:
            events.append(TripEvent(breaker_id, t,
                                    _trip_cause(bk.tcc, flow.current_a), False))
    if not events:
        raise NoDetectionError(
            f"no breaker detects the fault at {fault.target!r}")
    return sorted(events, key=lambda e: (e.time_s, e.breaker_id))


def selectivity_check(events: list[TripEvent], cct_budget: float) -> SelectivityReport:
    """Judge whether exactly the intended breakers clear, and in time.

    Intended breakers are the unlocked ones.  With backups present the trip
    order must put every intended breaker strictly first; without any
    backup structure, more than one breaker tripping means the fault takes
    out more than the intended zone.
    """
    if not events:
        raise ProtectionError("empty trip sequence")
    intended = [e for e in events if not e.locked]
    backups = [e for e in events if e.locked]
    if not intended:
        selective = False
    elif backups:
        selective = max(e.time_s for e in intended) < min(e.time_s for e in backups)
    else:
        selective = len(intended) == 1
    first = float(min(e.time_s for e in events))
    coord = (float(min(e.time_s for e in backups) - max(e.time_s for e in intended))
             if backups and intended else None)
    return SelectivityReport(
        selective=bool(selective),
        cleared_within_cct=bool(first <= cct_budget),
        first_trip_s=first,
        cct_margin_s=float(cct_budget - first),
        coordination_margin_s=coord,
    )


# ---------------------------------------------------------------------------
# fuses


def let_through(trace: DcScTrace) -> np.ndarray:
    """Cumulative I^2t of a sampled waveform (trapezoidal)."""
    i2 = trace.i * trace.i
    dt = np.diff(trace.t)
    e = np.zeros_like(trace.t)
    e[1:] = np.cumsum(0.5 * (i2[1:] + i2[:-1]) * dt)
    return e


def fuse_i2t_clearing(trace: DcScTrace, fuse: FuseSpec) -> float | None:
    """Time at which the waveform's let-through reaches the fuse rating.

    Returns None when the waveform has decayed without ever accumulating
    the rating (the fuse never clears); raises TraceTooShortError when the
    grid ends while the let-through is still rising short of the rating.
    """
    e = let_through(trace)
    rating = fuse.i2t_total_clearing
    if e[-1] >= rating:
        k = int(np.searchsorted(e, rating))
        if k == 0:
            return float(trace.t[0])
        t0, t1 = trace.t[k - 1], trace.t[k]
        e0, e1 = e[k - 1], e[k]
        return float(t0 + (rating - e0) / (e1 - e0) * (t1 - t0))
    peak = float(np.max(np.abs(trace.i))) if trace.i.size else 0.0
    if peak > 0 and abs(float(trace.i[-1])) > 1e-3 * peak:
        raise TraceTooShortError(
            f"let-through still rising at trace end "
            f"({e[-1]:.1f} of {rating:.1f} A^2s)")
    return None
