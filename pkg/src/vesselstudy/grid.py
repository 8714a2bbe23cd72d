"""Single-line-diagram data model for vessel electrical grids.

A grid is an immutable collection of buses, cables, sources, converters,
loads and protective devices.  Everything downstream (power flow, fault
studies, time-domain simulation, protection) consumes this model and never
mutates it, so one loaded grid can safely back any number of concurrent
study runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

AC = "ac"
DC = "dc"

CONVERTER_KINDS = ("inverter", "charger", "dcdc", "grid_inverter")


class GridError(Exception):
    """Base class for grid model errors."""


class GridLookupError(GridError):
    """Unknown element, bus or fixture name."""


@dataclass(frozen=True)
class Bus:
    id: str
    kind: str                      # "ac" or "dc"
    nominal_voltage: float         # V line-to-line (AC) / pole-to-pole (DC)
    frequency: float | None = None  # Hz, AC buses only


@dataclass(frozen=True)
class GeneratorDynamicParams:
    """Machine reactances and time constants feeding the decrement engine.

    Reactances are per-unit on the machine base, time constants in seconds.
    `td0_t`/`td0_st` are open-circuit constants; datasheets quoting
    short-circuit constants are converted at load time.  `synthetic` marks
    values invented for a fixture rather than taken from a datasheet.
    """

    xd: float
    xd_t: float
    xd_st: float
    td0_t: float
    td0_st: float
    tdc: float | None = None      # s; estimated from X''d and Ra when absent
    ikd: float | None = None      # A, steady-state fault current if published
    inertia_h: float = 1.0        # s
    damping: float = 0.0          # pu torque / pu speed
    synthetic: bool = False


@dataclass(frozen=True)
class GeneratorSpec:
    id: str
    bus: str
    rated_kva: float
    rated_kw: float
    voltage: float                # V
    rated_current: float          # A
    frequency: float              # Hz
    power_factor: float
    speed_rpm: float
    winding_resistance_mohm: float
    poles: int | None = None
    dynamics: GeneratorDynamicParams | None = None


@dataclass(frozen=True)
class BatterySource:
    id: str
    bus: str
    capacity_kwh: float
    sc_peak_current: float        # A, datasheet short-circuit current
    sc_time_constant: float       # s, datasheet L/R
    min_soc: float = 0.0


@dataclass(frozen=True)
class CapacitorBranch:
    """Series-RLC discharge branch (a converter DC link)."""

    capacitance: float            # F
    series_resistance: float      # ohm
    series_inductance: float      # H
    initial_voltage: float        # V


@dataclass(frozen=True)
class ConverterSpec:
    """Power-electronic converter.

    `bus` is the primary connection; two-port converters (chargers, grid
    inverters, battery inverters) name the far side in `ac_bus`.  The AC
    coupling used by AC fault studies is `ac_bus` when set, otherwise `bus`
    if that bus is AC.  `p_set_kw` is the steady-state power drawn through
    the converter (drive loading), used as dispatch by the study engines.
    """

    id: str
    bus: str
    kind: str                     # inverter | charger | dcdc | grid_inverter
    rated_current: float          # A
    rated_kw: float
    sc_contribution_factor: float = 1.5
    ac_bus: str | None = None
    p_set_kw: float = 0.0
    dc_link: CapacitorBranch | None = None


@dataclass(frozen=True)
class LoadSpec:
    id: str
    bus: str
    rated_kva: float
    power_factor: float
    static_fraction: float
    motor_fraction: float
    locked_rotor_multiplier: float = 6.25
    xr_ratio: float | None = None


@dataclass(frozen=True)
class CableBranch:
    id: str
    from_bus: str
    to_bus: str
    resistance_ohm: float
    reactance_ohm: float
    synthetic: bool = False


@dataclass(frozen=True)
class LongTimeElement:
    pickup: float                 # A
    kind: str = "definite"        # definite | inverse
    delay: float = 10.0           # s (definite delay, or time dial for inverse)


@dataclass(frozen=True)
class ShortTimeElement:
    pickup: float                 # A
    delay: float = 0.216          # s
    directional: bool = False


@dataclass(frozen=True)
class TccCurve:
    """Long-time + short-time trip characteristic; no instantaneous element."""

    long_time: LongTimeElement
    short_time: ShortTimeElement
    zsi_extended_delay: float = 0.1   # s added when this breaker is locked


@dataclass(frozen=True)
class BreakerSpec:
    id: str
    from_element: str             # element id or bus id
    to_element: str
    directional: bool = False
    tcc: TccCurve | None = None
    closed: bool = True


@dataclass(frozen=True)
class FuseSpec:
    id: str
    element: str
    i2t_total_clearing: float     # A^2 s
    rated_current: float | None = None


@dataclass(frozen=True)
class GridModel:
    name: str
    buses: tuple[Bus, ...] = ()
    branches: tuple[CableBranch, ...] = ()
    generators: tuple[GeneratorSpec, ...] = ()
    batteries: tuple[BatterySource, ...] = ()
    converters: tuple[ConverterSpec, ...] = ()
    loads: tuple[LoadSpec, ...] = ()
    breakers: tuple[BreakerSpec, ...] = ()
    fuses: tuple[FuseSpec, ...] = ()

    # ---- lookups -------------------------------------------------------

    def bus(self, bus_id: str) -> Bus:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise GridLookupError(f"unknown bus {bus_id!r}")

    def bus_ids(self) -> set[str]:
        return {b.id for b in self.buses}

    def elements(self):
        """All non-bus, non-protective elements."""
        yield from self.generators
        yield from self.batteries
        yield from self.converters
        yield from self.loads

    def element(self, element_id: str):
        for e in self.elements():
            if e.id == element_id:
                return e
        raise GridLookupError(f"unknown element {element_id!r}")

    def generator(self, gen_id: str) -> GeneratorSpec:
        for g in self.generators:
            if g.id == gen_id:
                return g
        raise GridLookupError(f"unknown generator {gen_id!r}")

    def breaker(self, breaker_id: str) -> BreakerSpec:
        for b in self.breakers:
            if b.id == breaker_id:
                return b
        raise GridLookupError(f"unknown breaker {breaker_id!r}")

    def load(self, load_id: str) -> LoadSpec:
        for l in self.loads:
            if l.id == load_id:
                return l
        raise GridLookupError(f"unknown load {load_id!r}")

    def converter(self, conv_id: str) -> ConverterSpec:
        for c in self.converters:
            if c.id == conv_id:
                return c
        raise GridLookupError(f"unknown converter {conv_id!r}")

    def element_breaker(self, element_id: str) -> BreakerSpec | None:
        """The breaker connecting an element to its bus, if any."""
        for b in self.breakers:
            if element_id in (b.from_element, b.to_element):
                other = b.to_element if b.from_element == element_id else b.from_element
                if other in self.bus_ids():
                    return b
        return None

    def element_online(self, element_id: str) -> bool:
        b = self.element_breaker(element_id)
        return b.closed if b is not None else True

    def converter_ac_bus(self, conv: ConverterSpec) -> str | None:
        if conv.ac_bus is not None:
            return conv.ac_bus
        if self.bus(conv.bus).kind == AC:
            return conv.bus
        return None

    # ---- topology ------------------------------------------------------

    def _bus_edges(self, kind: str) -> list[tuple[str, str]]:
        ids = {b.id for b in self.buses if b.kind == kind}
        edges = []
        for br in self.branches:
            if br.from_bus in ids and br.to_bus in ids:
                edges.append((br.from_bus, br.to_bus))
        for bk in self.breakers:
            if bk.closed and bk.from_element in ids and bk.to_element in ids:
                edges.append((bk.from_element, bk.to_element))
        return edges

    def islands(self, kind: str) -> list[set[str]]:
        """Connected bus groups of one kind, honouring open tie breakers."""
        ids = [b.id for b in self.buses if b.kind == kind]
        parent = {i: i for i in ids}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self._bus_edges(kind):
            parent[find(a)] = find(b)
        groups: dict[str, set[str]] = {}
        for i in ids:
            groups.setdefault(find(i), set()).add(i)
        return sorted(groups.values(), key=lambda s: sorted(s)[0])

    def island_of(self, bus_id: str) -> set[str]:
        kind = self.bus(bus_id).kind
        for isl in self.islands(kind):
            if bus_id in isl:
                return isl
        raise GridLookupError(f"bus {bus_id!r} not in any island")

    def with_breaker_states(self, states: dict[str, bool]) -> "GridModel":
        """Functional update: a copy with the given breakers set open/closed."""
        unknown = set(states) - {b.id for b in self.breakers}
        if unknown:
            raise GridLookupError(f"unknown breakers {sorted(unknown)}")
        new = tuple(
            replace(b, closed=states.get(b.id, b.closed)) for b in self.breakers
        )
        return replace(self, breakers=new)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    element_id: str
    rule: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    def ok(self) -> bool:
        return not self.violations

    def __iter__(self):
        return iter(self.violations)


def _rel_dev(actual: float, expected: float) -> float:
    if expected == 0:
        return math.inf if actual != 0 else 0.0
    return abs(actual - expected) / abs(expected)


def validate(grid: GridModel) -> ValidationReport:
    """Check every type invariant; violations are data, not exceptions."""
    v: list[Violation] = []
    add = lambda eid, rule, msg: v.append(Violation(eid, rule, msg))

    if not grid.buses:
        add(grid.name, "empty grid", "grid declares no buses")
        return ValidationReport(tuple(v))

    bus_ids = set()
    for b in grid.buses:
        if b.id in bus_ids:
            add(b.id, "duplicate id", "bus id declared twice")
        bus_ids.add(b.id)
        if b.nominal_voltage <= 0:
            add(b.id, "voltage", f"nominal voltage {b.nominal_voltage} not > 0")
        if b.kind == AC and b.frequency not in (50.0, 60.0):
            add(b.id, "frequency", f"AC bus frequency {b.frequency} not 50 or 60 Hz")
        if b.kind not in (AC, DC):
            add(b.id, "bus kind", f"unknown bus kind {b.kind!r}")

    seen = set(bus_ids)
    for e in grid.elements():
        if e.id in seen:
            add(e.id, "duplicate id", "id declared twice")
        seen.add(e.id)
        if e.bus not in bus_ids:
            add(e.id, "dangling reference", f"bus {e.bus!r} not declared")

    def bus_kind(bus_id):
        return grid.bus(bus_id).kind if bus_id in bus_ids else None

    for g in grid.generators:
        if bus_kind(g.bus) == DC:
            add(g.id, "bus kind", "generator placed on a DC bus")
        for name, val in (("rated_kva", g.rated_kva), ("rated_kw", g.rated_kw),
                          ("voltage", g.voltage), ("rated_current", g.rated_current)):
            if val <= 0:
                add(g.id, "positive", f"{name} must be > 0")
        if not 0 < g.power_factor <= 1:
            add(g.id, "power factor", f"pf {g.power_factor} outside (0, 1]")
        if _rel_dev(g.rated_kw, g.rated_kva * g.power_factor) > 0.01:
            add(g.id, "kw/kva/pf mismatch",
                f"rated_kw {g.rated_kw} vs kva*pf {g.rated_kva * g.power_factor:.1f}")
        expect_i = g.rated_kva * 1e3 / (math.sqrt(3) * g.voltage)
        if _rel_dev(g.rated_current, expect_i) > 0.01:
            add(g.id, "current/kva/voltage mismatch",
                f"rated_current {g.rated_current} vs kva/(sqrt3*V) {expect_i:.1f}")
        d = g.dynamics
        if d is not None:
            if not 0 < d.xd_st < d.xd_t < d.xd:
                add(g.id, "reactance ordering",
                    f"need 0 < xd_st < xd_t < xd, got {d.xd_st}, {d.xd_t}, {d.xd}")
            for name, val in (("td0_t", d.td0_t), ("td0_st", d.td0_st), ("tdc", d.tdc)):
                if val is not None and val <= 0:
                    add(g.id, "time constant", f"{name} must be > 0")

    for bat in grid.batteries:
        if bus_kind(bat.bus) == AC:
            add(bat.id, "bus kind", "battery placed on an AC bus")
        if bat.sc_peak_current <= 0:
            add(bat.id, "positive", "sc_peak_current must be > 0")
        if bat.sc_time_constant <= 0:
            add(bat.id, "positive", "sc_time_constant must be > 0")
        if not 0 <= bat.min_soc < 1:
            add(bat.id, "min soc", f"min_soc {bat.min_soc} outside [0, 1)")

    for c in grid.converters:
        if c.kind not in CONVERTER_KINDS:
            add(c.id, "converter kind", f"unknown kind {c.kind!r}")
        if c.rated_current <= 0:
            add(c.id, "positive", "rated_current must be > 0")
        if c.sc_contribution_factor < 1:
            add(c.id, "sc factor", "sc_contribution_factor must be >= 1")
        if c.ac_bus is not None:
            if c.ac_bus not in bus_ids:
                add(c.id, "dangling reference", f"ac bus {c.ac_bus!r} not declared")
            elif bus_kind(c.ac_bus) != AC:
                add(c.id, "bus kind", "ac_bus must reference an AC bus")
        if c.dc_link is not None:
            cap = c.dc_link
            for name, val in (("capacitance", cap.capacitance),
                              ("series_resistance", cap.series_resistance),
                              ("series_inductance", cap.series_inductance),
                              ("initial_voltage", cap.initial_voltage)):
                if val <= 0:
                    add(c.id, "dc link", f"{name} must be > 0")

    for l in grid.loads:
        if abs(l.static_fraction + l.motor_fraction - 1.0) > 1e-9:
            add(l.id, "fraction split",
                f"static {l.static_fraction} + motor {l.motor_fraction} != 1")
        if not 0 < l.power_factor <= 1:
            add(l.id, "power factor", f"pf {l.power_factor} outside (0, 1]")
        if l.rated_kva <= 0:
            add(l.id, "positive", "rated_kva must be > 0")

    endpoints = bus_ids | {e.id for e in grid.elements()}
    for bk in grid.breakers:
        if bk.id in seen:
            add(bk.id, "duplicate id", "id declared twice")
        seen.add(bk.id)
        for end in (bk.from_element, bk.to_element):
            if end not in endpoints:
                add(bk.id, "dangling reference", f"endpoint {end!r} not declared")
        if bk.tcc is not None:
            t = bk.tcc
            if t.short_time.pickup <= t.long_time.pickup:
                add(bk.id, "pickup ordering",
                    "short-time pickup must exceed long-time pickup")
            if t.short_time.delay <= 0 or t.long_time.delay <= 0:
                add(bk.id, "delay", "element delays must be > 0")

    for f in grid.fuses:
        if f.id in seen:
            add(f.id, "duplicate id", "id declared twice")
        seen.add(f.id)
        if f.element not in endpoints:
            add(f.id, "dangling reference", f"element {f.element!r} not declared")
        if f.i2t_total_clearing <= 0:
            add(f.id, "i2t", "i2t_total_clearing must be > 0")

    for br in grid.branches:
        for end in (br.from_bus, br.to_bus):
            if end not in bus_ids:
                add(br.id, "dangling reference", f"bus {end!r} not declared")

    # AC islands must not mix frequencies
    for isl in grid.islands(AC):
        freqs = {grid.bus(b).frequency for b in isl}
        if len(freqs) > 1:
            add(sorted(isl)[0], "island frequency",
                f"island mixes frequencies {sorted(freqs)}")

    return ValidationReport(tuple(v))
