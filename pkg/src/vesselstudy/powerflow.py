"""Steady-state solution of the vessel grid.

AC islands are solved with a dense Newton-Raphson load flow (per-unit on a
1 MVA system base, constant-power loads).  Buses joined by closed
zero-impedance tie breakers are merged into supernodes before the solve.
DC islands get an algebraic power-balance restoration: generator-side
chargers pick up the island load plus fixed converter losses, shared in
proportion to their capability.  The solved machine terminal conditions
feed the short-circuit decrement engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import AC, DC, ConverterSpec, GridError, GridModel

S_BASE_KVA = 1000.0


class PowerflowError(GridError):
    """Base class for steady-state solve failures."""


class ConvergenceError(PowerflowError):
    pass


class IslandError(PowerflowError):
    """AC island without a usable slack source."""


class CapacityError(PowerflowError):
    """DC island load exceeds what the online sources can supply."""


@dataclass(frozen=True)
class OperatingPoint:
    """Pre-fault machine terminal state for the decrement formulas."""

    u0: float     # V line-to-line
    i0: float     # A
    phi0: float   # rad, in [0, pi/2]


@dataclass(frozen=True)
class PowerflowSolution:
    v_pu: dict[str, float]
    angle_rad: dict[str, float]
    injections_kw: dict[str, tuple[float, float]]   # element -> (P kW, Q kvar)
    bus_p_kw: dict[str, float]
    bus_q_kvar: dict[str, float]
    iterations: int
    max_mismatch: float
    online: frozenset[str]
    element_bus: dict[str, str]
    bus_nominal_v: dict[str, float]
    slack_elements: tuple[str, ...]


@dataclass(frozen=True)
class DcBalanceSolution:
    transfers_kw: dict[str, float]       # converter -> power through it (input side)
    source_output_kw: dict[str, float]   # generator -> AC output
    loads_kw: dict[str, float]           # sink -> delivered power
    losses_kw: float
    residual_kw: float


def load_pq_kw(load, scale: float = 1.0) -> tuple[float, float]:
    p = load.rated_kva * load.power_factor * scale
    q = load.rated_kva * math.sin(math.acos(load.power_factor)) * scale
    return p, q


# ---------------------------------------------------------------------------
# AC network assembly


@dataclass
class AcNetwork:
    """One AC island reduced to supernodes with a per-unit Y matrix."""

    nodes: list[frozenset[str]]            # member buses per supernode
    node_of: dict[str, int]
    ybus: np.ndarray
    vbase: list[float]
    frequency: float


def build_ac_networks(grid: GridModel) -> list[AcNetwork]:
    nets = []
    for island in grid.islands(AC):
        # merge buses joined by closed zero-impedance tie breakers
        parent = {b: b for b in island}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for bk in grid.breakers:
            if bk.closed and bk.from_element in parent and bk.to_element in parent:
                parent[find(bk.from_element)] = find(bk.to_element)
        groups: dict[str, set[str]] = {}
        for b in island:
            groups.setdefault(find(b), set()).add(b)
        nodes = [frozenset(g) for g in sorted(groups.values(), key=lambda s: sorted(s)[0])]
        node_of = {b: i for i, g in enumerate(nodes) for b in g}
        vbase = [grid.bus(sorted(g)[0]).nominal_voltage for g in nodes]
        freq = grid.bus(sorted(island)[0]).frequency or 60.0

        n = len(nodes)
        y = np.zeros((n, n), dtype=complex)
        for br in grid.branches:
            if br.from_bus in node_of and br.to_bus in node_of:
                i, k = node_of[br.from_bus], node_of[br.to_bus]
                if i == k:
                    continue
                zb = vbase[i] ** 2 / (S_BASE_KVA * 1e3)
                yline = 1.0 / complex(br.resistance_ohm / zb, br.reactance_ohm / zb)
                y[i, i] += yline
                y[k, k] += yline
                y[i, k] -= yline
                y[k, i] -= yline
        nets.append(AcNetwork(nodes, node_of, y, vbase, freq))
    return nets


def _island_sources(grid: GridModel, net: AcNetwork):
    gens = [g for g in grid.generators
            if g.bus in net.node_of and grid.element_online(g.id)]
    ginvs = [c for c in grid.converters
             if c.kind == "grid_inverter" and grid.element_online(c.id)
             and grid.converter_ac_bus(c) in net.node_of]
    return gens, ginvs


# ---------------------------------------------------------------------------
# Newton-Raphson core


def _newton_raphson(ybus, s_spec, slack, pv, v_sched, tol, max_iter):
    """Polar NR on one island; returns (V complex, iterations, mismatch)."""
    n = ybus.shape[0]
    g, b = ybus.real, ybus.imag
    theta = np.zeros(n)
    v = np.ones(n)
    for i, vs in v_sched.items():
        v[i] = vs
    pq = [i for i in range(n) if i != slack and i not in pv]
    nonslack = [i for i in range(n) if i != slack]

    for it in range(max_iter + 1):
        vc = v * np.exp(1j * theta)
        s_calc = vc * np.conj(ybus @ vc)
        dp = s_spec.real[nonslack] - s_calc.real[nonslack]
        dq = s_spec.imag[pq] - s_calc.imag[pq]
        mism = max([abs(x) for x in dp] + [abs(x) for x in dq], default=0.0)
        if mism <= tol:
            return vc, it, mism
        if it == max_iter:
            raise ConvergenceError(
                f"power flow not converged after {max_iter} iterations "
                f"(mismatch {mism:.3e} pu)")

        p_calc, q_calc = s_calc.real, s_calc.imag
        th_ik = theta[:, None] - theta[None, :]
        gc = g * np.cos(th_ik) + b * np.sin(th_ik)
        gs = g * np.sin(th_ik) - b * np.cos(th_ik)

        npq, nns = len(pq), len(nonslack)
        jac = np.zeros((nns + npq, nns + npq))
        # dP/dtheta, dP/dV
        for r, i in enumerate(nonslack):
            for c, k in enumerate(nonslack):
                jac[r, c] = (v[i] * v[k] * gs[i, k] if i != k
                             else -q_calc[i] - b[i, i] * v[i] ** 2)
            for c, k in enumerate(pq):
                jac[r, nns + c] = (v[i] * gc[i, k] if i != k
                                  else p_calc[i] / v[i] + g[i, i] * v[i])
        # dQ/dtheta, dQ/dV
        for r, i in enumerate(pq):
            for c, k in enumerate(nonslack):
                jac[nns + r, c] = (-v[i] * v[k] * gc[i, k] if i != k
                                   else p_calc[i] - g[i, i] * v[i] ** 2)
            for c, k in enumerate(pq):
                jac[nns + r, nns + c] = (v[i] * gs[i, k] if i != k
                                         else q_calc[i] / v[i] - b[i, i] * v[i])

        try:
            dx = np.linalg.solve(jac, np.concatenate([dp, dq]))
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Jacobian: {exc}") from None
        if not np.all(np.isfinite(dx)):
            raise ConvergenceError("diverged: non-finite Newton step")
        theta[nonslack] += dx[:nns]
        v[pq] += dx[nns:]
        if np.any(v <= 0) or np.any(v > 10):
            raise ConvergenceError("diverged: voltage left (0, 10] pu")
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# public solves


def solve_ac_powerflow(
    grid: GridModel,
    tol: float = 1e-8,
    max_iter: int = 20,
    slack: str | None = None,
    dispatch: dict[str, float] | None = None,
    load_scale: dict[str, float] | None = None,
    converter_draws: dict[str, tuple[float, float]] | None = None,
) -> PowerflowSolution:
    """Newton-Raphson load flow over every AC island of the grid.

    `slack` designates the slack generator (default: largest online machine
    per island; an online grid inverter serves as slack on inverter-fed
    islands).  `dispatch` sets non-slack generator P in kW (default:
    island load shared in proportion to machine rating).  `load_scale` and
    `converter_draws` adjust the consumed powers for scenario studies.
    """
    dispatch = dict(dispatch or {})
    load_scale = dict(load_scale or {})
    converter_draws = dict(converter_draws or {})

    v_pu: dict[str, float] = {}
    angle: dict[str, float] = {}
    injections: dict[str, tuple[float, float]] = {}
    slack_elements: list[str] = []
    online: set[str] = set()
    total_iter = 0
    worst = 0.0

    for net in build_ac_networks(grid):
        gens, ginvs = _island_sources(grid, net)
        island_loads = [l for l in grid.loads
                        if l.bus in net.node_of and grid.element_online(l.id)]
        island_draw_convs = [
            c for c in grid.converters
            if grid.converter_ac_bus(c) in net.node_of and c.kind != "grid_inverter"
            and grid.element_online(c.id)
        ]

        if gens:
            if slack is not None and any(g.id == slack for g in gens):
                slack_gen = next(g for g in gens if g.id == slack)
            else:
                slack_gen = max(gens, key=lambda g: (g.rated_kva, g.id))
            slack_element = slack_gen.id
            slack_node = net.node_of[slack_gen.bus]
        elif ginvs:
            ginv = max(ginvs, key=lambda c: (c.rated_current, c.id))
            slack_element = ginv.id
            slack_node = net.node_of[grid.converter_ac_bus(ginv)]
            slack_gen = None
        elif not island_loads and not any(
                converter_draws.get(c.id, (c.p_set_kw, 0.0)) != (0.0, 0.0)
                for c in island_draw_convs):
            # fully de-energized island: record zero voltage, nothing to solve
            for group in net.nodes:
                for bus_id in group:
                    v_pu[bus_id] = 0.0
                    angle[bus_id] = 0.0
            continue
        else:
            raise IslandError(
                f"AC island {sorted(min(net.nodes, key=lambda s: sorted(s)[0]))} "
                "has no online generator or grid inverter to act as slack")
        slack_elements.append(slack_element)

        # consumed powers per node (pu)
        n = len(net.nodes)
        s_spec = np.zeros(n, dtype=complex)
        consumed: list[tuple[str, int, float, float]] = []
        for l in island_loads:
            p, q = load_pq_kw(l, load_scale.get(l.id, 1.0))
            consumed.append((l.id, net.node_of[l.bus], p, q))
        for c in island_draw_convs:
            p, q = converter_draws.get(c.id, (c.p_set_kw, 0.0))
            if p or q:
                consumed.append((c.id, net.node_of[grid.converter_ac_bus(c)], p, q))
        for _, node, p, q in consumed:
            s_spec[node] -= complex(p, q) / S_BASE_KVA

        # default dispatch: share island load by machine rating
        island_load_p = sum(p for _, _, p, _ in consumed)
        others = [g for g in gens if g.id != slack_element]
        total_kva = sum(g.rated_kva for g in gens)
        gen_p: dict[str, float] = {}
        for g in others:
            gen_p[g.id] = dispatch.get(
                g.id, island_load_p * g.rated_kva / total_kva if total_kva else 0.0)
            s_spec[net.node_of[g.bus]] += gen_p[g.id] / S_BASE_KVA

        pv_nodes = {net.node_of[g.bus] for g in others} - {slack_node}
        v_sched = {i: 1.0 for i in pv_nodes}
        v_sched[slack_node] = 1.0

        vc, iters, mism = _newton_raphson(
            net.ybus, s_spec, slack_node, pv_nodes, v_sched, tol, max_iter)
        total_iter = max(total_iter, iters)
        worst = max(worst, mism)

        for i, group in enumerate(net.nodes):
            for bus_id in group:
                v_pu[bus_id] = float(abs(vc[i]))
                angle[bus_id] = float(np.angle(vc[i]))

        # element injections
        s_net = vc * np.conj(net.ybus @ vc) * S_BASE_KVA   # kW/kvar per node
        for eid, _, p, q in consumed:
            injections[eid] = (-p, -q)
            online.add(eid)
        q_open: dict[int, float] = {}   # per-node reactive to assign to sources
        for i in range(n):
            q_open[i] = float(s_net[i].imag) + sum(
                q for _, node, _, q in consumed if node == i)
        for g in others:
            node = net.node_of[g.bus]
            if node == slack_node:
                injections[g.id] = (gen_p[g.id], 0.0)
            else:
                co = [x for x in others if net.node_of[x.bus] == node]
                share = g.rated_kva / sum(x.rated_kva for x in co)
                injections[g.id] = (gen_p[g.id], q_open[node] * share)
            online.add(g.id)
        slack_p = float(s_net[slack_node].real) + sum(
            p for _, node, p, _ in consumed if node == slack_node) - sum(
            gen_p[g.id] for g in others if net.node_of[g.bus] == slack_node)
        slack_q = q_open[slack_node] - sum(
            injections[g.id][1] for g in others
            if net.node_of[g.bus] == slack_node)
        injections[slack_element] = (slack_p, slack_q)
        online.add(slack_element)

    bus_p = {b.id: 0.0 for b in grid.buses}
    bus_q = {b.id: 0.0 for b in grid.buses}
    el_bus = {}
    for e in grid.elements():
        el_bus[e.id] = e.bus
        if e.id in injections:
            p, q = injections[e.id]
            at = e.bus
            if isinstance(e, ConverterSpec):
                at = grid.converter_ac_bus(e) or e.bus
            bus_p[at] += p
            bus_q[at] += q

    return PowerflowSolution(
        v_pu=v_pu,
        angle_rad=angle,
        injections_kw=injections,
        bus_p_kw=bus_p,
        bus_q_kvar=bus_q,
        iterations=total_iter,
        max_mismatch=worst,
        online=frozenset(online),
        element_bus=el_bus,
        bus_nominal_v={b.id: b.nominal_voltage for b in grid.buses},
        slack_elements=tuple(slack_elements),
    )


def solve_dc_balance(grid: GridModel, efficiency: float = 0.97) -> DcBalanceSolution:
    """Restore the DC-side power balance of every DC island.

    Converter losses are a fixed per-stage efficiency; chargers share the
    island demand in proportion to their capability, which is capped by the
    feeding generator's rating.  The DC network itself (cable drops, droop)
    is not modelled: this is an algebraic balance, not a voltage solve.
    """
    transfers: dict[str, float] = {}
    source_out: dict[str, float] = {}
    sinks: dict[str, float] = {}
    losses = 0.0

    for island in grid.islands(DC):
        demand = 0.0
        for l in grid.loads:
            if l.bus in island and grid.element_online(l.id):
                p, _ = load_pq_kw(l)
                sinks[l.id] = p
                demand += p
        for c in grid.converters:
            if c.bus not in island or not grid.element_online(c.id):
                continue
            if c.kind == "grid_inverter":
                ac_bus = grid.converter_ac_bus(c)
                served = sum(
                    load_pq_kw(l)[0] for l in grid.loads
                    if grid.element_online(l.id)
                    and l.bus in grid.island_of(ac_bus))
                draw = served / efficiency
                transfers[c.id] = draw
                sinks.setdefault(f"{c.id}:ac", served)
                losses += draw - served
                demand += draw
            elif c.kind in ("inverter", "dcdc") and c.p_set_kw:
                draw = c.p_set_kw / efficiency
                transfers[c.id] = draw
                sinks[f"{c.id}:load"] = c.p_set_kw
                losses += draw - c.p_set_kw
                demand += draw

        chargers = []
        for c in grid.converters:
            if c.kind != "charger" or c.bus not in island:
                continue
            if not grid.element_online(c.id):
                continue
            gen = next((g for g in grid.generators if g.bus == c.ac_bus), None)
            if gen is None or not grid.element_online(gen.id):
                continue
            cap = min(c.rated_kw, gen.rated_kw) * efficiency
            chargers.append((c, gen, cap))

        if demand == 0 and not chargers:
            continue
        total_cap = sum(cap for _, _, cap in chargers)
        if demand > total_cap:
            raise CapacityError(
                f"DC island {sorted(island)}: load {demand:.1f} kW exceeds "
                f"online source capability {total_cap:.1f} kW")
        for c, gen, cap in chargers:
            share = demand * cap / total_cap if total_cap else 0.0
            xfer = share / efficiency
            transfers[c.id] = xfer
            source_out[gen.id] = source_out.get(gen.id, 0.0) + xfer
            losses += xfer - share

    residual = sum(source_out.values()) - sum(sinks.values()) - losses
    return DcBalanceSolution(
        transfers_kw=transfers,
        source_output_kw=source_out,
        loads_kw=sinks,
        losses_kw=losses,
        residual_kw=residual,
    )


def prefault_operating_point(sol: PowerflowSolution, machine_id: str) -> OperatingPoint:
    """Terminal voltage, current and power-factor angle of a solved machine."""
    if machine_id not in sol.injections_kw or machine_id not in sol.element_bus:
        raise PowerflowError(f"machine {machine_id!r} absent from solution")
    if machine_id not in sol.online:
        raise PowerflowError(f"machine {machine_id!r} offline in solution")
    bus = sol.element_bus[machine_id]
    u0 = sol.v_pu[bus] * sol.bus_nominal_v[bus]
    p, q = sol.injections_kw[machine_id]
    s_kva = math.hypot(p, q)
    if s_kva < 1e-9:
        return OperatingPoint(u0=u0, i0=0.0, phi0=0.0)
    i0 = s_kva * 1e3 / (math.sqrt(3) * u0)
    phi0 = math.acos(min(1.0, max(-1.0, p / s_kva)))
    return OperatingPoint(u0=u0, i0=i0, phi0=min(math.pi / 2, max(0.0, phi0)))
