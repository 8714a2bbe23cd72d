"""Time-domain simulation of the AC islands.

Machines follow the classical swing model (constant-flux EMF behind the
transient reactance) with a first-order governor and a first-order voltage
regulator; the network is re-solved quasi-statically every integration
stage with constant-power loads and constant-PQ inverter injections.
Scripted events (load ramps, breaker switching, faults) are applied at
their exact times by splitting integration steps, so results do not depend
on how event times align with the step grid.

Battery-inverter controllers run once per recording step: the peak-shave
mode caps watched generators at a power threshold by supplying the surplus,
and the DP-failover mode latches the delayed pre-trip output of a lost
generator.  A bisection search over fault clearing time gives the critical
clearing time against a first-swing stability criterion.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import GridError, GridModel
from .powerflow import S_BASE_KVA, build_ac_networks, load_pq_kw, solve_ac_powerflow

V_FLOOR = 0.3       # below this voltage, constant-power loads turn constant-Z
FAULT_G = 1e6       # pu fault conductance for a bolted fault


class SimulationError(GridError):
    pass


class NetworkSolveError(SimulationError):
    pass


class ControllerError(SimulationError):
    pass


class BracketError(SimulationError):
    """Both CCT bracket ends stable, or both unstable."""


# ---------------------------------------------------------------------------
# configuration and events


@dataclass(frozen=True)
class Event:
    time: float
    action: str                    # load_step | breaker_open | breaker_close |
    target: str | None = None      # fault_apply | fault_clear
    scale: float | None = None     # load_step target scale
    ramp: float = 0.0              # load_step ramp duration, s
    location: float | None = None  # fault position along a branch, 0..1


@dataclass(frozen=True)
class EventSchedule:
    events: tuple[Event, ...] = ()

    def validated(self, grid: GridModel) -> "EventSchedule":
        last = -math.inf
        for ev in self.events:
            if ev.time < last:
                raise SimulationError("event times must be non-decreasing")
            last = ev.time
            if ev.action == "load_step":
                grid.load(ev.target)
                if ev.scale is None:
                    raise SimulationError(f"load_step {ev.target}: scale required")
            elif ev.action in ("breaker_open", "breaker_close"):
                grid.breaker(ev.target)
            elif ev.action == "fault_apply":
                if ev.target in {br.id for br in grid.branches}:
                    pass
                else:
                    grid.bus(ev.target)
            elif ev.action == "fault_clear":
                pass
            else:
                raise SimulationError(f"unknown event action {ev.action!r}")
        return self


@dataclass(frozen=True)
class SimConfig:
    step: float = 0.005
    end: float = 10.0
    integrator: str = "rk4"        # rk4 | trapezoidal
    network_interval: int = 1      # network solve every n-th derivative eval

    def __post_init__(self):
        if self.step <= 0 or self.end <= self.step:
            raise ValueError("need step > 0 and end > step")
        if self.integrator not in ("rk4", "trapezoidal"):
            raise ValueError(f"unknown integrator {self.integrator!r}")


@dataclass(frozen=True)
class GovernorParams:
    droop: float = 0.05            # pu speed / pu power
    time_constant: float = 0.5     # s


@dataclass(frozen=True)
class AvrParams:
    gain: float = 20.0             # pu EMF / pu voltage error
    time_constant: float = 0.5     # s


@dataclass(frozen=True)
class MachineControls:
    governor: GovernorParams | None = GovernorParams()
    avr: AvrParams | None = AvrParams()


@dataclass
class TimeSeries:
    t: np.ndarray
    channels: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]


# ---------------------------------------------------------------------------
# controllers


@dataclass(frozen=True)
class ControllerConfig:
    mode: str                            # peak_shave | dp_failover
    inverter: str                        # converter id injecting P/Q
    watched: tuple[str, ...]             # generator ids
    p_threshold_kw: dict[str, float]     # per watched generator
    q_threshold_kvar: dict[str, float]
    p_rating_kw: float
    q_rating_kvar: float
    dp_delay: float = 0.1

    def __post_init__(self):
        if self.p_rating_kw <= 0 or self.q_rating_kvar <= 0:
            raise ValueError("inverter ratings must be > 0")
        if self.dp_delay <= 0:
            raise ValueError("dp_delay must be > 0")

    @staticmethod
    def peak_shave(inverter, watched, p_threshold_kw, q_threshold_kvar,
                   p_rating_kw, q_rating_kvar) -> "ControllerConfig":
        watched = tuple(watched) if not isinstance(watched, str) else (watched,)
        return ControllerConfig(
            "peak_shave", inverter, watched,
            _per_gen(p_threshold_kw, watched), _per_gen(q_threshold_kvar, watched),
            p_rating_kw, q_rating_kvar)

    @staticmethod
    def dp_failover(inverter, watched, p_rating_kw, q_rating_kvar,
                    dp_delay=0.1) -> "ControllerConfig":
        watched = tuple(watched) if not isinstance(watched, str) else (watched,)
        zero = {g: 0.0 for g in watched}
        return ControllerConfig("dp_failover", inverter, watched, zero, zero,
                                p_rating_kw, q_rating_kvar, dp_delay)


def _per_gen(value, watched) -> dict[str, float]:
    if isinstance(value, dict):
        return dict(value)
    return {g: float(value) for g in watched}


@dataclass(frozen=True)
class GeneratorLossEvent:
    generator: str
    time: float


class ControllerState:
    """Measurement history and latch of one battery-inverter controller."""

    def __init__(self, cfg: ControllerConfig):
        self.cfg = cfg
        self.buffer: deque[tuple[float, dict[str, float], dict[str, float]]] = deque()
        self.latched: tuple[float, float] | None = None
        self.setpoint: tuple[float, float] = (0.0, 0.0)

    def record(self, t: float, p_by_gen: dict[str, float],
               q_by_gen: dict[str, float]) -> None:
        self.buffer.append((t, dict(p_by_gen), dict(q_by_gen)))
        horizon = t - 2.0 * self.cfg.dp_delay - 1.0
        while len(self.buffer) > 2 and self.buffer[1][0] < horizon:
            self.buffer.popleft()

    def delayed_sample(self, t: float, gen: str) -> tuple[float, float]:
        best = None
        for ts, p, q in self.buffer:
            if ts <= t:
                best = (p.get(gen, 0.0), q.get(gen, 0.0))
            else:
                break
        if best is None:
            raise ControllerError(
                f"controller buffer not warm: no sample at or before t={t:.3f} s")
        return best


def clamp(value: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, value))


def peak_shave_setpoint(cfg: ControllerConfig, measured_p_kw: float,
                        measured_q_kvar: float) -> tuple[float, float]:
    """Inverter setpoint supplying the surplus above the watched threshold.

    `measured_p_kw`/`measured_q_kvar` are the unassisted demand on the
    watched generators (their output plus whatever the inverter already
    supplies); the setpoint is the excess over the threshold, clamped to
    the inverter rating.
    """
    p_thr = sum(cfg.p_threshold_kw.values())
    q_thr = sum(cfg.q_threshold_kvar.values())
    return (clamp(measured_p_kw - p_thr, 0.0, cfg.p_rating_kw),
            clamp(measured_q_kvar - q_thr, 0.0, cfg.q_rating_kvar))


def dp_failover_setpoint(state: ControllerState, cfg: ControllerConfig,
                         event: GeneratorLossEvent | None = None,
                         ) -> tuple[float, float]:
    """Latch the delayed pre-trip output of a lost generator, else hold.

    On a loss event the (P, Q) sampled `dp_delay` before the event is
    latched, clamped to the inverter rating; the latch holds until reset.
    Without an event and without a latch the inverter idles at zero.
    """
    if event is not None:
        if event.generator not in cfg.watched:
            return state.setpoint
        p, q = state.delayed_sample(event.time - cfg.dp_delay, event.generator)
        state.latched = (clamp(p, 0.0, cfg.p_rating_kw),
                         clamp(q, 0.0, cfg.q_rating_kvar))
    return state.latched if state.latched is not None else (0.0, 0.0)


# ---------------------------------------------------------------------------
# engine internals


@dataclass
class _Machine:
    id: str
    island: int
    node: int
    xdp: float          # pu on system base
    two_h: float        # 2H, s (system base)
    damping: float      # pu (system base)
    omega_s: float      # rad/s
    governor: GovernorParams | None
    avr: AvrParams | None
    pm_ref: float = 0.0
    e_ref: float = 0.0
    v_ref: float = 1.0


@dataclass
class _Island:
    nodes: list[frozenset[str]]
    node_of: dict[str, int]
    ybase: np.ndarray
    frequency: float
    loads: list[tuple[str, int, float, float]]      # id, node, p0 pu, q0 pu
    draws: list[tuple[str, int, float, float]]      # converter fixed draws
    inv_nodes: dict[str, int]
    v: np.ndarray = field(default=None)


class _Engine:
    def __init__(self, grid: GridModel, schedule: EventSchedule,
                 controllers, cfg: SimConfig,
                 dispatch=None, load_scale=None, slack=None,
                 machine_controls=None):
        schedule.validated(grid)
        self.grid0 = grid
        self.cfg = cfg
        self.controls = dict(machine_controls or {})
        self.dispatch = dispatch
        self.slack = slack
        self.base_scale = dict(load_scale or {})
        self.breaker_states = {b.id: b.closed for b in grid.breakers}
        self.ramps: dict[str, tuple[float, float, float, float]] = {}
        self.fault: tuple | None = None
        self.events = sorted(schedule.events, key=lambda e: e.time)
        self.inv_setpoints: dict[str, tuple[float, float]] = {}
        self.controllers = []
        for c in controllers:
            self.controllers.append(ControllerState(c))
            self.inv_setpoints[c.inverter] = (0.0, 0.0)
        self.machines: dict[str, np.ndarray] = {}   # id -> [delta, dw, e, pm]
        self.mach_params: dict[str, _Machine] = {}
        self._eval_count = 0
        self._cached_netsol = None
        self._build(initial=True)

    # -- model (re)construction ------------------------------------------

    def _current_grid(self) -> GridModel:
        return self.grid0.with_breaker_states(self.breaker_states)

    def _build(self, initial: bool = False) -> None:
        grid = self._current_grid()
        nets = build_ac_networks(grid)
        islands: list[_Island] = []
        keep: dict[str, np.ndarray] = {}
        params: dict[str, _Machine] = {}

        if initial:
            sol = solve_ac_powerflow(grid, slack=self.slack,
                                     dispatch=self.dispatch,
                                     load_scale=self.base_scale)

        for net in nets:
            gens = [g for g in grid.generators
                    if g.bus in net.node_of and grid.element_online(g.id)]
            if not gens:
                continue
            idx = len(islands)
            loads, draws = [], []
            for l in sorted(grid.loads, key=lambda x: x.id):
                if l.bus in net.node_of and grid.element_online(l.id):
                    p, q = load_pq_kw(l, 1.0)
                    loads.append((l.id, net.node_of[l.bus],
                                  p / S_BASE_KVA, q / S_BASE_KVA))
            inv_nodes = {}
            for c in sorted(grid.converters, key=lambda x: x.id):
                ac_bus = grid.converter_ac_bus(c)
                if ac_bus not in net.node_of or not grid.element_online(c.id):
                    continue
                inv_nodes[c.id] = net.node_of[ac_bus]
                if c.p_set_kw and c.id not in self.inv_setpoints:
                    draws.append((c.id, net.node_of[ac_bus],
                                  c.p_set_kw / S_BASE_KVA, 0.0))
            island = _Island(
                nodes=net.nodes, node_of=net.node_of, ybase=net.ybus,
                frequency=net.frequency, loads=loads, draws=draws,
                inv_nodes=inv_nodes,
                v=np.ones(len(net.nodes), dtype=complex))
            islands.append(island)

            omega_s = 2.0 * math.pi * net.frequency
            for g in sorted(gens, key=lambda x: x.id):
                d = g.dynamics
                if d is None:
                    raise SimulationError(f"{g.id}: dynamics required for tdsim")
                ctl = self.controls.get(g.id, MachineControls())
                m = _Machine(
                    id=g.id, island=idx, node=net.node_of[g.bus],
                    xdp=d.xd_t * S_BASE_KVA / g.rated_kva,
                    two_h=2.0 * d.inertia_h * g.rated_kva / S_BASE_KVA,
                    damping=d.damping * g.rated_kva / S_BASE_KVA,
                    omega_s=omega_s,
                    governor=ctl.governor, avr=ctl.avr)
                params[g.id] = m
                if g.id in self.machines:
                    keep[g.id] = self.machines[g.id]
                elif not initial:
                    raise SimulationError(
                        f"{g.id}: bringing a generator online mid-run is not "
                        "supported (no resynchronisation model)")
                else:
                    vb = sol.v_pu[g.bus] * np.exp(1j * sol.angle_rad[g.bus])
                    p, q = sol.injections_kw[g.id]
                    s = complex(p, q) / S_BASE_KVA
                    i = np.conj(s / vb) if abs(vb) > 0 else 0.0
                    e = vb + 1j * m.xdp * i
                    keep[g.id] = np.array([
                        float(np.angle(e)), 0.0, float(abs(e)), float(s.real)])
                    m.e_ref = float(abs(e))
                    m.v_ref = float(abs(vb))
                    m.pm_ref = float(s.real)
            if not initial:
                for g in sorted(gens, key=lambda x: x.id):
                    old = self.mach_params.get(g.id)
                    if old is not None:
                        params[g.id].pm_ref = old.pm_ref
                        params[g.id].e_ref = old.e_ref
                        params[g.id].v_ref = old.v_ref

        self.islands = islands
        self.machines = keep
        self.mach_params = params
        self.order = sorted(keep)
        if initial:
            # trim references so the initial state is an exact equilibrium
            sol0 = self._solve_networks(self._pack(), 0.0)
            for mid in self.order:
                m = self.mach_params[mid]
                pe, _, vt = sol0.machine_out[mid]
                self.machines[mid][3] = pe
                m.pm_ref = pe
                m.v_ref = vt

    # -- state vector handling -------------------------------------------

    def _pack(self) -> np.ndarray:
        if not self.order:
            return np.zeros(0)
        return np.concatenate([self.machines[mid] for mid in self.order])

    def _unpack(self, x: np.ndarray) -> None:
        for k, mid in enumerate(self.order):
            self.machines[mid] = x[4 * k:4 * k + 4].copy()

    # -- network solve -----------------------------------------------------

    def _load_factor(self, load_id: str, t: float) -> float:
        seg = self.ramps.get(load_id)
        base = self.base_scale.get(load_id, 1.0)
        if seg is None:
            return base
        t0, s_from, s_to, ramp = seg
        if ramp <= 0 or t >= t0 + ramp:
            return s_to
        if t <= t0:
            return s_from
        return s_from + (s_to - s_from) * (t - t0) / ramp

    def _island_y(self, isl: _Island, iidx: int):
        """Y with machine shunts and any active fault; extra fault node last."""
        n = len(isl.nodes)
        extra = 0
        fault_node = None
        y = None
        if self.fault is not None:
            kind = self.fault[0]
            if kind == "bus":
                bus = self.fault[1]
                if bus in isl.node_of:
                    fault_node = isl.node_of[bus]
            else:
                _, branch, frac = self.fault
                br = next(b for b in self.grid0.branches if b.id == branch)
                if br.from_bus in isl.node_of and br.to_bus in isl.node_of:
                    if frac <= 1e-6:
                        fault_node = isl.node_of[br.from_bus]
                    elif frac >= 1 - 1e-6:
                        fault_node = isl.node_of[br.to_bus]
                    else:
                        extra = 1
        y = np.zeros((n + extra, n + extra), dtype=complex)
        y[:n, :n] = isl.ybase
        if extra:
            _, branch, frac = self.fault
            br = next(b for b in self.grid0.branches if b.id == branch)
            i, k = isl.node_of[br.from_bus], isl.node_of[br.to_bus]
            vbase = self.grid0.bus(br.from_bus).nominal_voltage
            zb = vbase ** 2 / (S_BASE_KVA * 1e3)
            z = complex(br.resistance_ohm, br.reactance_ohm) / zb
            yfull = 1.0 / z
            # remove the intact branch, insert the two segments
            y[i, i] -= yfull; y[k, k] -= yfull
            y[i, k] += yfull; y[k, i] += yfull
            x = n
            y1, y2 = 1.0 / (z * frac), 1.0 / (z * (1.0 - frac))
            y[i, i] += y1; y[x, x] += y1 + y2 + FAULT_G
            y[i, x] -= y1; y[x, i] -= y1
            y[k, k] += y2
            y[k, x] -= y2; y[x, k] -= y2
            fault_node = None
        elif fault_node is not None:
            y[fault_node, fault_node] += FAULT_G
        for mid in self.order:
            m = self.mach_params[mid]
            if m.island == iidx:
                y[m.node, m.node] += 1.0 / (1j * m.xdp)
        return y, extra

    def _solve_networks(self, x: np.ndarray, t: float):
        """Quasi-static solve of every island at machine states `x`."""
        self._unpack(x)
        out = _NetOut()
        for iidx, isl in enumerate(self.islands):
            y, extra = self._island_y(isl, iidx)
            n = len(isl.nodes)
            i_src = np.zeros(n + extra, dtype=complex)
            for mid in self.order:
                m = self.mach_params[mid]
                if m.island != iidx:
                    continue
                delta, _, e_mag, _ = self.machines[mid]
                i_src[m.node] += e_mag * np.exp(1j * delta) / (1j * m.xdp)
            s_pq = np.zeros(n + extra, dtype=complex)
            for lid, node, p0, q0 in isl.loads:
                s_pq[node] -= complex(p0, q0) * self._load_factor(lid, t)
            for cid, node, p0, q0 in isl.draws:
                s_pq[node] -= complex(p0, q0)
            for cid, (pkw, qkvar) in self.inv_setpoints.items():
                if cid in isl.inv_nodes:
                    s_pq[isl.inv_nodes[cid]] += complex(pkw, qkvar) / S_BASE_KVA

            v = np.ones(n + extra, dtype=complex)
            v[:n] = isl.v
            for it in range(400):
                vm = np.abs(v)
                factor = np.minimum(1.0, (vm / V_FLOOR) ** 2)
                with np.errstate(divide="ignore", invalid="ignore"):
                    i_pq = np.where(vm > 1e-12,
                                    np.conj(s_pq * factor / v), 0.0)
                try:
                    v_new = np.linalg.solve(y, i_src + i_pq)
                except np.linalg.LinAlgError as exc:
                    raise NetworkSolveError(str(exc)) from None
                if not np.all(np.isfinite(v_new)):
                    raise NetworkSolveError("network solve produced non-finite V")
                err = float(np.max(np.abs(v_new - v))) if v.size else 0.0
                v = v_new
                if err <= 1e-10:
                    break
            else:
                raise NetworkSolveError(
                    f"network fixed point not converged at t={t:.4f} s")
            isl.v = v[:n].copy()

            p_load_tot = 0.0
            for lid, node, p0, q0 in isl.loads:
                vm = abs(v[node])
                factor = min(1.0, (vm / V_FLOOR) ** 2)
                s = complex(p0, q0) * self._load_factor(lid, t) * factor
                out.load_p[lid] = s.real * S_BASE_KVA
                p_load_tot += s.real
            for cid, node, p0, q0 in isl.draws:
                vm = abs(v[node])
                factor = min(1.0, (vm / V_FLOOR) ** 2)
                out.load_p[cid] = p0 * factor * S_BASE_KVA
                p_load_tot += p0 * factor
            p_inv_tot = 0.0
            for cid, (pkw, qkvar) in self.inv_setpoints.items():
                if cid in isl.inv_nodes:
                    p_inv_tot += pkw / S_BASE_KVA
            p_gen_tot = 0.0
            for mid in self.order:
                m = self.mach_params[mid]
                if m.island != iidx:
                    continue
                delta, _, e_mag, _ = self.machines[mid]
                e = e_mag * np.exp(1j * delta)
                vb = v[m.node]
                i = (e - vb) / (1j * m.xdp)
                # terminal power; P equals the internal electrical power
                # because the transient reactance is lossless
                s = vb * np.conj(i)
                out.machine_out[mid] = (float(s.real), float(s.imag), float(abs(vb)))
                p_gen_tot += float(s.real)
            for group_idx, group in enumerate(isl.nodes):
                for bus in group:
                    out.bus_v[bus] = float(abs(v[group_idx]))
            out.loss_kw += (p_gen_tot + p_inv_tot - p_load_tot) * S_BASE_KVA
        return out

    # -- derivatives -------------------------------------------------------

    def _derivatives(self, x: np.ndarray, t: float, netsol=None) -> np.ndarray:
        if netsol is None:
            # the solve-interval knob trades accuracy for speed by holding
            # the network solution over a few derivative evaluations
            n = self.cfg.network_interval
            if (n <= 1 or self._cached_netsol is None
                    or self._eval_count % n == 0):
                self._cached_netsol = self._solve_networks(x, t)
            self._eval_count += 1
            netsol = self._cached_netsol
        dx = np.zeros_like(x)
        for k, mid in enumerate(self.order):
            m = self.mach_params[mid]
            delta, dw, e_mag, pm = x[4 * k:4 * k + 4]
            pe, _, vt = netsol.machine_out[mid]
            dx[4 * k] = m.omega_s * dw
            dx[4 * k + 1] = (pm - pe - m.damping * dw) / m.two_h
            if m.avr is not None:
                target = m.e_ref + m.avr.gain * (m.v_ref - vt)
                dx[4 * k + 2] = (target - e_mag) / m.avr.time_constant
            if m.governor is not None:
                target = m.pm_ref - dw / m.governor.droop
                dx[4 * k + 3] = (target - pm) / m.governor.time_constant
        return dx

    def _step(self, x: np.ndarray, t: float, dt: float) -> np.ndarray:
        f = self._derivatives
        if self.cfg.integrator == "trapezoidal":
            k1 = f(x, t)
            k2 = f(x + dt * k1, t + dt)
            out = x + dt / 2.0 * (k1 + k2)
        else:
            k1 = f(x, t)
            k2 = f(x + dt / 2.0 * k1, t + dt / 2.0)
            k3 = f(x + dt / 2.0 * k2, t + dt / 2.0)
            k4 = f(x + dt * k3, t + dt)
            out = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(out)):
            raise SimulationError(f"integration diverged at t={t:.4f} s")
        for k in range(len(self.order)):
            if abs(out[4 * k + 1]) > 2.0:
                raise SimulationError(
                    f"integration diverged: speed deviation beyond sanity "
                    f"bound at t={t:.4f} s")
        return out

    # -- events ------------------------------------------------------------

    def _apply_event(self, ev: Event, t: float) -> None:
        self._cached_netsol = None
        if ev.action == "load_step":
            current = self._load_factor(ev.target, t)
            self.ramps[ev.target] = (t, current, float(ev.scale), ev.ramp)
        elif ev.action in ("breaker_open", "breaker_close"):
            closed = ev.action == "breaker_close"
            self.breaker_states[ev.target] = closed
            lost = self._lost_generators()
            self._build()
            for gen_id in lost:
                for ctl in self.controllers:
                    if ctl.cfg.mode == "dp_failover" and gen_id in ctl.cfg.watched:
                        self.inv_setpoints[ctl.cfg.inverter] = dp_failover_setpoint(
                            ctl, ctl.cfg, GeneratorLossEvent(gen_id, t))
                        ctl.setpoint = self.inv_setpoints[ctl.cfg.inverter]
        elif ev.action == "fault_apply":
            if ev.target in {br.id for br in self.grid0.branches}:
                self.fault = ("branch", ev.target, ev.location or 0.0)
            else:
                self.fault = ("bus", ev.target)
        elif ev.action == "fault_clear":
            self.fault = None

    def _lost_generators(self) -> list[str]:
        grid = self._current_grid()
        return [mid for mid in self.order if not grid.element_online(mid)]

    # -- controllers ---------------------------------------------------------

    def _update_controllers(self, t: float, netsol) -> None:
        for ctl in self.controllers:
            cfg = ctl.cfg
            p_by = {g: netsol.machine_out[g][0] * S_BASE_KVA
                    for g in cfg.watched if g in netsol.machine_out}
            q_by = {g: netsol.machine_out[g][1] * S_BASE_KVA
                    for g in cfg.watched if g in netsol.machine_out}
            ctl.record(t, p_by, q_by)
            if cfg.mode == "peak_shave":
                inv_p, inv_q = ctl.setpoint
                gross_p = sum(p_by.values()) + inv_p
                gross_q = sum(q_by.values()) + inv_q
                ctl.setpoint = peak_shave_setpoint(cfg, gross_p, gross_q)
            else:
                ctl.setpoint = dp_failover_setpoint(ctl, cfg, None)
            self.inv_setpoints[cfg.inverter] = ctl.setpoint

    # -- main loop -------------------------------------------------------------

    def run(self) -> TimeSeries:
        cfg = self.cfg
        n_steps = int(round(cfg.end / cfg.step))
        t_rec = np.arange(n_steps + 1) * cfg.step

        channels: dict[str, list[float]] = {}
        mach_ids = list(self.order)
        bus_ids = sorted({b for isl in self.islands for grp in isl.nodes
                          for b in grp})
        load_ids = sorted({lid for isl in self.islands
                           for lid, *_ in isl.loads + isl.draws})
        inv_ids = sorted(self.inv_setpoints)
        for mid in mach_ids:
            for q in ("p_kw", "q_kvar", "pm_kw", "delta_rad", "freq_hz"):
                channels[f"{mid}.{q}"] = []
        for cid in inv_ids:
            channels[f"{cid}.p_kw"] = []
            channels[f"{cid}.q_kvar"] = []
        for b in bus_ids:
            channels[f"{b}.v_pu"] = []
        for lid in load_ids:
            channels[f"{lid}.p_kw"] = []
        channels["sys.p_loss_kw"] = []

        def record(netsol):
            for mid in mach_ids:
                if mid in netsol.machine_out:
                    pe, qe, _ = netsol.machine_out[mid]
                    delta, dw, e_mag, pm = self.machines[mid]
                    m = self.mach_params[mid]
                    f0 = m.omega_s / (2 * math.pi)
                    vals = (pe * S_BASE_KVA, qe * S_BASE_KVA, pm * S_BASE_KVA,
                            delta, f0 * (1 + dw))
                else:
                    vals = (0.0, 0.0, 0.0, 0.0, 0.0)
                for q, v in zip(("p_kw", "q_kvar", "pm_kw", "delta_rad",
                                 "freq_hz"), vals):
                    channels[f"{mid}.{q}"].append(v)
            for cid in inv_ids:
                p, q = self.inv_setpoints.get(cid, (0.0, 0.0))
                channels[f"{cid}.p_kw"].append(p)
                channels[f"{cid}.q_kvar"].append(q)
            for b in bus_ids:
                channels[f"{b}.v_pu"].append(netsol.bus_v.get(b, 0.0))
            for lid in load_ids:
                channels[f"{lid}.p_kw"].append(netsol.load_p.get(lid, 0.0))
            channels["sys.p_loss_kw"].append(netsol.loss_kw)

        pending = list(self.events)
        t = 0.0
        x = self._pack()
        netsol = self._solve_networks(x, t)
        self._update_controllers(t, netsol)
        netsol = self._solve_networks(x, t)
        record(netsol)

        for k in range(1, n_steps + 1):
            t_target = float(t_rec[k])
            while t < t_target - 1e-12:
                t_next = t_target
                while pending and pending[0].time <= t + 1e-12:
                    self._apply_event(pending.pop(0), t)
                    x = self._pack()
                if pending and pending[0].time < t_target - 1e-12:
                    t_next = pending[0].time
                x = self._step(x, t, t_next - t)
                self._unpack(x)
                t = t_next
            while pending and pending[0].time <= t + 1e-12:
                self._apply_event(pending.pop(0), t)
                x = self._pack()
            netsol = self._solve_networks(x, t)
            self._update_controllers(t, netsol)
            netsol = self._solve_networks(x, t)
            record(netsol)

        return TimeSeries(
            t=t_rec,
            channels={k: np.asarray(v) for k, v in channels.items()})


class _NetOut:
    def __init__(self):
        self.machine_out: dict[str, tuple[float, float, float]] = {}
        self.bus_v: dict[str, float] = {}
        self.load_p: dict[str, float] = {}
        self.loss_kw: float = 0.0


def simulate(grid: GridModel, schedule: EventSchedule,
             controllers=(), cfg: SimConfig = SimConfig(),
             dispatch: dict[str, float] | None = None,
             load_scale: dict[str, float] | None = None,
             slack: str | None = None,
             machine_controls: dict[str, MachineControls] | None = None,
             ) -> TimeSeries:
    """Integrate the grid's AC islands through the scripted events.

    Returns a TimeSeries on the uniform recording grid with one channel per
    machine quantity (``<gen>.p_kw``, ``.q_kvar``, ``.pm_kw``,
    ``.delta_rad``, ``.freq_hz``), per controller inverter, per bus voltage,
    per load, and the system losses.
    """
    engine = _Engine(grid, schedule, controllers, cfg, dispatch, load_scale,
                     slack, machine_controls)
    return engine.run()


# ---------------------------------------------------------------------------
# critical clearing time


@dataclass(frozen=True)
class CctFaultSpec:
    machine: str
    loading: float = 0.9          # fraction of rated kW
    location: float = 0.01        # fraction along the cable from the machine
    branch: str | None = None     # required if the machine bus has >1 cable


@dataclass(frozen=True)
class CctResult:
    cct: float
    interval: tuple[float, float]
    transcript: tuple[tuple[float, bool], ...]


def _max_angle_spread(ts: TimeSeries, after: float) -> float:
    deltas = [ts.channels[name] for name in sorted(ts.channels)
              if name.endswith(".delta_rad")]
    if len(deltas) < 2:
        return 0.0
    sel = ts.t >= after - 1e-9
    arr = np.vstack([d[sel] for d in deltas])
    return float(np.max(arr.max(axis=0) - arr.min(axis=0)))


def find_cct(grid: GridModel, fault: CctFaultSpec, t_lo: float, t_hi: float,
             tol: float, cfg: SimConfig | None = None,
             machine_controls: dict[str, MachineControls] | None = None,
             fault_start: float = 0.25, window: float = 3.0,
             slack: str | None = None) -> CctResult:
    """Bisect the fault clearing time against first-swing stability.

    A probe is stable when the largest pairwise rotor-angle separation
    stays below 180 degrees after the fault clears.  The bracket must
    straddle the boundary: `t_lo` stable and `t_hi` unstable.
    """
    gen = grid.generator(fault.machine)
    dispatch = {fault.machine: fault.loading * gen.rated_kw}

    if fault.location <= 1e-9:
        target, location = gen.bus, None
    else:
        branch_id = fault.branch
        if branch_id is None:
            cands = [b for b in grid.branches if gen.bus in (b.from_bus, b.to_bus)]
            if len(cands) != 1:
                raise SimulationError(
                    f"{fault.machine}: specify the faulted branch "
                    f"({len(cands)} candidates)")
            branch_id = cands[0].id
        br = next(b for b in grid.branches if b.id == branch_id)
        frac = fault.location if br.from_bus == gen.bus else 1.0 - fault.location
        target, location = branch_id, frac

    base_cfg = cfg or SimConfig(step=0.002)

    def stable(t_clear: float) -> bool:
        if t_clear <= 0:
            return True   # zero-duration fault: no disturbance
        events = EventSchedule((
            Event(fault_start, "fault_apply", target, location=location),
            Event(fault_start + t_clear, "fault_clear"),
        ))
        end = fault_start + t_clear + window
        probe_cfg = replace(base_cfg, end=end)
        ts = simulate(grid, events, (), probe_cfg, dispatch=dispatch,
                      slack=slack, machine_controls=machine_controls)
        return _max_angle_spread(ts, fault_start + t_clear) < math.pi

    transcript = []
    lo_ok = stable(t_lo)
    transcript.append((t_lo, lo_ok))
    hi_ok = stable(t_hi)
    transcript.append((t_hi, hi_ok))
    if not lo_ok or hi_ok:
        raise BracketError(
            f"invalid bracket: stable({t_lo})={lo_ok}, stable({t_hi})={hi_ok}")
    lo, hi = t_lo, t_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ok = stable(mid)
        transcript.append((mid, ok))
        if ok:
            lo = mid
        else:
            hi = mid
    return CctResult(cct=lo, interval=(lo, hi), transcript=tuple(transcript))
