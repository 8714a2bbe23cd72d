"""The `vessel-study` command line.

    vessel-study <kind> --grid <path|builtin:name> [--study <path>]
                 --out <dir> [--format csv|text] [--strict]

Study kinds: powerflow, sc-ac, sc-dc, tdsim, cct, protect, i2t.  The CLI is
a thin shell over the library: it loads the grid and study files, calls the
corresponding engine and writes the artifacts.  Exit codes: 0 success,
2 input error, 3 numerical failure, 4 negative study result under
``--strict``.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import fixtures, report
from .grid import GridError, GridModel, validate
from .gridfile import GridParseError, parse_grid, read_sections
from .powerflow import (
    ConvergenceError,
    IslandError,
    CapacityError,
    solve_ac_powerflow,
    solve_dc_balance,
)
from .protection import (
    FaultLocation,
    NoDetectionError,
    fuse_i2t_clearing,
    selectivity_check,
    sequence_of_operations,
)
from .grid import FuseSpec
from .sc_ac import NoContributorsError, ShortCircuitError, fault_summary
from .sc_dc import DcFaultError, DcScTrace, dc_fault_summary
from .tdsim import (
    AvrParams,
    BracketError,
    CctFaultSpec,
    ControllerConfig,
    Event,
    EventSchedule,
    GovernorParams,
    MachineControls,
    SimConfig,
    SimulationError,
    find_cct,
    simulate,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_STRICT = 4

_NUMERIC_ERRORS = (ConvergenceError, IslandError, CapacityError,
                   SimulationError, BracketError)
_INPUT_ERRORS = (GridParseError, GridError, OSError, KeyError, ValueError)


class _Study:
    """Parsed study file: {section kind: {id: keys}}."""

    def __init__(self, text: str = ""):
        self.sections: dict[str, dict[str, dict]] = {}
        if text:
            for kind, sid, _, keys in read_sections(text):
                self.sections.setdefault(kind, {})[sid] = keys

    def one(self, kind: str) -> dict:
        entries = self.sections.get(kind, {})
        if not entries:
            return {}
        return next(iter(entries.values()))

    def many(self, kind: str) -> dict[str, dict]:
        return self.sections.get(kind, {})


def _load_grid(spec: str) -> GridModel:
    if spec.startswith("builtin:"):
        return fixtures.builtin_fixture(spec.split(":", 1)[1])
    with open(spec) as fh:
        return parse_grid(fh.read())


def _load_study(path: str | None) -> _Study:
    if path is None:
        return _Study()
    with open(path) as fh:
        return _Study(fh.read())


def _apply_breaker_states(grid: GridModel, study: _Study) -> GridModel:
    states = study.one("breakers")
    if not states:
        return grid
    return grid.with_breaker_states({k: bool(v) for k, v in states.items()})


def _emit(args, name: str, header, rows) -> None:
    if args.format == "text":
        content = report.render_table(header, rows)
        name = name.rsplit(".", 1)[0] + ".txt"
    else:
        content = report.render_csv(header, rows)
    report.write_artifact(args.out, name, content)


def _float_map(keys: dict) -> dict[str, float]:
    return {k: float(v) for k, v in keys.items()}


# ---- study runners ----------------------------------------------------------


def _run_powerflow(args, grid: GridModel, study: _Study) -> int:
    pf = study.one("powerflow")
    draws = None
    has_dc = any(b.kind == "dc" for b in grid.buses)
    if has_dc:
        bal = solve_dc_balance(grid)
        draws = {cid: (p, 0.0) for cid, p in bal.transfers_kw.items()
                 if grid.converter(cid).kind == "charger"}
        _emit(args, "dcbalance.csv", *report.dc_balance_rows(bal))
    sol = solve_ac_powerflow(
        grid,
        tol=float(pf.get("tol", 1e-8)),
        max_iter=int(pf.get("max_iter", 20)),
        slack=pf.get("slack"),
        dispatch=_float_map(study.one("dispatch")),
        load_scale=_float_map(study.one("load_scale")),
        converter_draws=draws,
    )
    _emit(args, "buses.csv", *report.powerflow_rows(sol))
    print(f"powerflow converged in {sol.iterations} iterations, "
          f"max mismatch {report.fmt(sol.max_mismatch)} pu, "
          f"slack {', '.join(sol.slack_elements)}")
    return EXIT_OK


def _fault_bus(args, study: _Study) -> str:
    bus = args.bus or study.one("study").get("bus")
    if not bus:
        raise ValueError("a fault bus is required (--bus or [study] bus)")
    return str(bus)


def _run_sc_ac(args, grid: GridModel, study: _Study) -> int:
    bus = _fault_bus(args, study)
    pf = study.one("powerflow")
    sol = solve_ac_powerflow(grid, slack=pf.get("slack"),
                             dispatch=_float_map(study.one("dispatch")),
                             load_scale=_float_map(study.one("load_scale")))
    summ = fault_summary(grid, bus, sol)
    _emit(args, "summary.csv", *report.ac_summary_rows(summ))
    if args.format == "csv":
        for cid in sorted(summ.traces):
            report.write_artifact(
                args.out, f"trace_{report.safe_name(cid)}.csv",
                report.ac_trace_csv(summ.traces[cid]))
    print(f"fault at {bus}: Iac(T/2) = {summ.iac_half_cycle/1e3:.3f} kA, "
          f"idc(T/2) = {summ.idc_half_cycle/1e3:.3f} kA, "
          f"ip = {summ.ip/1e3:.3f} kA")
    return EXIT_OK


def _run_sc_dc(args, grid: GridModel, study: _Study) -> int:
    bus = _fault_bus(args, study)
    summ = dc_fault_summary(grid, bus)
    _emit(args, "summary.csv", *report.dc_summary_rows(summ))
    if args.format == "csv":
        for cid in sorted(summ.traces):
            report.write_artifact(
                args.out, f"trace_{report.safe_name(cid)}.csv",
                report.dc_trace_csv(summ.traces[cid]))
        report.write_artifact(args.out, "total.csv",
                              report.dc_trace_csv(summ.total, total=True))
    print(f"fault at {bus}: sustained {summ.sustained/1e3:.3f} kA, "
          f"peak {summ.peak/1e3:.3f} kA")
    return EXIT_OK


def _controllers(study: _Study) -> list[ControllerConfig]:
    out = []
    for cid, keys in sorted(study.many("controller").items()):
        watched = tuple(str(keys.get("watched", "")).split(","))
        watched = tuple(w.strip() for w in watched if w.strip())
        mode = str(keys["mode"])
        if mode == "peak_shave":
            out.append(ControllerConfig.peak_shave(
                str(keys["inverter"]), watched,
                float(keys.get("p_threshold_kw", 0.0)),
                float(keys.get("q_threshold_kvar", 0.0)),
                float(keys["p_rating_kw"]), float(keys["q_rating_kvar"])))
        elif mode == "dp_failover":
            out.append(ControllerConfig.dp_failover(
                str(keys["inverter"]), watched,
                float(keys["p_rating_kw"]), float(keys["q_rating_kvar"]),
                dp_delay=float(keys.get("dp_delay_s", 0.1))))
        else:
            raise ValueError(f"controller {cid}: unknown mode {mode!r}")
    return out


def _events(study: _Study) -> EventSchedule:
    evs = []
    for eid, keys in study.many("event").items():
        evs.append(Event(
            time=float(keys["time_s"]),
            action=str(keys["action"]),
            target=(str(keys["target"]) if "target" in keys else None),
            scale=(float(keys["scale"]) if "scale" in keys else None),
            ramp=float(keys.get("ramp_s", 0.0)),
            location=(float(keys["location"]) if "location" in keys else None),
        ))
    evs.sort(key=lambda e: e.time)
    return EventSchedule(tuple(evs))


def _sim_config(study: _Study) -> SimConfig:
    keys = study.one("sim")
    return SimConfig(
        step=float(keys.get("step_s", 0.005)),
        end=float(keys.get("end_s", 10.0)),
        integrator=str(keys.get("integrator", "rk4")),
        network_interval=int(keys.get("network_interval", 1)),
    )


def _run_tdsim(args, grid: GridModel, study: _Study) -> int:
    pf = study.one("powerflow")
    ts = simulate(
        grid, _events(study), _controllers(study), _sim_config(study),
        dispatch=_float_map(study.one("dispatch")),
        load_scale=_float_map(study.one("load_scale")),
        slack=pf.get("slack"),
    )
    report.write_artifact(args.out, "timeseries.csv", report.timeseries_csv(ts))
    print(f"simulated {ts.t[-1]:g} s, {len(ts.channels)} channels")
    return EXIT_OK


def _run_cct(args, grid: GridModel, study: _Study) -> int:
    keys = study.one("cct")
    if not keys:
        raise ValueError("cct study requires a [cct] section")
    controls = None
    if keys.get("governor") == "off" or keys.get("avr") == "off":
        gov = None if keys.get("governor") == "off" else GovernorParams()
        avr = None if keys.get("avr") == "off" else AvrParams()
        controls = {g.id: MachineControls(gov, avr) for g in grid.generators}
    spec = CctFaultSpec(
        machine=str(keys["machine"]),
        loading=float(keys.get("loading", 0.9)),
        location=float(keys.get("location", 0.01)),
        branch=(str(keys["branch"]) if "branch" in keys else None),
    )
    result = find_cct(
        grid, spec,
        t_lo=float(keys.get("t_lo_s", 0.0)),
        t_hi=float(keys.get("t_hi_s", 0.5)),
        tol=float(keys.get("tol_s", 1e-3)),
        cfg=SimConfig(step=float(keys.get("step_s", 0.002))),
        machine_controls=controls,
        window=float(keys.get("window_s", 3.0)),
    )
    _emit(args, "cct.csv", *report.cct_rows(result))
    print(f"cct_s = {report.fmt(result.cct)}")
    return EXIT_OK


def _run_protect(args, grid: GridModel, study: _Study) -> int:
    keys = study.one("protect")
    if not keys:
        raise ValueError("protect study requires a [protect] section")
    if "fault_element" in keys:
        fault = FaultLocation.at_element_terminal(str(keys["fault_element"]))
        gen = grid.element(fault.target)
        fault_bus = gen.bus
    else:
        fault = FaultLocation.at_bus(str(keys["fault_bus"]))
        fault_bus = fault.target
    pf = study.one("powerflow")
    sol = solve_ac_powerflow(grid, slack=pf.get("slack"),
                             dispatch=_float_map(study.one("dispatch")),
                             load_scale=_float_map(study.one("load_scale")))
    summ = fault_summary(grid, fault_bus, sol)
    failed = {s.strip() for s in str(keys.get("failed_breakers", "")).split(",")
              if s.strip()}
    events = sequence_of_operations(
        grid, fault, summ, zsi_enabled=bool(keys.get("zsi", True)),
        failed_breakers=failed)
    _emit(args, "trips.csv", *report.trip_rows(events))
    rep = selectivity_check(events, float(keys.get("cct_budget_s", 0.542)))
    report.write_artifact(args.out, "selectivity.txt",
                          report.selectivity_text(rep))
    print(f"first trip {events[0].breaker_id} at "
          f"{report.fmt(events[0].time_s)} s; selective="
          f"{report.fmt(rep.selective)} within_cct="
          f"{report.fmt(rep.cleared_within_cct)}")
    if args.strict and not (rep.selective and rep.cleared_within_cct):
        return EXIT_STRICT
    return EXIT_OK


def _read_trace_csv(path: str) -> DcScTrace:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "t_s" or len(header) < 2:
            raise ValueError(f"{path}: expected a trace CSV with a t_s column")
        t, i = [], []
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) < 2:
                continue
            t.append(float(parts[0]))
            i.append(float(parts[1]))
    t_arr, i_arr = np.asarray(t), np.asarray(i)
    k = int(np.argmax(np.abs(i_arr))) if len(i_arr) else 0
    return DcScTrace(t=t_arr, i=i_arr,
                     peak_current=float(abs(i_arr[k])) if len(i_arr) else 0.0,
                     time_to_peak=float(t_arr[k]) if len(t_arr) else 0.0,
                     regime="file")


def _run_i2t(args, grid, study: _Study) -> int:
    if not args.trace or args.fuse_i2t is None:
        raise ValueError("i2t requires --trace and --fuse-i2t")
    trace = _read_trace_csv(args.trace)
    fuse = FuseSpec("fuse", "trace", float(args.fuse_i2t))
    t_clear = fuse_i2t_clearing(trace, fuse)
    if args.out:
        _emit(args, "i2t.csv",
              *report.fuse_rows([("fuse", fuse.i2t_total_clearing, t_clear)]))
    if t_clear is None:
        print("t_clear_s = NOT_CLEARED")
        if args.strict:
            return EXIT_STRICT
    else:
        print(f"t_clear_s = {report.fmt(t_clear)}")
    return EXIT_OK


_RUNNERS = {
    "powerflow": _run_powerflow,
    "sc-ac": _run_sc_ac,
    "sc-dc": _run_sc_dc,
    "tdsim": _run_tdsim,
    "cct": _run_cct,
    "protect": _run_protect,
    "i2t": _run_i2t,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vessel-study",
        description="Electrical studies for hybrid vessel grids.")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in _RUNNERS:
        p = sub.add_parser(kind)
        if kind != "i2t":
            p.add_argument("--grid", required=True,
                           help="grid file path or builtin:<name>")
        p.add_argument("--study", default=None, help="study config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=("csv", "text"), default="csv")
        p.add_argument("--strict", action="store_true")
        if kind in ("sc-ac", "sc-dc"):
            p.add_argument("--bus", default=None, help="fault bus id")
        if kind == "i2t":
            p.add_argument("--trace", default=None, help="trace CSV file")
            p.add_argument("--fuse-i2t", default=None, type=float,
                           help="fuse total clearing I^2t, A^2 s")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    args.out = os.environ.get("VESSEL_STUDY_OUT", args.out)
    if args.out is None and args.kind != "i2t":
        print("error: an output directory is required (--out or "
              "VESSEL_STUDY_OUT)", file=sys.stderr)
        return EXIT_INPUT
    try:
        if args.kind == "i2t":
            grid, study = None, _load_study(args.study)
        else:
            grid = _load_grid(args.grid)
            bad = validate(grid)
            if not bad.ok():
                for v in bad:
                    print(f"error: {v.element_id}: {v.rule}: {v.message}",
                          file=sys.stderr)
                return EXIT_INPUT
            study = _load_study(args.study)
            grid = _apply_breaker_states(grid, study)
        return _RUNNERS[args.kind](args, grid, study)
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NoContributorsError, NoDetectionError, DcFaultError,
            ShortCircuitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
