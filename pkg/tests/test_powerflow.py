import math

import numpy as np
import pytest

from vesselstudy import (
    prefault_operating_point,
    solve_ac_powerflow,
    solve_dc_balance,
)
from vesselstudy.grid import (
    Bus,
    ConverterSpec,
    GeneratorSpec,
    GridModel,
    LoadSpec,
)
from vesselstudy.powerflow import CapacityError, ConvergenceError, PowerflowError

from helpers import gauss_seidel_two_bus, ps_island, single_gen_grid, two_bus_grid

# frozen before the build from an independent Gauss-Seidel iteration of the
# two-bus case (line z = 0.01 + j0.10 pu, load 1.0 + j0.5 pu)
TWO_BUS_V2 = 0.9254115654281159 - 0.095j


def test_single_bus_no_load_identity():
    sol = solve_ac_powerflow(single_gen_grid())
    assert sol.v_pu["B1"] == 1.0
    assert sol.angle_rad["B1"] == 0.0
    assert sol.iterations == 0
    assert sol.injections_kw["G1"] == (0.0, 0.0)


def test_two_bus_against_independent_oracle():
    sol = solve_ac_powerflow(two_bus_grid(1.0, 0.5), tol=1e-10)
    v2 = sol.v_pu["B2"] * np.exp(1j * sol.angle_rad["B2"])
    oracle = gauss_seidel_two_bus(1.0, 0.5)
    assert oracle == pytest.approx(TWO_BUS_V2, abs=1e-12)
    assert abs(v2 - oracle) < 1e-8
    assert sol.max_mismatch <= 1e-10


def test_infeasible_load_raises_non_convergence():
    with pytest.raises(ConvergenceError):
        solve_ac_powerflow(two_bus_grid(50.0, 0.0))


def test_slack_angle_is_zero(ac_vessel):
    sol = solve_ac_powerflow(ac_vessel)
    slack_bus = ac_vessel.generator(sol.slack_elements[0]).bus
    assert sol.angle_rad[slack_bus] == 0.0


def test_fixture_convergence_budget(ac_vessel, dc_vessel):
    for grid in (ac_vessel, dc_vessel):
        sol = solve_ac_powerflow(grid)
        assert sol.iterations <= 10
        assert sol.max_mismatch <= 1e-8


def test_power_conservation(ac_vessel):
    sol = solve_ac_powerflow(ac_vessel)
    # sum of all element injections is exactly the network losses
    loss = sum(p for p, _ in sol.injections_kw.values())
    assert loss >= 0.0
    gen = sum(p for eid, (p, _) in sol.injections_kw.items()
              if eid.startswith("DG"))
    load = -sum(p for eid, (p, _) in sol.injections_kw.items()
                if not eid.startswith("DG"))
    assert gen == pytest.approx(load + loss, abs=1e-8 * 1000)


def test_unloaded_feeder_keeps_source_voltage(ac_vessel):
    # open the 440 V load: its feeder then carries nothing
    grid = ac_vessel.with_breaker_states({"CB_LOAD440_PS": False})
    sol = solve_ac_powerflow(grid)
    assert sol.v_pu["LV_PS"] == pytest.approx(sol.v_pu["AC_PS"], abs=1e-9)


def test_dead_islands_report_zero_voltage(ac_vessel):
    sol = solve_ac_powerflow(ps_island(ac_vessel))
    assert sol.v_pu["AC_SB"] == 0.0
    assert sol.v_pu["AC_PS"] == 1.0


def test_dispatch_override(ac_vessel):
    sol = solve_ac_powerflow(ac_vessel, dispatch={"DG#01": 1200.0})
    assert sol.injections_kw["DG#01"][0] == pytest.approx(1200.0)


class TestDcBalance:
    def test_single_charger_unity_efficiency(self, dc_vessel):
        sol = solve_dc_balance(dc_vessel, efficiency=1.0)
        # port island: one charger serves the 400 kVA pf 0.85 board = 340 kW
        assert sol.transfers_kw["CH#01"] == pytest.approx(340.0)
        assert sol.residual_kw == pytest.approx(0.0, abs=1e-9)

    def test_equal_chargers_share_equally(self, dc_vessel):
        # starboard island: two identical chargers behind identical machines;
        # the 400 V board load passes two conversion stages
        sol = solve_dc_balance(dc_vessel, efficiency=0.97)
        assert sol.transfers_kw["CH#02"] == sol.transfers_kw["CH#03"]
        served = sol.loads_kw["GINV_SB:ac"]
        assert sol.transfers_kw["CH#02"] == pytest.approx(served / 0.97 ** 2 / 2)

    def test_hand_arithmetic_split(self):
        # two equal chargers, 600 kW of load, 0.97 per stage: 600/0.97/2 each
        grid = _dc_pair_grid(load_kw=600.0)
        sol = solve_dc_balance(grid, efficiency=0.97)
        assert sol.transfers_kw["CH_A"] == pytest.approx(309.27835051546393)
        assert sol.transfers_kw["CH_B"] == pytest.approx(309.27835051546393)

    def test_overload_raises_capacity_error(self):
        grid = _dc_pair_grid(load_kw=2000.0, single=True)
        with pytest.raises(CapacityError):
            solve_dc_balance(grid)

    def test_residual_closes(self, dc_vessel):
        sol = solve_dc_balance(dc_vessel)
        assert sol.residual_kw == pytest.approx(0.0, abs=1e-9)


def _dc_pair_grid(load_kw: float, single: bool = False) -> GridModel:
    buses = (
        Bus("DCB", "dc", 650.0),
        Bus("GA", "ac", 400.0, 50.0),
        Bus("GB", "ac", 400.0, 50.0),
    )
    def gen(gid, bus):
        return GeneratorSpec(gid, bus, 582.0, 465.6, 400.0, 840.0, 50.0,
                             0.80, 1500.0, 3.4)
    gens = (gen("GEN_A", "GA"),) if single else (gen("GEN_A", "GA"),
                                                 gen("GEN_B", "GB"))
    convs = [ConverterSpec("CH_A", "DCB", "charger", 850.0, 552.5, ac_bus="GA")]
    if not single:
        convs.append(ConverterSpec("CH_B", "DCB", "charger", 850.0, 552.5,
                                   ac_bus="GB"))
    loads = (LoadSpec("DCLOAD", "DCB", load_kw, 1.0, 1.0, 0.0),)
    return GridModel("pair", buses=buses, generators=gens,
                     converters=tuple(convs), loads=loads)


class TestOperatingPoint:
    def test_no_load(self):
        sol = solve_ac_powerflow(single_gen_grid())
        op = prefault_operating_point(sol, "G1")
        assert op.i0 == 0.0
        assert op.u0 == 690.0

    def test_rated_point_of_main_generator(self):
        # 1916 kW + 1437 kvar at 690 V is the DG#01 nameplate point
        sol = solve_ac_powerflow(single_gen_grid(1916.0, 1437.0))
        op = prefault_operating_point(sol, "G1")
        assert op.i0 == pytest.approx(2004.0, rel=2e-3)
        assert op.phi0 == pytest.approx(math.acos(0.80), rel=1e-3)

    def test_ninety_percent_dispatch(self):
        sol = solve_ac_powerflow(single_gen_grid(0.9 * 1916.0, 0.9 * 1437.0))
        op = prefault_operating_point(sol, "G1")
        assert op.i0 == pytest.approx(0.9 * 2004.0, rel=5e-3)

    def test_offline_machine_rejected(self, ac_vessel):
        grid = ac_vessel.with_breaker_states({"CB_DG01": False})
        sol = solve_ac_powerflow(grid)
        with pytest.raises(PowerflowError, match="offline|absent"):
            prefault_operating_point(sol, "DG#01")

    def test_absent_machine_rejected(self):
        sol = solve_ac_powerflow(single_gen_grid())
        with pytest.raises(PowerflowError):
            prefault_operating_point(sol, "DG#99")
