"""Shared scenario builders and independent oracles used across tests.

Oracles here are deliberately primitive (fixed-point iteration, closed
forms, fine-grid quadrature) and never call the code paths they check.
"""

from __future__ import annotations

import math

import numpy as np

from vesselstudy.grid import (
    Bus,
    CableBranch,
    GeneratorDynamicParams,
    GeneratorSpec,
    GridModel,
    LoadSpec,
)

# breakers that leave only the port-side section of the AC vessel energized
PS_ISLAND_OPEN = (
    "CB_TIE_PS_MID", "CB_DG02", "CB_DG03", "CB_DG04", "CB_DG05",
    "CB_CRANE_SB", "CB_LOAD440_SB", "CB_THR_BOW2", "CB_THR_BOW3",
    "CB_THR_PROP_SB", "CB_INV_SB",
)
# same but DG#02 stays online (DP scenario)
DP_ISLAND_OPEN = tuple(b for b in PS_ISLAND_OPEN if b != "CB_DG02")


def ps_island(grid, extra_open=()):
    states = {b: False for b in PS_ISLAND_OPEN + tuple(extra_open)}
    return grid.with_breaker_states(states)


def dp_island(grid):
    return grid.with_breaker_states({b: False for b in DP_ISLAND_OPEN})


def single_gen_grid(load_kw: float = 0.0, load_kvar: float = 0.0) -> GridModel:
    """One DG#01-class machine feeding a local lumped load."""
    bus = Bus("B1", "ac", 690.0, 60.0)
    gen = GeneratorSpec(
        "G1", "B1", 2395.0, 1916.0, 690.0, 2004.0, 60.0, 0.80, 720.0, 1.02,
        dynamics=GeneratorDynamicParams(
            xd=1.8, xd_t=0.28, xd_st=0.18, td0_t=3.5, td0_st=0.04, tdc=0.15,
            inertia_h=1.2, damping=2.0, synthetic=True))
    loads = ()
    if load_kw or load_kvar:
        s = math.hypot(load_kw, load_kvar)
        loads = (LoadSpec("L1", "B1", s, load_kw / s, 1.0, 0.0),)
    return GridModel("single", buses=(bus,), generators=(gen,), loads=loads)


def two_bus_grid(load_p_pu: float, load_q_pu: float) -> GridModel:
    """Slack machine, one cable of z = 0.01 + j0.10 pu, constant-power load."""
    zbase = 690.0 ** 2 / 1e6
    buses = (Bus("B1", "ac", 690.0, 60.0), Bus("B2", "ac", 690.0, 60.0))
    gen = GeneratorSpec(
        "G1", "B1", 5000.0, 4000.0, 690.0, 4183.7, 60.0, 0.80, 720.0, 1.0)
    line = CableBranch("L12", "B1", "B2", 0.01 * zbase, 0.10 * zbase)
    s = math.hypot(load_p_pu, load_q_pu) * 1e3
    load = LoadSpec("LD", "B2", s, load_p_pu * 1e3 / s, 1.0, 0.0)
    return GridModel("twobus", buses=buses, generators=(gen,),
                     branches=(line,), loads=(load,))


def gauss_seidel_two_bus(load_p_pu: float, load_q_pu: float,
                         iters: int = 2000) -> complex:
    """Independent fixed-point solution of the two-bus case."""
    y = 1.0 / complex(0.01, 0.10)
    s2 = -complex(load_p_pu, load_q_pu)
    v2 = 1.0 + 0j
    for _ in range(iters):
        v2 = (np.conj(s2) / np.conj(v2) + y * 1.0) / y
    return complex(v2)


def smib_grid() -> GridModel:
    """One machine behind x'd = 0.3 pu and a j0.4 pu line to a stiff source.

    The machine base equals the 1 MVA system base so per-unit quantities
    match the hand formulas; the stiff source is a machine with enormous
    inertia and negligible reactance.
    """
    buses = (Bus("B_M", "ac", 690.0, 60.0), Bus("B_INF", "ac", 690.0, 60.0))
    g1 = GeneratorSpec(
        "G1", "B_M", 1000.0, 900.0, 690.0, 836.74, 60.0, 0.90, 900.0, 1.0,
        dynamics=GeneratorDynamicParams(
            xd=1.8, xd_t=0.3, xd_st=0.2, td0_t=5.0, td0_st=0.05, tdc=0.1,
            inertia_h=3.5, damping=0.0, synthetic=True))
    ib = GeneratorSpec(
        "IB", "B_INF", 1e6, 9e5, 690.0, 836740.0, 60.0, 0.90, 900.0, 1.0,
        dynamics=GeneratorDynamicParams(
            xd=3e-5, xd_t=2e-5, xd_st=1e-5, td0_t=100.0, td0_st=1.0, tdc=0.1,
            inertia_h=1e7, damping=0.0, synthetic=True))
    zb = 690.0 ** 2 / 1e6
    line = CableBranch("LINE", "B_M", "B_INF", 0.0, 0.4 * zb)
    return GridModel("smib", buses=buses, branches=(line,),
                     generators=(g1, ib))


def equal_area_cct(loading: float, h: float = 3.5, xdp: float = 0.3,
                   xline: float = 0.4, f: float = 60.0) -> float:
    """Closed-form critical clearing time for the smib_grid scenario.

    Pre-fault state from the dispatch, fault at the machine bus (electrical
    power zero while on), equal-area critical angle, then the quadratic
    fault-on swing solved for the clearing instant.
    """
    pm = loading * 0.9          # rated_kw 900 on the 1 MVA base
    th = math.asin(pm * xline)
    vm = complex(math.cos(th), math.sin(th))
    i = (vm - 1.0) / (1j * xline)
    ep = vm + 1j * xdp * i
    d0 = math.atan2(ep.imag, ep.real)
    pmax = abs(ep) / (xdp + xline)
    dmax = math.pi - d0
    dc = math.acos(math.sin(d0) * (dmax - d0) + math.cos(dmax))
    assert pmax * math.sin(d0) - pm < 1e-9
    return math.sqrt(4.0 * h * (dc - d0) / (2.0 * math.pi * f * pm))
