import math

import pytest

from vesselstudy import (
    GridModel,
    GridParseError,
    builtin_fixture,
    parse_grid,
    serialize_grid,
    validate,
)
from vesselstudy.grid import GridLookupError

DG01_SECTION = """
[bus MAIN]
kind = ac
voltage_v = 690
frequency_hz = 60

[generator DG#01]
bus = MAIN
rated_kva = 2395
rated_kw = 1916
voltage_v = 690
current_a = 2004
frequency_hz = 60
pf = 0.80
rpm = 720
winding_resistance_mohm = 1.02
"""

DC_GEN_SECTION = """
[bus GEN1]
kind = ac
voltage_v = 400
frequency_hz = 50

[generator GEN#01]
bus = GEN1
rated_kva = 582
rated_kw = 465.6
voltage_v = 400
current_a = 840
frequency_hz = 50
pf = 0.80
rpm = 1500
poles = 4
winding_resistance_mohm = 3.4
"""


def test_parse_main_diesel_generator():
    grid = parse_grid(DG01_SECTION)
    g = grid.generator("DG#01")
    assert g.rated_kva == 2395.0
    assert g.rated_kw == 1916.0
    assert g.voltage == 690.0
    assert g.rated_current == 2004.0
    assert g.power_factor == 0.80
    assert g.speed_rpm == 720.0
    assert g.winding_resistance_mohm == 1.02
    assert validate(grid).ok()


def test_parse_dc_grid_generator():
    grid = parse_grid(DC_GEN_SECTION)
    g = grid.generator("GEN#01")
    assert g.rated_kva == 582.0
    assert g.rated_current == 840.0
    assert g.speed_rpm == 1500.0
    assert g.poles == 4
    assert validate(grid).ok()


def test_dangling_bus_reference_is_a_parse_error():
    text = DG01_SECTION.replace("bus = MAIN", "bus = NOPE", 1)
    with pytest.raises(GridParseError, match="dangling"):
        parse_grid(text)


def test_syntax_error_reports_line_number():
    text = "[bus B1]\nkind = ac\nvoltage_v 690\n"
    with pytest.raises(GridParseError, match="line 3"):
        parse_grid(text)


def test_unknown_section_kind():
    with pytest.raises(GridParseError, match="unknown section kind"):
        parse_grid("[widget W1]\nfoo = 1\n")


def test_missing_required_key():
    with pytest.raises(GridParseError, match="missing required key"):
        parse_grid("[bus B1]\nkind = ac\n")


def test_comments_do_not_eat_hash_ids():
    text = DG01_SECTION + "\n# full line comment\n[load CR#1]\n" \
        "bus = MAIN  # crane\nrated_kva = 100\npf = 0.75\n" \
        "static_fraction = 0.2\nmotor_fraction = 0.8\n"
    grid = parse_grid(text)
    assert grid.load("CR#1").bus == "MAIN"


class TestValidate:
    def test_fixtures_have_no_violations(self, ac_vessel, dc_vessel):
        assert validate(ac_vessel).ok()
        assert validate(dc_vessel).ok()

    def test_kw_kva_pf_mismatch(self):
        # 2395 kVA * 0.80 = 1916 kW, 2000 kW is 4.4 % off the 1 % rule
        text = DG01_SECTION.replace("rated_kw = 1916", "rated_kw = 2000")
        report = validate(parse_grid(text))
        assert any(v.rule == "kw/kva/pf mismatch" for v in report)

    def test_empty_grid(self):
        report = validate(GridModel("nothing"))
        rules = [v.rule for v in report]
        assert rules == ["empty grid"]

    def test_current_rating_mismatch(self):
        text = DG01_SECTION.replace("current_a = 2004", "current_a = 2100")
        report = validate(parse_grid(text))
        assert any(v.rule == "current/kva/voltage mismatch" for v in report)

    def test_reactance_ordering(self):
        grid = parse_grid(DG01_SECTION)
        g = grid.generators[0]
        from dataclasses import replace
        from vesselstudy.grid import GeneratorDynamicParams
        bad = replace(g, dynamics=GeneratorDynamicParams(
            xd=0.2, xd_t=0.3, xd_st=0.1, td0_t=1.0, td0_st=0.01))
        report = validate(replace(grid, generators=(bad,)))
        assert any(v.rule == "reactance ordering" for v in report)


class TestFixtures:
    def test_ac_vessel_generator_set(self, ac_vessel):
        assert len(ac_vessel.generators) == 5
        assert ac_vessel.generator("DG#02").rated_kva == 3213.0
        assert ac_vessel.generator("DG#05").speed_rpm == 1800.0

    def test_ac_vessel_composition(self, ac_vessel):
        assert sum(l.rated_kva for l in ac_vessel.loads
                   if l.id.startswith("CRANE")) == pytest.approx(746.7)
        crane = ac_vessel.load("CRANE_PS")
        assert (crane.static_fraction, crane.motor_fraction) == (0.20, 0.80)
        assert crane.power_factor == 0.75
        inv = [c for c in ac_vessel.converters if c.id.startswith("INV")]
        assert [c.rated_kw for c in inv] == [1500.0, 1500.0]
        bows = [c for c in ac_vessel.converters if c.id.startswith("THR_BOW")]
        assert len(bows) == 3 and all(c.rated_kw == 1000.0 for c in bows)
        props = [c for c in ac_vessel.converters if "PROP" in c.id]
        assert len(props) == 2 and all(c.rated_kw == 2100.0 for c in props)
        ties = [b for b in ac_vessel.breakers if "TIE" in b.id]
        assert len(ties) == 2

    def test_dc_vessel_generators_identical(self, dc_vessel):
        gens = dc_vessel.generators
        assert len(gens) == 3
        assert all(g.winding_resistance_mohm == 3.4 for g in gens)
        assert all(g.rated_kva == 582.0 for g in gens)
        chargers = [c for c in dc_vessel.converters if c.kind == "charger"]
        assert [c.rated_current for c in chargers] == [850.0] * 3

    def test_dc_vessel_batteries_direct(self, dc_vessel):
        for bat in dc_vessel.batteries:
            assert dc_vessel.bus(bat.bus).kind == "dc"
            assert bat.sc_peak_current == 14900.0
            assert bat.sc_time_constant == pytest.approx(0.16e-3)
            assert bat.min_soc == 0.25

    def test_unknown_fixture_name(self):
        with pytest.raises(GridLookupError):
            builtin_fixture("battleship")

    def test_rated_current_consistency(self, ac_vessel, dc_vessel):
        for g in ac_vessel.generators + dc_vessel.generators:
            expect = g.rated_kva * 1e3 / (math.sqrt(3) * g.voltage)
            assert abs(g.rated_current - expect) / expect < 0.01

    def test_synthetic_dynamics_flagged(self, ac_vessel, dc_vessel):
        for g in ac_vessel.generators + dc_vessel.generators:
            assert g.dynamics.synthetic


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["ac_vessel", "dc_vessel"])
    def test_fixture_round_trip(self, name):
        grid = builtin_fixture(name)
        assert parse_grid(serialize_grid(grid)) == grid

    def test_serializer_pads_floats(self, ac_vessel):
        text = serialize_grid(ac_vessel)
        assert "voltage_v = 690.00" in text
        assert "winding_resistance_mohm = 1.02" in text

    def test_breaker_states_round_trip(self, ac_vessel):
        grid = ac_vessel.with_breaker_states({"CB_TIE_PS_MID": False})
        back = parse_grid(serialize_grid(grid))
        assert not back.breaker("CB_TIE_PS_MID").closed
        assert back == grid


def test_with_breaker_states_rejects_unknown(ac_vessel):
    with pytest.raises(GridLookupError):
        ac_vessel.with_breaker_states({"CB_NOPE": False})


def test_islands_split_on_open_tie(ac_vessel):
    whole = ac_vessel.islands("ac")
    assert len(whole) == 1
    split = ac_vessel.with_breaker_states(
        {"CB_TIE_PS_MID": False, "CB_TIE_MID_SB": False}).islands("ac")
    assert len(split) == 3
