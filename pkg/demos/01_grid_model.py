"""Walk through the grid data model: fixtures, validation, the file format.

Run:  python demos/01_grid_model.py
"""

from vesselstudy import builtin_fixture, parse_grid, serialize_grid, validate

# Two vessels ship with the package: an AC cable layer and a DC superyacht.
ac = builtin_fixture("ac_vessel")
dc = builtin_fixture("dc_vessel")

for grid in (ac, dc):
    report = validate(grid)
    print(f"{grid.name}: {len(grid.buses)} buses, "
          f"{len(grid.generators)} generators, {len(grid.loads)} loads, "
          f"{len(grid.breakers)} breakers -> "
          f"{'valid' if report.ok() else 'INVALID'}")

print("\nAC vessel generator set:")
for g in ac.generators:
    print(f"  {g.id}: {g.rated_kva:.0f} kVA / {g.rated_kw:.0f} kW, "
          f"{g.voltage:.0f} V, {g.rated_current:.0f} A, {g.speed_rpm:.0f} rpm")

# The text format is diffable and round-trips exactly.
text = serialize_grid(ac)
assert parse_grid(text) == ac
print("\nround trip: parse(serialize(grid)) == grid")
print("\nfirst lines of the grid file:")
print("\n".join(text.splitlines()[:14]))

# Validation reports violations as data rather than raising.
broken = text.replace("rated_kw = 1916.00", "rated_kw = 2000.00")
for v in validate(parse_grid(broken)):
    print(f"\nviolation: {v.element_id}: {v.rule}: {v.message}")
