# %% [markdown]
# # Rally records
# Build a rally by hand, check it, write it to a `.vrr` file and read it back.

# %%
import io

from volleygraph import records
from volleygraph.rally import Block, Hit, HitType, Level, Pass, Rally, Round, ServeType, Set, Team, WinReason, validate_rally
from volleygraph.synth import college_profile, generate

rally = Rally(
    match_id="demo",
    level=Level.COLLEGE,
    rally_id="demo-1",
    rounds=(
        Round(Team.A, 1, (Pass(6, 2, ServeType.JUMP), Set(2, 3, 4), Hit(4, HitType.POWER), Block(2, True))),
        Round(Team.B, 2, (Pass(5, 1), Set(3, 1, 2), Hit(2, HitType.FREE_BALL))),
    ),
    winner=Team.A,
    win_reason=WinReason.KILL,
)
print("valid:", bool(validate_rally(rally)))

# %% [markdown]
# A set before the pass breaks the contact-order rule; the report points at the contact.

# %%
broken = Rally("demo", Level.COLLEGE, "demo-2", (Round(Team.A, 1, (Set(2, 3, 4), Pass(6, 2))),), Team.B)
for v in validate_rally(broken):
    print(v)

# %% [markdown]
# Serialize a few generated rallies together with the hand-made one.

# %%
text = records.serialize([rally] + generate(college_profile(), 3, seed=0), source="demo")
print(text.splitlines()[0])
print(text.splitlines()[1][:120], "...")

# %% [markdown]
# Damaged lines are skipped with a line-numbered diagnostic, the rest still load.

# %%
lines = text.splitlines()
lines[2] = lines[2][:50]
lines[3] = lines[3].replace('"rally_id"', '"referee":"x","rally_id"')
result = records.parse(io.StringIO("\n".join(lines) + "\n"))
print(len(result.rallies), "rallies read")
for d in result.diagnostics:
    print(d)
