# %% [markdown]
# # Timing and the shared space
#
# Two writers append to the first free cell. A writes `0` on its even moves,
# B writes `1` on its odd moves. With both on the global clock the space
# alternates; delay B's first move and A gets a head start.

# %%
from gridsim.constructions import alternating_writers, build
from gridsim.grid import classify, run_grid
from gridsim.scheduling import interleaving, irrational, identity, rational

cfg = alternating_writers()
print(classify(cfg), run_grid(cfg, horizon=8).snapshot())

# %%
desync = build("desync")
print(run_grid(desync).snapshot())

# %% [markdown]
# Local clocks map move i to a global tick. Rational scales repeat,
# sqrt2 never does.

# %%
for scale in (identity(), rational(2, 3), irrational("sqrt2")):
    print(scale.kind, [t for t, _ in interleaving([("M", scale)], 12)])

# %%
odd = alternating_writers(irrational("sqrt2"), identity())
print(run_grid(odd, horizon=30).snapshot())

# %% [markdown]
# Growing the horizon only extends the word.

# %%
res = run_grid(cfg, horizon=12)
for h, word in enumerate(res.trace.history(12)):
    print(h, word)
