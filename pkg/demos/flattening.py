# %% [markdown]
# # When a grid is just one machine
#
# With rational scales, a computable schedule and a global controller, the
# concurrent run can be replayed as a single sequential program. Each of
# the other constructions breaks one of those conditions.

# %%
from gridsim.constructions import CONSTRUCTIONS, build, copier
from gridsim.equivalence import check_equivalence, enumerate_outputs, flatten
from gridsim.randomgrids import random_grid

for name in CONSTRUCTIONS:
    verdict = flatten(build(name, "0110"))
    print(f"{name:26s}", getattr(verdict, "source", "flattenable"))

# %%
flat = flatten(build("controlled_writers"))
print(flat.period, flat.expand(4))

# %%
results = [check_equivalence(random_grid(seed), horizon=200) for seed in range(30)]
print(sum(map(bool, results)), "of", len(results), "equal")

# %% [markdown]
# Dovetailing a copier over inputs in length-lex order.

# %%
cert = enumerate_outputs(copier(), None, 12)
print(cert.text())
