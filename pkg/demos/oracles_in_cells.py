# %% [markdown]
# # Oracle bits through the space
#
# B marks one cell of each pair, A fills the sibling and reads the pair
# back as a bit. The scheduled exchange instead lets the schedule itself
# carry the bits.

# %%
import random

from gridsim.constructions import decode_space, pair_cell_encoder, scheduled_exchange
from gridsim.grid import run_grid

w = "1101000111"
res = run_grid(pair_cell_encoder(w))
print(res.snapshot(), res.outputs["A"], decode_space(res.snapshot()))

# %%
print(run_grid(scheduled_exchange(w)).snapshot())

# %%
rng = random.Random(0)
words = ["".join(rng.choice("01") for _ in range(rng.randint(1, 200))) for _ in range(100)]
misses = sum(decode_space(run_grid(pair_cell_encoder(v)).snapshot()) != v for v in words)
print("round-trip misses:", misses)

# %% [markdown]
# The trace is plain text and replays to the same space.

# %%
from gridsim.grid import Trace, replay

text = res.trace.text()
print(text.splitlines()[:6])
print(replay(Trace.parse(text)).snapshot() == res.snapshot())
