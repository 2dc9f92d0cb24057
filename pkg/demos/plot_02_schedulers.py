"""
Comparing schedulers on one frame
=================================

Build the rate table for one drop and run GMAX, the deterministic assignment
baseline, the relaxed UOSCBC bound and the GMAX-seeded genetic search.
"""
import numpy as np

from irsched import ScenarioConfig, build_codebook, build_rate_table, da, drop_ues, ga, gmax, sum_rate, \
    synthesize_channels, uoscbc, validate
from irsched.harness import stream
from irsched.sched import reconfiguration_bits

cfg = ScenarioConfig.desk(Z=4)
cb = build_codebook(cfg, stream(cfg.seed, 0))
rng = stream(cfg.seed, 1, 0)
channels = synthesize_channels(cfg, drop_ues(cfg, rng), rng)
table = build_rate_table(channels, cb, cfg)
print("rate table shape (K, |C|, F):", table.shape)

# %%
grids = {"gmax": gmax(table, cfg), "da": da(table, cfg), "uoscbc": uoscbc(table, cfg)}
grids["ga"] = ga(table, cfg, grids["gmax"], rng=stream(cfg.seed, 2, 0))

for name, g in grids.items():
    problems = validate(g, cfg, len(cb))
    print(f"{name:>7s}: sum rate {sum_rate(g, table):.4f}  alpha={g.alpha.tolist()}  "
          f"control bits={reconfiguration_bits(g, cb.b_q)}  feasible={not problems}")

# %%
# The GMAX grid as a time-slot x carrier picture: each cell shows the UE served.
g = grids["gmax"]
rows = []
for z in range(cfg.Z):
    members = [np.flatnonzero((g.cluster == z) & (g.carrier == i)).tolist() for i in range(cfg.F)]
    for t in range(g.alpha[z]):
        rows.append(f"cluster {z} (codeword {g.configs[z]:2d}) | " + " ".join(f"{m[t]:3d}" for m in members))
print("\n".join(rows))
