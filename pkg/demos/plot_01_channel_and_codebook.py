"""
Channels, continuous optima and a cell-specific codebook
========================================================

Drop a few UEs, look at their LOS flags, compute the rate-optimal IRS phases
for one of them and see how much is lost after 1-bit quantization and after
snapping to a learned 64-entry codebook.
"""
import numpy as np

from irsched import (ScenarioConfig, achievable_rate, build_codebook, drop_ues, map_to_codebook,
                     optimal_continuous_config, quantize_config, synthesize_channels)
from irsched.harness import stream

cfg = ScenarioConfig.desk()
print(f"N_I={cfg.n_irs}, codebook size={cfg.codebook_size}, carriers={np.round(cfg.carriers_hz, -3)}")

# %%
# A drop of K UEs on the half-disc; roughly a third see the IRS in LOS.
rng = stream(cfg.seed, 1, 0)
drop = drop_ues(cfg, rng)
channels = synthesize_channels(cfg, drop, rng)
print("LOS fraction in this drop:", drop.los.mean())

# %%
# Continuous optimum for UE 0 on carrier 0 and its quantized versions.
opt = optimal_continuous_config(channels, 0, 0)
q = quantize_config(opt.phases, cfg.b_irs)
cb = build_codebook(cfg, stream(cfg.seed, 0))
c = map_to_codebook(opt.phases, cb)

s2, n2 = cfg.sigma_s2, cfg.sigma_n2
cont_rate = np.log2(1 + opt.gain**2 * s2 / n2)
print(f"continuous phases : {cont_rate:.4g} bit/s/Hz")
print(f"1-bit quantized   : {achievable_rate(channels, q, 0, 0, s2, n2):.4g} bit/s/Hz")
print(f"codeword {c:2d}       : {achievable_rate(channels, cb[c], 0, 0, s2, n2):.4g} bit/s/Hz")
best = max(achievable_rate(channels, cb[j], 0, 0, s2, n2) for j in range(len(cb)))
print(f"best codeword     : {best:.4g} bit/s/Hz")

# %%
# The control link only carries log2|C| bits per reconfiguration instead of b_I * N_I.
print(f"bits per reconfiguration: {cb.b_q} (vs {cfg.b_irs * cfg.n_irs} per-element)")
