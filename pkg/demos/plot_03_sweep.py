"""
Monte Carlo sweep over the reconfiguration budget
=================================================

Average sum rate versus Z at desk scale, written to CSV and SVG. This is the
same pipeline as ``irsched run --sweep Z=1,2,5,10``.
"""
import logging
from pathlib import Path

from irsched import ScenarioConfig
from irsched.harness import emit_csv, emit_plots, run_experiment

logging.basicConfig(level=logging.INFO)

cfg = ScenarioConfig.desk(n_drops=20)
reports = run_experiment(cfg, ["gmax", "da", "uoscbc"], {"Z": [1, 2, 5, 10]})

for rep in reports:
    print(rep.label, {k: round(m.mean, 4) for k, m in rep.schedulers.items()})

# %%
out = Path("sweep_out")
out.mkdir(exist_ok=True)
print(emit_csv(reports, out / "summary.csv"))
print(emit_plots(reports, out))
