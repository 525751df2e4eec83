"""
Self-organization against the static and random baselines
==========================================================

Two communities of 12 cells, two regions of capacity 12.  Active mode
starts from a random deal and lets cells and regions trade; the frozen
baselines keep their initial assignment for the whole run.
"""
import numpy as np

from handover_regions.engine import run, summarize
from handover_regions.scenario import load_scenario

base = load_scenario("community.json")

# %% one active run
result = run(base)
summary = summarize(result)
print("steady-state inter-region ratio", round(summary["steady_state_ratio"], 4))
print("assignment changes", summary["assignment_changes"])
print("final primaries", summary["final_primary"])

# %% inter-region ratio per window, first few and last few
ratios = np.asarray(result.ratios)
print("first windows", np.round(ratios[:5], 3))
print("last windows ", np.round(ratios[-5:], 3))

# %% the three policies over a handful of seeds
rows = []
for seed in range(5):
    for mode, init in (("active", "random"), ("frozen", "static"), ("frozen", "random")):
        s = summarize(run(base.replace(seed=seed, mode=mode, init_policy=init)))
        rows.append((seed, f"{mode}/{init}", s["steady_state_ratio"], s["signaling_total"]))

for label in ("active/random", "frozen/static", "frozen/random"):
    sel = [r for r in rows if r[1] == label]
    print(f"{label:14s} ratio {np.mean([r[2] for r in sel]):.4f} "
          f"signaling {np.mean([r[3] for r in sel]):.0f}")
