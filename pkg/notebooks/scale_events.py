"""
Scaling regions up and down mid-run
===================================

Three communities of 8 cells start on two regions of 12.  A third region
joins halfway through and cells migrate to it; a second run retires one
of three regions and its cells find new homes.
"""
import numpy as np

from handover_regions.engine import run, summarize
from handover_regions.scenario import Scenario

doc = {
    "topology": {"kind": "community", "n_communities": 3, "cells_per_community": 8,
                 "inter_edges": 2},
    "mobility": {"kind": "community_flow", "q": 0.95},
    "n_events": 40000,
    "seed": 1,
}

# %% scale up
up = Scenario.from_dict({**doc, "regions": {"count": 2, "capacity": 12},
                         "scale_events": [{"time": 20000, "action": "scale_up",
                                           "capacity": 12}]})
result = run(up)
print("live regions", result.live)
print("loads", summarize(result)["final_loads"])

# %% scale down
down = Scenario.from_dict({**doc, "regions": {"count": 3, "capacity": 17},
                           "scale_events": [{"time": 20000, "action": "scale_down",
                                             "region": 1}]})
result = run(down)
primary = np.asarray(summarize(result)["final_primary"])
print("live regions", result.live)
print("cells left on region 1", int((primary == 1).sum()))
print("final ratio", round(summarize(result)["final_ratio"], 4))
