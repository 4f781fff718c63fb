"""Evolution of the admissible input band during the governed transient.

Each tick the stacked-inequality set yields the interval of constant
reference powers that would keep every predicted output inside the
constraints forever. The requested reference rides the lower edge after the
first intervention; relaxing the floor at 700 s visibly widens the band;
sensor noise (right panel) makes the edge itself noisy and strictly more
conservative.
"""

import copy

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from _shared import demo_model, ensure_out
from saltgov.config import default_config
from saltgov.orchestrator import run_scenario

model = demo_model()
runs = {}
cfg = default_config()
runs["noise-free"] = run_scenario(cfg, model=model)[0]
cfg_noisy = copy.deepcopy(cfg)
cfg_noisy["scenario"]["noise_enabled"] = True
runs["noisy (robust)"] = run_scenario(cfg_noisy, model=model)[0]

fig, axes = plt.subplots(1, 2, figsize=(12, 5), sharey=True)
for ax, (label, loop) in zip(axes, runs.items()):
    t = loop.log_array("t")
    lo = loop.log_array("band_lo")
    hi = np.minimum(loop.log_array("band_hi"), 340.0)
    ax.fill_between(t, lo, hi, alpha=0.25, label="admissible band")
    ax.plot(t, loop.log_array("r"), color="gray", label="requested")
    ax.plot(t, loop.log_array("v"), color="C1", label="admitted")
    ax.axvline(700.0, color="purple", ls=":", lw=1, label="floor relaxed")
    ax.set_title(label)
    ax.set_xlabel("time [s]")
    ax.legend(fontsize=8)
axes[0].set_ylabel("constant reference power [MW]")
fig.suptitle("Admissible region during the load-follow transient")
fig.tight_layout()
out = ensure_out() + "/07_admissible_region.png"
fig.savefig(out, dpi=130)
print("wrote", out)
