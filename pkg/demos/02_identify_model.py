"""Identify the one-step linear model from excitation data and roll it out.

A compact excitation set (deep/shallow ramps, a staircase, a multi-segment
profile) is simulated, the snapshot least-squares problem is solved through
a truncated SVD, and the resulting model is rolled out open loop against a
ramp it never saw. The rollout R^2 per state is exactly the quality measure
the governor depends on.
"""

import copy

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from _shared import demo_model, ensure_out
from saltgov.dmdc import predict, score
from saltgov.orchestrator import profile_to_knots, run_scenario, training_trajectory

model = demo_model(refit=True)

from saltgov.config import default_config
ev = default_config()
ev["scenario"]["governor_enabled"] = False
ev["scenario"]["reference_knots"] = profile_to_knots(
    {"kind": "ramp", "depth": 0.40, "rate_pct_per_min": 5.0}, 150.0, 2000.0)
loop, _ = run_scenario(ev, observer_enabled=False)
held = training_trajectory(loop)

res = score(model, held)
print("held-out rollout R^2 per state:")
for nm in model.state_names:
    print(f"  {nm:10s} {res['r2'][nm]:.4f}")

u = np.vstack([held["Qdot_RX_ref"]])
x0 = np.array([held[nm][0] for nm in model.state_names])
roll = predict(model, x0, u[:, :-1]).T

t = held["t"]
show = ["T_s_in", "T_s_out", "T_c_in", "mdot_s", "C1", "Qdot_HX"]
fig, axes = plt.subplots(3, 2, figsize=(11, 8), sharex=True)
for ax, nm in zip(axes.ravel(), show):
    i = model.state_names.index(nm)
    ax.plot(t, held[nm], label="plant")
    ax.plot(t, roll[i], "--", label="model rollout")
    ax.set_ylabel(nm)
    ax.legend(fontsize=8)
    ax.set_title(f"R^2 = {res['r2'][nm]:.4f}", fontsize=9)
for ax in axes[-1]:
    ax.set_xlabel("time [s]")
fig.suptitle("Open-loop model rollout against a held-out 40% ramp")
fig.tight_layout()
out = ensure_out() + "/02_identify_model.png"
fig.savefig(out, dpi=130)
print("wrote", out)
