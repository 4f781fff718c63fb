"""Baseline load-follow without the supervisory layer.

The three PID loops track a 100% -> 60% power ramp at 5%/min and regulate
the core inlet/outlet temperatures. The uncontrolled secondary-side
temperatures drift to a new equilibrium: the heat-exchanger inlet falls and
the outlet rises, which is exactly the drift the governor is later asked to
constrain.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from _shared import ensure_out
from saltgov.config import default_config
from saltgov.orchestrator import run_scenario

cfg = default_config()
cfg["scenario"]["governor_enabled"] = False

loop, summary = run_scenario(cfg)
print("summary:", {k: round(v, 4) if isinstance(v, float) else v
                   for k, v in summary.items()})

t = loop.log_array("t")
fig, axes = plt.subplots(3, 2, figsize=(11, 9), sharex=True)
beta = loop.plant.kinetics.beta_total

axes[0, 0].plot(t, loop.log_array("Qdot_RX"), label="plant")
axes[0, 0].plot(t, loop.log_array("v"), "--", label="setpoint")
axes[0, 0].set_ylabel("reactor power [MW]")
axes[0, 0].legend()

axes[0, 1].plot(t, loop.log_array("rho_ext") / beta, label="external")
axes[0, 1].plot(t, loop.log_array("rho_m") / beta, label="fuel+moderator")
axes[0, 1].plot(t, loop.log_array("rho_c") / beta, label="coolant")
axes[0, 1].plot(t, loop.log_array("rho_total") / beta, "k", label="total")
axes[0, 1].set_ylabel("reactivity [$]")
axes[0, 1].legend(fontsize=8)

axes[1, 0].plot(t, loop.log_array("T_c_in"), label="T_c_in")
axes[1, 0].plot(t, loop.log_array("T_c_out"), label="T_c_out")
axes[1, 0].set_ylabel("core temperatures [degC]")
axes[1, 0].legend()

axes[1, 1].plot(t, loop.log_array("mdot_p"), label="primary")
axes[1, 1].plot(t, loop.log_array("mdot_s"), label="secondary")
axes[1, 1].set_ylabel("mass flow [kg/s]")
axes[1, 1].legend()

axes[2, 0].plot(t, loop.log_array("T_s_in"))
axes[2, 0].set_ylabel("T_s_in [degC] (uncontrolled)")
axes[2, 0].set_xlabel("time [s]")

axes[2, 1].plot(t, loop.log_array("T_s_out"))
axes[2, 1].set_ylabel("T_s_out [degC] (uncontrolled)")
axes[2, 1].set_xlabel("time [s]")

fig.suptitle("Ungoverned 40% load-follow: regulated core, drifting secondary")
fig.tight_layout()
out = ensure_out() + "/01_plant_baseline.png"
fig.savefig(out, dpi=130)
print("wrote", out)
