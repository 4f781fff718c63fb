"""Pick the supplementary model states with floating forward selection.

Starting from the eight always-included process variables, the selector
scores each candidate by cross-validated rollout accuracy of the identified
model. Physical candidates (precursor groups, heat transfer rates) beat the
deliberately useless channels (white noise, noisy pressure derivatives)
that are mixed into the pool.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from _shared import ensure_out
from saltgov.config import default_config
from saltgov.orchestrator import selection_problem_from_plant
from saltgov.sffs import select, trace_rows

cfg = default_config()
problem = selection_problem_from_plant(cfg, k_max=5)
final, trace = select(problem)

print("selection path:")
for step, action, feature, j, std, members in trace_rows(trace):
    print(f"  step {step}: {action:6s} {feature:16s} J={j:.5f} +-{std:.5f}  [{members}]")
print("final set:", " ".join(final))

adds = [(r[2], r[3], r[4]) for r in trace.records if r[1] == "add"]
fig, ax = plt.subplots(figsize=(8, 4.5))
names = [a[0] for a in adds]
js = [a[1] for a in adds]
stds = [a[2] for a in adds]
ax.errorbar(range(1, len(js) + 1), js, yerr=stds, marker="o")
ax.set_xticks(range(1, len(js) + 1))
ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
ax.set_xlabel("added feature (in order)")
ax.set_ylabel("objective J (cross-validated)")
ax.set_title("Floating forward selection over the candidate pool")
fig.tight_layout()
out = ensure_out() + "/03_state_selection.png"
fig.savefig(out, dpi=130)
print("wrote", out)
