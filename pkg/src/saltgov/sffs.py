"""Sequential forward floating selection of supplementary model states.

Starting from the mandatory state set H, features are added one at a time,
each time picking the candidate that maximizes a cross-validated objective:

    J = mean over scoring trajectories of (1/2 r_train + 1/2 r_test)

where r is the mean per-state R^2 of the identified model rolled out against
the trajectory. After every addition the algorithm considers one floating
removal: the least useful member of the current supplement set is dropped
when doing so strictly improves on the best J previously recorded at the
smaller size (dropping the feature just added is never considered, which is
what makes the floating loop terminate).

Evaluation is deterministic: candidates are scanned in name order and ties
break toward the lexicographically smaller name.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dmdc import assemble_snapshots, fit, score


@dataclass
class SelectionProblem:
    mandatory: list                  # always-included state names (H)
    candidates: list                 # supplementary candidates
    k_max: int                       # supplement-count budget
    folds: list                      # [{"train": [traj,...], "test": [traj,...]}]
    input_names: list
    dt: float
    center: dict = field(default_factory=dict)    # name -> centering value
    u_center: dict = field(default_factory=dict)
    svd_rank: int = None
    floating: bool = True

    def __post_init__(self):
        overlap = set(self.mandatory) & set(self.candidates)
        if overlap:
            raise ValueError(f"mandatory and candidate sets overlap: {overlap}")
        if self.k_max > len(self.candidates):
            raise ValueError("k_max exceeds the candidate pool")
        for fold in self.folds:
            if not fold["train"] or not fold["test"]:
                raise ValueError("each fold needs train and test trajectories")
        train_ids = [id(t) for f in self.folds for t in f["train"]]
        test_ids = [id(t) for f in self.folds for t in f["test"]]
        for f in self.folds:
            if set(id(t) for t in f["train"]) & set(id(t) for t in f["test"]):
                raise ValueError("folds must keep train and test disjoint")


@dataclass
class SelectionTrace:
    records: list = field(default_factory=list)
    # each record: (step, action, feature, J, fold_std, resulting set)

    def add(self, step, action, feature, j, std, current):
        if not math.isfinite(j) and j != -math.inf:
            raise ValueError("trace J values must be finite or -inf")
        self.records.append((step, action, feature, j, std, tuple(current)))

    def final_set(self, mandatory):
        """Replay the trace to the resulting feature set (order of addition)."""
        current = []
        for _, action, feature, _, _, _ in self.records:
            if action == "add":
                current.append(feature)
            elif action == "remove":
                current.remove(feature)
        return list(mandatory) + current


def _evaluate_fold(feature_names, fold, problem):
    center = np.array([problem.center.get(nm, 0.0) for nm in feature_names])
    u_center = np.array([problem.u_center.get(nm, 0.0)
                         for nm in problem.input_names])
    snaps = assemble_snapshots(fold["train"], feature_names, problem.input_names,
                               dt=problem.dt, center=center, u_center=u_center)
    # full rank by default (clamped to the numerical rank inside fit) so an
    # exactly identifiable feature set scores J = 1
    rank = problem.svd_rank or (len(feature_names) + len(problem.input_names))
    model = fit(snaps, svd_rank=rank)

    def mean_r2(trajs):
        vals = []
        for traj in trajs:
            r2 = score(model, traj)["r2"]
            finite = [v for v in r2.values() if not math.isnan(v)]
            vals.append(float(np.mean(finite)))
        return float(np.mean(vals))

    return 0.5 * mean_r2(fold["train"]) + 0.5 * mean_r2(fold["test"])


def objective(feature_names, problem):
    """(J, fold std) for the given full feature list (H plus supplements).

    A fold whose identification fails scores the whole candidate -inf, which
    removes it from contention without aborting the search.
    """
    if not feature_names:
        raise ValueError("feature set must not be empty")
    per_fold = []
    for fold in problem.folds:
        try:
            per_fold.append(_evaluate_fold(list(feature_names), fold, problem))
        except Exception:
            return -math.inf, float("nan")
    return float(np.mean(per_fold)), float(np.std(per_fold))


def select(problem):
    """Run the floating search; returns (final feature list, SelectionTrace)."""
    chosen = []
    trace = SelectionTrace()
    best_j_at_size = {}
    j0, _ = objective(list(problem.mandatory), problem)
    best_j_at_size[0] = j0
    step = 0

    while len(chosen) < problem.k_max:
        remaining = sorted(set(problem.candidates) - set(chosen))
        scored = []
        for cand in remaining:
            j, std = objective(list(problem.mandatory) + chosen + [cand], problem)
            scored.append((j, cand, std))
        j_best, cand_best, std_best = max(scored, key=lambda s: (s[0], _neg_name(s[1])))
        chosen.append(cand_best)
        step += 1
        trace.add(step, "add", cand_best, j_best, std_best, chosen)
        k = len(chosen)
        best_j_at_size[k] = max(best_j_at_size.get(k, -math.inf), j_best)

        if problem.floating and k > 1:
            removable = sorted(chosen[:-1])   # never the one just added
            scored_rm = []
            for cand in removable:
                reduced = [c for c in chosen if c != cand]
                j, std = objective(list(problem.mandatory) + reduced, problem)
                scored_rm.append((j, cand, std))
            j_rm, cand_rm, std_rm = max(scored_rm,
                                        key=lambda s: (s[0], _neg_name(s[1])))
            if j_rm > best_j_at_size.get(k - 1, -math.inf):
                chosen.remove(cand_rm)
                step += 1
                trace.add(step, "remove", cand_rm, j_rm, std_rm, chosen)
                best_j_at_size[k - 1] = j_rm

    return list(problem.mandatory) + chosen, trace


class _neg_name(str):
    """Reverses lexicographic order so max() breaks ties toward smaller names."""

    def __lt__(self, other):
        return str.__gt__(self, other)


def trace_rows(trace):
    """Flatten a trace for CSV export: (step, action, feature, J, std, set)."""
    return [(step, action, feature, j, std, "+".join(current))
            for step, action, feature, j, std, current in trace.records]
