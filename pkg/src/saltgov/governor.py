"""Scalar reference governor over a finite-horizon admissible set.

Each tick the governor receives the requested setpoint r_k and emits an
admitted setpoint

    v_k = v_{k-1} + kappa_k * (r_k - v_{k-1}),   kappa_k in [0, 1],

choosing the largest kappa for which the pair (current state, held input)
stays inside the admissible set: the collection of (x, v~) whose predicted
outputs satisfy every constraint at every future step under the identified
linear model. The set is represented as stacked linear inequalities

    H_x x + H_v v~ <= h

with one row per (constraint, prediction step) plus a steady-state row
tightened by a small epsilon, which makes the finite horizon equivalent to
the infinite one. Bounded disturbances shrink h row by row through the
worst-case accumulation of (B_w, D_w) with |w| <= 1, so measurement noise
margins (e.g. three temperature sigmas) enter the same machinery.

All row algebra runs in the model's normalized deviation coordinates;
admitted setpoints and bands are reported in engineering units.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

FEASIBILITY_SLACK = 1e-9


@dataclass(frozen=True)
class ConstraintRow:
    """One output constraint with a piecewise-constant bound schedule."""

    output: str                    # must match a model output name
    sense: str                     # 'le' or 'ge'
    schedule: tuple                # ((t_from, bound), ...) sorted by t_from

    def __post_init__(self):
        if self.sense not in ("le", "ge"):
            raise ValueError("sense must be 'le' or 'ge'")
        if not self.schedule:
            raise ValueError("schedule must contain at least one entry")
        ts = [t for t, _ in self.schedule]
        if ts != sorted(ts) or ts[0] > 0.0:
            raise ValueError("schedule must start at t<=0 and be time-sorted")
        if any(not np.isfinite(b) for _, b in self.schedule):
            raise ValueError("bounds must be finite")

    def bound_at(self, t):
        bound = self.schedule[0][1]
        for t_from, b in self.schedule:
            if t >= t_from:
                bound = b
            else:
                break
        return bound

    def switch_times(self):
        return [t for t, _ in self.schedule[1:]]


@dataclass(frozen=True)
class ConstraintSet:
    rows: tuple                    # ConstraintRow
    dv_max_per_min: float          # rate bound on the admitted input, MW/min

    def __post_init__(self):
        if not np.isfinite(self.dv_max_per_min) or self.dv_max_per_min <= 0:
            raise ValueError("rate bound must be positive and finite")

    def bounds_at(self, t):
        return [row.bound_at(t) for row in self.rows]

    def switch_times(self):
        out = set()
        for row in self.rows:
            out.update(row.switch_times())
        return sorted(out)


@dataclass
class AdmissibleSet:
    """Stacked inequalities H_x x + H_v v~ <= h over normalized coordinates."""

    h_x: np.ndarray                # (rows, n)
    h_v: np.ndarray                # (rows,)
    h: np.ndarray                  # (rows,)
    provenance: list               # (constraint_index, step) with step=-1 for steady state
    horizon: int
    epsilon: float
    u_center: float
    u_scale: float
    state_center: np.ndarray
    state_scale: np.ndarray
    state_names: list

    @property
    def n_rows(self):
        return len(self.h)

    def margins(self, x_norm, v_norm):
        """Slack of every row at the given (normalized) pair; >= 0 inside."""
        return self.h - self.h_x @ x_norm - self.h_v * v_norm

    def contains(self, x_norm, v_norm, slack=FEASIBILITY_SLACK):
        return bool(np.all(self.margins(x_norm, v_norm) >= -slack))

    def admissible_input_interval(self, x_norm):
        """Physical [lo, hi] of constant inputs admissible from state x."""
        free = self.h - self.h_x @ x_norm
        pos = self.h_v > FEASIBILITY_SLACK
        neg = self.h_v < -FEASIBILITY_SLACK
        degenerate = ~pos & ~neg
        if np.any(free[degenerate] < -FEASIBILITY_SLACK):
            return None   # infeasible regardless of input
        hi = np.min(free[pos] / self.h_v[pos]) if np.any(pos) else np.inf
        lo = np.max(free[neg] / self.h_v[neg]) if np.any(neg) else -np.inf
        if lo > hi:
            return None
        return (lo * self.u_scale + self.u_center, hi * self.u_scale + self.u_center)


class InfeasibleConstraintsError(RuntimeError):
    """The constraint set excludes the current equilibrium entirely."""


def _row_direction(model, output_name, sense):
    """Constraint c^T y <= b recast onto normalized states: returns (c_row, sign)."""
    j = model.output_names.index(output_name)
    c = model.c[j].astype(float).copy()
    d = model.d[j].astype(float).copy()
    dw = float(model.d_w[j, 0]) if model.d_w.size else 0.0
    if sense == "ge":
        return -c, -d, abs(dw), -1.0
    return c, d, abs(dw), 1.0


def _normalized_bound(model, output_name, bound, sign):
    j = model.output_names.index(output_name)
    idx = model.state_names.index(output_name)
    b_norm = (bound - model.center[idx]) / model.scale[idx]
    return sign * b_norm


def build_admissible_set(model, constraints_at_t, horizon, disturbance_bounds=None,
                         epsilon=1e-4):
    """Construct the finite-horizon admissible set for fixed constraint bounds.

    constraints_at_t: list of (output_name, sense, bound) resolved at the
    current time. disturbance_bounds: optional per-output amplitudes added to
    D_w (physical units of each output), with the process side taken from
    model.b_w; pass None for the nominal set.

    Raises InfeasibleConstraintsError when the tightened set cannot contain
    the equilibrium pair (x=0, v~=0), reporting the offending row.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rho = model.spectral_radius
    if rho >= 1.0:
        raise ValueError(f"model unstable (spectral radius {rho:.6f}); "
                         "cannot build an admissible set")

    n = model.n_states
    a = model.a
    b = model.b[:, 0]
    b_w = model.b_w[:, 0] if model.b_w.size else np.zeros(n)

    rows_hx, rows_hv, rows_h, prov = [], [], [], []

    for ci, (name, sense, bound) in enumerate(constraints_at_t):
        c, d_term, dw_amp, sign = _row_direction(model, name, sense)
        if disturbance_bounds is not None and name in disturbance_bounds:
            idx = model.state_names.index(name)
            dw_amp += abs(disturbance_bounds[name]) / model.scale[idx]
        b_norm = _normalized_bound(model, name, bound, sign)

        # forward rows: y_k = c A^k x + (c S_k b + d) v~,  S_k = sum_{j<k} A^j
        ca = c.copy()                 # c A^k
        s_b = 0.0                     # c S_k b
        w_acc = 0.0                   # sum |c A^j b_w|
        for k in range(horizon + 1):
            rows_hx.append(ca.copy())
            rows_hv.append(s_b + float(d_term[0]) if d_term.size else s_b)
            rows_h.append(b_norm - dw_amp - w_acc)
            prov.append((ci, k))
            w_acc += abs(float(ca @ b_w))
            s_b += float(ca @ b)
            ca = ca @ a

        # steady-state row with epsilon tightening and the full disturbance tail
        gain = c @ np.linalg.solve(np.eye(n) - a, b)
        if d_term.size:
            gain += float(d_term[0])
        w_tail = w_acc
        term = ca.copy()
        for _ in range(200000):
            inc = abs(float(term @ b_w))
            w_tail += inc
            if inc < 1e-14 * max(1.0, w_tail):
                break
            term = term @ a
        h_ss = (1.0 - epsilon) * b_norm - dw_amp - w_tail
        rows_hx.append(np.zeros(n))
        rows_hv.append(float(gain))
        rows_h.append(h_ss)
        prov.append((ci, -1))

    adm = AdmissibleSet(
        h_x=np.array(rows_hx), h_v=np.array(rows_hv), h=np.array(rows_h),
        provenance=prov, horizon=horizon, epsilon=epsilon,
        u_center=float(model.u_center[0]), u_scale=float(model.u_scale[0]),
        state_center=model.center.copy(), state_scale=model.scale.copy(),
        state_names=list(model.state_names),
    )
    if not adm.contains(np.zeros(n), 0.0):
        worst = int(np.argmin(adm.margins(np.zeros(n), 0.0)))
        raise InfeasibleConstraintsError(
            f"equilibrium violates constraint row {adm.provenance[worst]} "
            f"(margin {adm.margins(np.zeros(n), 0.0)[worst]:.3e})")
    return adm


@dataclass(frozen=True)
class GovernorDecision:
    kappa: float
    v: float
    binding: tuple          # ('constraint', ci, step) | ('rate',) | ('none',)
    alarm: bool
    band: tuple             # physical (lo, hi) admissible held input, may be None
    elapsed_us: float

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")


def compute_kappa(adm, x_phys, v_prev, r, dv_max_per_tick):
    """Closed-form maximal kappa for a scalar input.

    Works row by row: with d = r - v_prev, each row restricts kappa to
    a half line, so the maximum admissible kappa is the smallest of the
    per-row caps, the rate cap dv_max/|d| and 1. A state outside the set
    (sensor noise) yields kappa = 0 with the alarm flag raised.
    """
    t0 = time.perf_counter()
    x_norm = (np.asarray(x_phys, dtype=float) - adm.state_center) / adm.state_scale
    v_prev_n = (v_prev - adm.u_center) / adm.u_scale
    d_phys = r - v_prev
    d_norm = d_phys / adm.u_scale

    slack = adm.margins(x_norm, v_prev_n)
    band = adm.admissible_input_interval(x_norm)
    if np.any(slack < -FEASIBILITY_SLACK):
        return GovernorDecision(
            kappa=0.0, v=v_prev, binding=("infeasible",), alarm=True, band=band,
            elapsed_us=(time.perf_counter() - t0) * 1e6)

    kappa = 1.0
    binding = ("none",)
    if abs(d_phys) > 0.0 and abs(d_phys) > dv_max_per_tick:
        kappa = dv_max_per_tick / abs(d_phys)
        binding = ("rate",)

    coeffs = adm.h_v * d_norm
    active = coeffs > FEASIBILITY_SLACK   # rows that tighten as kappa grows
    if np.any(active):
        caps = slack[active] / coeffs[active]
        j = int(np.argmin(caps))
        if caps[j] < kappa:
            kappa = float(caps[j])
            binding = ("constraint",) + adm.provenance[int(np.flatnonzero(active)[j])]
    kappa = min(max(kappa, 0.0), 1.0)
    v = v_prev + kappa * d_phys
    return GovernorDecision(
        kappa=kappa, v=v, binding=binding, alarm=False, band=band,
        elapsed_us=(time.perf_counter() - t0) * 1e6)


class ReferenceGovernor:
    """Stateful per-tick wrapper: schedule resolution, caching, bypass.

    Holds the previous admitted input and one admissible set per active
    bound vector; the set is rebuilt exactly when the constraint schedule
    switches, which realizes point-wise-in-time constraint updates.
    """

    def __init__(self, model, constraint_set, horizon=2500, epsilon=1e-4,
                 disturbance_bounds=None, v_initial=None, enabled=True):
        self.model = model
        self.constraints = constraint_set
        self.horizon = horizon
        self.epsilon = epsilon
        self.disturbance_bounds = disturbance_bounds
        self.enabled = enabled
        self.v_prev = float(model.u_center[0]) if v_initial is None else float(v_initial)
        self._active_bounds = None
        self._set = None
        self.rebuild_count = 0

    @property
    def admissible_set(self):
        return self._set

    def _resolve(self, t):
        return [
            (row.output, row.sense, row.bound_at(t))
            for row in self.constraints.rows
        ]

    def _ensure_set(self, t):
        resolved = self._resolve(t)
        bounds = tuple(b for _, _, b in resolved)
        if bounds != self._active_bounds:
            self._set = build_admissible_set(
                self.model, resolved, self.horizon,
                disturbance_bounds=self.disturbance_bounds,
                epsilon=self.epsilon)
            self._active_bounds = bounds
            self.rebuild_count += 1
        return self._set

    def govern_tick(self, x_phys, r, t, dt):
        """Admit the largest move toward r allowed by the active constraints."""
        if not self.enabled:
            self.v_prev = float(r)
            return GovernorDecision(kappa=1.0, v=float(r), binding=("bypass",),
                                    alarm=False, band=None, elapsed_us=0.0)
        adm = self._ensure_set(t)
        dv_tick = self.constraints.dv_max_per_min * dt / 60.0
        decision = compute_kappa(adm, x_phys, self.v_prev, r, dv_tick)
        self.v_prev = decision.v
        return decision
