"""Closed-loop orchestration: plant -> measure -> SGF -> UKF -> governor -> PIDs.

One ControlLoop instance owns all run state and is advanced tick by tick,
which keeps served (interactive) runs and headless replays bit-identical:
commands are applied only at tick boundaries in sequence order, and all
randomness comes from a single seeded generator.
"""

import time

import numpy as np

from .config import ConfigError
from .dmdc import assemble_snapshots, fit, stabilize
from .governor import (ConstraintRow, ConstraintSet, GovernorDecision,
                       ReferenceGovernor)
from .kinetics import KineticsParams
from .pid import PidGains, PidState, closed_loop_cost, pid_step, tune_grid_search
from .plant import (FIELD_NAMES, MEASUREMENT_NAMES, P_NOMINAL_MW, Actuation,
                    FeedbackParams, LoopParams, NoiseSpec, Plant)
from .sgf import SgfConfig, StreamingSgf
from .ukf import SigmaParams, initial_observer, ukf_step

STATE_CHANNELS = MEASUREMENT_NAMES[:13]     # the 13 governor model states
N_INDEX = MEASUREMENT_NAMES.index("n")


# --------------------------------------------------------------------------- #
# reference trajectories
# --------------------------------------------------------------------------- #

def reference_from_knots(knots):
    """Piecewise-linear reference (t, MW); constant beyond the last knot."""
    ts = np.array([k[0] for k in knots], dtype=float)
    vs = np.array([k[1] for k in knots], dtype=float)

    def ref(t):
        return float(np.interp(t, ts, vs))

    return ref


def profile_to_knots(profile, t_start, duration):
    """Expand a training excitation profile into reference knots."""
    p0 = P_NOMINAL_MW
    kind = profile["kind"]
    knots = [(0.0, p0), (t_start, p0)]
    t = t_start
    level = p0

    def ramp_to(target_frac, rate_pct_per_min):
        nonlocal t, level
        target = target_frac * p0
        rate = rate_pct_per_min / 100.0 * p0 / 60.0   # MW/s
        t = t + abs(target - level) / rate
        level = target
        knots.append((round(t, 1), level))

    if kind == "ramp":
        ramp_to(1.0 - profile["depth"], profile["rate_pct_per_min"])
    elif kind == "ramp_return":
        ramp_to(1.0 - profile["depth"], profile["rate_pct_per_min"])
        t += profile["hold"]
        knots.append((round(t, 1), level))
        ramp_to(1.0, profile["rate_pct_per_min"])
    elif kind == "staircase":
        step = profile["step"] * p0
        jump = profile.get("jump_s", 0.2)   # one tick = a genuine step
        for _ in range(profile["count"]):
            t += profile["hold"]
            knots.append((round(t, 1), level))     # hold at the old level
            level = min(max(level + step, 0.2 * p0), p0)
            t += jump
            knots.append((round(t, 1), level))
    elif kind == "segments":
        for target, rate, hold in profile["targets"]:
            ramp_to(target, rate)
            t += hold
            knots.append((round(t, 1), level))
    elif kind == "hold":
        pass
    else:
        raise ConfigError(f"unknown training profile kind {kind!r}")

    if t > duration:
        raise ConfigError(f"profile {profile} exceeds training duration")
    knots.append((duration, level))
    return knots


# --------------------------------------------------------------------------- #
# construction from config
# --------------------------------------------------------------------------- #

def build_plant(cfg):
    p = cfg["plant"]
    return Plant(
        kinetics=KineticsParams.from_dict(p["kinetics"]),
        feedback=FeedbackParams.from_dict(p["feedback"]),
        loop=LoopParams.from_dict(p["loop"]) if p["loop"] else LoopParams(),
    )


def resolve_constraints(cfg, plant):
    """Turn config constraint rows into absolute-degC ConstraintRows.

    Scaled mode expresses each bound as a fraction of the output's
    equilibrium shift between full power and 60% load, so the same scenario
    transfers across re-calibrations of the plant model.
    """
    mode = cfg["constraints"]["mode"]
    rows = []
    if mode == "scaled":
        full = plant.steady_state(1.0)
        part = plant.steady_state(0.6)
        anchor = {
            "T_s_in": (full.t_s_in, part.t_s_in),
            "T_s_out": (full.t_s_out, part.t_s_out),
            "T_c_in": (full.t_c_in, part.t_c_in),
            "T_c_out": (full.t_c_out, part.t_c_out),
        }
    for row in cfg["constraints"]["rows"]:
        schedule = []
        for t, value in row["schedule"]:
            if mode == "scaled":
                v0, v60 = anchor[row["output"]]
                bound = v0 + value * (v60 - v0)
            else:
                bound = value
            schedule.append((float(t), float(bound)))
        rows.append(ConstraintRow(row["output"], row["sense"], tuple(schedule)))
    return ConstraintSet(rows=tuple(rows),
                         dv_max_per_min=cfg["governor"]["dv_max_mw_per_min"])


def build_gains(cfg, plant):
    """PID gain set with feedforward biases taken from the starting equilibrium."""
    eq = plant.steady_state(1.0)
    act = plant.equilibrium_actuation(eq)
    g = {name: dict(block) for name, block in cfg["pid"].items()}
    g["power"]["bias"] = act.rho_ext
    g["t_c_out"]["bias"] = act.dp_primary
    g["t_c_in"]["bias"] = act.dp_secondary
    return {name: PidGains.from_dict(block) for name, block in g.items()}


def build_observer(cfg, n0, dt):
    u = cfg["ukf"]
    obs = initial_observer(KineticsParams.from_dict(cfg["plant"]["kinetics"]),
                           n0, dt=dt)
    q = np.zeros((9, 9))
    q[0, 0] = u["q_power"]
    for i in range(1, 7):
        q[i, i] = u["q_precursor"]
    q[7, 7] = u["q_reactivity"] ** 2 * dt
    q[8, 8] = u["q_reactivity_slope"] ** 2 * dt
    obs.process_noise = q
    obs.covariance = np.eye(9) * u["init_cov"]
    obs.sigma = SigmaParams(alpha=u["sigma_alpha"], beta=u["sigma_beta"],
                            kappa=u["sigma_kappa"])
    sigma_n = cfg["noise"]["power_3sigma"] / 3.0 if cfg["scenario"]["noise_enabled"] else 0.0
    obs.measurement_noise = max(sigma_n ** 2, u["r_floor_sigma"] ** 2)
    return obs


def noise_sigma_vector(noise_spec):
    from .plant import _NOISE_KIND
    sigma = np.zeros(len(MEASUREMENT_NAMES))
    for i, name in enumerate(MEASUREMENT_NAMES):
        kind = _NOISE_KIND[name]
        if kind is not None:
            sigma[i] = getattr(noise_spec, f"{kind}_3sigma") / 3.0
    return sigma


# --------------------------------------------------------------------------- #
# the loop
# --------------------------------------------------------------------------- #

LOG_EXTRA = (
    ["tick"] +
    [f"meas_{nm}" for nm in MEASUREMENT_NAMES] +
    [f"den_{nm}" for nm in MEASUREMENT_NAMES] +
    [f"chat{i}" for i in range(1, 7)] + ["rho_hat", "omega_hat"] +
    ["r", "v", "kappa", "alarm", "band_lo", "band_hi", "binding"] +
    ["rho_ext_cmd", "dp_p_cmd", "dp_s_cmd"]
)
LOG_COLUMNS = list(FIELD_NAMES) + LOG_EXTRA


class ControlLoop:
    """Deterministic fixed-step supervisory loop in the block order of the
    architecture diagram: plant, measurement, denoising, observer, governor,
    low-level PIDs."""

    def __init__(self, cfg, model=None, tick_order="standard",
                 observer_enabled=True):
        self.cfg = cfg
        self.dt = cfg["scenario"]["dt"]
        self.duration = cfg["scenario"]["duration"]
        self.n_ticks = int(round(self.duration / self.dt))
        self.plant = build_plant(cfg)
        self.noise_on = bool(cfg["scenario"]["noise_enabled"])
        self.noise = (NoiseSpec.from_dict(cfg["noise"]) if self.noise_on
                      else NoiseSpec.zero())
        self._sigma_vec = noise_sigma_vector(self.noise)
        self.rng = np.random.default_rng(cfg["scenario"]["seed"])
        self.tick_order = tick_order

        # plant + low-level layer
        self.state = self.plant.steady_state(1.0)
        self.actuation = self.plant.equilibrium_actuation(self.state)
        self.gains = build_gains(cfg, self.plant)
        self.pids = {name: PidState() for name in self.gains}
        # regulation setpoints start at the calibration anchors but are
        # control-layer quantities in their own right
        self.t_c_in_sp = self.plant.loop.t_c_in0
        self.t_c_out_sp = self.plant.loop.t_c_out0

        # denoising: one streaming filter per measured channel plus the three
        # observer-fed precursor channels; active only for noisy runs
        self.sgf_on = self.noise_on
        sgf_cfg = SgfConfig.from_dict(cfg["sgf"])
        self.filters = {nm: StreamingSgf(sgf_cfg) for nm in MEASUREMENT_NAMES}
        self.chat_filters = {nm: StreamingSgf(sgf_cfg) for nm in ("C1", "C2", "C3")}

        # observer (skipped for open-loop training runs, where the plant's
        # true precursor concentrations are logged instead)
        self.observer_enabled = observer_enabled
        self.observer = build_observer(cfg, self.state.n, self.dt)

        # supervisory layer
        self.reference = reference_from_knots(cfg["scenario"]["reference_knots"])
        self.reference_override = None
        self.constraints = resolve_constraints(cfg, self.plant)
        self.governor = None
        if model is not None:
            disturbance = None
            if self.noise_on and cfg["governor"]["noise_margin_3sigma"]:
                three_sigma_t = cfg["noise"]["temperature_3sigma"]
                disturbance = {"T_s_in": three_sigma_t, "T_s_out": three_sigma_t}
            self.governor = ReferenceGovernor(
                model, self.constraints,
                horizon=cfg["governor"]["horizon"],
                epsilon=cfg["governor"]["epsilon"],
                disturbance_bounds=disturbance,
                v_initial=self.reference(0.0),
                enabled=cfg["scenario"]["governor_enabled"])
        self.v_prev = self.reference(0.0)

        self.tick = 0
        self.fault = None
        self.command_log = []        # (tick, command dict) applied, in order
        self.rows = []

    # ---------------------------------------------------------------- #
    # commands
    # ---------------------------------------------------------------- #
    def apply_commands(self, commands):
        """Apply queued commands at the tick boundary, in sequence order."""
        applied = []
        for cmd in sorted(commands, key=lambda c: c.get("seq", 0)):
            kind = cmd["kind"]
            payload = cmd.get("payload", {})
            if kind == "set-reference":
                self.reference_override = float(payload["target_mw"])
            elif kind == "update-constraint":
                self._update_constraint(str(payload["output"]),
                                        float(payload["bound"]))
            elif kind == "toggle-governor":
                if self.governor is not None:
                    self.governor.enabled = bool(payload["enabled"])
            elif kind in ("pause", "resume", "set-speed"):
                pass   # pacing-only; no effect on loop state
            else:
                raise ConfigError(f"unknown command kind {kind!r}")
            self.command_log.append((self.tick, cmd))
            applied.append(cmd)
        return applied

    def _update_constraint(self, output, bound):
        t_now = self.tick * self.dt
        rows = []
        for row in self.constraints.rows:
            if row.output == output:
                kept = tuple((t, b) for t, b in row.schedule if t <= t_now)
                if not kept:
                    kept = ((0.0, row.schedule[0][1]),)
                rows.append(ConstraintRow(row.output, row.sense,
                                          kept + ((t_now, bound),)))
            else:
                rows.append(row)
        self.constraints = ConstraintSet(rows=tuple(rows),
                                         dv_max_per_min=self.constraints.dv_max_per_min)
        if self.governor is not None:
            self.governor.constraints = self.constraints
            self.governor._active_bounds = None   # force a rebuild next tick

    # ---------------------------------------------------------------- #
    # one tick
    # ---------------------------------------------------------------- #
    def reference_at(self, t):
        if self.reference_override is not None:
            return self.reference_override
        return self.reference(t)

    def step_tick(self, commands=()):
        if self.fault is not None:
            raise RuntimeError(f"loop is in fault state: {self.fault}")
        if commands:
            self.apply_commands(commands)

        dt = self.dt
        t_next = (self.tick + 1) * dt
        r_k = self.reference_at(t_next)

        try:
            self.state = self.plant.step(self.state, self.actuation, dt)
        except Exception as exc:
            self.fault = str(exc)
            raise

        # measurement with per-channel gaussian noise
        y_raw = self.plant.output_vector(self.state)
        if self.noise_on:
            y_raw = y_raw + self._sigma_vec * self.rng.standard_normal(len(y_raw))

        governor_first = self.tick_order == "governor_first"
        if governor_first:
            x_gov = self._governor_state(y_raw, y_raw, self.observer.precursors)
            decision = self._govern(x_gov, r_k, t_next, dt)

        # denoising stage
        if self.sgf_on:
            y_den = np.array([self.filters[nm].push(v)
                              for nm, v in zip(MEASUREMENT_NAMES, y_raw)])
        else:
            y_den = y_raw

        # observer stage: raw power in, denoised precursor estimates out
        if self.observer_enabled:
            self.observer = ukf_step(self.observer, float(y_raw[N_INDEX]), dt,
                                     self.plant.kinetics)
            chat = self.observer.precursors
            if self.sgf_on:
                chat_den = np.array([self.chat_filters[nm].push(c)
                                     for nm, c in zip(("C1", "C2", "C3"), chat[:3])])
            else:
                chat_den = chat[:3]
        else:
            chat_den = np.array([y_den[MEASUREMENT_NAMES.index(nm)]
                                 for nm in ("C1", "C2", "C3")])

        if not governor_first:
            x_gov = self._governor_state(y_raw, y_den, chat_den)
            decision = self._govern(x_gov, r_k, t_next, dt)
        self.v_prev = decision.v

        # low-level layer; pairing is fixed: power->rho_ext, T_c_out->dP_p,
        # T_c_in->dP_s. The PIDs sit inside the existing closed loop and read
        # the plant sensors directly; only the supervisory layer consumes the
        # denoised signals.
        rho_cmd, self.pids["power"] = pid_step(
            self.gains["power"], self.pids["power"],
            decision.v / P_NOMINAL_MW, float(y_raw[N_INDEX]), dt)
        dp_p_cmd, self.pids["t_c_out"] = pid_step(
            self.gains["t_c_out"], self.pids["t_c_out"],
            self.t_c_out_sp,
            float(y_raw[MEASUREMENT_NAMES.index("T_c_out")]), dt)
        dp_s_cmd, self.pids["t_c_in"] = pid_step(
            self.gains["t_c_in"], self.pids["t_c_in"],
            self.t_c_in_sp,
            float(y_raw[MEASUREMENT_NAMES.index("T_c_in")]), dt)
        self.actuation = Actuation(rho_cmd, dp_p_cmd, dp_s_cmd)

        band = decision.band if decision.band is not None else (np.nan, np.nan)
        row = self.plant.record_row(self.state) + (
            self.tick + 1, *y_raw, *y_den, *self.observer.precursors,
            float(self.observer.mean[7]), float(self.observer.mean[8]),
            r_k, decision.v, decision.kappa, int(decision.alarm),
            band[0], band[1], "|".join(str(p) for p in decision.binding),
            rho_cmd, dp_p_cmd, dp_s_cmd,
        )
        self.rows.append(row)
        self.tick += 1
        return row

    def _governor_state(self, y_raw, y_den, chat_den):
        x = [float(y_den[MEASUREMENT_NAMES.index(nm)]) for nm in STATE_CHANNELS]
        for i, nm in enumerate(("C1", "C2", "C3")):
            x[STATE_CHANNELS.index(nm)] = float(chat_den[i])
        return np.array(x)

    def _govern(self, x_gov, r_k, t, dt):
        if self.governor is None:
            return GovernorDecision(kappa=1.0, v=r_k, binding=("off",),
                                    alarm=False, band=None, elapsed_us=0.0)
        return self.governor.govern_tick(x_gov, r_k, t, dt)

    # ---------------------------------------------------------------- #
    # run + logs
    # ---------------------------------------------------------------- #
    def run(self, command_schedule=None):
        """Advance to the end; command_schedule maps tick -> list of commands."""
        schedule = command_schedule or {}
        while self.tick < self.n_ticks:
            self.step_tick(schedule.get(self.tick, ()))
        return self

    def log_columns(self):
        return LOG_COLUMNS

    def log_array(self, column):
        i = LOG_COLUMNS.index(column)
        if column == "binding":
            return [row[i] for row in self.rows]
        return np.array([row[i] for row in self.rows], dtype=float)

    def write_csv(self, path):
        write_rows_csv(path, LOG_COLUMNS, self.rows)

    def summary(self, wall_seconds=None):
        get = self.log_array
        t_cin = get("T_c_in")
        t_cout = get("T_c_out")
        t_sin = get("T_s_in")
        t_sout = get("T_s_out")
        rho = get("rho_ext")
        times = get("t")
        violations = 0
        deep_violations = 0        # beyond the 0.1 degC model-mismatch allowance
        for row in self.constraints.rows:
            bounds = np.array([row.bound_at(t) for t in times])
            series = get(row.output)
            if row.sense == "ge":
                depth = bounds - series
            else:
                depth = series - bounds
            violations += int(np.sum(depth > 1e-12))
            deep_violations += int(np.sum(depth > 0.1))
        beta = self.plant.kinetics.beta_total
        out = {
            "ticks": int(self.tick),
            "max_abs_t_c_in_error": float(np.max(np.abs(t_cin - self.plant.loop.t_c_in0))),
            "max_abs_t_c_out_error": float(np.max(np.abs(t_cout - self.plant.loop.t_c_out0))),
            "min_t_s_in": float(np.min(t_sin)),
            "max_t_s_out": float(np.max(t_sout)),
            "constraint_violation_ticks": violations,
            "constraint_violation_ticks_beyond_0p1": deep_violations,
            "peak_abs_rho_ext_dollars": float(np.max(np.abs(rho)) / beta),
            "final_power_mw": float(get("Qdot_RX")[-1]),
        }
        if wall_seconds is not None:
            out["wall_seconds"] = wall_seconds
        return out


def write_rows_csv(path, columns, rows):
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(
                v if isinstance(v, str) else format(v, ".17g")
                for v in row) + "\n")


def read_csv_columns(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        cols = {nm: [] for nm in header}
        for line in fh:
            for nm, v in zip(header, line.rstrip("\n").split(",")):
                cols[nm].append(v)
    out = {}
    for nm, vals in cols.items():
        if nm == "binding":
            out[nm] = vals
        else:
            out[nm] = np.array(vals, dtype=float)
    return out


def run_scenario(cfg, model=None, command_schedule=None, log_path=None,
                 tick_order="standard", observer_enabled=True):
    """Execute a full scenario; returns (loop, summary)."""
    t0 = time.perf_counter()
    loop = ControlLoop(cfg, model=model, tick_order=tick_order,
                       observer_enabled=observer_enabled)
    loop.run(command_schedule)
    wall = time.perf_counter() - t0
    if log_path:
        loop.write_csv(log_path)
    return loop, loop.summary(wall_seconds=wall)


# --------------------------------------------------------------------------- #
# training data
# --------------------------------------------------------------------------- #

def training_trajectory(loop):
    """Extract the identification channels from a finished loop run."""
    traj = {nm: loop.log_array(nm) for nm in STATE_CHANNELS}
    for nm in ("C4", "C5", "C6"):   # full precursor set for feature selection
        traj[nm] = loop.log_array(nm)
    traj["Qdot_RX_ref"] = loop.log_array("v")
    traj["t"] = loop.log_array("t")
    return traj


def generate_training_set(cfg, out_dir=None, profiles=None):
    """Run every excitation profile open-loop (governor bypassed, noise off).

    Returns the list of trajectory dicts; optionally writes one CSV per
    profile. A profile that diverges is reported and skipped.
    """
    import copy
    import os

    profiles = profiles if profiles is not None else cfg["training"]["profiles"]
    t_start = cfg["training"]["t_start"]
    duration = cfg["training"]["duration"]
    trajectories = []
    skipped = []
    for i, profile in enumerate(profiles):
        run_cfg = copy.deepcopy(cfg)
        run_cfg["scenario"]["noise_enabled"] = False
        run_cfg["scenario"]["governor_enabled"] = False
        run_cfg["scenario"]["duration"] = duration
        run_cfg["scenario"]["reference_knots"] = profile_to_knots(
            profile, t_start, duration)
        try:
            loop, _ = run_scenario(run_cfg, model=None, observer_enabled=False)
        except Exception as exc:   # plant divergence under this excitation
            skipped.append((i, profile, str(exc)))
            continue
        traj = training_trajectory(loop)
        trajectories.append(traj)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            cols = list(traj.keys())
            rows = list(zip(*[traj[c] for c in cols]))
            write_rows_csv(os.path.join(out_dir, f"train_{i:02d}.csv"), cols, rows)
    return trajectories, skipped


def load_training_set(directory):
    import glob
    import os

    files = sorted(glob.glob(os.path.join(directory, "train_*.csv")))
    return [read_csv_columns(f) for f in files]


# --------------------------------------------------------------------------- #
# feature selection
# --------------------------------------------------------------------------- #

MANDATORY_STATES = ("mdot_p", "mdot_s", "T_c_in", "T_c_out",
                    "P_c_in", "P_c_out", "T_s_in", "T_s_out")
SUPPLEMENT_CANDIDATES = ("C1", "C2", "C3", "C4", "C5", "C6",
                         "Qdot_HX", "Qdot_SG")


def selection_problem_from_plant(cfg, k_max=5, n_trajectories=6,
                                 downsample=5, duration=1400.0, seed=7):
    """Build an SFFS problem from a compact plant data set.

    Besides the physical supplement candidates (precursor groups and heat
    transfer rates) the pool carries deliberately uninformative channels:
    white noise and noisy finite differences of a pressure signal. These are
    the channels a sound selector must rank below the physical ones.

    Runs are downsampled to keep the inner identification loops fast; the
    selection outcome does not depend on the 0.2 s native resolution.
    """
    import copy

    from .kinetics import equilibrium_precursors
    from .sffs import SelectionProblem

    rng = np.random.default_rng(seed)
    profiles = [
        {"kind": "ramp", "depth": 0.35, "rate_pct_per_min": 5.0},
        {"kind": "ramp", "depth": 0.20, "rate_pct_per_min": 5.0},
        {"kind": "ramp_return", "depth": 0.25, "rate_pct_per_min": 7.5, "hold": 200.0},
        {"kind": "ramp_return", "depth": 0.10, "rate_pct_per_min": 2.5, "hold": 200.0},
        {"kind": "staircase", "step": -0.05, "count": 3, "hold": 250.0},
        {"kind": "segments", "targets": [[0.85, 5.0, 250.0], [0.70, 7.5, 300.0]]},
    ][:n_trajectories]

    run_cfg = copy.deepcopy(cfg)
    run_cfg["training"]["duration"] = duration
    run_cfg["scenario"]["duration"] = duration
    trajs, skipped = generate_training_set(run_cfg, profiles=profiles)
    if skipped:
        raise RuntimeError(f"selection data generation failed: {skipped}")

    noise_names = ("dP_deriv_noise", "white_noise_a", "white_noise_b")
    data = []
    for traj in trajs:
        t = {k: np.asarray(v)[::downsample] for k, v in traj.items()}
        n_samples = len(t["T_s_in"])
        dp = np.gradient(t["P_c_in"])
        t["dP_deriv_noise"] = dp + 0.05 * rng.standard_normal(n_samples)
        t["white_noise_a"] = rng.standard_normal(n_samples)
        t["white_noise_b"] = rng.standard_normal(n_samples)
        data.append(t)

    folds = []
    for i in range(3):
        test = [data[j] for j in range(len(data)) if j % 3 == i]
        train = [data[j] for j in range(len(data)) if j % 3 != i]
        folds.append({"train": train, "test": test})

    plant = build_plant(cfg)
    eq = plant.steady_state(1.0)
    y_eq = plant.output_vector(eq)
    center = {nm: float(y_eq[MEASUREMENT_NAMES.index(nm)])
              for nm in MEASUREMENT_NAMES[:13]}
    c_eq = equilibrium_precursors(plant.kinetics, 1.0)
    for i in range(6):
        center[f"C{i + 1}"] = float(c_eq[i])
    for nm in noise_names:
        center[nm] = 0.0

    return SelectionProblem(
        mandatory=list(MANDATORY_STATES),
        candidates=sorted(SUPPLEMENT_CANDIDATES + noise_names),
        k_max=k_max,
        folds=folds,
        input_names=["Qdot_RX_ref"],
        dt=cfg["scenario"]["dt"] * downsample,
        center=center,
        u_center={"Qdot_RX_ref": P_NOMINAL_MW},
    )


# --------------------------------------------------------------------------- #
# PID tuning
# --------------------------------------------------------------------------- #

TUNE_TARGETS = {
    # controlled channel, setpoint source, overshoot penalty sign
    "power": ("Qdot_RX", "v", 0.0),
    "t_c_out": ("T_c_out", "t_c_out0", -1.0),   # penalize undershoot spikes
    "t_c_in": ("T_c_in", "t_c_in0", -1.0),
}


def tune_pid(cfg, loop_name, kp_grid, ki_grid, duration=600.0):
    """Grid refinement of one loop's (kp, ki) on a short ramp scenario.

    The other two loops keep their configured gains. Cost is the integral
    absolute error of the loop's controlled variable plus a one-sided
    overshoot penalty; unstable candidates cost inf. Returns
    (best_kp, best_ki, report) with report rows (kp, ki, cost).
    """
    import copy

    if loop_name not in TUNE_TARGETS:
        raise ConfigError(f"unknown pid loop {loop_name!r}")
    channel, sp_source, overshoot_sign = TUNE_TARGETS[loop_name]

    def evaluate(kp, ki):
        run_cfg = copy.deepcopy(cfg)
        run_cfg["pid"][loop_name]["kp"] = kp
        run_cfg["pid"][loop_name]["ki"] = ki
        run_cfg["scenario"]["duration"] = duration
        run_cfg["scenario"]["governor_enabled"] = False
        run_cfg["scenario"]["noise_enabled"] = False
        run_cfg["scenario"]["reference_knots"] = [
            [0.0, P_NOMINAL_MW], [50.0, P_NOMINAL_MW],
            [290.0, 0.8 * P_NOMINAL_MW], [duration, 0.8 * P_NOMINAL_MW]]
        try:
            loop, _ = run_scenario(run_cfg, observer_enabled=False)
        except Exception:
            return np.inf
        series = loop.log_array(channel)
        if sp_source == "v":
            setpoint = loop.log_array("v")
        else:
            setpoint = np.full_like(series, getattr(loop.plant.loop, sp_source))
        return closed_loop_cost(setpoint - series, None, run_cfg["scenario"]["dt"],
                                overshoot_sign=overshoot_sign)

    return tune_grid_search(evaluate, kp_grid, ki_grid)


def fit_model_from_trajectories(cfg, plant, trajectories):
    """DMDc fit centered on the full-power equilibrium, spectrally clipped."""
    eq = plant.steady_state(1.0)
    y_eq = plant.output_vector(eq)
    center = np.array([y_eq[MEASUREMENT_NAMES.index(nm)] for nm in STATE_CHANNELS])
    snaps = assemble_snapshots(
        trajectories, list(STATE_CHANNELS), ["Qdot_RX_ref"],
        dt=cfg["scenario"]["dt"], center=center,
        u_center=np.array([P_NOMINAL_MW]))
    model = fit(snaps, svd_rank=cfg["model"]["svd_rank"],
                energy=cfg["model"]["svd_energy"],
                output_names=["T_s_in", "T_s_out"])
    margin = cfg["model"].get("stabilize_margin")
    if margin:
        model = stabilize(model, margin)
    return model
