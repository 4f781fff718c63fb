"""Nonlinear lumped-parameter model of a two-loop salt-cooled plant.

A 320 MW pebble-bed core with a FLiBe primary loop and a solar-salt
intermediate loop. The model is deliberately low-order: 6-group point
kinetics, nine thermal nodes (fuel, core coolant, four transport legs,
both heat-exchanger sides, and a heat-sink pipe standing in for the power
conversion cycle), first-order pump lags, and a constant-coefficient
vessel heat-loss term. It is calibrated so that the full-power equilibrium
reproduces the reference operating point exactly:

    Qdot_RX 320 MW   Qdot_HX 313 MW   Qdot_SG 313 MW
    mdot_p 1320 kg/s  T_c,in 547 C    T_c,out 645 C
    mdot_s 5295 kg/s  T_s,in 430 C    T_s,out 469 C
    P_c,in 1151 kPa   P_c,out 156 kPa

Units: power in MW, heat capacity in MJ/C, conductance in MW/C,
flow in kg/s, head in kPa, temperature in C, reactivity dimensionless.

Each node uses the usual lumped convention that the node temperature is the
arithmetic mean of its inlet and outlet, so outlet = 2*T_node - inlet.
Heat-exchanger conductance scales with both film coefficients as
(flow)^0.8, which is what lets the secondary loop settle at part load with
T_s,in below and T_s,out above their full-power values.
"""

from dataclasses import dataclass, replace

import numpy as np

from .kinetics import KineticsParams, equilibrium_precursors, pke_rhs, pke_step

P_NOMINAL_MW = 320.0


@dataclass(frozen=True)
class FeedbackParams:
    """Reactivity feedback coefficients (must be negative for stability)."""

    alpha_mf: float = -1.9e-5     # fuel + moderator, per C
    alpha_c: float = -0.6e-5      # coolant, per C
    T_mf_ref: float = 750.0
    T_c_ref: float = 596.0

    def __post_init__(self):
        if self.alpha_mf >= 0 or self.alpha_c >= 0:
            raise ValueError("feedback coefficients must be strictly negative")

    def to_dict(self):
        return {"alpha_mf": self.alpha_mf, "alpha_c": self.alpha_c,
                "T_mf_ref": self.T_mf_ref, "T_c_ref": self.T_c_ref}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class LoopParams:
    """Thermal-hydraulic layout constants.

    Conductances for the core->coolant path (ua_fc), the intermediate heat
    exchanger at nominal flows (ua_hx0), the sink pipe (ua_sg) and the vessel
    heat loss (ua_vessel) are in MW/C. Node capacities are in MJ/C; transport
    legs are first-order lags whose nominal time constants (s) set the leg
    capacity as tau * mdot0 * cp.
    """

    # anchors (full-power calibration targets)
    q_hx0: float = 313.0
    mdot_p0: float = 1320.0
    mdot_s0: float = 5295.0
    t_c_in0: float = 547.0
    t_c_out0: float = 645.0
    t_s_in0: float = 430.0
    t_s_out0: float = 469.0
    p_c_in0: float = 1151.0
    p_c_out0: float = 156.0

    # environment / sink
    t_ambient: float = 30.0
    t_sink: float = 440.0

    # node heat capacities, MJ/C
    cap_fuel: float = 60.0
    cap_core_coolant: float = 37.0
    cap_hx_primary: float = 20.0
    cap_hx_secondary: float = 40.0
    cap_sink_pipe: float = 60.0

    # transport-leg nominal time constants, s
    tau_hot_leg: float = 8.0
    tau_cold_leg: float = 8.0
    tau_sec_hot_leg: float = 10.0
    tau_sec_cold_leg: float = 10.0

    # pumps: static gain (kg/s per kPa) applied through a first-order lag
    pump_head_p0: float = 995.0
    pump_head_s0: float = 400.0
    tau_pump: float = 2.0

    # HX film-coefficient flow exponent and primary/secondary resistance split
    hx_flow_exponent: float = 0.8
    hx_primary_weight: float = 0.5

    # reference fuel temperature at full power (sets ua_fc)
    t_fuel0: float = 750.0

    # cover-gas pressure base, kPa
    p_base: float = 100.0

    def __post_init__(self):
        caps = (self.cap_fuel, self.cap_core_coolant, self.cap_hx_primary,
                self.cap_hx_secondary, self.cap_sink_pipe)
        if any(c <= 0 for c in caps):
            raise ValueError("node capacities must be positive")
        taus = (self.tau_hot_leg, self.tau_cold_leg, self.tau_sec_hot_leg,
                self.tau_sec_cold_leg)
        if any(t < 0 for t in taus):
            raise ValueError("transport delays must be non-negative")
        if self.pump_head_p0 <= 0 or self.pump_head_s0 <= 0 or self.tau_pump <= 0:
            raise ValueError("pump parameters must be positive")

    # --- calibration-derived constants -------------------------------------
    @property
    def cp_p(self):
        """Primary salt specific heat, MW/(kg/s)/C, from the anchor row."""
        return self.q_hx0 / (self.mdot_p0 * (self.t_c_out0 - self.t_c_in0))

    @property
    def cp_s(self):
        return self.q_hx0 / (self.mdot_s0 * (self.t_s_out0 - self.t_s_in0))

    @property
    def t_core_avg0(self):
        return 0.5 * (self.t_c_in0 + self.t_c_out0)

    @property
    def ua_vessel(self):
        return (P_NOMINAL_MW - self.q_hx0) / (self.t_core_avg0 - self.t_ambient)

    @property
    def ua_fc(self):
        return P_NOMINAL_MW / (self.t_fuel0 - self.t_core_avg0)

    @property
    def t_hx_p0(self):
        return 0.5 * (self.t_c_out0 + self.t_c_in0)

    @property
    def t_hx_s0(self):
        return 0.5 * (self.t_s_in0 + self.t_s_out0)

    @property
    def ua_hx0(self):
        return self.q_hx0 / (self.t_hx_p0 - self.t_hx_s0)

    @property
    def ua_sg(self):
        return self.q_hx0 / (self.t_hx_s0 - self.t_sink)

    @property
    def pump_gain_p(self):
        return self.mdot_p0 / self.pump_head_p0

    @property
    def pump_gain_s(self):
        return self.mdot_s0 / self.pump_head_s0

    @property
    def cap_hot_leg(self):
        return self.tau_hot_leg * self.mdot_p0 * self.cp_p

    @property
    def cap_cold_leg(self):
        return self.tau_cold_leg * self.mdot_p0 * self.cp_p

    @property
    def cap_sec_hot_leg(self):
        return self.tau_sec_hot_leg * self.mdot_s0 * self.cp_s

    @property
    def cap_sec_cold_leg(self):
        return self.tau_sec_cold_leg * self.mdot_s0 * self.cp_s

    def ua_hx(self, mdot_p, mdot_s):
        """Heat-exchanger conductance at off-nominal flows (film scaling)."""
        e = self.hx_flow_exponent
        w = self.hx_primary_weight
        r = (w * (self.mdot_p0 / mdot_p) ** e
             + (1.0 - w) * (self.mdot_s0 / mdot_s) ** e)
        return self.ua_hx0 / r

    def pressures(self, mdot_p):
        """(P_c_in, P_c_out) in kPa from the quadratic loss model."""
        s = (mdot_p / self.mdot_p0) ** 2
        p_out = self.p_base + (self.p_c_out0 - self.p_base) * s
        p_in = p_out + (self.p_c_in0 - self.p_c_out0) * s
        return p_in, p_out

    def to_dict(self):
        keys = ("q_hx0", "mdot_p0", "mdot_s0", "t_c_in0", "t_c_out0", "t_s_in0",
                "t_s_out0", "p_c_in0", "p_c_out0", "t_ambient", "t_sink",
                "cap_fuel", "cap_core_coolant", "cap_hx_primary",
                "cap_hx_secondary", "cap_sink_pipe", "tau_hot_leg",
                "tau_cold_leg", "tau_sec_hot_leg", "tau_sec_cold_leg",
                "pump_head_p0", "pump_head_s0", "tau_pump", "hx_flow_exponent",
                "hx_primary_weight", "t_fuel0", "p_base")
        return {k: getattr(self, k) for k in keys}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class Actuation:
    """Manipulated variables: external reactivity and the two pump heads."""

    rho_ext: float
    dp_primary: float
    dp_secondary: float

    RHO_EXT_LIMITS = (-0.03, 0.03)
    DP_P_LIMITS = (50.0, 2500.0)
    DP_S_LIMITS = (20.0, 1200.0)

    def clamped(self):
        return Actuation(
            rho_ext=min(max(self.rho_ext, self.RHO_EXT_LIMITS[0]), self.RHO_EXT_LIMITS[1]),
            dp_primary=min(max(self.dp_primary, self.DP_P_LIMITS[0]), self.DP_P_LIMITS[1]),
            dp_secondary=min(max(self.dp_secondary, self.DP_S_LIMITS[0]), self.DP_S_LIMITS[1]),
        )


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian measurement noise, given as 3-sigma amplitudes per output kind.

    Heat-rate noise is 1 kW = 1e-3 MW. A zero spec means noise-free
    measurements; the seed lives in the scenario so one generator drives
    the whole run.
    """

    flow_3sigma: float = 15.0        # kg/s
    temperature_3sigma: float = 0.5  # C
    pressure_3sigma: float = 0.1     # kPa
    heat_rate_3sigma: float = 1.0e-3  # MW
    power_3sigma: float = 0.003      # normalized n

    def __post_init__(self):
        for v in (self.flow_3sigma, self.temperature_3sigma, self.pressure_3sigma,
                  self.heat_rate_3sigma, self.power_3sigma):
            if v < 0:
                raise ValueError("noise amplitudes must be non-negative")

    @classmethod
    def zero(cls):
        return cls(0.0, 0.0, 0.0, 0.0, 0.0)

    @property
    def sigma_temperature(self):
        return self.temperature_3sigma / 3.0

    def to_dict(self):
        return {"flow_3sigma": self.flow_3sigma,
                "temperature_3sigma": self.temperature_3sigma,
                "pressure_3sigma": self.pressure_3sigma,
                "heat_rate_3sigma": self.heat_rate_3sigma,
                "power_3sigma": self.power_3sigma}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# Thermal node order inside the internal state vector.
THERMAL_NODES = ("t_fuel", "t_core_avg", "t_hot_leg", "t_hx_p", "t_cold_leg",
                 "t_hx_s", "t_sec_hot_leg", "t_sink_pipe", "t_sec_cold_leg")


@dataclass(frozen=True)
class PlantState:
    """Immutable full physical state at one time point."""

    t: float
    n: float
    precursors: np.ndarray          # shape (6,)
    rho_ext: float
    rho_m: float
    rho_c: float
    thermal: np.ndarray             # shape (9,), ordered as THERMAL_NODES
    mdot_p: float
    mdot_s: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("power must be non-negative")
        if np.any(np.asarray(self.precursors) < 0):
            raise ValueError("precursor concentrations must be non-negative")
        if self.mdot_p <= 0 or self.mdot_s <= 0:
            raise ValueError("mass flows must be positive")
        object.__setattr__(self, "precursors", np.asarray(self.precursors, dtype=float))
        object.__setattr__(self, "thermal", np.asarray(self.thermal, dtype=float))

    @property
    def rho_total(self):
        return self.rho_ext + self.rho_m + self.rho_c

    def node(self, name):
        return float(self.thermal[THERMAL_NODES.index(name)])

    # boundary temperatures implied by the mean-node convention
    @property
    def t_c_in(self):
        return self.node("t_cold_leg")

    @property
    def t_c_out(self):
        return 2.0 * self.node("t_core_avg") - self.t_c_in

    @property
    def t_s_in(self):
        return self.node("t_sec_cold_leg")

    @property
    def t_s_out(self):
        return 2.0 * self.node("t_hx_s") - self.t_s_in

    @property
    def t_hx_p_out(self):
        return 2.0 * self.node("t_hx_p") - self.node("t_hot_leg")

    @property
    def t_sink_pipe_out(self):
        return 2.0 * self.node("t_sink_pipe") - self.node("t_sec_hot_leg")


FIELD_NAMES = (
    "t", "n", "C1", "C2", "C3", "C4", "C5", "C6",
    "rho_ext", "rho_m", "rho_c", "rho_total",
    "T_fuel", "T_core_avg", "T_hot_leg", "T_hx_p", "T_cold_leg",
    "T_hx_s", "T_sec_hot_leg", "T_sink_pipe", "T_sec_cold_leg",
    "T_c_in", "T_c_out", "T_s_in", "T_s_out",
    "mdot_p", "mdot_s", "P_c_in", "P_c_out",
    "Qdot_RX", "Qdot_HX", "Qdot_SG",
)

# Channels exposed by measure(): the 13 model states plus normalized power.
MEASUREMENT_NAMES = (
    "mdot_p", "mdot_s", "T_c_in", "T_c_out", "P_c_in", "P_c_out",
    "T_s_in", "T_s_out", "C1", "C2", "C3", "Qdot_HX", "Qdot_SG", "n",
)

_NOISE_KIND = {
    "mdot_p": "flow", "mdot_s": "flow",
    "T_c_in": "temperature", "T_c_out": "temperature",
    "T_s_in": "temperature", "T_s_out": "temperature",
    "P_c_in": "pressure", "P_c_out": "pressure",
    "Qdot_HX": "heat_rate", "Qdot_SG": "heat_rate",
    "n": "power",
    # precursor channels are virtual (observer-fed in closed loop): no sensor
    "C1": None, "C2": None, "C3": None,
}


class EquilibriumError(RuntimeError):
    """Raised when no part-load equilibrium exists for the given parameters."""


class NonFiniteStateError(RuntimeError):
    """Raised when integration produces NaN/inf (diverged run)."""


class Plant:
    """The closed set of model equations plus calibration-derived constants."""

    def __init__(self, kinetics=None, feedback=None, loop=None):
        self.kinetics = kinetics or KineticsParams()
        self.feedback = feedback or FeedbackParams()
        self.loop = loop or LoopParams()

    # ------------------------------------------------------------------ #
    # reactivity feedback
    # ------------------------------------------------------------------ #
    def feedback_reactivity(self, thermal):
        t_fuel = thermal[0]
        t_cavg = thermal[1]
        rho_m = self.feedback.alpha_mf * (t_fuel - self.feedback.T_mf_ref)
        rho_c = self.feedback.alpha_c * (t_cavg - self.feedback.T_c_ref)
        return rho_m, rho_c

    # ------------------------------------------------------------------ #
    # equilibrium
    # ------------------------------------------------------------------ #
    def steady_state(self, load_fraction):
        """Closed-form equilibrium with core temperatures at their setpoints.

        Solves the energy balances with T_c,in/T_c,out regulated at the
        full-power values (the regulation duties of the low-level layer),
        which determines both pump flows and the whole temperature field.
        """
        if not 0.2 <= load_fraction <= 1.0:
            raise ValueError("load_fraction must lie in [0.2, 1.0]")
        lp = self.loop
        q_rx = P_NOMINAL_MW * load_fraction
        t_cavg = lp.t_core_avg0
        q = q_rx - lp.ua_vessel * (t_cavg - lp.t_ambient)
        if q <= 0:
            raise EquilibriumError("vessel loss exceeds core power")

        t_fuel = t_cavg + q_rx / lp.ua_fc
        mdot_p = q / (lp.cp_p * (lp.t_c_out0 - lp.t_c_in0))

        t_hx_s = lp.t_sink + q / lp.ua_sg
        dt_hx = lp.t_hx_p0 - t_hx_s
        if dt_hx <= 0:
            raise EquilibriumError("heat exchanger approach collapsed")
        ua_req = q / dt_hx
        e = lp.hx_flow_exponent
        w = lp.hx_primary_weight
        rs = (lp.ua_hx0 / ua_req - w * (lp.mdot_p0 / mdot_p) ** e) / (1.0 - w)
        if rs <= 0:
            raise EquilibriumError(
                "no secondary flow satisfies the heat-exchanger balance "
                "(mis-calibrated loop parameters)")
        mdot_s = lp.mdot_s0 / rs ** (1.0 / e)

        dts = q / (mdot_s * lp.cp_s)
        t_s_out = t_hx_s + 0.5 * dts
        t_s_in = t_hx_s - 0.5 * dts

        thermal = np.array([
            t_fuel, t_cavg, lp.t_c_out0, lp.t_hx_p0, lp.t_c_in0,
            t_hx_s, t_s_out, t_hx_s, t_s_in,
        ])
        rho_m, rho_c = self.feedback_reactivity(thermal)
        state = PlantState(
            t=0.0,
            n=load_fraction,
            precursors=equilibrium_precursors(self.kinetics, load_fraction),
            rho_ext=-(rho_m + rho_c),
            rho_m=rho_m,
            rho_c=rho_c,
            thermal=thermal,
            mdot_p=mdot_p,
            mdot_s=mdot_s,
        )
        return state

    def equilibrium_actuation(self, state):
        """Actuation that holds the given equilibrium state."""
        lp = self.loop
        return Actuation(
            rho_ext=state.rho_ext,
            dp_primary=state.mdot_p / lp.pump_gain_p,
            dp_secondary=state.mdot_s / lp.pump_gain_s,
        )

    # ------------------------------------------------------------------ #
    # dynamics
    # ------------------------------------------------------------------ #
    def thermal_flow_rhs(self, thermal, flows, n_power, actuation):
        """Derivatives of the 9 thermal nodes and the 2 flows."""
        lp = self.loop
        (t_fuel, t_cavg, t_hl, t_hx_p, t_cl,
         t_hx_s, t_shl, t_sg, t_scl) = thermal
        mdot_p, mdot_s = flows

        cpp = mdot_p * lp.cp_p
        cps = mdot_s * lp.cp_s

        t_c_out = 2.0 * t_cavg - t_cl
        t_hx_p_out = 2.0 * t_hx_p - t_hl
        t_s_out = 2.0 * t_hx_s - t_scl
        t_sg_out = 2.0 * t_sg - t_shl

        q_rx = P_NOMINAL_MW * n_power
        q_hx = lp.ua_hx(mdot_p, mdot_s) * (t_hx_p - t_hx_s)
        q_sg = lp.ua_sg * (t_sg - lp.t_sink)
        q_vessel = lp.ua_vessel * (t_cavg - lp.t_ambient)

        d_thermal = np.array([
            (q_rx - lp.ua_fc * (t_fuel - t_cavg)) / lp.cap_fuel,
            (lp.ua_fc * (t_fuel - t_cavg) - q_vessel + cpp * (t_cl - t_c_out)) / lp.cap_core_coolant,
            cpp * (t_c_out - t_hl) / lp.cap_hot_leg,
            (cpp * (t_hl - t_hx_p_out) - q_hx) / lp.cap_hx_primary,
            cpp * (t_hx_p_out - t_cl) / lp.cap_cold_leg,
            (q_hx + cps * (t_scl - t_s_out)) / lp.cap_hx_secondary,
            cps * (t_s_out - t_shl) / lp.cap_sec_hot_leg,
            (cps * (t_shl - t_sg_out) - q_sg) / lp.cap_sink_pipe,
            cps * (t_sg_out - t_scl) / lp.cap_sec_cold_leg,
        ])
        d_flows = np.array([
            (lp.pump_gain_p * actuation.dp_primary - mdot_p) / lp.tau_pump,
            (lp.pump_gain_s * actuation.dp_secondary - mdot_s) / lp.tau_pump,
        ])
        return d_thermal, d_flows

    def step(self, state, actuation, dt=0.2):
        """Advance one control step.

        Kinetics use an exact matrix-exponential update with total reactivity
        frozen at its step-start value; thermal nodes and flows use a Heun
        (second-order explicit) update with the step-average fission power.
        """
        if dt <= 0:
            raise ValueError("dt must be positive")
        actuation = actuation.clamped()

        rho_m, rho_c = self.feedback_reactivity(state.thermal)
        rho = actuation.rho_ext + rho_m + rho_c

        xk = np.concatenate(([state.n], state.precursors))
        xk1 = pke_step(self.kinetics, xk, rho, dt)
        n_avg = 0.5 * (state.n + xk1[0])

        flows = np.array([state.mdot_p, state.mdot_s])
        d_th1, d_fl1 = self.thermal_flow_rhs(state.thermal, flows, n_avg, actuation)
        th_e = state.thermal + dt * d_th1
        fl_e = flows + dt * d_fl1
        d_th2, d_fl2 = self.thermal_flow_rhs(th_e, fl_e, n_avg, actuation)
        thermal = state.thermal + 0.5 * dt * (d_th1 + d_th2)
        flows = flows + 0.5 * dt * (d_fl1 + d_fl2)

        if not (np.all(np.isfinite(xk1)) and np.all(np.isfinite(thermal))
                and np.all(np.isfinite(flows))):
            raise NonFiniteStateError(
                f"non-finite state at t={state.t + dt:.1f} s "
                f"(rho={rho:.3e}, n={state.n:.3e})")

        rho_m1, rho_c1 = self.feedback_reactivity(thermal)
        return PlantState(
            t=state.t + dt,
            n=max(xk1[0], 0.0),
            precursors=np.maximum(xk1[1:], 0.0),
            rho_ext=actuation.rho_ext,
            rho_m=rho_m1,
            rho_c=rho_c1,
            thermal=thermal,
            mdot_p=flows[0],
            mdot_s=flows[1],
        )

    def derivative_norm(self, state, actuation):
        """Max normalized time derivative; ~0 at a true equilibrium."""
        rho_m, rho_c = self.feedback_reactivity(state.thermal)
        rho = actuation.rho_ext + rho_m + rho_c
        xk = np.concatenate(([state.n], state.precursors))
        d_kin = pke_rhs(self.kinetics, xk, rho)
        scale_kin = np.maximum(np.abs(xk), 1.0)
        d_th, d_fl = self.thermal_flow_rhs(
            state.thermal, np.array([state.mdot_p, state.mdot_s]),
            state.n, actuation)
        return max(
            float(np.max(np.abs(d_kin) / scale_kin)),
            float(np.max(np.abs(d_th) / 600.0)),
            float(np.max(np.abs(d_fl) / np.array([state.mdot_p, state.mdot_s]))),
        )

    # ------------------------------------------------------------------ #
    # outputs
    # ------------------------------------------------------------------ #
    def heat_rates(self, state):
        lp = self.loop
        q_rx = P_NOMINAL_MW * state.n
        q_hx = lp.ua_hx(state.mdot_p, state.mdot_s) * (
            state.node("t_hx_p") - state.node("t_hx_s"))
        q_sg = lp.ua_sg * (state.node("t_sink_pipe") - lp.t_sink)
        return q_rx, q_hx, q_sg

    def output_vector(self, state):
        """Noise-free values of the 14 measurement channels."""
        p_in, p_out = self.loop.pressures(state.mdot_p)
        _, q_hx, q_sg = self.heat_rates(state)
        return np.array([
            state.mdot_p, state.mdot_s, state.t_c_in, state.t_c_out,
            p_in, p_out, state.t_s_in, state.t_s_out,
            state.precursors[0], state.precursors[1], state.precursors[2],
            q_hx, q_sg, state.n,
        ])

    def measure(self, state, noise_spec, rng):
        """Measurement channels with per-kind Gaussian noise applied."""
        y = self.output_vector(state)
        sigma = np.zeros_like(y)
        for i, name in enumerate(MEASUREMENT_NAMES):
            kind = _NOISE_KIND[name]
            if kind is None:
                continue
            sigma[i] = getattr(noise_spec, f"{kind}_3sigma") / 3.0
        if np.any(sigma > 0):
            y = y + sigma * rng.standard_normal(len(y))
        return y

    def record_row(self, state, actuation=None):
        """Flat log row matching FIELD_NAMES (engineering units)."""
        p_in, p_out = self.loop.pressures(state.mdot_p)
        q_rx, q_hx, q_sg = self.heat_rates(state)
        return (
            state.t, state.n, *state.precursors,
            state.rho_ext, state.rho_m, state.rho_c, state.rho_total,
            *state.thermal,
            state.t_c_in, state.t_c_out, state.t_s_in, state.t_s_out,
            state.mdot_p, state.mdot_s, p_in, p_out,
            q_rx, q_hx, q_sg,
        )
