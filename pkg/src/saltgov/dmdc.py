"""Identification of the discrete linear model used by the supervisory layer.

Given snapshot matrices X (states), X' (states advanced one step) and U
(inputs), the one-step model x_{k+1} = A x_k + B u_k is recovered from

    [A B] = X' pinv([X; U])

with the pseudoinverse evaluated through a rank-truncated SVD. Snapshots are
taken in deviation coordinates about the full-power equilibrium and z-scored
per channel so badly mixed units (kg/s vs kPa vs normalized precursors) do
not skew the least-squares problem; the scales travel with the model so
predictions come back in engineering units.
"""

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class SnapshotSet:
    x: np.ndarray            # n x L, normalized deviations
    xp: np.ndarray           # n x L, one step ahead
    u: np.ndarray            # m x L, normalized deviations
    dt: float
    state_names: list
    input_names: list
    center: np.ndarray       # per-state centering values (engineering units)
    scale: np.ndarray        # per-state scales
    u_center: np.ndarray
    u_scale: np.ndarray

    def __post_init__(self):
        if not (self.x.shape[1] == self.xp.shape[1] == self.u.shape[1]):
            raise ValueError("X, X' and U must have equal column counts")

    @property
    def n_states(self):
        return self.x.shape[0]

    @property
    def n_inputs(self):
        return self.u.shape[0]

    @property
    def n_columns(self):
        return self.x.shape[1]


def assemble_snapshots(trajectories, state_names, input_names, dt,
                       center=None, u_center=None, scale=None, u_scale=None):
    """Build snapshot matrices from one or more logged trajectories.

    Each trajectory is a mapping name -> 1-D array, all of equal length
    within that trajectory. Column pairs never straddle a trajectory
    boundary, so two runs of lengths L1 and L2 contribute L1 + L2 - 2 pairs.

    center / u_center default to zero (pass the equilibrium operating point
    to fit in deviation coordinates); scales default to the per-channel
    standard deviation over all trajectories (unit scale for flat channels).
    """
    if not trajectories:
        raise ValueError("at least one trajectory is required")
    state_names = list(state_names)
    input_names = list(input_names)

    xs, us = [], []
    for k, traj in enumerate(trajectories):
        for name in state_names + input_names:
            if name not in traj:
                raise KeyError(f"trajectory {k} has no channel {name!r}")
        length = len(np.asarray(traj[state_names[0]]))
        if length < 2:
            raise ValueError(f"trajectory {k} too short ({length} samples)")
        xs.append(np.vstack([np.asarray(traj[nm], dtype=float) for nm in state_names]))
        us.append(np.vstack([np.asarray(traj[nm], dtype=float) for nm in input_names]))

    n = len(state_names)
    m = len(input_names)
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    u_center = np.zeros(m) if u_center is None else np.asarray(u_center, dtype=float)

    if scale is None:
        allx = np.hstack(xs)
        scale = allx.std(axis=1)
        scale[scale == 0] = 1.0
    else:
        scale = np.asarray(scale, dtype=float)
    if u_scale is None:
        allu = np.hstack(us)
        u_scale = allu.std(axis=1)
        u_scale[u_scale == 0] = 1.0
    else:
        u_scale = np.asarray(u_scale, dtype=float)

    x_cols, xp_cols, u_cols = [], [], []
    for xt, ut in zip(xs, us):
        xt = (xt - center[:, None]) / scale[:, None]
        ut = (ut - u_center[:, None]) / u_scale[:, None]
        x_cols.append(xt[:, :-1])
        xp_cols.append(xt[:, 1:])
        u_cols.append(ut[:, :-1])

    return SnapshotSet(
        x=np.hstack(x_cols), xp=np.hstack(xp_cols), u=np.hstack(u_cols),
        dt=dt, state_names=state_names, input_names=input_names,
        center=center, scale=scale, u_center=u_center, u_scale=u_scale,
    )


@dataclass
class StateSpaceModel:
    """Discrete model (A, B, C, D, B_w, D_w) in normalized deviation space."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    b_w: np.ndarray
    d_w: np.ndarray
    dt: float
    state_names: list
    input_names: list
    output_names: list
    center: np.ndarray
    scale: np.ndarray
    u_center: np.ndarray
    u_scale: np.ndarray
    svd_rank: int = 0

    @property
    def n_states(self):
        return self.a.shape[0]

    @property
    def n_inputs(self):
        return self.b.shape[1]

    @property
    def spectral_radius(self):
        return float(np.max(np.abs(np.linalg.eigvals(self.a))))

    # --- coordinate helpers ------------------------------------------------
    def normalize_state(self, x_phys):
        return (np.asarray(x_phys, dtype=float) - self.center) / self.scale

    def denormalize_state(self, x_norm):
        return np.asarray(x_norm, dtype=float) * self.scale + self.center

    def normalize_input(self, u_phys):
        return (np.atleast_1d(np.asarray(u_phys, dtype=float)) - self.u_center) / self.u_scale

    def physical_matrices(self):
        """(A, B) mapped back to engineering units (for oracle comparisons)."""
        s = np.diag(self.scale)
        s_inv = np.diag(1.0 / self.scale)
        a_phys = s @ self.a @ s_inv
        b_phys = s @ self.b @ np.diag(1.0 / self.u_scale)
        return a_phys, b_phys

    # --- persistence ---------------------------------------------------------
    def to_dict(self):
        return {
            "schema_version": 1,
            "dt": self.dt,
            "state_names": self.state_names,
            "input_names": self.input_names,
            "output_names": self.output_names,
            "A": self.a.tolist(), "B": self.b.tolist(),
            "C": self.c.tolist(), "D": self.d.tolist(),
            "B_w": self.b_w.tolist(), "D_w": self.d_w.tolist(),
            "center": self.center.tolist(), "scale": self.scale.tolist(),
            "u_center": self.u_center.tolist(), "u_scale": self.u_scale.tolist(),
            "svd_rank": self.svd_rank,
            "spectral_radius": self.spectral_radius,
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def from_dict(cls, d):
        return cls(
            a=np.array(d["A"]), b=np.array(d["B"]), c=np.array(d["C"]),
            d=np.array(d["D"]), b_w=np.array(d["B_w"]), d_w=np.array(d["D_w"]),
            dt=float(d["dt"]), state_names=list(d["state_names"]),
            input_names=list(d["input_names"]), output_names=list(d["output_names"]),
            center=np.array(d["center"]), scale=np.array(d["scale"]),
            u_center=np.array(d["u_center"]), u_scale=np.array(d["u_scale"]),
            svd_rank=int(d.get("svd_rank", 0)),
        )

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit(snapshots, svd_rank=None, energy=0.9999, output_names=None):
    """Least-squares identification of (A, B) from a SnapshotSet.

    The stacked data matrix Omega = [X; U] is factored by SVD and truncated
    either at the requested rank or at the smallest rank capturing the given
    singular-value energy fraction. Rank requests beyond the numerical rank
    are reduced (reported via the returned model's svd_rank).

    C selects ``output_names`` (default: the constrained secondary
    temperatures when present, else all states) and D = 0; the disturbance
    maps B_w / D_w start at zero and are assigned by the governor setup.
    """
    if snapshots.n_columns == 0:
        raise ValueError("empty snapshot set")
    n = snapshots.n_states
    omega = np.vstack([snapshots.x, snapshots.u])
    u_svd, s_svd, vt_svd = np.linalg.svd(omega, full_matrices=False)

    tol = max(omega.shape) * np.finfo(float).eps * (s_svd[0] if len(s_svd) else 0.0)
    numerical_rank = int(np.sum(s_svd > tol))
    if svd_rank is None:
        cum = np.cumsum(s_svd ** 2) / np.sum(s_svd ** 2)
        rank = int(np.searchsorted(cum, energy) + 1)
    else:
        if svd_rank > min(omega.shape):
            raise ValueError("svd_rank exceeds min(n+m, L)")
        rank = int(svd_rank)
    rank = min(rank, numerical_rank)

    ur = u_svd[:, :rank]
    sr = s_svd[:rank]
    vr = vt_svd[:rank]
    g = snapshots.xp @ vr.T @ np.diag(1.0 / sr) @ ur.T

    a = g[:, :n]
    b = g[:, n:]

    if output_names is None:
        preferred = [nm for nm in ("T_s_in", "T_s_out") if nm in snapshots.state_names]
        output_names = preferred if preferred else list(snapshots.state_names)
    c = np.zeros((len(output_names), n))
    for i, nm in enumerate(output_names):
        c[i, snapshots.state_names.index(nm)] = 1.0
    d = np.zeros((len(output_names), snapshots.n_inputs))

    return StateSpaceModel(
        a=a, b=b, c=c, d=d,
        b_w=np.zeros((n, 1)), d_w=np.zeros((len(output_names), 1)),
        dt=snapshots.dt,
        state_names=list(snapshots.state_names),
        input_names=list(snapshots.input_names),
        output_names=list(output_names),
        center=snapshots.center, scale=snapshots.scale,
        u_center=snapshots.u_center, u_scale=snapshots.u_scale,
        svd_rank=rank,
    )


def stabilize(model, margin=1e-4):
    """Clip eigenvalues of A onto the disk of radius 1 - margin.

    Least-squares fits on closed-loop data can come out marginally unstable
    (the regulating controllers' integrator states are not part of the
    snapshot vector), which breaks the admissible-set construction. Scaling
    only the offending eigenvalues perturbs the model by O(margin) while
    guaranteeing a strict spectral radius bound. Returns a new model.
    """
    eigvals, eigvecs = np.linalg.eig(model.a)
    mags = np.abs(eigvals)
    limit = 1.0 - margin
    if np.all(mags <= limit):
        return model
    clipped = np.where(mags > limit, eigvals * limit / mags, eigvals)
    a_new = np.real(eigvecs @ np.diag(clipped) @ np.linalg.inv(eigvecs))
    out = StateSpaceModel(
        a=a_new, b=model.b.copy(), c=model.c.copy(), d=model.d.copy(),
        b_w=model.b_w.copy(), d_w=model.d_w.copy(), dt=model.dt,
        state_names=list(model.state_names), input_names=list(model.input_names),
        output_names=list(model.output_names), center=model.center.copy(),
        scale=model.scale.copy(), u_center=model.u_center.copy(),
        u_scale=model.u_scale.copy(), svd_rank=model.svd_rank)
    return out


def predict(model, x0_phys, u_sequence_phys):
    """Open-loop rollout from a physical initial state under a physical input sequence.

    Returns an array of shape (len(u_sequence) + 1, n) in engineering units,
    starting with x0 itself.
    """
    u_seq = np.atleast_2d(np.asarray(u_sequence_phys, dtype=float))
    if u_seq.shape[0] != model.n_inputs:
        u_seq = u_seq.T
    if u_seq.shape[0] != model.n_inputs:
        raise ValueError("input sequence dimension mismatch")
    x = model.normalize_state(x0_phys)
    if len(x) != model.n_states:
        raise ValueError("state dimension mismatch")
    out = np.empty((u_seq.shape[1] + 1, model.n_states))
    out[0] = model.denormalize_state(x)
    for k in range(u_seq.shape[1]):
        u = (u_seq[:, k] - model.u_center) / model.u_scale
        x = model.a @ x + model.b @ u
        out[k + 1] = model.denormalize_state(x)
    return out


def score(model, trajectory, u_name=None):
    """Per-state MSE and R^2 of the open-loop rollout against a logged run.

    trajectory: mapping name -> array, including the input channel(s).
    Metrics are computed on normalized channels so they are comparable
    across units. Channels with zero variance get R^2 = nan and are listed
    in the returned ``flagged`` entry.
    """
    length = len(np.asarray(trajectory[model.state_names[0]]))
    if length < 2:
        raise ValueError("trajectory too short to score")
    x_true = np.vstack([np.asarray(trajectory[nm], dtype=float)
                        for nm in model.state_names])
    u_seq = np.vstack([np.asarray(trajectory[nm], dtype=float)
                       for nm in model.input_names])
    pred = predict(model, x_true[:, 0], u_seq[:, :-1]).T

    mse = {}
    r2 = {}
    flagged = []
    for i, nm in enumerate(model.state_names):
        truth = (x_true[i] - model.center[i]) / model.scale[i]
        est = (pred[i] - model.center[i]) / model.scale[i]
        resid = truth - est
        mse[nm] = float(np.mean(resid ** 2))
        var = float(np.sum((truth - truth.mean()) ** 2))
        if var == 0.0:
            r2[nm] = float("nan")
            flagged.append(nm)
        else:
            r2[nm] = 1.0 - float(np.sum(resid ** 2)) / var
    return {"mse": mse, "r2": r2, "flagged": flagged}
