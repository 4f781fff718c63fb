"""Reference governor: hand-derived sets, brute-force equivalence, robustness."""

import numpy as np
import pytest

from saltgov.dmdc import StateSpaceModel
from saltgov.governor import (ConstraintRow, ConstraintSet, GovernorDecision,
                              InfeasibleConstraintsError, ReferenceGovernor,
                              build_admissible_set, compute_kappa)


def make_model(a, b, c=None, d=None, names=None, output_names=None,
               center=None, scale=None, u_center=0.0, u_scale=1.0):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    n = a.shape[0]
    c = np.eye(n) if c is None else np.atleast_2d(np.asarray(c, dtype=float))
    d = np.zeros((c.shape[0], b.shape[1])) if d is None else np.atleast_2d(d)
    names = names or [f"x{i}" for i in range(n)]
    output_names = output_names or [names[i] for i in range(c.shape[0])]
    return StateSpaceModel(
        a=a, b=b, c=c, d=d, b_w=np.zeros((n, 1)), d_w=np.zeros((c.shape[0], 1)),
        dt=0.2, state_names=names, input_names=["v"], output_names=output_names,
        center=np.zeros(n) if center is None else np.asarray(center, dtype=float),
        scale=np.ones(n) if scale is None else np.asarray(scale, dtype=float),
        u_center=np.atleast_1d(float(u_center)), u_scale=np.atleast_1d(float(u_scale)))


def brute_force_kappa(model, constraints, x_phys, v_prev, r, dv_tick,
                      epsilon, n_steps=4000, iters=60):
    """Bisection on kappa against a direct rollout of the model equations.

    Entirely independent of the row construction: simulates x_{k+1} = A x + B v~
    step by step, checks every output constraint at every step, and checks the
    epsilon-tightened steady-state value. Feasibility is monotone in kappa, so
    bisection converges to the maximal admissible kappa.
    """
    x0 = (np.asarray(x_phys, dtype=float) - model.center) / model.scale
    gain = model.c @ np.linalg.solve(np.eye(model.n_states) - model.a, model.b)

    def bound_norm(name, bound):
        i = model.state_names.index(name)
        return (bound - model.center[i]) / model.scale[i]

    def feasible(kappa):
        dv = kappa * (r - v_prev)
        if abs(dv) > dv_tick * (1 + 1e-12):
            return False
        v_norm = (v_prev + dv - model.u_center[0]) / model.u_scale[0]
        x = x0.copy()
        rows = [(model.output_names.index(name), sense, bound_norm(name, bound))
                for name, sense, bound in constraints]
        for _ in range(n_steps):
            y = model.c @ x + model.d[:, 0] * v_norm
            for j, sense, bn in rows:
                if sense == "le" and y[j] > bn:
                    return False
                if sense == "ge" and y[j] < bn:
                    return False
            x = model.a @ x + model.b[:, 0] * v_norm
        y_ss = gain[:, 0] * v_norm
        for j, sense, bn in rows:
            if sense == "le" and y_ss[j] > (1 - epsilon) * bn:
                return False
            if sense == "ge" and y_ss[j] < (1 - epsilon) * bn:
                return False
        return True

    if not feasible(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    if feasible(1.0):
        return 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# hand-derived scalar case: A=0.5, B=0.5, C=1, y <= 1  ->  v~ <= 1
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def scalar_model():
    return make_model([[0.5]], [[0.5]])


def test_scalar_admissible_input_matches_hand_solution(scalar_model):
    adm = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=50,
                               epsilon=1e-9)
    band = adm.admissible_input_interval(np.zeros(1))
    assert band[1] == pytest.approx(1.0, abs=1e-6)


def test_scalar_kappa_binds_at_steady_state_row(scalar_model):
    adm = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=50,
                               epsilon=1e-9)
    dec = compute_kappa(adm, np.zeros(1), v_prev=0.8, r=1.6, dv_max_per_tick=10.0)
    assert dec.v == pytest.approx(1.0, abs=1e-6)
    assert dec.kappa == pytest.approx(0.25, abs=1e-6)
    assert dec.binding[0] == "constraint"
    assert dec.binding[2] == -1   # steady-state row


def test_scalar_matches_brute_force_grid(scalar_model):
    adm = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=50,
                               epsilon=1e-6)
    for x in (-0.5, 0.0, 0.4):
        for v_prev in (0.0, 0.5, 0.9):
            for r in (0.2, 1.1, 1.9):
                dec = compute_kappa(adm, np.array([x]), v_prev, r, 10.0)
                bf = brute_force_kappa(scalar_model, [("x0", "le", 1.0)],
                                       np.array([x]), v_prev, r, 10.0, 1e-6)
                assert dec.kappa == pytest.approx(bf, abs=1e-6)


# ---------------------------------------------------------------------------
# trivial kappa behavior
# ---------------------------------------------------------------------------

def test_request_equal_to_previous_is_identity(scalar_model):
    adm = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=50)
    dec = compute_kappa(adm, np.zeros(1), v_prev=0.7, r=0.7, dv_max_per_tick=1.0)
    assert dec.v == 0.7
    assert dec.kappa == 1.0


def test_strictly_inside_with_small_step_gives_kappa_one(scalar_model):
    adm = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=50)
    dec = compute_kappa(adm, np.zeros(1), v_prev=0.1, r=0.2, dv_max_per_tick=1.0)
    assert dec.kappa == 1.0
    assert dec.binding == ("none",)


def test_infeasible_state_gives_zero_kappa_and_alarm(scalar_model):
    adm = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=50)
    dec = compute_kappa(adm, np.array([1.5]), v_prev=0.0, r=0.5, dv_max_per_tick=1.0)
    assert dec.kappa == 0.0
    assert dec.alarm


def test_rate_bound_caps_step(scalar_model):
    adm = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=50)
    dec = compute_kappa(adm, np.zeros(1), v_prev=0.0, r=0.5, dv_max_per_tick=0.01)
    assert abs(dec.v - 0.0) <= 0.01 + 1e-15
    assert dec.binding == ("rate",)


def test_kappa_maximality(scalar_model):
    adm = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=50,
                               epsilon=1e-6)
    dec = compute_kappa(adm, np.array([0.3]), v_prev=0.5, r=1.8, dv_max_per_tick=5.0)
    assert dec.kappa < 1.0
    v_bumped = 0.5 + (dec.kappa + 1e-6) * (1.8 - 0.5)
    v_norm = (v_bumped - adm.u_center) / adm.u_scale
    assert not adm.contains(np.array([0.3]), v_norm)


# ---------------------------------------------------------------------------
# disturbance tightening
# ---------------------------------------------------------------------------

def test_zero_disturbance_equals_nominal_row_for_row(scalar_model):
    nominal = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=30)
    robust = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=30,
                                  disturbance_bounds={"x0": 0.0})
    assert np.array_equal(nominal.h, robust.h)
    assert np.array_equal(nominal.h_x, robust.h_x)
    assert np.array_equal(nominal.h_v, robust.h_v)


def test_positive_disturbance_tightens_every_bound(scalar_model):
    nominal = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=30)
    robust = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=30,
                                  disturbance_bounds={"x0": 0.05})
    assert np.all(robust.h <= nominal.h)
    assert np.any(robust.h < nominal.h)


def test_monotone_conservatism_in_disturbance(scalar_model):
    kappas = []
    for margin in (0.0, 0.02, 0.05, 0.1):
        adm = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=50,
                                   disturbance_bounds={"x0": margin})
        dec = compute_kappa(adm, np.array([0.2]), v_prev=0.4, r=1.5, dv_max_per_tick=5.0)
        kappas.append(dec.kappa)
    assert all(b <= a + 1e-12 for a, b in zip(kappas, kappas[1:]))


def test_process_disturbance_accumulates_through_bw(scalar_model):
    model = make_model([[0.5]], [[0.5]])
    model.b_w = np.array([[0.01]])
    nominal = build_admissible_set(scalar_model, [("x0", "le", 1.0)], horizon=30)
    robust = build_admissible_set(model, [("x0", "le", 1.0)], horizon=30)
    # worst-case accumulation sum |C A^j B_w| = 0.01 / (1 - 0.5) = 0.02 at the tail
    assert robust.h[-1] == pytest.approx(nominal.h[-1] - 0.02, abs=1e-6)
    assert np.all(robust.h[1:] < nominal.h[1:])


# ---------------------------------------------------------------------------
# randomized brute-force equivalence (n <= 3)
# ---------------------------------------------------------------------------

def random_stable_model(rng, n):
    a = rng.standard_normal((n, n))
    a *= rng.uniform(0.5, 0.9) / max(np.abs(np.linalg.eigvals(a)).max(), 1e-9)
    b = rng.standard_normal((n, 1))
    return make_model(a, b)


def test_brute_force_equivalence_on_random_systems():
    rng = np.random.default_rng(1234)
    checked = 0
    for _ in range(8):
        n = int(rng.integers(1, 4))
        model = random_stable_model(rng, n)
        constraints = [(model.state_names[0], "le", float(rng.uniform(0.5, 2.0)))]
        if n > 1:
            constraints.append((model.state_names[1], "ge", float(-rng.uniform(0.5, 2.0))))
        adm = build_admissible_set(model, constraints, horizon=300, epsilon=1e-6)
        for _ in range(4):
            x = rng.uniform(-0.2, 0.2, n)
            v_prev = float(rng.uniform(-0.3, 0.3))
            if not adm.contains((x - model.center) / model.scale,
                                (v_prev - model.u_center[0]) / model.u_scale[0]):
                continue
            r = float(rng.uniform(-2.0, 2.0))
            dec = compute_kappa(adm, x, v_prev, r, dv_max_per_tick=10.0)
            bf = brute_force_kappa(model, constraints, x, v_prev, r, 10.0, 1e-6,
                                   n_steps=1500)
            assert dec.kappa == pytest.approx(bf, abs=1e-6)
            checked += 1
    assert checked >= 12


def test_recursive_feasibility_on_identified_plant_model():
    """Same invariance check on the shipped 13-state identified model with
    the scenario's scaled constraints."""
    import os

    from saltgov.config import default_config
    from saltgov.dmdc import StateSpaceModel
    from saltgov.orchestrator import build_plant, resolve_constraints

    model_path = os.path.join(os.path.dirname(__file__), "..", "configs",
                              "model.json")
    if not os.path.exists(model_path):
        pytest.skip("reference model not generated (run: saltgov fit)")
    model = StateSpaceModel.load(model_path)
    cfg = default_config()
    constraints = resolve_constraints(cfg, build_plant(cfg))
    resolved = [(r.output, r.sense, r.bound_at(0.0)) for r in constraints.rows]
    adm = build_admissible_set(model, resolved, horizon=2500, epsilon=1e-4)
    rng = np.random.default_rng(5150)
    kept = 0
    for _ in range(1000):
        x = rng.uniform(-2.0, 2.0, model.n_states)
        v = float(rng.uniform(-3.0, 0.5))
        if not adm.contains(x, v):
            continue
        x_next = model.a @ x + model.b[:, 0] * v
        assert adm.contains(x_next, v, slack=1e-7)
        kept += 1
    assert kept > 100


def test_recursive_feasibility_under_model_dynamics():
    rng = np.random.default_rng(77)
    model = random_stable_model(rng, 3)
    constraints = [("x0", "le", 1.0), ("x1", "ge", -1.5)]
    adm = build_admissible_set(model, constraints, horizon=400, epsilon=1e-4)
    kept = 0
    for _ in range(1000):
        x = rng.uniform(-1.0, 1.0, 3)
        v = float(rng.uniform(-1.0, 1.0))
        if not adm.contains(x, v):
            continue
        x_next = model.a @ x + model.b[:, 0] * v
        assert adm.contains(x_next, v, slack=1e-9)
        kept += 1
    assert kept > 50


# ---------------------------------------------------------------------------
# stateful wrapper
# ---------------------------------------------------------------------------

def schedule_governor(model, enabled=True):
    rows = (ConstraintRow("x0", "le", ((0.0, 1.0), (700.0, 1.2))),)
    cset = ConstraintSet(rows=rows, dv_max_per_min=60.0)   # 0.2 per tick at dt=0.2
    return ReferenceGovernor(model, cset, horizon=50, epsilon=1e-9, enabled=enabled)


def test_schedule_switch_expands_band_and_rebuilds(scalar_model):
    gov = schedule_governor(scalar_model)
    d0 = gov.govern_tick(np.zeros(1), r=0.0, t=0.0, dt=0.2)
    assert gov.rebuild_count == 1
    band_before = d0.band
    d1 = gov.govern_tick(np.zeros(1), r=0.0, t=699.9, dt=0.2)
    assert gov.rebuild_count == 1      # cached between switches
    d2 = gov.govern_tick(np.zeros(1), r=0.0, t=700.0, dt=0.2)
    assert gov.rebuild_count == 2
    assert d2.band[1] > band_before[1]   # relaxed bound strictly expands


def test_governor_tracks_rate_limited_reference(scalar_model):
    gov = schedule_governor(scalar_model)
    v_hist = []
    for k in range(20):
        dec = gov.govern_tick(np.zeros(1), r=0.9, t=0.2 * k, dt=0.2)
        v_hist.append(dec.v)
        assert dec.kappa <= 1.0
    dv = np.diff([0.0] + v_hist)
    assert np.max(np.abs(dv)) <= 0.2 + 1e-12
    assert v_hist[-1] == pytest.approx(0.9, abs=1e-9)


def test_bypass_passes_reference_through(scalar_model):
    gov = schedule_governor(scalar_model, enabled=False)
    dec = gov.govern_tick(np.zeros(1), r=5.0, t=0.0, dt=0.2)
    assert dec.v == 5.0
    assert dec.binding == ("bypass",)


def test_infeasible_constraints_report_offending_row(scalar_model):
    with pytest.raises(InfeasibleConstraintsError):
        build_admissible_set(scalar_model, [("x0", "le", -0.5)], horizon=20)


def test_unstable_model_rejected():
    model = make_model([[1.01]], [[1.0]])
    with pytest.raises(ValueError, match="unstable"):
        build_admissible_set(model, [("x0", "le", 1.0)], horizon=20)
