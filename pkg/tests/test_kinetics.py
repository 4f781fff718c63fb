"""Kinetics core: equilibrium algebra and the exact held-rho propagator."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from saltgov.kinetics import (KineticsParams, equilibrium_precursors,
                              equilibrium_state, pke_matrix, pke_rhs, pke_step)


def random_kinetics(rng):
    beta = rng.uniform(1e-4, 3e-3, 6)
    lam = rng.uniform(0.01, 4.0, 6)
    return KineticsParams(beta_i=tuple(beta), lambda_i=tuple(lam),
                          Lambda=rng.uniform(1e-5, 1e-3))


def test_equilibrium_formula_kills_derivatives():
    rng = np.random.default_rng(7)
    for _ in range(50):
        kin = random_kinetics(rng)
        n = rng.uniform(0.1, 1.5)
        x = equilibrium_state(kin, n)
        assert np.allclose(x[1:], kin.beta * n / (kin.Lambda * kin.lam), rtol=0, atol=0)
        rhs = pke_rhs(kin, x, 0.0)
        assert np.max(np.abs(rhs) / np.maximum(np.abs(x), 1.0)) < 1e-10


def test_equilibrium_is_fixed_point_of_step():
    kin = KineticsParams()
    x = equilibrium_state(kin, 1.0)
    x1 = pke_step(kin, x, 0.0, 0.2)
    assert np.max(np.abs(x1 - x) / np.maximum(np.abs(x), 1.0)) < 1e-12


def test_power_constant_over_1000_steps_at_critical():
    kin = KineticsParams()
    x = equilibrium_state(kin, 1.0)
    for _ in range(1000):
        x = pke_step(kin, x, 0.0, 0.2)
    assert abs(x[0] - 1.0) < 1e-9


@pytest.mark.parametrize("dt", [0.05, 0.2, 1.0])
def test_step_matches_stiff_ode_oracle(dt):
    """Exact propagator vs an independent high-accuracy ODE integration."""
    kin = KineticsParams()
    beta = kin.beta_total
    rhos = np.array([-1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 0.9]) * beta
    x0 = equilibrium_state(kin, 1.0)
    for rho in rhos:
        got = pke_step(kin, x0, rho, dt)
        sol = solve_ivp(lambda t, x: pke_rhs(kin, x, rho), (0.0, dt), x0,
                        method="Radau", rtol=1e-11, atol=1e-12)
        ref = sol.y[:, -1]
        assert np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-12)) < 1e-6, \
            f"mismatch at rho={rho:+.4f}, dt={dt}"


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        KineticsParams(beta_i=(1e-4,) * 5, lambda_i=(0.1,) * 6)
    with pytest.raises(ValueError):
        KineticsParams(Lambda=-1.0)
