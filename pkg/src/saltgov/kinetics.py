"""Six-group point kinetics core shared by the plant simulator and the observer.

State convention: x = [n, C_1 .. C_6] with n the normalized fission power
(1.0 = nominal) and C_i the precursor group concentrations in the same
normalized basis, so that at steady state C_i = beta_i * n / (Lambda * lambda_i).

The group equations are

    dn/dt   = (rho - beta)/Lambda * n + sum_i lambda_i C_i
    dC_i/dt = beta_i/Lambda * n - lambda_i C_i

With reactivity frozen over a step the system is linear, so a single matrix
exponential advances it exactly regardless of stiffness (Lambda ~ 5e-4 s while
the slowest precursor group has a ~80 s half-life).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

N_GROUPS = 6


@dataclass(frozen=True)
class KineticsParams:
    """Delayed-neutron data for the 6-group model.

    Defaults are a U-235 thermal-spectrum set (Keepin-style) with a prompt
    generation time typical of a graphite/FLiBe pebble core.
    """

    beta_i: tuple = (0.000215, 0.001424, 0.001274, 0.002568, 0.000748, 0.000273)
    lambda_i: tuple = (0.0124, 0.0305, 0.111, 0.301, 1.14, 3.01)
    Lambda: float = 5.0e-4

    def __post_init__(self):
        if len(self.beta_i) != N_GROUPS or len(self.lambda_i) != N_GROUPS:
            raise ValueError("kinetics data must have exactly 6 groups")
        if any(b <= 0 for b in self.beta_i) or any(l <= 0 for l in self.lambda_i):
            raise ValueError("beta_i and lambda_i must be strictly positive")
        if self.Lambda <= 0:
            raise ValueError("Lambda must be strictly positive")

    @property
    def beta_total(self):
        return float(sum(self.beta_i))

    @property
    def beta(self):
        return np.asarray(self.beta_i, dtype=float)

    @property
    def lam(self):
        return np.asarray(self.lambda_i, dtype=float)

    def to_dict(self):
        return {"beta_i": list(self.beta_i), "lambda_i": list(self.lambda_i),
                "Lambda": self.Lambda}

    @classmethod
    def from_dict(cls, d):
        return cls(beta_i=tuple(d["beta_i"]), lambda_i=tuple(d["lambda_i"]),
                   Lambda=float(d["Lambda"]))


def equilibrium_precursors(kinetics, n):
    """Precursor concentrations that make dC_i/dt vanish at power n."""
    return kinetics.beta * n / (kinetics.Lambda * kinetics.lam)


def equilibrium_state(kinetics, n):
    """[n, C_1..C_6] steady-state vector at power n with rho = 0."""
    x = np.empty(1 + N_GROUPS)
    x[0] = n
    x[1:] = equilibrium_precursors(kinetics, n)
    return x


def pke_matrix(kinetics, rho):
    """System matrix of the PKE with reactivity held at rho.

    d/dt [n, C] = M(rho) [n, C]; exact for constant rho.
    """
    M = np.zeros((7, 7))
    M[0, 0] = (rho - kinetics.beta_total) / kinetics.Lambda
    M[0, 1:] = kinetics.lam
    M[1:, 0] = kinetics.beta / kinetics.Lambda
    M[1:, 1:] = -np.diag(kinetics.lam)
    return M


def pke_step(kinetics, x, rho, dt):
    """Advance [n, C] by dt with reactivity frozen at rho (zero-order hold).

    Uses the matrix exponential, which is exact for the held-rho system and
    unconditionally stable, so one call covers the full control time step.
    """
    return expm(pke_matrix(kinetics, rho) * dt) @ x


def pke_rhs(kinetics, x, rho):
    """Time derivative of [n, C] at reactivity rho (for oracles/diagnostics)."""
    n = x[0]
    C = x[1:]
    dn = (rho - kinetics.beta_total) / kinetics.Lambda * n + float(kinetics.lam @ C)
    dC = kinetics.beta / kinetics.Lambda * n - kinetics.lam * C
    return np.concatenate(([dn], dC))
