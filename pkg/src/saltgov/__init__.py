"""Supervisory constraint-enforcement sandbox for a salt-cooled reactor plant.

The package closes the loop around a nonlinear two-loop plant model:
measurements are denoised, unmeasured precursor concentrations are
reconstructed by an unscented Kalman filter, and a scalar reference governor
admits load-change requests only as far as a data-driven linear model
predicts every constraint will keep holding.
"""

from .config import ConfigError, default_config, load_config, save_config
from .dmdc import (SnapshotSet, StateSpaceModel, assemble_snapshots, fit,
                   predict, score, stabilize)
from .governor import (AdmissibleSet, ConstraintRow, ConstraintSet,
                       GovernorDecision, InfeasibleConstraintsError,
                       ReferenceGovernor, build_admissible_set, compute_kappa)
from .kinetics import KineticsParams, equilibrium_precursors, pke_step
from .orchestrator import (ControlLoop, fit_model_from_trajectories,
                           generate_training_set, run_scenario,
                           selection_problem_from_plant, tune_pid,
                           training_trajectory)
from .pid import PidGains, PidState, pid_step, tune_grid_search
from .plant import (Actuation, FeedbackParams, LoopParams, NoiseSpec, Plant,
                    PlantState)
from .sffs import SelectionProblem, SelectionTrace, objective, select
from .sgf import SgfConfig, StreamingSgf, apply as sgf_apply, sgf_weights
from .ukf import (ObserverState, SigmaParams, initial_observer, pke_transition,
                  sigma_points, ukf_step)

__version__ = "0.1.0"
