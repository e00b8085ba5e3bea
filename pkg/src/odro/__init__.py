"""Steady states of unstable iterative solvers via online dimension-reduction
optimization: alternate the solver's own iteration with a derivative-free
residual minimization in a basis built from recent iterates."""

from .core import (ConfigurationError, ConvergenceRecord, DivergedTooFast,
                   NoUsableModes, OdroConfig, OdroError, Phase, Problem, budget)
from .driver import (CycleOutcome, RunResult, divergence_guard, run_baseline,
                     run_cycle, run_odro)
from .optimizer import NmParams, adaptive_params, initial_simplex, minimize
from .pod import (PodBasis, SnapshotBuffer, build_basis, center, decompose,
                  project, reconstruct)
from .problems import (ChafeeInfanteProblem, HeatCflProblem, LinearMapProblem,
                       LorenzProblem, make_problem, oracle_steady_state,
                       problem_names)
from .residual import Objective, problem_r_total, r_total
from .stability import (Classification, SpectrumReport, jacobian_fd,
                        leading_spectrum, spectral_radius, stability_report)

__all__ = [
    "ChafeeInfanteProblem", "Classification", "ConfigurationError",
    "ConvergenceRecord", "CycleOutcome", "DivergedTooFast", "HeatCflProblem",
    "LinearMapProblem", "LorenzProblem", "NmParams", "NoUsableModes",
    "Objective", "OdroConfig", "OdroError", "Phase", "PodBasis", "Problem",
    "RunResult", "SnapshotBuffer", "SpectrumReport", "adaptive_params",
    "budget", "build_basis", "center", "decompose", "divergence_guard",
    "initial_simplex", "jacobian_fd", "leading_spectrum", "make_problem",
    "minimize", "oracle_steady_state", "problem_names", "problem_r_total",
    "project", "r_total", "reconstruct", "run_baseline", "run_cycle",
    "run_odro", "spectral_radius", "stability_report",
]

__version__ = "0.1.0"
