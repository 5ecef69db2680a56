"""Odour-mediated three-species food chain in integer and Caputo fractional order."""

__version__ = "0.1.0"

from .bifurcation import (BifurcationEvent, EquilibriumCurve, EventKind, SweepSpec, bubbling_diagram,
                          detect_hopf, detect_transcritical, refine_bisection,
                          sweep_equilibrium_curve, verify_transcritical_sotomayor)
from .equilibria import (Equilibrium, EquilibriumKind, all_equilibria, axial, coexisting,
                         equilibrium_of_kind, top_predator_free, vanishing)
from .estimators import BifurcationAnalyzer, FoodChainModel
from .exceptions import (ConfigError, DivergenceError, DomainError, FracChainError, IntegrationError,
                         NonPhysicalParameterWarning, PreconditionError, RangeError)
from .fracsolve import (SolverConfig, Trajectory, integrate_caputo_abm, integrate_classic,
                        orbit_amplitude)
from .mittag_leffler import mittag_leffler
from .model import (ModelParams, ParamBatch, State, baseline_params, fractional_scenario_params,
                    harvest_scenario_params, jacobian, odour_scenario_params, vector_field)
from .stability import (CharPoly, StabilityReport, Verdict, classify_equilibrium,
                        cubic_discriminant, eigenvalues_cubic, fractional_cubic_criteria,
                        matignon_classify, routh_hurwitz)

__all__ = [
    "BifurcationAnalyzer", "BifurcationEvent", "CharPoly", "ConfigError", "DivergenceError",
    "DomainError", "Equilibrium", "EquilibriumCurve", "EquilibriumKind", "EventKind",
    "FoodChainModel", "FracChainError", "IntegrationError", "ModelParams",
    "NonPhysicalParameterWarning", "ParamBatch", "PreconditionError", "RangeError",
    "SolverConfig", "StabilityReport", "State", "SweepSpec", "Trajectory", "Verdict",
    "all_equilibria", "axial", "baseline_params", "bubbling_diagram", "classify_equilibrium",
    "coexisting", "cubic_discriminant", "detect_hopf", "detect_transcritical",
    "eigenvalues_cubic", "equilibrium_of_kind", "fractional_cubic_criteria",
    "fractional_scenario_params", "harvest_scenario_params", "integrate_caputo_abm",
    "integrate_classic", "jacobian", "matignon_classify", "mittag_leffler",
    "odour_scenario_params", "orbit_amplitude", "refine_bisection", "routh_hurwitz",
    "sweep_equilibrium_curve", "top_predator_free", "vanishing", "vector_field",
    "verify_transcritical_sotomayor",
]
