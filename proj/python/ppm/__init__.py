"""Python interface to the peridynamic Drucker-Prager simulator."""

from ._core import (
    ConeFit,
    ConfigError,
    DruckerPrager,
    ElasticModuli,
    NumericalError,
    Scenario,
    Simulation,
    alpha_coefficients,
    build_families,
    deformation_gradients,
    kirchhoff_from_be,
    load_scenario,
    loading_curve,
    parse_scenario,
    polar_rotation,
    rectangle_grid,
    report,
    return_map,
    run,
)

__all__ = [
    "ConeFit",
    "ConfigError",
    "DruckerPrager",
    "ElasticModuli",
    "NumericalError",
    "Scenario",
    "Simulation",
    "alpha_coefficients",
    "build_families",
    "deformation_gradients",
    "kirchhoff_from_be",
    "load_scenario",
    "loading_curve",
    "parse_scenario",
    "polar_rotation",
    "rectangle_grid",
    "report",
    "return_map",
    "run",
]
