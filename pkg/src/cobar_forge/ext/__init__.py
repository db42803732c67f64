"""Ext over finite Hopf algebras by cobar complexes and minimal resolutions."""

from .chart import (
    ENGINES,
    ChartData,
    EngineDisagreement,
    ExtChart,
    ExtClass,
    ExtError,
    NamingError,
    WindowOverflow,
    WitnessChain,
    assign_names,
    change_of_rings,
    check_relation,
    cobar_differential,
    compute_ext_chart,
    evaluate,
    find_bounding_chain,
    multiply_classes,
    parse_chain,
)
from .cobar import CobarComplex, cup, juxtapose, map_chain
from .resolution import MinimalResolution

__all__ = [
    "ENGINES", "ChartData", "CobarComplex", "EngineDisagreement", "ExtChart", "ExtClass",
    "ExtError", "MinimalResolution", "NamingError", "WindowOverflow", "WitnessChain",
    "assign_names", "change_of_rings", "check_relation", "cobar_differential", "compute_ext_chart", "cup",
    "evaluate", "find_bounding_chain", "juxtapose", "map_chain", "multiply_classes", "parse_chain",
]
