"""Python interface to the crossbar design-space exploration core."""

from ._core import (
    ConfigError,
    DesignPoint,
    EvalResult,
    ParseError,
    SolveError,
    design_key,
    enumerate_default_grid,
    evaluate_design,
    generate_netlist,
    ideal_mac,
    parse_design_key,
    query,
    seed_paper_table,
    solve_crossbar,
    verify_netlist,
)

__all__ = [
    "ConfigError",
    "DesignPoint",
    "EvalResult",
    "ParseError",
    "SolveError",
    "design_key",
    "enumerate_default_grid",
    "evaluate_design",
    "generate_netlist",
    "ideal_mac",
    "parse_design_key",
    "query",
    "seed_paper_table",
    "solve_crossbar",
    "verify_netlist",
]
