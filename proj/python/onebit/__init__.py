"""One-bit MIMO detection (C++ core)."""

from ._core import (
    CSV_HEADER,
    METHODS,
    ConfigError,
    DimensionTooLarge,
    Instance,
    RankDeficient,
    SolverFailure,
    detect,
    exhaustive_search,
    generate_instance,
    instance_json,
    load_instance,
    log_phi,
    mills_ratio,
    objective,
    parse_config,
    render_svg_plot,
    run_experiment,
    signflip_ratio,
    solve_global,
)

__all__ = [name for name in dir() if not name.startswith("_")]
