"""Vendor file-coverage privacy-loss simulation toolkit.

The heavy lifting lives in the compiled extension; this package re-exports
its surface.
"""

from ._covsim import (  # noqa: F401
    Catalog,
    Graph,
    Ledger,
    Profiles,
    analyze_dataset,
    authorize,
    default_q,
    detect_teams,
    dump_profiles,
    generate_configuration_model,
    generate_synthetic_catalog,
    ingest_catalog,
    ingest_edge_list,
    ingest_profiles,
    load_graph_json,
    optimal_vendor,
    populate_synthetic,
    run_simulation,
    simulation_timeseries_csv,
    __version__,
)

__all__ = [
    "Catalog",
    "Graph",
    "Ledger",
    "Profiles",
    "analyze_dataset",
    "authorize",
    "default_q",
    "detect_teams",
    "dump_profiles",
    "generate_configuration_model",
    "generate_synthetic_catalog",
    "ingest_catalog",
    "ingest_edge_list",
    "ingest_profiles",
    "load_graph_json",
    "optimal_vendor",
    "populate_synthetic",
    "run_simulation",
    "simulation_timeseries_csv",
    "__version__",
]
