"""Hand segmentation and tracking on range-intensity frames."""

from ._handtrack import (
    FormatError,
    InvalidInput,
    cluster,
    default_config,
    load_sequence,
    make_scenario,
    parse_track_record,
    phi,
    phi_map,
    scenario_names,
    track,
)

__all__ = [
    "FormatError",
    "InvalidInput",
    "cluster",
    "default_config",
    "load_sequence",
    "make_scenario",
    "parse_track_record",
    "phi",
    "phi_map",
    "scenario_names",
    "track",
]
