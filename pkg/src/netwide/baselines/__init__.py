"""Count-distinct based distributed sketches used as accuracy baselines."""

from netwide.baselines.cm_distinct import CMDistinct, cmd_add, cmd_merge, cmd_query
from netwide.baselines.count_distinct import (
    CountDistinctSketch,
    cds_add,
    cds_merge,
    cds_query,
    volume_estimate,
)
from netwide.baselines.hier_hh import (
    HierHH,
    hhh_add,
    hhh_descendants,
    hhh_finalize,
    hhh_freq_est,
    hhh_merge,
    hhh_query,
)

__all__ = [
    "CMDistinct",
    "CountDistinctSketch",
    "HierHH",
    "cds_add",
    "cds_merge",
    "cds_query",
    "cmd_add",
    "cmd_merge",
    "cmd_query",
    "hhh_add",
    "hhh_descendants",
    "hhh_finalize",
    "hhh_freq_est",
    "hhh_merge",
    "hhh_query",
    "volume_estimate",
]
