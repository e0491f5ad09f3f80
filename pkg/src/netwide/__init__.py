"""Routing-oblivious network-wide measurement from mergeable slot samples."""

from netwide.estimators import (
    GlobalSample,
    estimate_cardinality,
    estimate_frequency,
    flow_size_distribution,
    heavy_hitters,
    hierarchical_heavy_hitters,
    merge_all,
    sampling_probability,
    superspreaders,
)
from netwide.hashing import HashPair, new_hash_pair
from netwide.sample_sketch import PacketRecord, SampleSketch, new_sketch

__version__ = "0.1.0"

__all__ = [
    "GlobalSample",
    "HashPair",
    "PacketRecord",
    "SampleSketch",
    "estimate_cardinality",
    "estimate_frequency",
    "flow_size_distribution",
    "heavy_hitters",
    "hierarchical_heavy_hitters",
    "merge_all",
    "new_hash_pair",
    "new_sketch",
    "sampling_probability",
    "superspreaders",
]
