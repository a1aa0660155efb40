"""Exact enumeration and tilted analysis of repulsive walks on nonunimodular transitive graphs."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .graphs import EndFixedTree, GraphModel, OrientedTree112, ProductTreeZd, parse_model
from .weights import (
    SAW,
    Anisotropic,
    AtMostTwice,
    PrimeGap,
    TreeSpan,
    WeaklySAW,
    WeightFunction,
    check_good_properties,
    parse_weight,
)
from .tables import BridgeTables, HeightResolvedTable, TwoPointTable, tilted_Z
from .enumeration import enumerate_walks, reference_enumerate
from .transfer import transfer_totals, tree_transfer_tables
from .analysis import CriticalBracket, bracket_from_tables, tables_for, verify_identities, zc_bracket
from .sampler import sample, sample_exact, sample_rosenbluth

__all__ = [
    "__version__",
    "EndFixedTree", "GraphModel", "OrientedTree112", "ProductTreeZd", "parse_model",
    "SAW", "Anisotropic", "AtMostTwice", "PrimeGap", "TreeSpan", "WeaklySAW", "WeightFunction",
    "check_good_properties", "parse_weight",
    "BridgeTables", "HeightResolvedTable", "TwoPointTable", "tilted_Z",
    "enumerate_walks", "reference_enumerate", "transfer_totals", "tree_transfer_tables",
    "CriticalBracket", "bracket_from_tables", "tables_for", "verify_identities", "zc_bracket",
    "sample", "sample_exact", "sample_rosenbluth",
]
