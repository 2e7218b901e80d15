"""Multi-layer interference alignment toolkit for the K-user asymmetric
interference channel: exact sum-GDoF bound certification, transmitter
construction and finite-SNR successive-decoding simulation."""

from .gdof_core import (
    AlphaProfile,
    BoundFamily,
    CertificationError,
    WeightedBound,
    achievable_gdof,
    achievable_gdof_limit,
    certify_family,
    converse_family,
    make_pair_bound,
    make_weighted_bound,
    optimal_sum_gdof,
)

__all__ = [
    "AlphaProfile",
    "BoundFamily",
    "CertificationError",
    "WeightedBound",
    "achievable_gdof",
    "achievable_gdof_limit",
    "certify_family",
    "converse_family",
    "make_pair_bound",
    "make_weighted_bound",
    "optimal_sum_gdof",
]

__version__ = "0.1.0"
