"""Annotation-cost calculator.

Counts are the leading terms of the pairwise-comparison complexity of labelling N
identities per camera across M cameras: intra-camera labelling compares identities
within each view (M * N^2); cross-camera labelling ranges from N^2 * M when every
identity reappears everywhere to M^2 * N^2 when none does.
"""

from __future__ import annotations

from mate_reid.errors import ConfigError
from mate_reid.schemas import CostEstimate


def annotation_cost(n: int, m: int) -> CostEstimate:
    if n < 1 or m < 1:
        raise ConfigError(f"annotation cost needs N >= 1 and M >= 1, got N={n}, M={m}")
    return CostEstimate(
        intra_total=m * n * n,
        inter_low=n * n * m,
        inter_high=m * m * n * n,
    )
