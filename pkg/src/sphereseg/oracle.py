"""Ground-truth-derived masks and controlled mask perturbations.

Stands in for the neural detector/segmenter so the projection and
back-projection machinery can be exercised end to end without any model, and
lets tests reproduce contour bleed deliberately via dilation.
"""
from __future__ import annotations

import numpy as np

from .cloud_io import LabeledCloud
from .errors import PredictionError
from .masks import Mask
from .projection import PixelMapping


def oracle_mask(
    mapping: PixelMapping,
    cloud: LabeledCloud,
    building_label: int,
    rule: str = "nearest",
) -> Mask:
    """Mask derived from ground truth labels through the pixel mapping.

    rule "nearest": a pixel is building iff its minimum-depth point is.
    rule "any": a pixel is building iff any of its points is.
    """
    if rule not in ("nearest", "any"):
        raise ValueError(f"unknown oracle rule {rule!r}, expected 'nearest' or 'any'")
    if len(mapping) and int(mapping.point_index.max()) >= cloud.n_points:
        raise PredictionError(
            f"mapping references point {int(mapping.point_index.max())}, "
            f"cloud has {cloud.n_points}"
        )
    bits = np.zeros((mapping.height, mapping.width), dtype=bool)
    if len(mapping):
        if rule == "nearest":
            sel = mapping.run_starts
        else:
            sel = np.arange(len(mapping))
        is_building = cloud.labels[mapping.point_index[sel].astype(np.int64)] == building_label
        hit = sel[is_building]
        bits[mapping.py[hit].astype(np.int64), mapping.px[hit].astype(np.int64)] = True
    return Mask(mapping.width, mapping.height, bits)


def perturb_mask(mask: Mask, dilate_px: int, seed: int = 0) -> Mask:
    """Grow a mask by `dilate_px` pixels in Chebyshev distance.

    Square structuring element, clipped at the borders; models a segmenter
    bleeding over object contours. `seed` is reserved for stochastic
    perturbations and unused by plain dilation.
    """
    if dilate_px < 0:
        raise ValueError(f"dilate_px must be >= 0, got {dilate_px}")
    bits = mask.bits
    # square dilation is separable: rows first, then columns
    for axis in (0, 1):
        grown = bits.copy()
        for k in range(1, dilate_px + 1):
            if axis == 0:
                grown[k:, :] |= bits[:-k, :]
                grown[:-k, :] |= bits[k:, :]
            else:
                grown[:, k:] |= bits[:, :-k]
                grown[:, :-k] |= bits[:, k:]
        bits = grown
    return Mask(mask.width, mask.height, bits)
