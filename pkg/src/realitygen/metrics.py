"""Score and penalty functions for evaluating intensity transformations.

These are pure array metrics: the adversarial score takes discriminator
output grids as inputs, the consistency and physics penalties compare
range-image intensity channels over their occupancy masks, and the
histogram distance measures distribution-level realism.  Nothing here
trains or evaluates a network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMaskError, MaskMismatchError, ShapeMismatchError
from .projection import RangeImage

SCORE_EPS = 1e-7


@dataclass(frozen=True)
class LossWeights:
    """Relative weights of the consistency and physics penalties.

    The defaults follow the usual cycle-consistency convention; they are
    configuration, not calibrated values.
    """

    lambda_cycle: float = 10.0
    lambda_phy: float = 1.0

    def __post_init__(self) -> None:
        for v in (self.lambda_cycle, self.lambda_phy):
            if not np.isfinite(v) or v < 0:
                raise ValueError("loss weights must be finite and >= 0")


def adversarial_score(real_scores: np.ndarray, fake_scores: np.ndarray) -> float:
    """mean(log D(real)) + mean(log(1 - D(fake))), eps-clamped.

    The two grids may have different shapes; each mean is taken
    independently.  Scores are clamped into [eps, 1 - eps] so the result
    is always finite.
    """
    real = np.clip(np.asarray(real_scores, dtype=np.float64), SCORE_EPS, 1.0 - SCORE_EPS)
    fake = np.clip(np.asarray(fake_scores, dtype=np.float64), SCORE_EPS, 1.0 - SCORE_EPS)
    if real.size == 0 or fake.size == 0:
        raise ShapeMismatchError("score grids must be non-empty")
    return float(np.mean(np.log(real)) + np.mean(np.log1p(-fake)))


def _masked_l1(a: RangeImage, b: RangeImage, require_equal_masks: bool) -> float:
    if (a.height, a.width) != (b.height, b.width):
        raise ShapeMismatchError(
            f"image shapes differ: {(a.height, a.width)} vs {(b.height, b.width)}"
        )
    mask_a, mask_b = a.occupancy, b.occupancy
    if require_equal_masks and not np.array_equal(mask_a, mask_b):
        raise MaskMismatchError("images do not share an identical mask")
    both = mask_a & mask_b
    count = int(both.sum())
    if count == 0:
        raise EmptyMaskError("no jointly masked pixels to compare")
    diff = np.abs(
        a.intensity[both].astype(np.float64) - b.intensity[both].astype(np.float64)
    )
    return float(diff.sum() / count)


def cycle_loss(original: RangeImage, reconstructed: RangeImage) -> float:
    """Mean absolute intensity difference over the (identical) masks."""
    return _masked_l1(original, reconstructed, require_equal_masks=True)


def physics_loss(predicted: RangeImage, reference: RangeImage) -> float:
    """Mean absolute deviation of predicted intensity from the physics reference."""
    return _masked_l1(predicted, reference, require_equal_masks=False)


def total_objective(adv: float, cycle: float, phy: float,
                    weights: LossWeights = LossWeights()) -> float:
    """adv + lambda_cycle * cycle + lambda_phy * phy."""
    return float(adv + weights.lambda_cycle * cycle + weights.lambda_phy * phy)


def _quantized_pmf(image: RangeImage, bins: int) -> np.ndarray:
    values = image.intensity[image.occupancy].astype(np.float64)
    if values.size == 0:
        raise EmptyMaskError("image has no masked pixels")
    # nearest of `bins` representative levels evenly spanning [0, 1]
    idx = np.rint(np.clip(values, 0.0, 1.0) * (bins - 1)).astype(np.int64)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    return counts / counts.sum()


def intensity_histogram_distance(a: RangeImage, b: RangeImage, bins: int = 64) -> float:
    """1-Wasserstein distance between masked-intensity histograms.

    Intensities are quantized to ``bins`` levels evenly spanning [0, 1]
    inclusive, each histogram is normalized to probability mass 1, and the
    distance is the CDF-difference sum scaled by the level spacing.
    Identical images give 0; an all-0 vs all-1 pair gives exactly 1.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    pa = _quantized_pmf(a, bins)
    pb = _quantized_pmf(b, bins)
    cdf_diff = np.cumsum(pa - pb)[:-1]
    return float(np.abs(cdf_diff).sum() / (bins - 1))
