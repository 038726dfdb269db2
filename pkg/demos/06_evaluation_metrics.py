# Evaluation metrics for learned intensity generators.
#
# All metrics are pure functions over arrays or range images: the
# adversarial score aggregates discriminator output grids, the cycle and
# physics penalties are masked L1 distances, the total objective is their
# weighted sum, and the histogram distance compares intensity
# distributions without requiring aligned masks.

import numpy as np

from realitygen import (
    AttenuationParams,
    LossWeights,
    adversarial_score,
    compute_incidence,
    compute_reflectance,
    cycle_loss,
    default_material_table,
    get_profile,
    intensity_histogram_distance,
    physics_loss,
    project,
    random_cloud,
    reference_image,
    total_objective,
)

profile = get_profile("hdl64")
cloud = random_cloud(60_000, seed=5)
image = project(cloud, profile)
image = compute_incidence(cloud, image)
image = compute_reflectance(cloud, image, default_material_table())

# pretend a generator produced these intensities: the physics reference
# plus mild noise
reference = reference_image(image, None, AttenuationParams())
gen = np.random.default_rng(0)
noise = gen.normal(0.0, 0.02, reference.intensity.shape)
predicted = reference.replace_channels(
    intensity=(np.clip(reference.intensity + noise, 0, 1) * reference.mask).astype(
        np.float32
    )
)

l_phy = physics_loss(predicted, reference)
print(f"physics penalty vs reference: {l_phy:.5f} (0 would be a perfect anchor)")

# cycle consistency: compare against a reconstruction of the original
reconstructed = image.replace_channels(
    intensity=(np.clip(image.intensity + gen.normal(0, 0.01, image.intensity.shape),
                       0, 1) * image.mask).astype(np.float32)
)
l_cycle = cycle_loss(image, reconstructed)
print(f"cycle penalty vs original:    {l_cycle:.5f}")

# discriminator output grids (stand-ins: a trained model would supply these)
real_scores = gen.uniform(0.55, 0.95, (64, 64))
fake_scores = gen.uniform(0.05, 0.45, (64, 64))
l_adv = adversarial_score(real_scores, fake_scores)
print(f"adversarial score:            {l_adv:.5f}")

weights = LossWeights(lambda_cycle=10.0, lambda_phy=1.0)
print(f"total objective:              "
      f"{total_objective(l_adv, l_cycle, l_phy, weights):.5f} "
      f"(weights cycle={weights.lambda_cycle}, phy={weights.lambda_phy})")

# distribution-level realism without mask alignment
other = project(random_cloud(60_000, seed=9), profile)
d_self = intensity_histogram_distance(image, image)
d_other = intensity_histogram_distance(image, other)
d_ref = intensity_histogram_distance(image, reference)
print(f"\nhistogram distance: self={d_self:.5f}, "
      f"other sweep={d_other:.5f}, physics reference={d_ref:.5f}")
