"""Physics-based LiDAR sweep transformation toolkit.

Reads automotive LiDAR binaries bit-exactly, projects sweeps onto
normalized spherical range images, rewrites intensities with a physically
grounded reference model, distorts geometry with a Monte-Carlo rain/snow
simulation, batches whole dataset trees with one-to-one output
correspondence, and scores results with array-level evaluation metrics.
"""

__version__ = "0.1.0"

from .errors import RealityGenError
from .io import (
    Dataset,
    DatasetLayout,
    FormatTag,
    PointCloud,
    attach_labels,
    decode_sweep,
    encode_sweep,
    enumerate_frames,
    random_cloud,
    read_labels,
    read_sweep,
    write_sweep,
)
from .projection import (
    PROFILES,
    RangeImage,
    SensorProfile,
    attach_weather_onehot,
    compute_incidence,
    compute_reflectance,
    dump_range_image,
    get_profile,
    load_range_image_planes,
    project,
    unproject,
)
from .physics import (
    AttenuationParams,
    MaterialTable,
    Weather,
    attenuate,
    default_material_table,
    load_material_table,
    physics_intensity,
    reference_image,
)
from .weather import (
    Verdict,
    WeatherOutcome,
    WeatherParams,
    apply_outcome,
    distort,
    extinction_coefficient,
    simulate,
)
from .metrics import (
    LossWeights,
    adversarial_score,
    cycle_loss,
    intensity_histogram_distance,
    physics_loss,
    total_objective,
)
from .pipeline import (
    CorrespondenceReport,
    JobConfig,
    Manifest,
    Variant,
    adapt_intensity_frame,
    augment_frame,
    load_job_config,
    run_job,
    validate_correspondence,
)

__all__ = [name for name in dir() if not name.startswith("_")]
