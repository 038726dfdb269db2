"""Config-driven batch transformation of whole dataset trees.

One output frame per input frame, per variant, under
``output_root/<variant>/<identical relative path>``, with a line-delimited
manifest recording provenance (counts, verdicts, seeds, checksums) and a
correspondence validator for derived trees.  Failed frames are recorded
and skipped; they never abort the batch.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import ConfigError, RealityGenError
from .io import (
    Dataset,
    DatasetLayout,
    PointCloud,
    attach_labels,
    decode_sweep,
    encode_sweep,
    enumerate_frames,
    read_labels,
    read_sweep,
)
from .physics import AttenuationParams, MaterialTable, Weather, default_material_table, load_material_table, reference_image
from .projection import (
    RangeImage,
    SensorProfile,
    compute_incidence,
    compute_reflectance,
    get_profile,
    load_range_image_planes,
    project,
    unproject,
)
from .rng import frame_seed
from .weather import WeatherOutcome, WeatherParams, apply_outcome, distort


class Variant(Enum):
    SNOW = "snow"
    RAIN = "rain"
    INTENSITY_ADAPTED = "intensity_adapted"

    @property
    def weather(self) -> Optional[Weather]:
        if self is Variant.SNOW:
            return Weather.SNOW
        if self is Variant.RAIN:
            return Weather.RAIN
        return None


# --- single-frame paths ------------------------------------------------------


def augment_frame(
    cloud: PointCloud,
    profile: SensorProfile,
    params: WeatherParams,
    unprojected: str = "drop",
    workers: int = 1,
) -> tuple[PointCloud, WeatherOutcome, RangeImage]:
    """Canonical weather path: project -> incidence -> distort -> unproject.

    Returns the written-back cloud (image-mediated, so only points
    representable in the spherical view survive), the per-point verdicts,
    and the weather-distorted range image.
    """
    image = project(cloud, profile)
    image = compute_incidence(cloud, image)
    _, outcome = distort(cloud, image, params, workers=workers)
    wimage = apply_outcome(image, outcome)
    out = unproject(wimage, cloud, unprojected=unprojected)
    return out, outcome, wimage


def adapt_intensity_frame(
    cloud: PointCloud,
    profile: SensorProfile,
    table: MaterialTable,
    external_planes: Optional[np.ndarray] = None,
) -> tuple[PointCloud, RangeImage]:
    """Sensor-adaptation path: geometry untouched, intensity rewritten.

    By default the intensity channel becomes the clear-weather physics
    reference; ``external_planes`` (a dumped channel block from a learned
    generator) splices in channel 3 as the intensity instead.
    """
    image = project(cloud, profile)
    image = compute_incidence(cloud, image)
    image = compute_reflectance(cloud, image, table)
    if external_planes is None:
        image = reference_image(image, table, AttenuationParams())
    else:
        if external_planes.shape[1:] != (image.height, image.width):
            raise ConfigError(
                f"external intensity block is {external_planes.shape[1:]}, "
                f"expected {(image.height, image.width)}"
            )
        spliced = (external_planes[3] * image.mask).astype(np.float32)
        image = image.replace_channels(intensity=spliced)
    out = unproject(image, cloud, unprojected="keep")
    return out, image


# --- job configuration -------------------------------------------------------


@dataclass
class JobConfig:
    """Parsed batch-job description."""

    dataset: Dataset
    source_root: Path
    output_root: Path
    variants: list[Variant]
    profile: SensorProfile
    weather_params: dict[Variant, WeatherParams] = field(default_factory=dict)
    material_table: Optional[MaterialTable] = None
    parallelism: int = 1
    seed: int = 0
    unprojected: str = "drop"
    on_missing_labels: str = "proxy"       # proxy | abort
    intensity_external_dir: Optional[Path] = None
    config_digest: str = ""

    def __post_init__(self) -> None:
        if not self.variants:
            raise ConfigError("variants must be non-empty")
        if self.source_root.resolve() == self.output_root.resolve():
            raise ConfigError("source_root and output_root must differ")
        for v in self.variants:
            if v.weather is not None and v not in self.weather_params:
                raise ConfigError(f"variant {v.value} has no weather parameters")
        if Variant.INTENSITY_ADAPTED in self.variants and self.material_table is None:
            self.material_table = default_material_table()
        if self.unprojected not in ("keep", "drop"):
            raise ConfigError("unprojected must be 'keep' or 'drop'")
        if self.on_missing_labels not in ("proxy", "abort"):
            raise ConfigError("on_missing_labels must be 'proxy' or 'abort'")


_WEATHER_KEYS = {
    "rate_mm_h", "noise_floor", "beam_divergence_rad", "alpha_override",
    "beta_rain", "beta_snow", "r_min", "weather", "seed",
}


def _weather_from_section(weather: Weather, section) -> WeatherParams:
    unknown = set(section) - _WEATHER_KEYS
    if unknown:
        raise ConfigError(f"unknown weather keys: {sorted(unknown)}")
    kwargs = dict(
        weather=weather,
        rate_mm_h=section.getfloat("rate_mm_h", 10.0),
        noise_floor=section.getfloat("noise_floor", 0.03),
        beam_divergence=section.getfloat("beam_divergence_rad", 3e-3),
        r_min=section.getfloat("r_min", 1.5),
        beta_rain=section.getfloat("beta_rain", 0.35),
        beta_snow=section.getfloat("beta_snow", 0.9),
        seed=section.getint("seed", 0),
    )
    if section.get("alpha_override", "") not in ("", None):
        kwargs["alpha_override"] = section.getfloat("alpha_override")
    try:
        return WeatherParams(**kwargs)
    except (ValueError, RealityGenError) as exc:
        raise ConfigError(str(exc)) from exc


def _profile_from_section(section) -> SensorProfile:
    if "profile" in section:
        return get_profile(section.get("profile"))
    try:
        return SensorProfile(
            channels=section.getint("channels"),
            fov_up=section.getfloat("fov_up"),
            fov_down=section.getfloat("fov_down"),
            width=section.getint("width", 1048),
            max_range=section.getfloat("max_range"),
            intensity_scale=section.getfloat("intensity_scale", 1.0),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [sensor] section: {exc}") from exc


def load_job_config(path) -> JobConfig:
    """Parse the plain-text job config (INI-style sections, key = value)."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    text = p.read_text()
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    if "job" not in parser:
        raise ConfigError("config needs a [job] section")
    job = parser["job"]

    try:
        dataset = Dataset(job.get("dataset", "").strip().lower())
    except ValueError:
        raise ConfigError(f"unknown dataset {job.get('dataset')!r}") from None
    try:
        variants = [
            Variant(v.strip().lower())
            for v in job.get("variants", "").split(",") if v.strip()
        ]
    except ValueError as exc:
        raise ConfigError(f"bad variant list: {exc}") from None

    weather_params: dict[Variant, WeatherParams] = {}
    for variant in variants:
        w = variant.weather
        if w is None:
            continue
        section_name = f"weather.{variant.value}"
        if section_name not in parser:
            parser.add_section(section_name)  # all-defaults variant
        weather_params[variant] = _weather_from_section(w, parser[section_name])

    profile = (
        _profile_from_section(parser["sensor"]) if "sensor" in parser
        else get_profile("hdl64")
    )

    material_table = None
    if "materials" in parser and parser["materials"].get("table"):
        material_table = load_material_table(parser["materials"].get("table"))

    external_dir = None
    if "intensity_adapted" in parser and parser["intensity_adapted"].get("external_dir"):
        external_dir = Path(parser["intensity_adapted"].get("external_dir"))

    for key in ("source_root", "output_root"):
        if not job.get(key, ""):
            raise ConfigError(f"[job] {key} is required")

    return JobConfig(
        dataset=dataset,
        source_root=Path(job.get("source_root", "")),
        output_root=Path(job.get("output_root", "")),
        variants=variants,
        profile=profile,
        weather_params=weather_params,
        material_table=material_table,
        parallelism=job.getint("parallelism", 1),
        seed=job.getint("seed", 0),
        unprojected=job.get("unprojected", "drop"),
        on_missing_labels=job.get("on_missing_labels", "proxy"),
        intensity_external_dir=external_dir,
        config_digest=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )


# --- manifest ----------------------------------------------------------------

MANIFEST_NAME = "manifest.jsonl"


@dataclass
class Manifest:
    """Per-frame provenance of one batch run (JSON lines on disk)."""

    tool_version: str
    config_digest: str
    records: list[dict] = field(default_factory=list)

    @property
    def failed(self) -> list[dict]:
        return [r for r in self.records if r["status"] != "ok"]

    def write(self, path) -> None:
        with open(path, "w") as fh:
            header = {
                "record": "header",
                "tool_version": self.tool_version,
                "config_digest": self.config_digest,
            }
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for rec in self.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "Manifest":
        lines = Path(path).read_text().splitlines()
        if not lines:
            raise RealityGenError(f"empty manifest: {path}")
        header = json.loads(lines[0])
        records = [json.loads(line) for line in lines[1:]]
        return cls(
            tool_version=header.get("tool_version", ""),
            config_digest=header.get("config_digest", ""),
            records=records,
        )

    def verify_checksums(self, output_root) -> list[str]:
        """Relative paths whose current bytes do not match their record."""
        bad = []
        root = Path(output_root)
        for rec in self.records:
            if rec["status"] != "ok":
                continue
            target = root / rec["variant"] / rec["relpath"]
            if not target.is_file():
                bad.append(f"{rec['variant']}/{rec['relpath']}")
                continue
            digest = hashlib.sha256(target.read_bytes()).hexdigest()
            if digest != rec["sha256"]:
                bad.append(f"{rec['variant']}/{rec['relpath']}")
        return bad


def _load_frame(config: JobConfig, layout_root: Path, relpath: str,
                need_labels: bool) -> PointCloud:
    cloud = read_sweep(layout_root / relpath, config.dataset.format_tag)
    if not need_labels:
        return cloud
    rel = Path(relpath)
    label_path = None
    if rel.parent.name == "velodyne":
        label_path = layout_root / rel.parent.parent / "labels" / (rel.stem + ".label")
    if label_path is not None and label_path.is_file():
        return attach_labels(cloud, read_labels(label_path))
    if config.on_missing_labels == "abort":
        raise RealityGenError(f"labels required but missing for {relpath}")
    return cloud


def _process_frame(config: JobConfig, variant: Variant, relpath: str) -> dict:
    """Transform one (variant, frame) pair; returns its manifest record."""
    record: dict = {
        "record": "frame",
        "variant": variant.value,
        "relpath": relpath,
        "status": "ok",
        "error": None,
        "input_points": None,
        "output_points": None,
        "verdicts": None,
        "alpha_used": None,
        "frame_seed": frame_seed(config.seed, relpath),
        "sha256": None,
    }
    try:
        needs_labels = variant is Variant.INTENSITY_ADAPTED
        cloud = _load_frame(config, config.source_root, relpath, needs_labels)
        record["input_points"] = cloud.n_points

        if variant.weather is not None:
            params = replace(config.weather_params[variant],
                             seed=record["frame_seed"])
            out, outcome, _ = augment_frame(
                cloud, config.profile, params, unprojected=config.unprojected
            )
            record["verdicts"] = outcome.summary.as_dict()
            record["alpha_used"] = outcome.alpha_used
        else:
            external = None
            if config.intensity_external_dir is not None:
                dump = config.intensity_external_dir / (relpath + ".rimg")
                if dump.is_file():
                    external = load_range_image_planes(dump)
            table = config.material_table or default_material_table()
            out, _ = adapt_intensity_frame(
                cloud, config.profile, table, external_planes=external
            )
            record["variant_mode"] = (
                "external" if external is not None else "physics-reference"
            )

        payload = encode_sweep(out)
        target = config.output_root / variant.value / relpath
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(payload)
        record["output_points"] = out.n_points
        record["sha256"] = hashlib.sha256(payload).hexdigest()
    except (RealityGenError, OSError, ValueError) as exc:
        record["status"] = "error"
        record["error"] = f"{type(exc).__name__}: {exc}"
    return record


def run_job(config: JobConfig) -> Manifest:
    """Run a whole batch: every enumerated frame under every variant.

    Output bytes depend only on (source bytes, config, seed); worker count
    never changes them.  The manifest is written to the output root.
    """
    layout = enumerate_frames(config.source_root, config.dataset)
    tasks = [(variant, fid) for variant in config.variants for fid in layout.frame_ids]

    records: list[dict] = []
    if config.parallelism <= 1:
        for variant, fid in tasks:
            records.append(_process_frame(config, variant, fid))
    else:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            futures = [
                pool.submit(_process_frame, config, variant, fid)
                for variant, fid in tasks
            ]
            records = [f.result() for f in futures]

    records.sort(key=lambda r: (r["variant"], r["relpath"]))
    manifest = Manifest(
        tool_version=__version__,
        config_digest=config.config_digest,
        records=records,
    )
    config.output_root.mkdir(parents=True, exist_ok=True)
    manifest.write(config.output_root / MANIFEST_NAME)
    return manifest


# --- correspondence validation ------------------------------------------------


@dataclass
class CorrespondenceReport:
    """Findings from comparing a derived tree against its source layout.

    ``point_deltas`` is informational (weather legitimately changes point
    counts); validity is decided by missing/extra/violation findings only.
    """

    missing: list[str] = field(default_factory=list)
    extra: list[str] = field(default_factory=list)
    format_violations: list[tuple[str, str]] = field(default_factory=list)
    point_deltas: dict = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return not (self.missing or self.extra or self.format_violations)

    def summary(self) -> str:
        lines = [
            f"missing={len(self.missing)} extra={len(self.extra)} "
            f"format_violations={len(self.format_violations)}"
        ]
        lines += [f"missing: {p}" for p in self.missing]
        lines += [f"extra: {p}" for p in self.extra]
        lines += [f"violation: {p}: {why}" for p, why in self.format_violations]
        return "\n".join(lines)


def validate_correspondence(source: DatasetLayout,
                            derived_root) -> CorrespondenceReport:
    """Check a derived tree pairs one-to-one with the source enumeration."""
    droot = Path(derived_root)
    fmt = source.dataset.format_tag
    report = CorrespondenceReport()

    expected = set(source.frame_ids)
    for relpath in source.frame_ids:
        target = droot / relpath
        if not target.is_file():
            report.missing.append(relpath)
            continue
        data = target.read_bytes()
        try:
            cloud = decode_sweep(data, fmt, source_path=str(target))
        except RealityGenError as exc:
            report.format_violations.append((relpath, type(exc).__name__))
            continue
        src_points = (source.root / relpath).stat().st_size // fmt.record_size
        delta = cloud.n_points - src_points
        if delta:
            report.point_deltas[relpath] = int(delta)

    found = {
        p.relative_to(droot).as_posix()
        for p in droot.rglob("*.bin") if p.is_file()
    }
    report.extra = sorted(found - expected)
    return report


# --- tree statistics (stats CLI) ----------------------------------------------


def tree_stats(root_a, root_b, profile: SensorProfile, fmt,
               bins: int = 64) -> tuple[dict, list[dict]]:
    """Distribution metrics over the frames two trees have in common.

    Returns (aggregate key/value dict, per-frame rows).  Masked-intensity
    L1 is only computed for frame pairs whose projections share a mask
    (geometry-preserving transforms).
    """
    from .metrics import cycle_loss, intensity_histogram_distance

    ra, rb = Path(root_a), Path(root_b)
    frames_a = {p.relative_to(ra).as_posix() for p in ra.rglob("*.bin")}
    frames_b = {p.relative_to(rb).as_posix() for p in rb.rglob("*.bin")}
    common = sorted(frames_a & frames_b)

    rows: list[dict] = []
    distances, l1s = [], []
    for rel in common:
        ca = read_sweep(ra / rel, fmt)
        cb = read_sweep(rb / rel, fmt)
        ia = project(ca, profile)
        ib = project(cb, profile)
        dist = intensity_histogram_distance(ia, ib, bins=bins)
        row = {
            "relpath": rel,
            "points_a": ca.n_points,
            "points_b": cb.n_points,
            "hist_distance": dist,
        }
        if np.array_equal(ia.occupancy, ib.occupancy):
            row["masked_l1"] = cycle_loss(ia, ib)
            l1s.append(row["masked_l1"])
        distances.append(dist)
        rows.append(row)

    aggregate = {
        "frames_compared": len(common),
        "frames_only_a": len(frames_a - frames_b),
        "frames_only_b": len(frames_b - frames_a),
        "mean_hist_distance": float(np.mean(distances)) if distances else float("nan"),
        "mean_masked_l1": float(np.mean(l1s)) if l1s else float("nan"),
        "mean_point_delta": (
            float(np.mean([r["points_b"] - r["points_a"] for r in rows]))
            if rows else float("nan")
        ),
    }
    return aggregate, rows
