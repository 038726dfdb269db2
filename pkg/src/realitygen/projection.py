"""Spherical projection of sweeps to multi-channel range images and back.

The range image is the learning-facing representation: rows are elevation
channels, columns azimuth bins, and every channel (range, incidence,
reflectance, intensity, mask) is normalized to [0, 1].  The projection
records which point survived at each pixel so image-space edits can be
written back to the original point order exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import IndexMismatchError, MissingChannelsError
from .io import PointCloud

if TYPE_CHECKING:  # pragma: no cover
    from .physics import MaterialTable

# clamp floor for cos(incidence); avoids zero-intensity pixels at grazing hits
COS_INCIDENCE_FLOOR = 1e-3

CHANNEL_ORDER = ("range", "incidence", "reflectance", "intensity", "mask")

WEATHER_STYLES = ("rain", "snow")


@dataclass(frozen=True)
class SensorProfile:
    """Geometry and intensity encoding of a spinning automotive LiDAR."""

    channels: int
    fov_up: float          # degrees
    fov_down: float        # degrees
    width: int
    max_range: float       # meters
    intensity_scale: float = 1.0   # divisor taking stored intensity to [0, 1]
    name: str = ""

    def __post_init__(self) -> None:
        if self.fov_up <= self.fov_down:
            raise ValueError("fov_up must exceed fov_down")
        if self.channels < 1 or self.width < 1:
            raise ValueError("channels and width must be >= 1")
        if self.max_range <= 0 or self.intensity_scale <= 0:
            raise ValueError("max_range and intensity_scale must be positive")


# HDL-64E geometry for SemanticKITTI; VLP-32C-like geometry for nuScenes.
# Width 1048 everywhere: projection is done natively per channel count.
PROFILES = {
    "hdl64": SensorProfile(64, 2.0, -24.8, 1048, 120.0, 1.0, name="hdl64"),
    "nuscenes32": SensorProfile(32, 10.67, -30.67, 1048, 200.0, 255.0, name="nuscenes32"),
}


def get_profile(name: str) -> SensorProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise KeyError(
            f"unknown sensor profile {name!r}; known: {sorted(PROFILES)}"
        ) from None


@dataclass
class RangeImage:
    """H x W multi-channel spherical view of one sweep.

    ``pixel_to_point[r, c]`` is the index (into the source cloud) of the
    point that won the pixel, or -1.  ``mask`` is 1.0 exactly where a point
    survived; at mask-0 pixels every other channel is 0.
    """

    profile: SensorProfile
    range: np.ndarray        # (H, W) float32, min(r, max_range)/max_range
    incidence: np.ndarray    # (H, W) float32, cos(theta)
    reflectance: np.ndarray  # (H, W) float32
    intensity: np.ndarray    # (H, W) float32, stored / intensity_scale
    mask: np.ndarray         # (H, W) float32 in {0, 1}
    pixel_to_point: np.ndarray   # (H, W) int32, -1 where empty
    populated: frozenset = frozenset()
    weather_onehot: Optional[np.ndarray] = None   # (S, H, W) float32
    weather_styles: tuple = ()
    unprojected_count: int = 0

    def __post_init__(self) -> None:
        for arr in (self.range, self.incidence, self.reflectance,
                    self.intensity, self.mask, self.pixel_to_point,
                    self.weather_onehot):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def height(self) -> int:
        return self.range.shape[0]

    @property
    def width(self) -> int:
        return self.range.shape[1]

    @property
    def occupancy(self) -> np.ndarray:
        """Boolean occupancy grid derived from the mask channel."""
        return self.mask > 0.5

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNEL_ORDER:
            raise KeyError(name)
        return getattr(self, name)

    def require(self, *names: str) -> None:
        missing = [n for n in names if n not in self.populated]
        if missing:
            raise MissingChannelsError(
                f"channels never populated: {', '.join(missing)}"
            )

    def replace_channels(self, **channels: np.ndarray) -> "RangeImage":
        """Pure update: new image with the given channel planes swapped in."""
        extra = set(channels) - set(CHANNEL_ORDER) - {"pixel_to_point"}
        if extra:
            raise KeyError(f"unknown channels: {sorted(extra)}")
        new_populated = frozenset(self.populated | (set(channels) & set(CHANNEL_ORDER)))
        return replace(self, populated=new_populated, **channels)

    def surviving_indices(self) -> np.ndarray:
        """Point indices that won a pixel, in ascending point order."""
        idx = self.pixel_to_point[self.occupancy]
        return np.sort(idx)


def _zeros(h: int, w: int) -> np.ndarray:
    return np.zeros((h, w), dtype=np.float32)


def point_angles(xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(range, elevation, azimuth) per point, float64.

    Azimuth convention: atan2(y, x), x-forward, counterclockwise positive.
    """
    p = xyz.astype(np.float64)
    r = np.linalg.norm(p, axis=1)
    elevation = np.arcsin(np.clip(p[:, 2] / r, -1.0, 1.0))
    azimuth = np.arctan2(p[:, 1], p[:, 0])
    return r, elevation, azimuth


def bin_points(
    xyz: np.ndarray, profile: SensorProfile
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Angular binning: (rows, cols, in_fov, ranges) for every point.

    Rows/cols follow the floor-and-clamp rule; points with elevation
    outside [fov_down, fov_up] are flagged out-of-FOV instead of being
    clamped onto the border rows.
    """
    h, w = profile.channels, profile.width
    fov_up = np.radians(profile.fov_up)
    fov_down = np.radians(profile.fov_down)
    r, elevation, azimuth = point_angles(xyz)

    in_fov = (elevation >= fov_down) & (elevation <= fov_up)
    rows = np.floor((1.0 - (elevation - fov_down) / (fov_up - fov_down)) * h)
    cols = np.floor(0.5 * (1.0 - azimuth / np.pi) * w)
    rows = np.clip(rows, 0, h - 1).astype(np.int32)
    cols = np.clip(cols, 0, w - 1).astype(np.int32)
    return rows, cols, in_fov, r


def project(cloud: PointCloud, profile: SensorProfile) -> RangeImage:
    """Project a sweep onto the profile's spherical grid.

    Pixel collisions keep the nearer point; exactly equal ranges keep the
    lower point index.  Out-of-FOV points are counted, not projected.
    """
    h, w = profile.channels, profile.width
    rows, cols, in_fov, r = bin_points(cloud.xyz, profile)

    idx = np.flatnonzero(in_fov)
    # write in descending (range, index) order so the last write per pixel
    # is the nearest point, lowest index on ties
    order = np.lexsort((idx, r[idx]))[::-1]
    sel = idx[order]

    range_plane = _zeros(h, w)
    intensity_plane = _zeros(h, w)
    mask_plane = _zeros(h, w)
    p2p = np.full((h, w), -1, dtype=np.int32)

    rr, cc = rows[sel], cols[sel]
    range_plane[rr, cc] = (
        np.minimum(r[sel], profile.max_range) / profile.max_range
    ).astype(np.float32)
    intensity_plane[rr, cc] = np.clip(
        cloud.intensity[sel].astype(np.float64) / profile.intensity_scale, 0.0, 1.0
    ).astype(np.float32)
    mask_plane[rr, cc] = 1.0
    p2p[rr, cc] = sel.astype(np.int32)

    return RangeImage(
        profile=profile,
        range=range_plane,
        incidence=_zeros(h, w),
        reflectance=_zeros(h, w),
        intensity=intensity_plane,
        mask=mask_plane,
        pixel_to_point=p2p,
        populated=frozenset({"range", "intensity", "mask"}),
        unprojected_count=int(cloud.n_points - in_fov.sum()),
    )


def unproject(image: RangeImage, cloud: PointCloud,
              unprojected: str = "keep") -> PointCloud:
    """Write image values back onto the source cloud, in point order.

    Surviving points take the image's intensity (rescaled to stored units)
    and, when the range channel changed, a new range along the original
    beam direction; pixels whose mask was cleared drop their point.
    Points that never won a pixel are kept verbatim or dropped per
    ``unprojected`` ("keep" | "drop").
    """
    if unprojected not in ("keep", "drop"):
        raise ValueError("unprojected policy must be 'keep' or 'drop'")
    image.require("range", "intensity", "mask")
    occ = image.occupancy
    surv = image.pixel_to_point[occ]
    if surv.size and (surv.min() < 0 or surv.max() >= cloud.n_points):
        raise IndexMismatchError(
            f"pixel_to_point addresses up to {int(surv.max())} "
            f"but cloud has {cloud.n_points} points"
        )

    n = cloud.n_points
    scale = image.profile.intensity_scale
    max_range = image.profile.max_range

    new_intensity = np.asarray(cloud.intensity, dtype=np.float32).copy()
    new_xyz = np.asarray(cloud.xyz, dtype=np.float32).copy()
    if unprojected == "keep":
        keep = np.ones(n, dtype=bool)
    else:
        keep = np.zeros(n, dtype=bool)
        keep[surv] = True

    # only touch values whose channel actually changed; comparing against
    # the re-quantized original keeps untouched points bit-identical
    img_intensity = image.intensity[occ]
    orig_int_q = np.clip(
        cloud.intensity[surv].astype(np.float64) / scale, 0.0, 1.0
    ).astype(np.float32)
    altered = img_intensity != orig_int_q
    new_intensity[surv[altered]] = (
        img_intensity[altered].astype(np.float64) * scale
    ).astype(np.float32)

    r = np.linalg.norm(cloud.xyz[surv].astype(np.float64), axis=1)
    orig_q = (np.minimum(r, max_range) / max_range).astype(np.float32)
    img_range = image.range[occ]
    moved = img_range != orig_q
    if moved.any():
        midx = surv[moved]
        new_r = img_range[moved].astype(np.float64) * max_range
        factor = new_r / r[moved]
        new_xyz[midx] = (
            cloud.xyz[midx].astype(np.float64) * factor[:, None]
        ).astype(np.float32)

    sel = np.flatnonzero(keep)
    return PointCloud(
        xyz=new_xyz[sel],
        intensity=new_intensity[sel],
        format_tag=cloud.format_tag,
        ring=None if cloud.ring is None else cloud.ring[sel],
        label=None if cloud.label is None else cloud.label[sel],
        source_path=cloud.source_path,
    )


def compute_incidence(cloud: PointCloud, image: RangeImage) -> RangeImage:
    """Fill the incidence channel with cos(theta) per occupied pixel.

    Surface normals come from range-image neighbors:
    n = normalize((p_right - p_left) x (p_down - p_up)), columns wrapping
    around the azimuth seam.  Pixels lacking either a valid horizontal or
    vertical neighbor pair fall back to cos(theta) = 1.
    """
    image.require("range", "mask")
    occ = image.occupancy
    h, w = image.height, image.width

    pts = np.zeros((h, w, 3), dtype=np.float64)
    idx = image.pixel_to_point[occ]
    if idx.size and idx.max() >= cloud.n_points:
        raise IndexMismatchError("pixel_to_point does not address this cloud")
    pts[occ] = cloud.xyz[idx].astype(np.float64)

    def shift_rows(a: np.ndarray, d: int) -> np.ndarray:
        out = np.zeros_like(a)
        if d > 0:
            out[d:] = a[:-d]
        else:
            out[:d] = a[-d:]
        return out

    # columns wrap around the azimuth seam; rows do not
    p_left = np.roll(pts, 1, axis=1)
    p_right = np.roll(pts, -1, axis=1)
    m_left = np.roll(occ, 1, axis=1)
    m_right = np.roll(occ, -1, axis=1)
    p_up = shift_rows(pts, 1)
    p_down = shift_rows(pts, -1)
    m_up = shift_rows(occ, 1)
    m_down = shift_rows(occ, -1)

    has_pairs = occ & m_left & m_right & m_up & m_down
    normal = np.cross(p_right - p_left, p_down - p_up)
    norm = np.linalg.norm(normal, axis=2)
    beam = pts / np.maximum(np.linalg.norm(pts, axis=2, keepdims=True), 1e-300)

    cos_theta = np.ones((h, w), dtype=np.float64)
    usable = has_pairs & (norm > 0)
    cos_theta[usable] = np.abs(
        np.sum(normal[usable] * beam[usable], axis=1) / norm[usable]
    )
    cos_theta = np.clip(cos_theta, COS_INCIDENCE_FLOOR, 1.0)

    plane = np.zeros((h, w), dtype=np.float32)
    plane[occ] = cos_theta[occ].astype(np.float32)
    return image.replace_channels(incidence=plane)


def compute_reflectance(
    cloud: PointCloud,
    image: RangeImage,
    table: "MaterialTable | None" = None,
) -> RangeImage:
    """Fill the reflectance channel.

    With per-point semantic labels and a material table, each pixel takes
    the reflectance of its point's class.  Without labels the channel is
    the proxy clip(intensity * metric_range, 0, 1), which roughly inverts
    the 1/R falloff of the stored intensity.
    """
    image.require("range", "intensity", "mask")
    occ = image.occupancy
    idx = image.pixel_to_point[occ]
    plane = np.zeros((image.height, image.width), dtype=np.float32)

    class_ids = cloud.class_ids()
    if table is not None and class_ids is not None:
        plane[occ] = table.lookup(class_ids[idx]).astype(np.float32)
    else:
        metric_range = image.range[occ].astype(np.float64) * image.profile.max_range
        proxy = np.clip(image.intensity[occ].astype(np.float64) * metric_range, 0.0, 1.0)
        plane[occ] = proxy.astype(np.float32)
    return image.replace_channels(reflectance=plane)


def attach_weather_onehot(image: RangeImage, style: str,
                          styles: tuple = WEATHER_STYLES) -> RangeImage:
    """Attach constant one-hot planes encoding the weather style."""
    if style not in styles:
        raise ValueError(f"style {style!r} not in {styles}")
    planes = np.zeros((len(styles), image.height, image.width), dtype=np.float32)
    planes[styles.index(style)] = 1.0
    return replace(image, weather_onehot=planes, weather_styles=tuple(styles))


# --- flat binary dump (debug / cross-implementation diffing) ---------------

_HEADER = struct.Struct("<III")


def dump_range_image(image: RangeImage, path, indices_path=None) -> None:
    """Dump channels as flat binary: uint32 height, width, channel count,
    then row-major float32 planes in CHANNEL_ORDER (+ one-hot planes when
    attached).  Optional sibling file with the raw int32 index grid.
    """
    planes = [image.channel(name) for name in CHANNEL_ORDER]
    if image.weather_onehot is not None:
        planes.extend(image.weather_onehot)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(image.height, image.width, len(planes)))
        for plane in planes:
            fh.write(np.ascontiguousarray(plane, dtype="<f4").tobytes())
    if indices_path is not None:
        Path(indices_path).write_bytes(
            np.ascontiguousarray(image.pixel_to_point, dtype="<i4").tobytes()
        )


def load_range_image_planes(path) -> np.ndarray:
    """Read a dump back as a (channels, H, W) float32 block."""
    data = Path(path).read_bytes()
    h, w, c = _HEADER.unpack_from(data)
    planes = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    return planes.reshape(c, h, w).copy()
