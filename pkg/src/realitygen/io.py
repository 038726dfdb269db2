"""Bit-exact reading/writing of automotive LiDAR binaries and dataset trees.

Supported wire formats (little-endian float32 records, no header):

* ``KITTI4``    -- 16 bytes/point: x, y, z, intensity
* ``NUSCENES5`` -- 20 bytes/point: x, y, z, intensity, ring

I/O is transform-free: stored values (including raw intensity encoding and
ring indices) survive a read/write round trip byte-for-byte.  Semantic
label files (uint32 per point, class id in the low 16 bits) are attached
positionally.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EmptyDatasetError,
    EmptySweepError,
    LabelMismatchError,
    MissingSequenceError,
    NonFiniteValueError,
    TruncatedFileError,
    ZeroRangeError,
)


class FormatTag(Enum):
    """Binary point-record layout of a sweep file."""

    KITTI4 = "kitti4"
    NUSCENES5 = "nuscenes5"

    @property
    def floats_per_point(self) -> int:
        return 4 if self is FormatTag.KITTI4 else 5

    @property
    def record_size(self) -> int:
        return 4 * self.floats_per_point


class Dataset(Enum):
    """Known dataset layouts for frame enumeration."""

    SEMANTICKITTI = "semantickitti"
    NUSCENES = "nuscenes"
    VOXELSCAPE = "voxelscape"

    @property
    def format_tag(self) -> FormatTag:
        return FormatTag.NUSCENES5 if self is Dataset.NUSCENES else FormatTag.KITTI4


# SemanticKITTI/Voxelscape releases cover these sequences
KITTI_SEQUENCES = tuple(f"{i:02d}" for i in range(11))

# lower 16 bits of a SemanticKITTI label word hold the semantic class
_LABEL_CLASS_MASK = np.uint32(0xFFFF)


@dataclass
class PointCloud:
    """An ordered LiDAR sweep; point order is preserved verbatim from disk.

    Arrays are frozen after construction so clouds can be shared freely
    across threads.  ``intensity`` keeps the stored encoding (KITTI is
    already in [0, 1], nuScenes in [0, 255]); normalization is a
    projection-time concern.
    """

    xyz: np.ndarray                 # (n, 3) float32
    intensity: np.ndarray           # (n,) float32, raw stored values
    format_tag: FormatTag
    ring: Optional[np.ndarray] = None    # (n,) float32, stored verbatim
    label: Optional[np.ndarray] = None   # (n,) uint32 raw label words
    source_path: str = ""

    def __post_init__(self) -> None:
        self.xyz = np.ascontiguousarray(self.xyz, dtype=np.float32)
        self.intensity = np.ascontiguousarray(self.intensity, dtype=np.float32)
        if self.ring is not None:
            self.ring = np.ascontiguousarray(self.ring, dtype=np.float32)
        if self.label is not None:
            self.label = np.ascontiguousarray(self.label, dtype=np.uint32)
        for arr in (self.xyz, self.intensity, self.ring, self.label):
            if arr is not None:
                arr.flags.writeable = False

    def __len__(self) -> int:
        return self.xyz.shape[0]

    @property
    def n_points(self) -> int:
        return self.xyz.shape[0]

    def ranges(self) -> np.ndarray:
        """Euclidean range per point, float64."""
        return np.linalg.norm(self.xyz.astype(np.float64), axis=1)

    def class_ids(self) -> Optional[np.ndarray]:
        """Semantic class per point (low 16 bits of the label word)."""
        if self.label is None:
            return None
        return (self.label & _LABEL_CLASS_MASK).astype(np.uint32)

    def with_points(
        self,
        xyz: np.ndarray,
        intensity: np.ndarray,
        ring: Optional[np.ndarray] = None,
        label: Optional[np.ndarray] = None,
    ) -> "PointCloud":
        """New cloud with replaced point data, same format and provenance."""
        return PointCloud(
            xyz=xyz,
            intensity=intensity,
            format_tag=self.format_tag,
            ring=ring,
            label=label,
            source_path=self.source_path,
        )

    def take(self, indices: np.ndarray) -> "PointCloud":
        """New cloud restricted to ``indices`` (order preserved)."""
        return PointCloud(
            xyz=self.xyz[indices],
            intensity=self.intensity[indices],
            format_tag=self.format_tag,
            ring=None if self.ring is None else self.ring[indices],
            label=None if self.label is None else self.label[indices],
            source_path=self.source_path,
        )


@dataclass
class DatasetLayout:
    """Enumerated frames of a dataset root.

    ``frame_ids`` are relative paths (POSIX separators), unique and in
    lexicographic order, so a derived tree can reproduce the exact
    relative path of every frame.
    """

    root: Path
    frame_ids: list[str]
    dataset: Dataset
    sequence_ids: list[str] = field(default_factory=list)
    label_dir: Optional[str] = None

    def __len__(self) -> int:
        return len(self.frame_ids)

    def frame_path(self, frame_id: str) -> Path:
        return self.root / frame_id

    def label_path(self, frame_id: str) -> Optional[Path]:
        """Companion .label file for a frame, or None when not applicable."""
        if self.dataset is Dataset.NUSCENES:
            return None
        rel = Path(frame_id)
        if rel.parent.name != "velodyne":
            return None
        candidate = self.root / rel.parent.parent / "labels" / (rel.stem + ".label")
        return candidate


def decode_sweep(data: bytes, fmt: FormatTag, source_path: str = "",
                 drop_invalid: bool = False) -> PointCloud:
    """Decode a raw sweep buffer into a PointCloud.

    Raises TruncatedFileError when the byte length is not a multiple of
    the record size, EmptySweepError for zero points, and (unless
    ``drop_invalid``) NonFiniteValueError / ZeroRangeError for points the
    format invariants forbid.
    """
    if len(data) % fmt.record_size != 0:
        raise TruncatedFileError(
            f"{source_path or '<buffer>'}: {len(data)} bytes is not a multiple "
            f"of the {fmt.record_size}-byte {fmt.value} record"
        )
    raw = np.frombuffer(data, dtype="<f4").reshape(-1, fmt.floats_per_point)
    if raw.shape[0] == 0:
        raise EmptySweepError(f"{source_path or '<buffer>'}: sweep has no points")

    finite = np.isfinite(raw).all(axis=1)
    nonzero = (raw[:, 0] != 0) | (raw[:, 1] != 0) | (raw[:, 2] != 0)
    if drop_invalid:
        keep = finite & nonzero
        if not keep.all():
            raw = raw[keep]
        if raw.shape[0] == 0:
            raise EmptySweepError(
                f"{source_path or '<buffer>'}: no valid points after filtering"
            )
    else:
        if not finite.all():
            bad = int(np.flatnonzero(~finite)[0])
            raise NonFiniteValueError(
                f"{source_path or '<buffer>'}: non-finite value at point {bad}"
            )
        if not nonzero.all():
            bad = int(np.flatnonzero(~nonzero)[0])
            raise ZeroRangeError(
                f"{source_path or '<buffer>'}: zero-range point at index {bad}"
            )

    ring = raw[:, 4].copy() if fmt is FormatTag.NUSCENES5 else None
    return PointCloud(
        xyz=raw[:, :3].copy(),
        intensity=raw[:, 3].copy(),
        format_tag=fmt,
        ring=ring,
        source_path=source_path,
    )


def encode_sweep(cloud: PointCloud) -> bytes:
    """Serialize a cloud back to its wire format, byte-exactly."""
    n = cloud.n_points
    cols = [cloud.xyz, cloud.intensity.reshape(n, 1)]
    if cloud.format_tag is FormatTag.NUSCENES5:
        ring = cloud.ring
        if ring is None:
            ring = np.zeros(n, dtype=np.float32)
        cols.append(ring.reshape(n, 1))
    rec = np.concatenate(cols, axis=1).astype("<f4", copy=False)
    return rec.tobytes()


def read_sweep(path: str | os.PathLike, fmt: FormatTag,
               drop_invalid: bool = False) -> PointCloud:
    """Read a sweep file; see :func:`decode_sweep` for the error contract."""
    p = Path(path)
    data = p.read_bytes()
    return decode_sweep(data, fmt, source_path=str(p), drop_invalid=drop_invalid)


def write_sweep(cloud: PointCloud, path: str | os.PathLike) -> None:
    """Write a cloud in its native record format (n_points * record_size bytes)."""
    Path(path).write_bytes(encode_sweep(cloud))


def read_labels(path: str | os.PathLike) -> np.ndarray:
    """Read a SemanticKITTI-style label file (one uint32 word per point)."""
    data = Path(path).read_bytes()
    if len(data) % 4 != 0:
        raise TruncatedFileError(f"{path}: label file length not a multiple of 4")
    return np.frombuffer(data, dtype="<u4").copy()


def attach_labels(cloud: PointCloud, labels: np.ndarray) -> PointCloud:
    """Attach a positional label array to a cloud (counts must match)."""
    if labels.shape[0] != cloud.n_points:
        raise LabelMismatchError(
            f"{labels.shape[0]} labels for {cloud.n_points} points"
        )
    return PointCloud(
        xyz=cloud.xyz,
        intensity=cloud.intensity,
        format_tag=cloud.format_tag,
        ring=cloud.ring,
        label=labels,
        source_path=cloud.source_path,
    )


def _relpaths(root: Path, sub: Path, suffix: str) -> list[str]:
    return sorted(
        p.relative_to(root).as_posix()
        for p in sub.rglob(f"*{suffix}")
        if p.is_file()
    )


def enumerate_frames(root: str | os.PathLike, dataset: Dataset,
                     keyframe_dir: str = "samples/LIDAR_TOP") -> DatasetLayout:
    """Enumerate the sweep files of a dataset root.

    SemanticKITTI / Voxelscape: frames of ``sequences/00..10/velodyne``
    only; sequences absent from that set are warned about, not fatal.
    nuScenes: every ``.bin`` under ``keyframe_dir``.  Ordering is
    lexicographic by relative path and stable across runs.
    """
    rootp = Path(root)
    if not rootp.is_dir():
        raise EmptyDatasetError(f"dataset root does not exist: {rootp}")

    if dataset is Dataset.NUSCENES:
        sweep_dir = rootp / keyframe_dir
        if not sweep_dir.is_dir():
            raise MissingSequenceError(f"keyframe directory missing: {sweep_dir}")
        frame_ids = _relpaths(rootp, sweep_dir, ".bin")
        if not frame_ids:
            raise EmptyDatasetError(f"no sweep files under {sweep_dir}")
        return DatasetLayout(root=rootp, frame_ids=frame_ids, dataset=dataset)

    seq_root = rootp / "sequences"
    if not seq_root.is_dir():
        raise MissingSequenceError(f"sequence directory missing: {seq_root}")
    frame_ids: list[str] = []
    present: list[str] = []
    for seq in KITTI_SEQUENCES:
        vel = seq_root / seq / "velodyne"
        if not vel.is_dir():
            warnings.warn(f"sequence {seq} absent under {seq_root}", stacklevel=2)
            continue
        present.append(seq)
        frame_ids.extend(_relpaths(rootp, vel, ".bin"))
    if not frame_ids:
        raise EmptyDatasetError(f"no frames in sequences 00-10 under {rootp}")
    frame_ids.sort()
    return DatasetLayout(
        root=rootp, frame_ids=frame_ids, dataset=dataset, sequence_ids=present
    )


def random_cloud(
    n_points: int,
    fmt: FormatTag = FormatTag.KITTI4,
    seed: int = 0,
    max_range: float = 80.0,
    rings: int = 64,
) -> PointCloud:
    """Deterministic synthetic sweep for tests, demos, and fixtures.

    Points are drawn over the full azimuth circle with elevations inside a
    typical automotive FOV; intensities follow the stored-value convention
    of ``fmt``.
    """
    gen = np.random.default_rng(seed)
    r = gen.uniform(2.0, max_range, n_points)
    az = gen.uniform(-np.pi, np.pi, n_points)
    el = gen.uniform(np.radians(-24.0), np.radians(2.0), n_points)
    xyz = np.stack(
        [r * np.cos(el) * np.cos(az), r * np.cos(el) * np.sin(az), r * np.sin(el)],
        axis=1,
    ).astype(np.float32)
    if fmt is FormatTag.NUSCENES5:
        intensity = gen.uniform(0.0, 255.0, n_points).astype(np.float32)
        ring = gen.integers(0, rings, n_points).astype(np.float32)
    else:
        intensity = gen.uniform(0.0, 1.0, n_points).astype(np.float32)
        ring = None
    return PointCloud(xyz=xyz, intensity=intensity, format_tag=fmt, ring=ring)
