"""Shared fixture builders and independent oracles for the test suite."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from realitygen import (
    FormatTag,
    PointCloud,
    SensorProfile,
    random_cloud,
    write_sweep,
)


def beam_direction(elevation: float, azimuth: float) -> np.ndarray:
    return np.array(
        [
            math.cos(elevation) * math.cos(azimuth),
            math.cos(elevation) * math.sin(azimuth),
            math.sin(elevation),
        ]
    )


def pixel_center_angles(profile: SensorProfile, row: int, col: int) -> tuple[float, float]:
    """(elevation, azimuth) of a pixel center, inverting the binning rule."""
    fov_up = math.radians(profile.fov_up)
    fov_down = math.radians(profile.fov_down)
    t = (profile.channels - row - 0.5) / profile.channels
    elevation = fov_down + t * (fov_up - fov_down)
    s = (col + 0.5) / profile.width
    azimuth = math.pi * (1.0 - 2.0 * s)
    return elevation, azimuth


def make_plane_cloud(
    profile: SensorProfile,
    tilt_deg: float,
    distance: float,
    rows: range,
    cols: range,
) -> tuple[PointCloud, np.ndarray, np.ndarray]:
    """Synthetic sweep of beams hitting an analytic plane.

    The plane passes through (distance, 0, 0) with unit normal
    (cos tilt, 0, sin tilt); one point per pixel of the row/col window.
    Returns (cloud, analytic cos(theta) plane, window occupancy plane).
    """
    normal = np.array([math.cos(math.radians(tilt_deg)), 0.0,
                       math.sin(math.radians(tilt_deg))])
    anchor = np.array([distance, 0.0, 0.0])
    points, cos_map = [], {}
    for row in rows:
        for col in cols:
            elevation, azimuth = pixel_center_angles(profile, row, col)
            d = beam_direction(elevation, azimuth)
            denom = float(d @ normal)
            if abs(denom) < 1e-9:
                continue
            t = float(anchor @ normal) / denom
            if t <= 0:
                continue
            points.append(t * d)
            cos_map[(row, col)] = abs(denom)

    xyz = np.array(points, dtype=np.float32)
    cloud = PointCloud(
        xyz=xyz,
        intensity=np.full(len(points), 0.5, dtype=np.float32),
        format_tag=FormatTag.KITTI4,
    )
    analytic = np.zeros((profile.channels, profile.width))
    window = np.zeros((profile.channels, profile.width), dtype=bool)
    for (row, col), value in cos_map.items():
        analytic[row, col] = value
        window[row, col] = True
    return cloud, analytic, window


def interior(window: np.ndarray) -> np.ndarray:
    """Pixels of a window whose 4-neighbors are all inside the window."""
    inner = window.copy()
    inner &= np.roll(window, 1, axis=1) & np.roll(window, -1, axis=1)
    shifted_down = np.zeros_like(window)
    shifted_down[1:] = window[:-1]
    shifted_up = np.zeros_like(window)
    shifted_up[:-1] = window[1:]
    return inner & shifted_down & shifted_up


def brute_force_projection(cloud: PointCloud, profile: SensorProfile) -> dict:
    """Independent per-point binning: pixel -> (range, index) of the winner."""
    fov_up = math.radians(profile.fov_up)
    fov_down = math.radians(profile.fov_down)
    winners: dict[tuple[int, int], tuple[float, int]] = {}
    for i in range(cloud.n_points):
        x, y, z = (float(v) for v in cloud.xyz[i])
        r = math.sqrt(x * x + y * y + z * z)
        elevation = math.asin(max(-1.0, min(1.0, z / r)))
        if elevation < fov_down or elevation > fov_up:
            continue
        azimuth = math.atan2(y, x)
        row = math.floor((1.0 - (elevation - fov_down) / (fov_up - fov_down))
                         * profile.channels)
        col = math.floor(0.5 * (1.0 - azimuth / math.pi) * profile.width)
        row = min(max(row, 0), profile.channels - 1)
        col = min(max(col, 0), profile.width - 1)
        key = (row, col)
        if key not in winners or (r, i) < winners[key]:
            winners[key] = (r, i)
    return winners


def make_kitti_tree(root: Path, frames_per_seq: dict[str, int],
                    n_points: int = 800, with_labels: bool = False,
                    seed: int = 0) -> list[str]:
    """Miniature SemanticKITTI-style tree; returns the frame relpaths."""
    relpaths = []
    counter = seed
    gen = np.random.default_rng(seed)
    for seq, count in frames_per_seq.items():
        vel = root / "sequences" / seq / "velodyne"
        vel.mkdir(parents=True, exist_ok=True)
        if with_labels:
            (root / "sequences" / seq / "labels").mkdir(parents=True, exist_ok=True)
        for k in range(count):
            cloud = random_cloud(n_points, seed=counter)
            counter += 1
            name = f"{k:06d}.bin"
            write_sweep(cloud, vel / name)
            relpaths.append(f"sequences/{seq}/velodyne/{name}")
            if with_labels:
                labels = gen.choice(
                    [10, 40, 48, 70, 81], size=n_points
                ).astype("<u4")
                (root / "sequences" / seq / "labels" / f"{k:06d}.label").write_bytes(
                    labels.tobytes()
                )
    return sorted(relpaths)
