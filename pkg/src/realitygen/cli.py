"""Command-line entry point.

Subcommands:

* ``run``      -- execute a batch job from a config file
* ``validate`` -- check a derived tree pairs one-to-one with a source tree
* ``stats``    -- distribution metrics between two sweep trees
* ``augment``  -- weather-transform a single sweep file
* ``project``  -- dump the spherical channel block of a single sweep

Exit codes: 0 success, 1 partial failures, 2 config or I/O fatal.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .errors import RealityGenError
from .io import Dataset, FormatTag, enumerate_frames, read_sweep, write_sweep
from .physics import Weather
from .pipeline import (
    MANIFEST_NAME,
    Manifest,
    augment_frame,
    load_job_config,
    run_job,
    tree_stats,
    validate_correspondence,
)
from .projection import compute_incidence, dump_range_image, get_profile, project
from .weather import WeatherParams

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2


def _add_format_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format", default="kitti4", choices=[f.value for f in FormatTag],
        help="binary record layout of the sweep file",
    )
    parser.add_argument(
        "--drop-invalid", action="store_true",
        help="filter non-finite/zero-range points instead of rejecting the sweep",
    )


def _add_profile_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--profile", default="hdl64",
        help="sensor profile name (hdl64, nuscenes32)",
    )


def cmd_run(args: argparse.Namespace) -> int:
    config = load_job_config(args.config)
    manifest = run_job(config)
    failed = manifest.failed
    print(f"frames processed: {len(manifest.records)}, failed: {len(failed)}")
    print(f"manifest: {config.output_root / MANIFEST_NAME}")
    for rec in failed:
        print(f"  FAILED {rec['variant']}/{rec['relpath']}: {rec['error']}")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    layout = enumerate_frames(args.source, Dataset(args.dataset))
    report = validate_correspondence(layout, args.derived)
    print(report.summary())
    rc = EXIT_OK if report.is_empty else EXIT_PARTIAL
    if args.manifest:
        manifest = Manifest.read(args.manifest)
        bad = manifest.verify_checksums(Path(args.derived).parent)
        print(f"checksum mismatches: {len(bad)}")
        for p in bad:
            print(f"  checksum: {p}")
        if bad:
            rc = EXIT_PARTIAL
    return rc


def cmd_stats(args: argparse.Namespace) -> int:
    profile = get_profile(args.profile)
    aggregate, rows = tree_stats(
        args.a, args.b, profile, FormatTag(args.format), bins=args.bins
    )
    for key, value in aggregate.items():
        print(f"{key}={value}")
    if args.csv:
        fields = ["relpath", "points_a", "points_b", "hist_distance", "masked_l1"]
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: row.get(k, "") for k in fields})
        print(f"csv={args.csv}")
    return EXIT_OK


def cmd_augment(args: argparse.Namespace) -> int:
    profile = get_profile(args.profile)
    cloud = read_sweep(args.infile, FormatTag(args.format),
                       drop_invalid=args.drop_invalid)
    params = WeatherParams(
        weather=Weather(args.weather),
        rate_mm_h=args.rate,
        noise_floor=args.noise_floor,
        beam_divergence=args.beam_divergence,
        seed=args.seed,
        alpha_override=args.alpha,
        r_min=args.r_min,
    )
    out, outcome, _ = augment_frame(
        cloud, profile, params,
        unprojected="keep" if args.keep_unprojected else "drop",
    )
    write_sweep(out, args.outfile)
    s = outcome.summary
    print(
        f"alpha={outcome.alpha_used:.6g} kept={s.kept} relocated={s.relocated} "
        f"dropped={s.dropped} written={out.n_points}"
    )
    return EXIT_OK


def cmd_project(args: argparse.Namespace) -> int:
    profile = get_profile(args.profile)
    cloud = read_sweep(args.infile, FormatTag(args.format),
                       drop_invalid=args.drop_invalid)
    image = project(cloud, profile)
    if args.incidence:
        image = compute_incidence(cloud, image)
    dump_range_image(image, args.outfile, indices_path=args.indices)
    print(
        f"dumped {image.height}x{image.width} block to {args.outfile} "
        f"(unprojected={image.unprojected_count})"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="realitygen",
        description="Physics-based LiDAR sweep transformation toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a batch job from a config file")
    p_run.add_argument("--config", required=True)
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="validate a derived tree")
    p_val.add_argument("--source", required=True)
    p_val.add_argument("--derived", required=True)
    p_val.add_argument(
        "--dataset", default="semantickitti", choices=[d.value for d in Dataset]
    )
    p_val.add_argument("--manifest", default=None,
                       help="also verify manifest checksums")
    p_val.set_defaults(func=cmd_validate)

    p_stats = sub.add_parser("stats", help="metrics between two sweep trees")
    p_stats.add_argument("--a", required=True)
    p_stats.add_argument("--b", required=True)
    p_stats.add_argument("--bins", type=int, default=64)
    p_stats.add_argument("--csv", default=None)
    _add_profile_arg(p_stats)
    _add_format_arg(p_stats)
    p_stats.set_defaults(func=cmd_stats)

    p_aug = sub.add_parser("augment", help="weather-transform one sweep")
    p_aug.add_argument("--in", dest="infile", required=True)
    p_aug.add_argument("--out", dest="outfile", required=True)
    p_aug.add_argument("--weather", required=True, choices=["rain", "snow"])
    p_aug.add_argument("--rate", type=float, default=10.0, help="mm/h")
    p_aug.add_argument("--seed", type=int, default=0)
    p_aug.add_argument("--noise-floor", type=float, default=0.03)
    p_aug.add_argument("--beam-divergence", type=float, default=3e-3)
    p_aug.add_argument("--alpha", type=float, default=None,
                       help="extinction override, 1/m")
    p_aug.add_argument("--r-min", type=float, default=1.5)
    p_aug.add_argument("--keep-unprojected", action="store_true",
                       help="retain points that never won a pixel")
    _add_profile_arg(p_aug)
    _add_format_arg(p_aug)
    p_aug.set_defaults(func=cmd_augment)

    p_proj = sub.add_parser("project", help="dump the spherical channel block")
    p_proj.add_argument("--in", dest="infile", required=True)
    p_proj.add_argument("--out", dest="outfile", required=True)
    p_proj.add_argument("--indices", default=None,
                        help="also dump the int32 pixel-to-point grid")
    p_proj.add_argument("--incidence", action="store_true",
                        help="fill the incidence channel before dumping")
    _add_profile_arg(p_proj)
    _add_format_arg(p_proj)
    p_proj.set_defaults(func=cmd_project)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RealityGenError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
