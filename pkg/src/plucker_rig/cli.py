"""Command-line front end.

Thin adapters over the library: every subcommand parses arguments, calls the
corresponding operation, and maps package errors to exit code 1 with a
single-line diagnostic on stderr. Usage errors exit 2 (argparse default).
Randomized commands require an explicit --seed; there is no wall-clock
default. Machine artifacts go to --out paths; human-readable summaries go to
stdout.

The environment variable PLUCKER_RIG_THREADS (0 = auto) caps internal
parallelism. Current operations are elementwise numpy kernels that run on a
single thread, so any cap is trivially honored.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import tensorio, toylab
from .errors import PluckerRigError
from .geometry import ray_map, recover_camera_center
from .schedule import PoseSamplerConfig, sample_lookat_pose, stair_schedule
from .transforms import CropRect, crop_intrinsics, joint_crop


def _load_image(path, width: int, height: int) -> np.ndarray:
    from PIL import Image  # imported lazily; only gen-raymap --with-image needs it

    with Image.open(path) as img:
        rgb = img.convert("RGB")
        if rgb.size != (width, height):
            raise PluckerRigError(
                f"image {path} is {rgb.size[0]}x{rgb.size[1]}, camera expects "
                f"{width}x{height}"
            )
        return np.asarray(rgb, dtype=np.float64) / 255.0


def _cmd_gen_raymap(args) -> int:
    doc = tensorio.read_cameras(args.cameras)
    cam = doc.get(args.camera_id)
    rm = ray_map(cam.intrinsics, cam.pose)
    image = None
    if args.with_image:
        image = _load_image(args.with_image, cam.intrinsics.width, cam.intrinsics.height)
    tensorio.write_raymap(rm, args.out, image=image)
    print(f"wrote {rm.height}x{rm.width} ray-map for camera {cam.id!r} to {args.out}")
    return 0


def _cmd_validate(args) -> int:
    rm, image = tensorio.read_raymap(args.path, validate=False)
    scale = 1.0 + float(np.abs(rm.data).max())
    try:
        rm.validate(tol=args.tol, center_residual_tol=args.tol * scale)
    except ValueError as exc:
        print(f"validate: {exc}", file=sys.stderr)
        return 1
    channels = 9 if image is not None else 6
    print(f"{args.path}: valid {rm.height}x{rm.width}x{channels} ray-map (tol {args.tol:g})")
    return 0


def _parse_rect(text: str) -> CropRect:
    parts = text.split(",")
    if len(parts) != 4:
        raise PluckerRigError(f"--rect must be x0,y0,w,h, got {text!r}")
    try:
        x0, y0, w, h = (int(p) for p in parts)
    except ValueError as exc:
        raise PluckerRigError(f"--rect must be four integers, got {text!r}") from exc
    return CropRect(x0=x0, y0=y0, w=w, h=h)


def _cmd_crop(args) -> int:
    rect = _parse_rect(args.rect)
    rm, image = tensorio.read_raymap(args.input)
    if image is None:
        # crop the ray-map alone; a zero-width image carries the shape check
        _, cropped_rm = joint_crop(np.zeros((rm.height, rm.width, 0)), rm, rect)
        tensorio.write_raymap(cropped_rm, args.output)
    else:
        cropped_img, cropped_rm = joint_crop(image, rm, rect)
        tensorio.write_raymap(cropped_rm, args.output, image=cropped_img)
    if args.cameras and args.camera_id:
        doc = tensorio.read_cameras(args.cameras)
        cam = doc.get(args.camera_id)
        intr = crop_intrinsics(cam.intrinsics, rect)
        print(
            json.dumps(
                {
                    "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
                    "skew": intr.skew, "width": intr.width, "height": intr.height,
                }
            )
        )
    else:
        print(f"wrote cropped ray-map to {args.output}")
    return 0


def _cmd_schedule(args) -> int:
    sched = stair_schedule(args.episodes, args.n, args.m, start_index=args.start_index)
    text = json.dumps(tensorio.schedule_to_json(sched), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_sample_poses(args) -> int:
    with open(args.config, "r", encoding="utf-8") as f:
        raw = json.load(f)
    sampler_raw = raw.get("sampler", {})
    cfg = PoseSamplerConfig(
        azimuth_deg=tuple(sampler_raw.get("azimuth_deg", (-90.0, 90.0))),
        elevation_deg=tuple(sampler_raw.get("elevation_deg", (30.0, 60.0))),
        radius_m=tuple(sampler_raw.get("radius_m", (0.8, 1.2))),
        target_box=tuple(tuple(b) for b in sampler_raw.get(
            "target_box", ((-0.1, -0.1, -0.1), (0.1, 0.1, 0.1)))),
        up=tuple(sampler_raw.get("up", (0.0, 0.0, 1.0))),
    )
    intr_raw = raw["intrinsics"]
    from .geometry import Intrinsics

    intr = Intrinsics(
        fx=float(intr_raw["fx"]), fy=float(intr_raw["fy"]),
        cx=float(intr_raw["cx"]), cy=float(intr_raw["cy"]),
        width=int(intr_raw["width"]), height=int(intr_raw["height"]),
        skew=float(intr_raw.get("skew", 0.0)),
    )
    rng = np.random.default_rng(args.seed)
    cameras = tuple(
        tensorio.CameraEntry(id=f"cam{i:03d}", intrinsics=intr, pose=sample_lookat_pose(rng, cfg))
        for i in range(args.count)
    )
    doc = tensorio.CamerasDoc(cameras=cameras)
    tensorio.write_cameras(doc, args.out)
    print(f"wrote {args.count} sampled cameras to {args.out}")
    return 0


def _cmd_convert_actions(args) -> int:
    traj = tensorio.read_trajectory(args.input)
    if traj.space != args.from_space:
        raise PluckerRigError(
            f"input file is in space {traj.space!r}, --from says {args.from_space!r}"
        )
    from .actions import convert

    out = convert(traj, args.to_space, rot_frame=args.rot_frame)
    tensorio.write_trajectory(out, args.output)
    print(f"converted {len(out)} steps: {args.from_space} -> {args.to_space}")
    return 0


def _cmd_recover_center(args) -> int:
    rm, _ = tensorio.read_raymap(args.path)
    center, residual = recover_camera_center(rm)
    print(f"center: {center[0]:.9f} {center[1]:.9f} {center[2]:.9f}")
    print(f"residual: {residual:.3e}")
    return 0


def _cmd_toy_run(args) -> int:
    report = toylab.toy_run(args.variant, args.seed)
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)
        f.write("\n")
    print(
        f"variant={args.variant} seed={args.seed} rmse={report['rmse']:.4f} "
        f"oracle={report['oracle_rmse']:.2e} mean_pred={report['mean_predictor_rmse']:.4f}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plucker-rig",
        description="Plucker ray-map generation and camera-conditioning tooling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-raymap", help="generate a ray-map file from a cameras document")
    p.add_argument("--cameras", required=True)
    p.add_argument("--camera-id", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--with-image", default=None, help="attach an RGB image (9-channel file)")
    p.set_defaults(func=_cmd_gen_raymap)

    p = sub.add_parser("validate", help="check a ray-map file's header, CRC, and invariants")
    p.add_argument("path")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("crop", help="jointly crop a ray-map file (and its image channels)")
    p.add_argument("--rect", required=True, help="x0,y0,w,h")
    p.add_argument("--cameras", default=None, help="emit cropped intrinsics for this camera")
    p.add_argument("--camera-id", default=None)
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=_cmd_crop)

    p = sub.add_parser("schedule", help="emit a stair camera schedule document")
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--start-index", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("sample-poses", help="sample randomized look-at cameras")
    p.add_argument("--config", required=True, help="JSON with intrinsics and sampler ranges")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample_poses)

    p = sub.add_parser("convert-actions", help="convert a trajectory between action spaces")
    p.add_argument("--from", dest="from_space", required=True,
                   choices=["abs_ee", "delta_ee", "abs_joint", "delta_joint"])
    p.add_argument("--to", dest="to_space", required=True,
                   choices=["abs_ee", "delta_ee", "abs_joint", "delta_joint"])
    p.add_argument("--rot-frame", choices=["world", "ee"], default="world")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=_cmd_convert_actions)

    p = sub.add_parser("recover-center", help="recover the camera center from a ray-map file")
    p.add_argument("path")
    p.set_defaults(func=_cmd_recover_center)

    p = sub.add_parser("toy-run", help="run the stereo-localization toy experiment")
    p.add_argument("--variant", required=True, choices=list(toylab.VARIANTS))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_toy_run)

    return parser


def run(argv=None) -> int:
    """Dispatch one command; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PluckerRigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
