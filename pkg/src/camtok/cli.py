"""Command-line interface.

Subcommands cover the end-to-end flow: ``trajgen`` writes a trajectory file,
``render`` reprojects a reference frame along it, ``tokenize`` turns renders
plus poses into a token dump, ``eval-pose`` compares two trajectories,
``filter`` runs the clip curation funnel over a manifest, and ``selfcheck``
exercises the library invariants on synthetic data.

Exit codes: 0 ok, 2 parse error, 3 validation error, 4 runtime error.  Every
failure prints a single machine-parsable ``error <kind>: <message>`` line on
stderr, and no partial output files are left behind.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import formats
from . import selfcheck as _selfcheck
from .camera import Intrinsics, compact_camera, normalize_to_first_frame
from .errors import CamtokError, ParseError, ValidationError
from .filtering import FilterThresholds, evaluate_clip, pipeline_report
from .geometry import DepthMap, render_sequence
from .metrics import pose_error_report
from .tokenizer import (
    CameraEmbedWeights,
    PatchEmbedderWeights,
    assemble_tokens,
    embed_camera,
    embed_rendering_mask,
)
from .trajgen import PRESET_NAMES, TrajectorySpec, generate

__all__ = ["main", "build_parser"]


def _cmd_trajgen(args) -> int:
    size = args.size
    fx = args.fx if args.fx is not None else float(size)
    fy = args.fy if args.fy is not None else float(size)
    cx = args.cx if args.cx is not None else size / 2.0
    cy = args.cy if args.cy is not None else size / 2.0
    spec = TrajectorySpec(
        preset=args.preset,
        n_frames=args.frames,
        radius=args.radius,
        distance=args.distance,
        angle_deg=args.angle,
        intrinsics=Intrinsics(fx=fx, fy=fy, cx=cx, cy=cy, width=size, height=size),
    )
    formats.write_trajectory(args.out, generate(spec))
    print(f"wrote {args.frames}-frame {args.preset} trajectory to {args.out}")
    return 0


def _cmd_render(args) -> int:
    image = formats.read_image_png(args.image)
    depth = formats.read_depth(args.depth)
    traj = formats.read_trajectory(args.trajectory)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    renders = render_sequence(image, depth, traj, threads=args.threads)
    for i, r in enumerate(renders):
        formats.write_image_png(out_dir / f"frame_{i:04d}.png", r.color)
        formats.write_mask_png(out_dir / f"mask_{i:04d}.png", r.mask)
        zb = DepthMap(r.color.width, r.color.height, r.zbuffer)
        formats.write_depth(out_dir / f"zbuf_{i:04d}.cdepth", zb)
    print(f"rendered {len(renders)} frames into {out_dir}")
    return 0


def _frame_pairs(frames_dir: Path):
    frames = sorted(frames_dir.glob("frame_*.png"))
    if not frames:
        raise ValidationError(f"no frame_*.png files in {frames_dir}")
    pairs = []
    for f in frames:
        m = frames_dir / f.name.replace("frame_", "mask_", 1)
        if not m.exists():
            raise ValidationError(f"missing mask for {f.name}")
        pairs.append((f, m))
    return pairs


def _cmd_tokenize(args) -> int:
    traj = normalize_to_first_frame(formats.read_trajectory(args.trajectory))
    pairs = _frame_pairs(Path(args.frames_dir))
    if len(pairs) != len(traj):
        raise ValidationError(
            f"{len(pairs)} rendered frames but trajectory has {len(traj)} entries"
        )
    if args.weights:
        patch_weights = formats.load_patch_weights(args.weights)
    else:
        patch_weights = PatchEmbedderWeights.default(args.patch_size, args.token_dim, args.seed)
    if args.camera_weights:
        camera_weights = formats.load_camera_weights(args.camera_weights)
    else:
        camera_weights = CameraEmbedWeights.default(patch_weights.token_dim, args.seed)
    if camera_weights.token_dim != patch_weights.token_dim:
        raise ValidationError("patch and camera weights disagree on token dim")
    visual = []
    grid_shape = None
    for frame_path, mask_path in pairs:
        img = formats.read_image_png(frame_path)
        mask = formats.read_mask_png(mask_path)
        visual.append(embed_rendering_mask(img, mask, patch_weights))
        grid_shape = (img.height // patch_weights.patch_size, img.width // patch_weights.patch_size)
    camera = [embed_camera(compact_camera(e.pose, e.intrinsics), camera_weights) for e in traj]
    seq = assemble_tokens(visual, camera, mode=args.mode, grid_shape=grid_shape)
    formats.save_tokens(args.out, seq)
    print(f"wrote {len(seq)} tokens of dim {seq.dim} ({args.mode}) to {args.out}")
    return 0


def _cmd_eval_pose(args) -> int:
    est = formats.read_trajectory(args.estimate)
    gt = formats.read_trajectory(args.reference)
    report = pose_error_report(est, gt, mode=args.mode, delta=args.delta)
    lines = [
        f"ate={formats.format_float(report.ate)}",
        f"rpe={formats.format_float(report.rpe)}",
        f"rre={formats.format_float(report.rre)}",
        f"n_frames={report.n_frames}",
        f"alignment={report.mode}",
    ]
    text = "\n".join(lines) + "\n"
    if args.out:
        formats.atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    if args.csv:
        rows = ["index,center_error,relative_translation_error,relative_rotation_error_deg"]
        for i in range(report.n_frames):
            rel_t = formats.format_float(report.per_frame_rpe[i]) if i < len(report.per_frame_rpe) else ""
            rel_r = formats.format_float(report.per_frame_rre[i]) if i < len(report.per_frame_rre) else ""
            rows.append(f"{i},{formats.format_float(report.per_frame_ate[i])},{rel_t},{rel_r}")
        formats.atomic_write_text(args.csv, "\n".join(rows) + "\n")
    return 0


def _cmd_filter(args) -> int:
    manifest_path = Path(args.manifest)
    entries = formats.read_manifest(manifest_path)
    thr = FilterThresholds(
        t_trans=args.t_trans,
        t_rot=args.t_rot,
        min_longer_side=args.min_longer_side,
        min_frames=args.min_frames,
        min_aesthetic=args.min_aesthetic,
        max_step_rotation=args.max_step_rotation,
    )

    def decide(entry):
        traj_path = Path(entry.traj_path)
        if not traj_path.is_absolute():
            traj_path = manifest_path.parent / traj_path
        traj = formats.read_trajectory(traj_path)
        return evaluate_clip(
            entry.clip_id, traj, entry.width, entry.height, entry.n_frames,
            entry.aesthetic_score, thr,
        )

    if args.threads <= 1:
        decisions = [decide(e) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            decisions = list(pool.map(decide, entries))
    report = pipeline_report(decisions)
    lines = [
        f"n_input={report.n_input}",
        f"after_motion={report.n_after_motion}",
        f"after_quality={report.n_after_quality}",
        f"reduction_motion_pct={formats.format_float(report.reduction_motion_pct())}",
        f"reduction_quality_pct={formats.format_float(report.reduction_quality_pct())}",
    ]
    for reason, count in report.reasons.items():
        lines.append(f"reject_{reason}={count}")
    text = "\n".join(lines) + "\n"
    if args.out_report:
        formats.atomic_write_text(args.out_report, text)
    else:
        sys.stdout.write(text)
    if args.csv:
        rows = ["clip_id,verdict,reject_reason"]
        rows += [f"{d.clip_id},{d.verdict},{d.reject_reason or ''}" for d in decisions]
        formats.atomic_write_text(args.csv, "\n".join(rows) + "\n")
    return 0


def _cmd_selfcheck(args) -> int:
    failures = _selfcheck.run(seed=args.seed, out=sys.stdout)
    if failures:
        raise CamtokError(f"{failures} selfcheck(s) failed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camtok",
        description="Geometry-grounded camera conditioning toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trajgen", help="generate a preset camera trajectory")
    p.add_argument("--preset", required=True, choices=PRESET_NAMES)
    p.add_argument("--frames", type=int, default=81)
    p.add_argument("--radius", type=float, default=2.0, help="orbit radius / pivot distance")
    p.add_argument("--distance", type=float, default=1.0, help="dolly travel distance")
    p.add_argument("--angle", type=float, default=None, help="sweep angle in degrees")
    p.add_argument("--fx", type=float, default=None)
    p.add_argument("--fy", type=float, default=None)
    p.add_argument("--cx", type=float, default=None)
    p.add_argument("--cy", type=float, default=None)
    p.add_argument("--size", type=int, default=256, help="square image side in pixels")
    p.add_argument("--out", required=True, help="output trajectory file")
    p.set_defaults(func=_cmd_trajgen)

    p = sub.add_parser("render", help="reproject a reference frame along a trajectory")
    p.add_argument("--image", required=True, help="reference RGB PNG")
    p.add_argument("--depth", required=True, help="reference depth (.cdepth)")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("tokenize", help="embed renders, masks and cameras into tokens")
    p.add_argument("--frames-dir", required=True, help="directory with frame_*.png and mask_*.png")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--out", required=True, help="output token dump (.cett)")
    p.add_argument("--weights", default=None, help="patch embedder weights (.cetw)")
    p.add_argument("--camera-weights", default=None, help="camera embedder weights (.cetw)")
    p.add_argument("--patch-size", type=int, default=8)
    p.add_argument("--token-dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("per_frame", "pooled"), default="per_frame")
    p.set_defaults(func=_cmd_tokenize)

    p = sub.add_parser("eval-pose", help="trajectory error metrics against a reference")
    p.add_argument("estimate")
    p.add_argument("reference")
    p.add_argument("--mode", choices=("similarity", "rigid"), default="similarity")
    p.add_argument("--delta", type=int, default=1)
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--csv", default=None, help="optional per-frame error CSV")
    p.set_defaults(func=_cmd_eval_pose)

    p = sub.add_parser("filter", help="run the clip curation funnel over a manifest")
    p.add_argument("manifest")
    p.add_argument("--out-report", default=None)
    p.add_argument("--csv", default=None, help="optional per-clip decision CSV")
    p.add_argument("--t-trans", type=float, default=0.002)
    p.add_argument("--t-rot", type=float, default=0.5)
    p.add_argument("--min-longer-side", type=int, default=360)
    p.add_argument("--min-frames", type=int, default=81)
    p.add_argument("--min-aesthetic", type=float, default=0.20)
    p.add_argument("--max-step-rotation", type=float, default=30.0,
                   help="per-step rotation above this (degrees) marks the pose track discontinuous")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("selfcheck", help="run the invariant suite on synthetic data")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_selfcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error parse: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error validation: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - uniform runtime error surface
        print(f"error runtime: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
