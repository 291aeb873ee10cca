"""Command-line frontend: simulate, fuse, evaluate, and sweep subcommands.

Defaults encode the evaluation protocol this tool exists to run: entropy
thresholds swept from 0.1 to 2.5, clustering IoU 0.95, matching IoU 0.5,
and 42 forward passes, so a bare invocation reproduces the intended
experiment shape. Results go to files or stdout; diagnostics go to
stderr. Exit codes: 0 on success, 1 on validation/data errors, 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .evaluation import (
    CurvePoint,
    EvalConfig,
    analyze_curve,
    evaluate_dataset,
    sweep,
    theta_grid,
)
from .fusion import extract_observations
from .io_formats import (
    DetectionFile,
    DetectionImage,
    FileFormatError,
    GroundTruthFile,
    GroundTruthImage,
    ObservationFile,
    ObservationImage,
    load_detections,
    load_ground_truth,
    observation_record,
    pair_scenes,
    save_detections,
    save_ground_truth,
    save_observations,
    save_results,
)
from .simulator import PlacementError, SimulatorConfig, simulate_dataset


def _add_eval_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="detection JSON file")
    parser.add_argument("--ground-truth", required=True, help="ground-truth JSON file")
    parser.add_argument("--cluster-iou", type=float, default=0.95,
                        help="IoU threshold for grouping detections into observations")
    parser.add_argument("--match-iou", type=float, default=0.5,
                        help="IoU threshold for matching observations to ground truth")
    parser.add_argument("--min-detections", type=int, default=1,
                        help="minimum detections per observation")
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel workers for per-scene evaluation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obsdet",
        description="Fuse multi-pass detections into observations and score them "
                    "under open-set conditions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser(
        "simulate",
        help="generate a synthetic multi-pass detection dataset",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p_sim.add_argument("--output", required=True, help="detection JSON file to write")
    p_sim.add_argument("--ground-truth", required=True, help="ground-truth JSON file to write")
    p_sim.add_argument("--scenes", type=int, default=10, help="number of scenes to simulate")
    p_sim.add_argument("--seed", type=int, default=0, help="master RNG seed")
    p_sim.add_argument("--passes", type=int, default=42, help="forward passes per scene")
    p_sim.add_argument("--image-size", type=float, nargs=2, default=(1280.0, 960.0),
                       metavar=("WIDTH", "HEIGHT"), help="image size in pixels")
    p_sim.add_argument("--known-objects", type=int, default=4, help="known objects per scene")
    p_sim.add_argument("--unknown-objects", type=int, default=2,
                       help="unknown (open-set) objects per scene")
    p_sim.add_argument("--classes", type=int, default=20, help="number of known classes")
    p_sim.add_argument("--p-det", type=float, default=0.8,
                       help="per-pass detection probability per object")
    p_sim.add_argument("--box-sigma", type=float, default=1.5,
                       help="box corner jitter standard deviation (pixels)")
    p_sim.add_argument("--alpha-hi", type=float, default=20.0,
                       help="score concentration on the target class")
    p_sim.add_argument("--alpha-lo", type=float, default=0.5,
                       help="score concentration elsewhere")
    p_sim.add_argument("--confusion-size", type=int, default=3,
                       help="classes an unknown object flickers between")
    p_sim.add_argument("--clutter-rate", type=float, default=0.5,
                       help="expected spurious detections per pass")

    p_fuse = sub.add_parser(
        "fuse",
        help="partition detections and write fused observations",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p_fuse.add_argument("--input", required=True, help="detection JSON file")
    p_fuse.add_argument("--output", required=True, help="observation JSON file to write")
    p_fuse.add_argument("--cluster-iou", type=float, default=0.95,
                        help="IoU threshold for grouping detections into observations")

    p_eval = sub.add_parser(
        "evaluate",
        help="score a dataset at one entropy threshold",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_eval_flags(p_eval)
    p_eval.add_argument("--entropy-threshold", type=float, required=True,
                        help="reject observations with fused entropy above this")

    p_sweep = sub.add_parser(
        "sweep",
        help="score a dataset across a grid of entropy thresholds",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_eval_flags(p_sweep)
    p_sweep.add_argument("--output", required=True, help="CSV file for the curve")
    p_sweep.add_argument("--theta-min", type=float, default=0.1, help="lowest entropy threshold")
    p_sweep.add_argument("--theta-max", type=float, default=2.5, help="highest entropy threshold")
    p_sweep.add_argument("--theta-steps", type=int, default=25, help="number of grid points")
    p_sweep.add_argument("--reference-f1", type=float, default=None,
                         help="report the lowest open-set error among points with at least this F1")
    p_sweep.add_argument("--reference-ose", type=float, default=None,
                         help="report the best F1 among points with at most this open-set error")
    p_sweep.add_argument("--summary-json", default=None,
                         help="also write the summary as JSON to this path")
    return parser


def _point_dict(point: CurvePoint) -> dict:
    return {
        "theta": point.theta,
        "tp": point.counts.tp,
        "fp": point.counts.fp,
        "fn": point.counts.fn,
        "abs_ose": point.counts.abs_ose,
        "precision": point.precision,
        "recall": point.recall,
        "f1": point.f1,
    }


def _cmd_simulate(args) -> int:
    config = SimulatorConfig(
        image_size=tuple(args.image_size),
        num_known_objects=args.known_objects,
        num_unknown_objects=args.unknown_objects,
        class_count=args.classes,
        passes=args.passes,
        p_det=args.p_det,
        box_sigma=args.box_sigma,
        alpha_hi=args.alpha_hi,
        alpha_lo=args.alpha_lo,
        confusion_size=args.confusion_size,
        clutter_rate=args.clutter_rate,
        seed=args.seed,
    )
    scenes = simulate_dataset(config, args.scenes)
    image_ids = [f"scene_{i:05d}" for i in range(len(scenes))]
    save_detections(
        DetectionFile(
            class_count=config.class_count,
            images=[
                DetectionImage(image_id=image_id, passes=[list(p) for p in scene.passes])
                for image_id, scene in zip(image_ids, scenes)
            ],
        ),
        args.output,
    )
    save_ground_truth(
        GroundTruthFile(
            class_count=config.class_count,
            images=[
                GroundTruthImage(image_id=image_id, objects=list(scene.ground_truth))
                for image_id, scene in zip(image_ids, scenes)
            ],
        ),
        args.ground_truth,
    )
    print(f"wrote {len(scenes)} scenes to {args.output} and {args.ground_truth}", file=sys.stderr)
    return 0


def _cmd_fuse(args) -> int:
    detections = load_detections(args.input)
    if not 0.0 < args.cluster_iou <= 1.0:
        raise ValueError(f"--cluster-iou must be in (0, 1], got {args.cluster_iou}")
    images = []
    for image in detections.images:
        flat = [det for dets in image.passes for det in dets]
        observations = extract_observations(flat, args.cluster_iou)
        images.append(
            ObservationImage(
                image_id=image.image_id,
                observations=[observation_record(obs) for obs in observations],
            )
        )
    save_observations(ObservationFile(class_count=detections.class_count, images=images), args.output)
    return 0


def _eval_config(args, theta: float) -> EvalConfig:
    return EvalConfig(
        theta=theta,
        match_iou=args.match_iou,
        min_detections=args.min_detections,
        cluster_iou=args.cluster_iou,
    )


def _load_scenes(args):
    detections = load_detections(args.input)
    ground_truth = load_ground_truth(args.ground_truth)
    return pair_scenes(detections, ground_truth)


def _cmd_evaluate(args) -> int:
    scenes = _load_scenes(args)
    config = _eval_config(args, args.entropy_threshold)
    point = evaluate_dataset(scenes, config, workers=args.workers)
    print(json.dumps(_point_dict(point)))
    return 0


def _cmd_sweep(args) -> int:
    scenes = _load_scenes(args)
    config = _eval_config(args, theta=args.theta_min)
    grid = theta_grid(args.theta_min, args.theta_max, args.theta_steps)
    points = sweep(scenes, grid, config, workers=args.workers)
    save_results(points, args.output)

    summary = analyze_curve(points, reference_f1=args.reference_f1, reference_ose=args.reference_ose)
    payload: dict = {"max_f1": _point_dict(summary.max_f1)}
    lines = [
        "max F1 {f1:.6f} at theta {theta:.6f} (abs OSE {ose})".format(
            f1=summary.max_f1.f1, theta=summary.max_f1.theta, ose=summary.max_f1.abs_ose
        )
    ]
    if args.reference_f1 is not None:
        payload["reference_f1"] = args.reference_f1
        point = summary.at_reference_f1
        payload["ose_at_reference_f1"] = _point_dict(point) if point else "unattainable"
        lines.append(
            f"abs OSE at reference F1 {args.reference_f1:.6f}: "
            + (f"{point.abs_ose} at theta {point.theta:.6f}" if point else "unattainable")
        )
    if args.reference_ose is not None:
        payload["reference_ose"] = args.reference_ose
        point = summary.at_reference_ose
        payload["f1_at_reference_ose"] = _point_dict(point) if point else "unattainable"
        lines.append(
            f"F1 at reference abs OSE {args.reference_ose:.6f}: "
            + (f"{point.f1:.6f} at theta {point.theta:.6f}" if point else "unattainable")
        )
    print("\n".join(lines))
    if args.summary_json:
        with open(args.summary_json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fuse": _cmd_fuse,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (FileFormatError, PlacementError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
