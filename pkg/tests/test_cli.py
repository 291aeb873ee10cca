import json
import math
import subprocess
import sys

import pytest

from obsdet import EvalConfig, evaluate_dataset, simulate_dataset, sweep, theta_grid, SimulatorConfig
from obsdet.cli import main
from obsdet.io_formats import (
    load_detections,
    load_ground_truth,
    load_observations,
    load_results,
    pair_scenes,
)


SIM_ARGS = ["--scenes", "3", "--seed", "7", "--passes", "6", "--clutter-rate", "1.0"]


def simulate_files(tmp_path, extra=()):
    tmp_path.mkdir(parents=True, exist_ok=True)
    det = tmp_path / "det.json"
    gt = tmp_path / "gt.json"
    code = main(["simulate", "--output", str(det), "--ground-truth", str(gt), *SIM_ARGS, *extra])
    assert code == 0
    return det, gt


class TestSimulateCommand:
    def test_writes_valid_files(self, tmp_path):
        det, gt = simulate_files(tmp_path)
        det_file = load_detections(det)
        gt_file = load_ground_truth(gt)
        assert det_file.class_count == gt_file.class_count == 20
        assert len(det_file.images) == 3
        assert len(det_file.images[0].passes) == 6

    def test_same_seed_twice_is_byte_identical(self, tmp_path):
        det_a, gt_a = simulate_files(tmp_path / "a")
        det_b, gt_b = simulate_files(tmp_path / "b")
        assert det_a.read_bytes() == det_b.read_bytes()
        assert gt_a.read_bytes() == gt_b.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        det_a, _ = simulate_files(tmp_path / "a")
        det_b, _ = simulate_files(tmp_path / "b", extra=["--seed", "8"])
        assert det_a.read_bytes() != det_b.read_bytes()

    def test_infeasible_layout_exits_one(self, tmp_path, capsys):
        code = main(
            [
                "simulate",
                "--output", str(tmp_path / "d.json"),
                "--ground-truth", str(tmp_path / "g.json"),
                "--image-size", "300", "300",
                "--known-objects", "40",
            ]
        )
        assert code == 1
        assert "error" in capsys.readouterr().err


@pytest.fixture
def sim_paths(tmp_path):
    return simulate_files(tmp_path)


class TestFuseCommand:
    def test_writes_observations_matching_library(self, tmp_path, sim_paths):
        det, _ = sim_paths
        out = tmp_path / "obs.json"
        assert main(["fuse", "--input", str(det), "--output", str(out)]) == 0
        obs_file = load_observations(out)
        det_file = load_detections(det)
        assert [img.image_id for img in obs_file.images] == [
            img.image_id for img in det_file.images
        ]
        from obsdet import extract_observations

        for obs_img, det_img in zip(obs_file.images, det_file.images):
            flat = [d for p in det_img.passes for d in p]
            expected = extract_observations(flat)
            assert [rec.detection_count for rec in obs_img.observations] == [
                o.detection_count for o in expected
            ]

    def test_bad_cluster_iou_exits_one(self, tmp_path, sim_paths, capsys):
        det, _ = sim_paths
        code = main(["fuse", "--input", str(det), "--output", str(tmp_path / "o.json"),
                     "--cluster-iou", "0"])
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestEvaluateCommand:
    def test_prints_one_curve_point(self, sim_paths, capsys):
        det, gt = sim_paths
        code = main(
            ["evaluate", "--input", str(det), "--ground-truth", str(gt),
             "--entropy-threshold", "1.7"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload) == {"theta", "tp", "fp", "fn", "abs_ose", "precision", "recall", "f1"}
        scenes = pair_scenes(load_detections(det), load_ground_truth(gt))
        expected = evaluate_dataset(scenes, EvalConfig(theta=1.7))
        assert payload["tp"] == expected.counts.tp
        assert payload["f1"] == pytest.approx(expected.f1)

    def test_huge_theta_equals_disabled_entropy_test(self, sim_paths, capsys):
        det, gt = sim_paths
        main(["evaluate", "--input", str(det), "--ground-truth", str(gt),
              "--entropy-threshold", str(10.0)])
        with_huge = json.loads(capsys.readouterr().out)
        scenes = pair_scenes(load_detections(det), load_ground_truth(gt))
        disabled = evaluate_dataset(scenes, EvalConfig(theta=math.inf))
        assert with_huge["tp"] == disabled.counts.tp
        assert with_huge["fp"] == disabled.counts.fp
        assert with_huge["abs_ose"] == disabled.counts.abs_ose

    def test_missing_file_exits_one(self, tmp_path, capsys):
        code = main(
            ["evaluate", "--input", str(tmp_path / "nope.json"),
             "--ground-truth", str(tmp_path / "nope2.json"), "--entropy-threshold", "1"]
        )
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestSweepCommand:
    def test_writes_curve_and_summary(self, tmp_path, sim_paths, capsys):
        det, gt = sim_paths
        csv_path = tmp_path / "curve.csv"
        summary_path = tmp_path / "summary.json"
        code = main(
            ["sweep", "--input", str(det), "--ground-truth", str(gt),
             "--output", str(csv_path), "--summary-json", str(summary_path),
             "--reference-f1", "0.5", "--reference-ose", "0"]
        )
        assert code == 0
        points = load_results(csv_path)
        assert len(points) == 25
        assert points[0].theta == pytest.approx(0.1)
        assert points[-1].theta == pytest.approx(2.5)
        summary = json.loads(summary_path.read_text())
        assert "max_f1" in summary
        assert "ose_at_reference_f1" in summary
        assert "f1_at_reference_ose" in summary
        stdout = capsys.readouterr().out
        assert "max F1" in stdout

    def test_matches_in_process_pipeline(self, tmp_path, sim_paths):
        det, gt = sim_paths
        csv_path = tmp_path / "curve.csv"
        main(["sweep", "--input", str(det), "--ground-truth", str(gt), "--output", str(csv_path)])
        file_points = load_results(csv_path)

        config = SimulatorConfig(seed=7, passes=6, clutter_rate=1.0)
        scenes = [s.as_eval_scene() for s in simulate_dataset(config, 3)]
        lib_points = sweep(scenes, theta_grid(0.1, 2.5, 25), EvalConfig(theta=0.1))
        for from_file, from_lib in zip(file_points, lib_points):
            assert from_file.counts == from_lib.counts
            assert from_file.f1 == pytest.approx(from_lib.f1, abs=5e-7)

    def test_worker_count_does_not_change_the_csv(self, tmp_path, sim_paths):
        det, gt = sim_paths
        one = tmp_path / "w1.csv"
        eight = tmp_path / "w8.csv"
        main(["sweep", "--input", str(det), "--ground-truth", str(gt),
              "--output", str(one), "--workers", "1"])
        main(["sweep", "--input", str(det), "--ground-truth", str(gt),
              "--output", str(eight), "--workers", "8"])
        assert one.read_bytes() == eight.read_bytes()

    def test_perfect_dataset_reaches_precision_one(self, tmp_path):
        # every detection sits exactly on a known object with the right label
        det_payload = {
            "class_count": 2,
            "images": [
                {
                    "image_id": "img",
                    "passes": [
                        [{"bbox": [0, 0, 50, 50], "scores": [0.0, 1.0, 0.0]}],
                        [{"bbox": [0, 0, 50, 50], "scores": [0.0, 1.0, 0.0]}],
                    ],
                }
            ],
        }
        gt_payload = {
            "class_count": 2,
            "images": [
                {"image_id": "img", "objects": [{"bbox": [0, 0, 50, 50], "label": 1}]}
            ],
        }
        det = tmp_path / "det.json"
        gt = tmp_path / "gt.json"
        det.write_text(json.dumps(det_payload))
        gt.write_text(json.dumps(gt_payload))
        csv_path = tmp_path / "curve.csv"
        code = main(
            ["sweep", "--input", str(det), "--ground-truth", str(gt), "--output", str(csv_path),
             "--theta-min", "0", "--theta-max", str(math.log(3)), "--theta-steps", "5"]
        )
        assert code == 0
        final = load_results(csv_path)[-1]
        assert final.precision == 1.0
        assert final.recall == 1.0


class TestUsageErrors:
    def test_unknown_flag_exits_two(self):
        with pytest.raises(SystemExit) as err:
            main(["sweep", "--banana"])
        assert err.value.code == 2

    def test_missing_required_flag_exits_two(self):
        with pytest.raises(SystemExit) as err:
            main(["evaluate"])
        assert err.value.code == 2

    def test_no_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2

    @pytest.mark.parametrize(
        "command,expected",
        [
            ("simulate", ["42", "0.8", "1.5", "0.5", "20"]),
            ("sweep", ["0.95", "0.5", "0.1", "2.5", "25", "1"]),
            ("evaluate", ["0.95", "0.5"]),
            ("fuse", ["0.95"]),
        ],
    )
    def test_help_documents_defaults(self, command, expected, capsys):
        with pytest.raises(SystemExit) as err:
            main([command, "--help"])
        assert err.value.code == 0
        out = capsys.readouterr().out
        for token in expected:
            assert token in out


class TestConsoleScript:
    def test_module_entry_point_runs(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "obsdet.cli", "simulate",
             "--output", str(tmp_path / "d.json"),
             "--ground-truth", str(tmp_path / "g.json"),
             "--scenes", "1", "--passes", "2"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert (tmp_path / "d.json").exists()
