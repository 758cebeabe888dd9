"""The command-line front end, driven in-process through main(argv)."""

import json
import os

import numpy as np
import pytest

from ikrnet.bench import ablation_from_csv, read_report, synthetic_hr_suite
from ikrnet.cli import build_parser, main
from ikrnet.degrade import delta_kernel, save_kernel
from ikrnet.images import load_png, psnr, save_png
from ikrnet.weights import load_weights


@pytest.fixture
def hr_png(tmp_path):
    img = synthetic_hr_suite(count=1, size=64, seed=4)[0]
    path = tmp_path / "hr.png"
    save_png(path, img)
    return path


class TestDegradeCommand:
    def test_near_delta_kernel_keeps_image(self, tmp_path, hr_png):
        out = tmp_path / "lr.png"
        code = main(["degrade", "--input", str(hr_png), "--output", str(out),
                     "--scale", "1", "--gauss", "0.2,0.2,0"])
        assert code == 0
        a = load_png(hr_png)
        b = load_png(out)
        assert np.max(np.abs(a - b)) <= 2.0 / 255.0

    def test_deterministic_bytes(self, tmp_path, hr_png):
        outs = []
        for name in ("a.png", "b.png"):
            out = tmp_path / name
            code = main(["degrade", "--input", str(hr_png), "--output", str(out),
                         "--scale", "2", "--motion", "9001,0.5",
                         "--sigma", "0.02", "--seed", "11"])
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_kernel_out_artifact(self, tmp_path, hr_png):
        out = tmp_path / "lr.png"
        kout = tmp_path / "k.ikrw"
        code = main(["degrade", "--input", str(hr_png), "--output", str(out),
                     "--scale", "2", "--gauss", "1.5,1.0,0.3",
                     "--kernel-out", str(kout)])
        assert code == 0
        store = load_weights(kout)
        assert "kernel" in store
        assert store["kernel"].shape == (21, 21)

    def test_indivisible_scale_is_runtime_error(self, tmp_path, hr_png):
        code = main(["degrade", "--input", str(hr_png), "--output",
                     str(tmp_path / "x.png"), "--scale", "3", "--gauss", "1,1,0"])
        assert code == 2  # 64 is not divisible by 3

    def test_kernel_flags_are_exclusive(self, tmp_path, hr_png):
        code = main(["degrade", "--input", str(hr_png), "--output",
                     str(tmp_path / "x.png"), "--scale", "2",
                     "--gauss", "1,1,0", "--motion", "1,0.5"])
        assert code == 1


class TestSrCommand:
    def test_nonblind_delta_identity(self, tmp_path, hr_png):
        kpath = tmp_path / "delta.ikrw"
        save_kernel(kpath, delta_kernel())
        out = tmp_path / "sr.png"
        code = main(["sr", "--input", str(hr_png), "--output", str(out),
                     "--scale", "1", "--kernel", str(kpath),
                     "--noise", "known:0", "--iters", "8"])
        assert code == 0
        assert psnr(load_png(out), load_png(hr_png)) > 50.0

    def test_blind_run_with_artifacts(self, tmp_path, hr_png):
        out = tmp_path / "sr.png"
        kout = tmp_path / "k.ikrw"
        kpng = tmp_path / "k.png"
        trace = tmp_path / "trace.jsonl"
        snaps = tmp_path / "snaps"
        code = main(["sr", "--input", str(hr_png), "--output", str(out),
                     "--scale", "2", "--iters", "3", "--noise", "zero",
                     "--kernel-out", str(kout), "--kernel-png", str(kpng),
                     "--trace", str(trace), "--trace-images", str(snaps)])
        assert code == 0
        assert load_png(out).shape == (1, 128, 128)
        kernel = load_weights(kout)["kernel"]
        assert kernel.min() >= 0.0
        assert abs(kernel.sum() - 1.0) <= 1e-5  # float32 storage
        assert kpng.exists()
        records = [json.loads(l) for l in trace.read_text().strip().splitlines()]
        assert len(records) == 3
        assert all(r["sigma"] == 0.0 for r in records)
        assert (snaps / "iter01_image.png").exists()

    def test_bad_noise_flag(self, tmp_path, hr_png):
        code = main(["sr", "--input", str(hr_png), "--output",
                     str(tmp_path / "x.png"), "--scale", "2", "--noise", "loud"])
        assert code == 1

    def test_missing_input_is_runtime_error(self, tmp_path):
        code = main(["sr", "--input", str(tmp_path / "absent.png"),
                     "--output", str(tmp_path / "x.png"), "--scale", "2"])
        assert code == 2

    def test_weights_default_from_environment(self, monkeypatch):
        monkeypatch.setenv("IKR_WEIGHTS", "/some/weights.ikrw")
        args = build_parser().parse_args(
            ["sr", "--input", "a", "--output", "b", "--scale", "2"])
        assert args.weights == "/some/weights.ikrw"


class TestOracleCheckCommand:
    def test_passes_on_healthy_solver(self, capsys):
        code = main(["oracle-check", "--trials", "3", "--max-size", "12",
                     "--scales", "1,2"])
        assert code == 0
        out = capsys.readouterr().out
        assert "oracle agreement: OK" in out
        assert "instances: 6" in out

    def test_scale_one_only(self):
        assert main(["oracle-check", "--trials", "2", "--scales", "1"]) == 0

    def test_corruption_is_detected(self, capsys):
        code = main(["oracle-check", "--trials", "2", "--max-size", "10",
                     "--scales", "2", "--corrupt-block-avg"])
        assert code == 2
        assert "oracle agreement: FAIL" in capsys.readouterr().out


class TestKernelsCommand:
    def test_writes_battery_and_contact_sheet(self, tmp_path):
        out = tmp_path / "kernels"
        assert main(["kernels", "--out", str(out)]) == 0
        binaries = sorted(p.name for p in out.glob("kernel_*.ikrw"))
        texts = sorted(p.name for p in out.glob("kernel_*.txt"))
        assert len(binaries) == 12
        assert len(texts) == 12
        sheet = load_png(out / "contact_sheet.png")
        assert sheet.shape[0] == 1
        for p in out.glob("kernel_*.ikrw"):
            k = load_weights(p)["kernel"]
            assert k.min() >= 0.0
            assert abs(k.sum() - 1.0) <= 1e-5


class TestBenchCommand:
    def test_report_over_directory(self, tmp_path):
        hr_dir = tmp_path / "hr"
        hr_dir.mkdir()
        for i, img in enumerate(synthetic_hr_suite(count=2, size=64, seed=8)):
            save_png(hr_dir / f"im{i}.png", img)
        report_path = tmp_path / "report.csv"
        code = main(["bench", "--hr-dir", str(hr_dir), "--report", str(report_path),
                     "--scale", "2", "--iters", "2", "--noise", "zero"])
        assert code == 0
        report = read_report(report_path)
        assert len(report.rows) == 24
        assert {r.image for r in report.rows} == {"im0.png", "im1.png"}
        assert report.mean("psnr_db") > 0.0

    def test_empty_directory_is_runtime_error(self, tmp_path):
        hr_dir = tmp_path / "empty"
        hr_dir.mkdir()
        code = main(["bench", "--hr-dir", str(hr_dir),
                     "--report", str(tmp_path / "r.csv"), "--scale", "2"])
        assert code == 2


class TestParserContract:
    @pytest.mark.parametrize("argv", [
        ["--help"],
        ["degrade", "--help"],
        ["sr", "--help"],
        ["oracle-check", "--help"],
        ["bench", "--help"],
        ["kernels", "--help"],
    ])
    def test_help_exits_zero(self, argv, capsys):
        assert main(argv) == 0
        capsys.readouterr()

    def test_unknown_flag_exits_one(self, capsys):
        assert main(["oracle-check", "--frobnicate"]) == 1
        capsys.readouterr()

    def test_missing_required_exits_one(self, capsys):
        assert main(["degrade", "--scale", "2"]) == 1
        capsys.readouterr()

    def test_unknown_command_exits_one(self, capsys):
        assert main(["transmogrify"]) == 1
        capsys.readouterr()
