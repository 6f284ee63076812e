import csv
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from conftest import save_gray, write_job
from hologen import cli
from hologen.cli import build_parser, format_value, generate_job, main
from hologen.config import load_config
from hologen.field import load_target, read_field, write_field
from hologen.propagation import ifftshift
from hologen.quantise import SlmSpec, gray_to_levels


def _files(d):
    return sorted(p.name for p in d.iterdir())


def test_generate_writes_artifacts(tmp_path, capsys):
    path = write_job(tmp_path, "gs")
    assert main(["generate", str(path)]) == 0
    out = capsys.readouterr().out
    assert "job=gs" in out and "algorithm=GS" in out and "final_mse=" in out and "runtime_seconds=" in out
    names = _files(tmp_path / "out_gs")
    for n in ("gs_hologram.png", "gs_hologram.hgf", "gs_replay.hgf", "gs_replay.png",
              "gs_replay_scale.txt", "gs_trace.csv"):
        assert n in names
    assert not any(n.startswith(".") for n in names)


def test_hologram_png_decodes_to_levels(tmp_path):
    path = write_job(tmp_path, "q", slm="{mode: phase, levels: 4, min_arg: 0.0, max_arg: 6.283185307179586, full_circle: true}")
    assert generate_job(path).exit_code == 0
    gray = np.asarray(Image.open(tmp_path / "out_q" / "q_hologram.png"))
    holo = read_field(tmp_path / "out_q" / "q_hologram.hgf").data
    slm = SlmSpec("phase", 4, 0.0, 2 * np.pi, full_circle=True)
    levels = gray_to_levels(gray, slm)
    np.testing.assert_allclose(np.exp(1j * levels * np.pi / 2), holo, atol=1e-12)


def test_replay_png_scale_sidecar(tmp_path):
    path = write_job(tmp_path, "r")
    generate_job(path)
    d = tmp_path / "out_r"
    replay = read_field(d / "r_replay.hgf").data
    text = (d / "r_replay_scale.txt").read_text()
    scale = float(text.split("scale=")[1].split()[0])
    assert scale == pytest.approx(np.abs(replay).max() / 255)
    assert np.asarray(Image.open(d / "r_replay.png")).max() == 255


def test_invalid_levels_exit_1_no_artifacts(tmp_path, capsys):
    path = write_job(tmp_path, "bad", slm="{mode: phase, levels: 1}")
    assert main(["generate", str(path)]) == 1
    assert "slm.levels" in capsys.readouterr().out
    assert not (tmp_path / "out_bad").exists()


def test_runtime_failure_exit_2_removes_partial_output(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(cli, "run_algorithm", boom)
    res = generate_job(write_job(tmp_path, "x"))
    assert res.exit_code == 2 and "disk on fire" in res.message
    assert not (tmp_path / "out_x").exists()


def test_repeat_runs_are_byte_identical(tmp_path):
    a = write_job(tmp_path / "a", "job", "WeightedGS")
    b = write_job(tmp_path / "b", "job", "WeightedGS")
    generate_job(a)
    generate_job(b)
    for name in ("job_hologram.hgf", "job_replay.hgf", "job_trace.csv"):
        assert (tmp_path / "a" / "out_job" / name).read_bytes() == (tmp_path / "b" / "out_job" / name).read_bytes()


def test_ospr_writes_every_subframe(tmp_path):
    generate_job(write_job(tmp_path, "o", "OSPR", extra=""))
    names = _files(tmp_path / "out_o")
    assert [n for n in names if n.endswith("_hologram.png")] == [f"o_frame_00{i}_hologram.png" for i in (1, 2, 3)]


def test_plot_flag_emits_gnuplot_script(tmp_path):
    path = write_job(tmp_path, "p")
    text = path.read_text().replace("io: {output: out_p}", "io: {output: out_p, export: {plot: true}}")
    path.write_text(text)
    generate_job(path)
    script = (tmp_path / "out_p" / "p_trace.gp").read_text()
    assert "p_trace.csv" in script


def _batch_dir(tmp_path):
    write_job(tmp_path, "a_gs", "GS")
    write_job(tmp_path, "b_bad", "GS", slm="{mode: phase, levels: 1}")
    write_job(tmp_path, "c_ds", "DirectSearch")
    return tmp_path


def test_batch_isolates_failures(tmp_path, capsys):
    d = _batch_dir(tmp_path)
    assert main(["batch", str(d)]) != 0
    out = capsys.readouterr().out
    assert "2/3 jobs succeeded" in out
    assert (d / "out_a_gs").is_dir() and (d / "out_c_ds").is_dir() and not (d / "out_b_bad").exists()
    rows = list(csv.DictReader(open(d / "batch_summary.csv")))
    assert [r["status"] for r in rows] == ["ok", "config-error", "ok"]
    assert "slm.levels" in rows[1]["message"]
    assert rows[0]["final_metric"] and float(rows[2]["seconds"]) >= 0
    assert sorted(p.name for p in (d / "logs").iterdir()) == ["a_gs.log", "b_bad.log", "c_ds.log"]


def test_batch_parallel_matches_sequential(tmp_path):
    seq, par = _batch_dir(tmp_path / "seq"), _batch_dir(tmp_path / "par")
    main(["batch", str(seq), "--jobs", "1"])
    main(["batch", str(par), "--jobs", "2"])
    for job in ("out_a_gs", "out_c_ds"):
        names = _files(seq / job)
        assert names == _files(par / job)
        for n in names:
            if n.endswith((".hgf", ".csv", ".png")):
                assert (seq / job / n).read_bytes() == (par / job / n).read_bytes()


def test_batch_empty_match(tmp_path, capsys):
    assert main(["batch", str(tmp_path)]) == 1
    assert "no jobs matched" in capsys.readouterr().err


def _target_and_dump(tmp_path, img):
    save_gray(tmp_path / "t.png", img)
    t = load_target(tmp_path / "t.png").data
    write_field(tmp_path / "ideal.hgf", ifftshift(t).astype(complex))
    return tmp_path / "t.png", tmp_path / "ideal.hgf"


def test_metrics_ideal_replay(tmp_path, capsys):
    img = (np.arange(64).reshape(8, 8) * 4).astype(np.uint8)
    t, f = _target_and_dump(tmp_path, img)
    assert main(["metrics", str(t), str(f), "--metric", "mse,ssim"]) == 0
    assert capsys.readouterr().out.splitlines() == ["mse=0.000000000", "ssim=1.00000000"]


def test_metrics_masked_vs_unmasked_hand_case(tmp_path, capsys):
    # target top half white, bottom black; |R| = 0.5 on top, 0.25 below
    # unmasked: (8 * 0.25 + 8 * 0.0625) / 16 = 0.15625; top-half mask: 0.25
    img = np.zeros((4, 4), np.uint8)
    img[:2] = 255
    save_gray(tmp_path / "t.png", img)
    save_gray(tmp_path / "m.png", img)
    r = np.full((4, 4), 0.25, complex)
    r[:2] = 0.5
    write_field(tmp_path / "r.hgf", r)
    args = ["metrics", str(tmp_path / "t.png"), str(tmp_path / "r.hgf"), "--no-centered"]
    main(args)
    main(args + ["--mask", str(tmp_path / "m.png")])
    assert capsys.readouterr().out.splitlines() == ["mse=0.156250000", "mse=0.250000000"]


def test_metrics_dimension_mismatch(tmp_path, capsys):
    save_gray(tmp_path / "t.png", np.zeros((4, 6)))
    write_field(tmp_path / "r.hgf", np.zeros((4, 4), complex))
    assert main(["metrics", str(tmp_path / "t.png"), str(tmp_path / "r.hgf")]) == 1
    assert "dimension mismatch: target 6x4, field 4x4" in capsys.readouterr().err


def test_format_value():
    assert format_value(0.0) == "0.000000000"
    assert format_value(1.0) == "1.00000000"
    assert format_value(0.15625) == "0.156250000"
    assert format_value(1.23456789012e-5) == "1.23456789e-05"


def test_bench_fft_csv_rows(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", "fft", "--sizes", "256,512", "--runs", "3", "--pairs", "10", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert [r["resolution"] for r in rows] == ["256", "512"]
    assert rows[0]["model_seconds"]


def test_bench_defaults_follow_protocol():
    args = build_parser().parse_args(["bench", "fft"])
    assert (args.runs, args.pairs, args.threads) == (100, 1000, 1)


def test_bench_rejects_bad_size(tmp_path, capsys):
    assert main(["bench", "fft", "--sizes", "100", "--runs", "2", "--out", str(tmp_path / "x.csv")]) == 1
    assert "power of two" in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()


def test_bench_breakdown_and_kernels(tmp_path, capsys):
    assert main(["bench", "breakdown", "--algorithm", "OSPR", "--size", "16", "--budget", "3",
                 "--out", str(tmp_path / "bd.csv")]) == 0
    assert main(["bench", "kernels", "--size", "16", "--runs", "2", "--out", str(tmp_path / "k.csv")]) == 0
    assert (tmp_path / "bd.csv").exists() and (tmp_path / "k.csv").exists()


def test_module_entry_point(tmp_path):
    path = write_job(tmp_path, "m")
    proc = subprocess.run([sys.executable, "-m", "hologen", "generate", str(path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert load_config(path).output_dir().is_dir()
