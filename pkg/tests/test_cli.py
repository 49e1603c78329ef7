import subprocess
import sys

import numpy as np
import pytest
from conftest import smooth_dark_image
from PIL import Image as PILImage

from bimef.cli import build_parser, config_from_args, main
from bimef.image import load_image, save_image


@pytest.fixture
def dark_png(tmp_path, rng):
    path = tmp_path / "dark.png"
    save_image(smooth_dark_image(rng, 40, 56), path)
    return path


def png_bytes(path):
    return np.asarray(PILImage.open(path))


def test_cli_defaults():
    args = build_parser().parse_args(["enhance", "a.png", "b.png"])
    cfg = config_from_args(args)
    assert cfg.mu == 0.5
    assert (cfg.solver.lam, cfg.solver.epsilon, cfg.solver.window) == (1.0, 1e-3, 5)
    assert (cfg.camera.a, cfg.camera.b) == (-0.3293, 1.1258)
    assert cfg.ksearch.thumb_size == 50 and cfg.ksearch.under_exposed_threshold == 0.5
    assert build_parser().parse_args(["metrics", "a", "b"]).loe_size == 100


def test_enhance_writes_output(tmp_path, dark_png, capsys):
    out = tmp_path / "out.png"
    assert main(["enhance", str(dark_png), str(out), "--report-k", "--timings"]) == 0
    assert load_image(out).shape == load_image(dark_png).shape
    text = capsys.readouterr().out
    assert text.startswith("k_hat=")
    assert float(text.splitlines()[0].split("=")[1]) > 1
    assert "illumination:" in text and "total:" in text


@pytest.mark.parametrize("flags", [["--mu", "0"], ["--k", "1"]])
def test_identity_paths_reencode_input(tmp_path, dark_png, flags):
    out = tmp_path / "out.png"
    assert main(["enhance", str(dark_png), str(out), *flags]) == 0
    np.testing.assert_array_equal(png_bytes(out), png_bytes(dark_png))


def test_dump_intermediates(tmp_path, dark_png):
    out = tmp_path / "res.png"
    assert main(["enhance", str(dark_png), str(out), "--dump-intermediates"]) == 0
    for suffix in ("T", "W", "synthetic"):
        assert (tmp_path / f"res.{suffix}.png").exists()
    assert png_bytes(tmp_path / "res.T.png").ndim == 2


def test_enhance_missing_input(tmp_path, capsys):
    assert main(["enhance", str(tmp_path / "nope.png"), str(tmp_path / "o.png")]) != 0
    assert "error" in capsys.readouterr().err


def test_enhance_solver_failure_exit_code(tmp_path, dark_png, capsys):
    code = main(["enhance", str(dark_png), str(tmp_path / "o.png"), "--preconditioner", "jacobi",
                 "--pcg-max-iter", "1", "--pcg-tol", "1e-14"])
    assert code != 0
    assert "residual" in capsys.readouterr().err
    assert not (tmp_path / "o.png").exists()


def test_mu_above_one_warns(tmp_path, dark_png, caplog):
    assert main(["enhance", str(dark_png), str(tmp_path / "o.png"), "--mu", "1.5"]) == 0
    assert any("mu > 1" in r.message for r in caplog.records)


def test_batch(tmp_path, rng, capsys):
    src, dst = tmp_path / "in", tmp_path / "out"
    src.mkdir()
    for i in range(3):
        save_image(smooth_dark_image(rng, 24, 30), src / f"img{i}.png")
    (src / "broken.png").write_bytes(b"garbage")
    (src / "notes.txt").write_text("ignored")
    code = main(["batch", str(src), str(dst), "--jobs", "2"])
    lines = capsys.readouterr().out.strip().splitlines()
    assert code == 1  # one requested output could not be written
    assert len(lines) == 4
    assert lines[0].startswith("broken.png, error")
    for i in range(3):
        assert (dst / f"img{i}.png").exists()
        name, k_hat, seconds = lines[i + 1].split(", ")
        assert name == f"img{i}.png" and float(k_hat) >= 1 and float(seconds) > 0


def test_batch_all_good_single_job(tmp_path, rng, capsys):
    src, dst = tmp_path / "in", tmp_path / "out"
    src.mkdir()
    save_image(smooth_dark_image(rng, 20, 20), src / "a.png")
    assert main(["batch", str(src), str(dst), "--jobs", "1"]) == 0
    assert (dst / "a.png").exists()


def test_batch_empty_dir(tmp_path, caplog):
    (tmp_path / "empty").mkdir()
    assert main(["batch", str(tmp_path / "empty"), str(tmp_path / "o")]) == 0
    assert any("no images" in r.message for r in caplog.records)


def test_metrics_single(tmp_path, dark_png, capsys):
    assert main(["metrics", str(dark_png), str(dark_png)]) == 0
    assert capsys.readouterr().out.strip() == "LOE=0.000000"
    out = tmp_path / "e.png"
    main(["enhance", str(dark_png), str(out)])
    capsys.readouterr()
    assert main(["metrics", str(dark_png), str(out), "--loe-size", "20", "--csv"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert rows[0] == "path,loe"
    path, value = rows[1].split(",")
    assert path == str(dark_png) and 0 <= float(value) <= 400


def test_metrics_directories(tmp_path, rng, capsys):
    orig, enh = tmp_path / "orig", tmp_path / "enh"
    orig.mkdir()
    enh.mkdir()
    for name in ("a", "b"):
        img = smooth_dark_image(rng, 20, 20)
        save_image(img, orig / f"{name}.png")
        save_image(np.sqrt(img), enh / f"{name}.png")
    save_image(smooth_dark_image(rng, 20, 20), orig / "c.png")
    assert main(["metrics", str(orig), str(enh)]) == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert rows[0] == "path,loe" and len(rows) == 3
    assert rows[1].endswith("a.png,0.000000") or rows[1].split(",")[0].endswith("a.png")


def test_metrics_size_mismatch(tmp_path, capsys):
    save_image(np.zeros((4, 4, 3)), tmp_path / "a.png")
    save_image(np.zeros((4, 5, 3)), tmp_path / "b.png")
    assert main(["metrics", str(tmp_path / "a.png"), str(tmp_path / "b.png")]) != 0


def test_module_entry_point(tmp_path, dark_png):
    out = tmp_path / "o.png"
    proc = subprocess.run([sys.executable, "-m", "bimef", "enhance", str(dark_png), str(out), "--report-k"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("k_hat=") and out.exists()
