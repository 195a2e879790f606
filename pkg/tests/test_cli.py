import numpy as np
import pytest

from onebitphase import ImagePlane, MeasurementSet, load_result, save_image, \
    save_measurement_set
from onebitphase.cli import main
from onebitphase.container import load_measurement_set


def run(args):
    return main([str(a) for a in args])


def test_simulate_recover_round_trip(tmp_path, capsys):
    ms_path = tmp_path / "ms.bin"
    assert run(["simulate", "--n", 128, "--pairs", 40, "--model", "identity",
                "--seed", 7, "--keep-intensities", "--save-truth",
                "--out", ms_path]) == 0
    out_path = tmp_path / "res.bin"
    assert run(["recover", "--in", ms_path, "--method", "onebit", "--seed", 9,
                "--out", out_path]) == 0
    captured = capsys.readouterr().out
    assert "err=" in captured and "lambda_hat=" in captured
    result, header = load_result(out_path)
    assert header["err"] is not None and header["err"] <= 0.2
    assert abs(np.linalg.norm(result.x_hat) - 1.0) <= 1e-10
    # the unquantized method works on the same file (intensities retained)
    assert run(["recover", "--in", ms_path, "--method", "subexp", "--seed", 9]) == 0
    sub_line = capsys.readouterr().out
    assert "err=" in sub_line and float(sub_line.split("err=")[1]) <= 0.3


def test_simulate_is_byte_deterministic(tmp_path):
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    for p in (p1, p2):
        assert run(["simulate", "--n", 32, "--pairs", 5, "--model", "exp-noise",
                    "--sigma", 0.4, "--seed", 3, "--out", p]) == 0
    assert p1.read_bytes() == p2.read_bytes()
    ms, _ = load_measurement_set(p1)
    assert ms.model.sigma == 0.4


def test_model_flag_validation_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["simulate", "--n", 16, "--pairs", 2, "--model", "exp-noise",
             "--seed", 1, "--out", tmp_path / "x.bin"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run(["simulate", "--n", 16, "--pairs", 2, "--nonsense-flag", "1",
             "--seed", 1, "--out", tmp_path / "x.bin"])
    assert exc.value.code == 2


def test_am_without_intensities_exits_3(tmp_path, capsys):
    ms_path = tmp_path / "signs_only.bin"
    assert run(["simulate", "--n", 16, "--pairs", 2, "--seed", 5,
                "--out", ms_path]) == 0
    assert run(["recover", "--in", ms_path, "--method", "am", "--seed", 1]) == 3
    assert "intensities" in capsys.readouterr().err


def test_missing_input_exits_5(tmp_path):
    assert run(["recover", "--in", tmp_path / "nope.bin", "--method", "onebit",
                "--seed", 1]) == 5


def test_corrupt_container_exits_3(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"garbage garbage garbage")
    assert run(["recover", "--in", bad, "--method", "onebit", "--seed", 1]) == 3


def test_degenerate_operator_exits_4(tmp_path):
    ms_path = tmp_path / "dead.bin"
    assert run(["simulate", "--n", 16, "--pairs", 2, "--seed", 6,
                "--out", ms_path]) == 0
    ms, _ = load_measurement_set(ms_path)
    dead = MeasurementSet(masks1=ms.masks1, masks2=ms.masks2,
                          signs=np.zeros_like(ms.signs), model=ms.model,
                          mask_kind=ms.mask_kind, seed=ms.seed)
    save_measurement_set(dead, ms_path)
    assert run(["recover", "--in", ms_path, "--method", "onebit", "--seed", 1]) == 4


def test_lambda_output_format(capsys):
    assert run(["lambda", "--model", "identity", "--samples", 100000,
                "--seed", 1]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("closed_form=1 mc=")
    assert run(["lambda", "--model", "exp-noise", "--sigma", 1,
                "--samples", 100000, "--seed", 1]) == 0
    assert capsys.readouterr().out.startswith("closed_form=0.75 ")
    assert run(["lambda", "--model", "tanh", "--alpha", 1,
                "--samples", 100000, "--seed", 1]) == 0
    assert capsys.readouterr().out.startswith("closed_form=NA ")
    assert run(["lambda", "--model", "lowpass", "--fc", 3, "--n", 16,
                "--samples", 100000, "--seed", 1]) == 0
    assert capsys.readouterr().out.startswith("closed_form=0.4375 ")


def test_bench_transition_csv_and_thread_independence(tmp_path):
    base = ["bench", "transition", "--n", 32, "--r-values", "4,16",
            "--trials", 4, "--seed", 11, "--out"]
    p1, p2, p3 = (tmp_path / f"{k}.csv" for k in "abc")
    assert run(base + [p1, "--threads", 1]) == 0
    assert run(base + [p2, "--threads", 8]) == 0
    assert run(base + [p3, "--threads", 1]) == 0
    assert p1.read_bytes() == p2.read_bytes() == p3.read_bytes()
    text = p1.read_text()
    assert text.startswith("r,init,param,success_prob,median_err,mean_iters,wall_ms\n")


def test_bench_robustness_and_am_decay(tmp_path):
    rob = tmp_path / "rob.csv"
    assert run(["bench", "robustness", "--parameter", "sigma",
                "--values", "0,1", "--n", 32, "--r-values", "4,8",
                "--trials", 3, "--seed", 2, "--out", rob]) == 0
    assert len(rob.read_text().splitlines()) == 1 + 4
    decay = tmp_path / "decay.csv"
    assert run(["bench", "am-decay", "--n", 32, "--r", 4,
                "--inits", "onebit,random", "--t0", 10, "--trials", 3,
                "--seed", 2, "--out", decay]) == 0
    assert len(decay.read_text().splitlines()) == 1 + 2 * 11


def test_image_command(tmp_path, capsys):
    gen = np.random.default_rng(12)
    pix = np.clip(gen.random((16, 16)) * 0.8 + 0.1, 0, 1)
    src = tmp_path / "in.pgm"
    save_image(ImagePlane.from_pixels(pix), src)
    out = tmp_path / "out.pgm"
    assert run(["image", "--in", src, "--out", out, "--pairs", 24,
                "--refine", "--t0", 30, "--seed", 4]) == 0
    assert out.exists()
    meta = (tmp_path / "out.pgm.meta").read_text()
    assert "channel0_err=" in meta and "channel0_psnr=" in meta and "seed=4" in meta
    err_line = [ln for ln in meta.splitlines() if ln.startswith("channel0_err=")][0]
    assert float(err_line.split("=")[1]) <= 1e-4
    psnr_line = [ln for ln in meta.splitlines() if ln.startswith("channel0_psnr=")][0]
    assert float(psnr_line.split("=")[1]) >= 40.0


def test_help_exits_zero():
    for sub in (["--help"], ["simulate", "--help"], ["recover", "--help"],
                ["lambda", "--help"], ["bench", "--help"],
                ["bench", "transition", "--help"], ["image", "--help"]):
        with pytest.raises(SystemExit) as exc:
            run(sub)
        assert exc.value.code == 0
