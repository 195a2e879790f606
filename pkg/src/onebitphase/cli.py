"""Command-line interface.

Subcommands: simulate, recover, lambda, bench {transition,robustness,
am-decay}, image. Every stochastic command takes a required --seed and is
byte-reproducible: identical flags and seed give identical files and stdout.

Exit codes: 0 success, 2 usage error, 3 input or format error,
4 numerical degeneracy (zero operator or dead mask index), 5 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bench as bench_mod
from .container import (
    FormatError,
    load_measurement_set,
    model_to_dict,
    save_measurement_set,
    save_result,
)
from .core import RandomSource, normalize, sample_complex_gaussian
from .imaging import load_image, psnr, recover_image, save_image
from .measurement import (
    ExpNoise,
    Identity,
    LowPass,
    PoissonNoise,
    TanhDistortion,
    build_measurement_set,
)
from .operators import OneBitOperator, SubExpOperator
from .solvers import (
    AMConfig,
    DegenerateOperatorError,
    PowerConfig,
    SingularStepError,
    alt_min,
    err,
    power_method,
)
from .snr import snr_closed_form, snr_monte_carlo

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_DEGENERATE = 4
EXIT_IO = 5

MODELS = ("identity", "exp-noise", "poisson", "tanh", "lowpass")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=MODELS, default="identity",
                   help="observation model applied to the intensities")
    p.add_argument("--sigma", type=float, default=None,
                   help="exp-noise variance, in units of the mean clean intensity")
    p.add_argument("--eta", type=float, default=None,
                   help="poisson gain, in units of the mean clean intensity")
    p.add_argument("--alpha", type=float, default=None,
                   help="tanh clipping level (dimensionless)")
    p.add_argument("--fc", type=int, default=None,
                   help="lowpass cut-off frequency per axis (integer, 0..n/2-1)")


def _model_from_args(parser: argparse.ArgumentParser, args, shape):
    kind = args.model
    if kind == "identity":
        return Identity()
    if kind == "exp-noise":
        if args.sigma is None:
            parser.error("--model exp-noise requires --sigma")
        return ExpNoise(sigma=args.sigma)
    if kind == "poisson":
        if args.eta is None:
            parser.error("--model poisson requires --eta")
        return PoissonNoise(eta=args.eta)
    if kind == "tanh":
        if args.alpha is None:
            parser.error("--model tanh requires --alpha")
        return TanhDistortion(alpha=args.alpha)
    if kind == "lowpass":
        if args.fc is None:
            parser.error("--model lowpass requires --fc")
        vary = bool(getattr(args, "vary_psf", False))
        return LowPass(f_c=args.fc, shape=shape, vary_per_pair=vary)
    parser.error(f"unknown model {kind}")


def _int_list(text: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def cmd_simulate(parser, args) -> int:
    model = _model_from_args(parser, args, (args.n,))
    base = RandomSource(args.seed)
    x0 = normalize(sample_complex_gaussian(args.n, base.derive(0)))
    ms = build_measurement_set(x0, args.pairs, model, base.derive(1),
                               mask_kind=args.mask,
                               keep_intensities=args.keep_intensities,
                               bernoulli_p=args.bernoulli_p)
    save_measurement_set(ms, args.out, truth=x0 if args.save_truth else None)
    print(f"wrote {args.out}: n={args.n} pairs={args.pairs} "
          f"model={model_to_dict(model)['kind']} seed={args.seed}")
    return EXIT_OK


def cmd_recover(parser, args) -> int:
    ms, truth = load_measurement_set(args.in_path)
    base = RandomSource(args.seed)
    power = PowerConfig(tol=args.tol, max_iter=args.max_iter)

    if args.method in ("onebit", "subexp"):
        if args.method == "subexp" and not ms.has_intensities:
            raise ValueError("subexp method requires raw intensities in the input file")
        op = OneBitOperator(ms) if args.method == "onebit" else SubExpOperator(ms)
        result = power_method(op, power, rng=base.derive(1))
    else:  # am
        if not ms.has_intensities:
            raise ValueError("am method requires raw intensities in the input file "
                             "(simulate with --keep-intensities)")
        if args.init == "random":
            x_init = normalize(sample_complex_gaussian(ms.shape, base.derive(2)))
        else:
            op = OneBitOperator(ms) if args.init == "onebit" else SubExpOperator(ms)
            x_init = power_method(op, power, rng=base.derive(1)).x_hat
        result = alt_min(ms, x_init, AMConfig(t0=args.t0))

    err_value = None
    if truth is not None:
        err_value = err(result.x_hat, truth)
    if args.out:
        save_result(result, args.out, method=args.method, shape=ms.shape,
                    err_value=err_value, seed=args.seed)
    line = (f"method={args.method} lambda_hat={_fmt(result.lambda_hat)} "
            f"iterations={result.iterations} converged={result.converged}")
    if err_value is not None:
        line += f" err={_fmt(err_value)}"
    print(line)
    return EXIT_OK


def cmd_lambda(parser, args) -> int:
    shape = (args.n,)
    model = _model_from_args(parser, args, shape)
    closed = snr_closed_form(model)
    mc = snr_monte_carlo(model, args.samples, RandomSource(args.seed))
    closed_txt = "NA" if closed is None else _fmt(closed.value)
    tag = " (empirical)" if mc.empirical else ""
    print(f"closed_form={closed_txt} mc={_fmt(mc.value)}±{_fmt(mc.stderr)}"
          f" samples={mc.samples}{tag}")
    return EXIT_OK


def cmd_bench(parser, args) -> int:
    threads = args.threads if args.threads else (os.cpu_count() or 1)
    power = PowerConfig(tol=args.tol, max_iter=args.max_iter)
    if args.bench_cmd == "transition":
        model = _model_from_args(parser, args, (args.n,))
        grid = bench_mod.TrialGrid(
            n=args.n, r_values=args.r_values, model=model, trials=args.trials,
            tau=args.tau, seed=args.seed, init_kinds=tuple(args.inits.split(",")),
            am_refine=args.am, t0=args.t0, power=power)
        table = bench_mod.phase_transition(grid, threads=threads)
    elif args.bench_cmd == "robustness":
        table = bench_mod.robustness_sweep(
            args.parameter, args.values, args.n, args.r_values, args.trials,
            args.seed, tau=args.tau, power=power, threads=threads)
    else:  # am-decay
        model = _model_from_args(parser, args, (args.n,))
        traces = bench_mod.am_error_decay(
            args.n, args.r, model, args.inits.split(","), args.t0,
            args.trials, args.seed, power=power, threads=threads)
        rows = []
        for kind in sorted(traces):
            per_trial = traces[kind]
            for t in range(per_trial.shape[1]):
                col = per_trial[:, t]
                rows.append(bench_mod.ResultRow(
                    r=args.r, init=kind, param=float(t),
                    success_prob=float(np.mean(col < args.tau)),
                    median_err=float(np.median(col)),
                    mean_iters=float(t), wall_ms=0.0))
        table = bench_mod.ResultTable(rows)
    bench_mod.write_csv(table, args.out, timing=args.timing)
    print(f"wrote {args.out}: {len(table.rows)} rows")
    return EXIT_OK


def cmd_image(parser, args) -> int:
    img = load_image(args.in_path)
    model = _model_from_args(parser, args, (img.height, img.width))
    power = PowerConfig(tol=args.tol, max_iter=args.max_iter)
    recovered, results, errors = recover_image(
        img, args.pairs, model, args.seed, init=args.init,
        refine=args.refine, t0=args.t0, mask_kind=args.mask, power=power)
    save_image(recovered, args.out)

    meta_lines = [
        f"seed={args.seed}",
        f"pairs={args.pairs}",
        f"model={model_to_dict(model)['kind']}",
        f"init={args.init}",
        f"refine={args.refine}",
    ]
    in_pixels = np.atleast_3d(img.to_pixels())
    out_pixels = np.atleast_3d(recovered.to_pixels())
    for c, (res, e) in enumerate(zip(results, errors)):
        meta_lines.append(f"channel{c}_err={_fmt(e)}")
        meta_lines.append(f"channel{c}_psnr={_fmt(psnr(in_pixels[:, :, c], out_pixels[:, :, c]))}")
        meta_lines.append(f"channel{c}_iterations={res.iterations}")
    with open(args.out + ".meta", "w", encoding="utf-8") as fh:
        fh.write("\n".join(meta_lines) + "\n")
    print(f"wrote {args.out}: channels={img.num_channels} "
          f"err=[{', '.join(_fmt(e) for e in errors)}]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onebitphase",
        description="Phase retrieval from one-bit coded diffraction patterns.")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("simulate", formatter_class=fmt,
                       help="draw a ground-truth signal and write its one-bit measurements")
    p.add_argument("--n", type=int, required=True, help="signal length (even, >= 2)")
    p.add_argument("--pairs", type=int, required=True, help="number of mask pairs r")
    _add_model_flags(p)
    p.add_argument("--vary-psf", action="store_true",
                   help="lowpass only: draw fresh in-band PSF magnitudes per pair")
    p.add_argument("--mask", choices=("gaussian", "bernoulli"), default="gaussian",
                   help="mask distribution")
    p.add_argument("--bernoulli-p", type=float, default=0.8,
                   help="ones probability for bernoulli masks")
    p.add_argument("--seed", type=int, required=True, help="base seed (64-bit unsigned)")
    p.add_argument("--keep-intensities", action="store_true",
                   help="retain raw intensity pairs (needed by subexp and am)")
    p.add_argument("--save-truth", action="store_true",
                   help="store the ground-truth signal in the file")
    p.add_argument("--out", required=True, help="output measurement container")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("recover", formatter_class=fmt,
                       help="recover a signal from a measurement container")
    p.add_argument("--in", dest="in_path", required=True, help="input measurement container")
    p.add_argument("--method", choices=("onebit", "subexp", "am"), default="onebit",
                   help="spectral method or alternating-minimization refinement")
    p.add_argument("--init", choices=("onebit", "subexp", "random"), default="onebit",
                   help="initializer for --method am")
    p.add_argument("--t0", type=int, default=50, help="am iteration count")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="power-method convergence tolerance (phase-aligned)")
    p.add_argument("--max-iter", type=int, default=10000, help="power-method iteration cap")
    p.add_argument("--seed", type=int, required=True, help="seed for the random start vector")
    p.add_argument("--out", default=None, help="optional output result file")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("lambda", formatter_class=fmt,
                       help="signal-to-noise constant of an observation model")
    _add_model_flags(p)
    p.add_argument("--n", type=int, default=16,
                   help="signal length (sets the lowpass band fraction)")
    p.add_argument("--samples", type=int, default=1_000_000, help="Monte Carlo sample count")
    p.add_argument("--seed", type=int, required=True, help="Monte Carlo seed")
    p.set_defaults(func=cmd_lambda)

    p = sub.add_parser("bench", help="experiment grids written as CSV")
    bsub = p.add_subparsers(dest="bench_cmd", required=True)

    def _bench_common(bp, with_r_values: bool):
        if with_r_values:
            bp.add_argument("--r-values", type=_int_list, required=True,
                            help="comma-separated mask-pair counts, e.g. 2,4,8")
        bp.add_argument("--n", type=int, required=True, help="signal length")
        bp.add_argument("--trials", type=int, default=20, help="trials per cell")
        bp.add_argument("--tau", type=float, default=0.07, help="success threshold on err")
        bp.add_argument("--seed", type=int, required=True, help="base seed")
        bp.add_argument("--tol", type=float, default=1e-8, help="power-method tolerance")
        bp.add_argument("--max-iter", type=int, default=10000, help="power-method cap")
        bp.add_argument("--threads", type=int, default=0,
                        help="trial parallelism; 0 means all cores (results are identical)")
        bp.add_argument("--timing", action="store_true",
                        help="write measured wall_ms instead of 0 (breaks byte-reproducibility)")
        bp.add_argument("--out", required=True, help="output CSV path")

    bp = bsub.add_parser("transition", formatter_class=fmt,
                         help="success probability versus r")
    _bench_common(bp, with_r_values=True)
    _add_model_flags(bp)
    bp.add_argument("--inits", default="onebit,subexp",
                    help="comma-separated methods / am initializers")
    bp.add_argument("--am", action="store_true", help="refine with alternating minimization")
    bp.add_argument("--t0", type=int, default=50, help="am iteration count")

    bp = bsub.add_parser("robustness", formatter_class=fmt,
                         help="median error over a model-parameter sweep")
    _bench_common(bp, with_r_values=True)
    bp.add_argument("--parameter", choices=("sigma", "alpha", "f_c"), required=True,
                    help="which model parameter to sweep")
    bp.add_argument("--values", type=_float_list, required=True,
                    help="comma-separated parameter values")

    bp = bsub.add_parser("am-decay", formatter_class=fmt,
                         help="error per am iteration for several initializers")
    _bench_common(bp, with_r_values=False)
    _add_model_flags(bp)
    bp.add_argument("--r", type=int, required=True, help="mask pairs")
    bp.add_argument("--inits", default="onebit,random",
                    help="comma-separated initializers (onebit,subexp,random,truth)")
    bp.add_argument("--t0", type=int, default=50, help="am iteration count")
    for bp_ in bsub.choices.values():
        bp_.set_defaults(func=cmd_bench)

    p = sub.add_parser("image", formatter_class=fmt,
                       help="acquire and recover a PGM/PPM image channel by channel")
    p.add_argument("--in", dest="in_path", required=True, help="input PGM (P5) or PPM (P6)")
    p.add_argument("--out", required=True, help="output image path (same format)")
    p.add_argument("--pairs", type=int, required=True, help="mask pairs per channel")
    _add_model_flags(p)
    p.add_argument("--vary-psf", action="store_true",
                   help="lowpass only: draw fresh in-band PSF magnitudes per pair")
    p.add_argument("--mask", choices=("gaussian", "bernoulli"), default="gaussian",
                   help="mask distribution")
    p.add_argument("--init", choices=("onebit", "subexp"), default="onebit",
                   help="spectral initializer")
    p.add_argument("--refine", action="store_true",
                   help="refine each channel with alternating minimization")
    p.add_argument("--t0", type=int, default=50, help="am iteration count")
    p.add_argument("--tol", type=float, default=1e-8, help="power-method tolerance")
    p.add_argument("--max-iter", type=int, default=10000, help="power-method cap")
    p.add_argument("--seed", type=int, required=True, help="base seed")
    p.set_defaults(func=cmd_image)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (DegenerateOperatorError, SingularStepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
