"""Command-line front end: ``snapcs {simulate,recover,evaluate,verify,replay}``.

Exit codes: 0 success, 1 runtime or solver failure (or a failed
verification), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from contextlib import nullcontext

import numpy as np

from . import io as sio
from .bounds import (ContractionExperimentSpec, TailBoundReport, TailExperimentSpec,
                     corollary_b_sweep, default_thresholds, noise_scaling_ratio,
                     product_tail_check, run_contraction_experiment, run_noisy_csp_experiment,
                     simulate_bernstein_tail, simulate_csp_events, verify_psi2_gaussian)
from .bounds.report import make_record
from .codecs import Dct3dCodec, EnumerableCodebook, NlsCodec, build_quantized_sparse_codec
from .codecs.toy import random_codebook
from .exceptions import SnapCSError
from .parallel import set_default_threads
from .rng import CODEBOOK_STREAM, MASK_STREAM, NOISE_STREAM, PHANTOM_STREAM, RngSpec
from .sensing import add_noise, forward_array, generate_masks
from .solvers import SolverConfig, cbgap_recover, cbpgd_recover, compute_metrics, csp_recover

NOISE_TAGS = {0.01: "low", 0.1: "medium", 0.5: "high"}
MASK_NAMES = {"gaussian": "gaussian", "bernoulli": "bernoulli01"}
EXPERIMENTS = ("psi2", "bernstein", "csp-events", "csp-noisy", "contraction", "corollary-b")


class UsageError(Exception):
    pass


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _kv(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected key=value")
    k, v = text.split("=", 1)
    try:
        return k, json.loads(v)
    except ValueError:
        return k, v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="snapcs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="cap on worker threads (1 = serial); default: all CPUs")

    s = sub.add_parser("simulate", parents=[common], help="mask and measure a video")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--phantom", choices=sio.PHANTOMS)
    src.add_argument("--input", help="PGM glob pattern or SCSX file")
    s.add_argument("--phantom-param", type=_kv, action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--width", type=int)
    s.add_argument("--height", type=int)
    s.add_argument("--frames", type=int)
    s.add_argument("--mask", choices=sorted(MASK_NAMES), default="gaussian")
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)

    r = sub.add_parser("recover", parents=[common], help="reconstruct from a snapshot")
    r.add_argument("--masks", required=True)
    r.add_argument("--measurement", required=True)
    r.add_argument("--codec", choices=("toy", "dct3d", "nls"), default="nls")
    r.add_argument("--solver", choices=("pgd", "gap", "csp"), default="gap")
    r.add_argument("--mu", type=float, default=None)
    r.add_argument("--adaptive", action="store_true")
    r.add_argument("--iters", type=int, default=150)
    r.add_argument("--tol", type=float, default=1e-8, help="residual stopping tolerance")
    r.add_argument("--init", choices=("zero", "backprojection"), default="zero")
    r.add_argument("--codebook", help="toy codec: .npy array of shape (|C|, rows, cols, B)")
    r.add_argument("--rho", type=float, default=2.0, help="toy codec amplitude bound")
    r.add_argument("--block", type=int, default=8)
    r.add_argument("--stride", type=int, default=None)
    r.add_argument("--group-size", type=int, default=16)
    r.add_argument("--window", type=int, default=20)
    r.add_argument("--keep", type=int, default=None)
    r.add_argument("--truth", help="ground truth for error traces and metrics")
    r.add_argument("--timings", action="store_true", help="keep wall times in trace.csv")
    r.add_argument("--out-dir", required=True)

    e = sub.add_parser("evaluate", parents=[common], help="PSNR of a reconstruction")
    e.add_argument("--recon", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--out", required=True, help="per-frame metrics CSV")

    v = sub.add_parser("verify", parents=[common], help="bound-versus-Monte-Carlo experiments")
    v.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    v.add_argument("--trials", type=int, default=None)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", required=True, help="report CSV")
    v.add_argument("--sigma", type=_floats, default=None,
                   help="psi2: sigma; csp-noisy/contraction: noise levels (comma list)")
    v.add_argument("--n", type=int, default=None, help="entries per frame")
    v.add_argument("--weights", type=_floats, default=None, help="bernstein weights")
    v.add_argument("--thresholds", type=_floats, default=None)
    v.add_argument("--epsilon", type=_floats, default=None)
    v.add_argument("--codewords", type=int, default=16)
    v.add_argument("--frames", type=int, default=2)
    v.add_argument("--solver", choices=("pgd", "gap"), default="pgd")
    v.add_argument("--lam", type=float, default=0.25)
    v.add_argument("--delta", type=_floats, default=None)
    v.add_argument("--iters", type=int, default=20)
    v.add_argument("--rate", type=float, default=None)
    v.add_argument("--eta", type=float, default=4.0)

    rp = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    rp.add_argument("manifest")
    rp.add_argument("--threads", type=int, default=None)
    rp.add_argument("--out-dir", default=None)
    rp.add_argument("--out", default=None)
    return p


# ---------------------------------------------------------------- helpers

def _manifest(args, argv):
    m = sio.RunManifest(args.command)
    m.set("argv", list(argv))
    for k, v in sorted(vars(args).items()):
        if k != "command":
            m.set(f"arg.{k}", v)
    return m


def _load_signal(path):
    return np.asarray(sio.load_frames(path).data)


# ---------------------------------------------------------------- commands

def cmd_simulate(args, argv):
    if args.phantom and None in (args.width, args.height, args.frames):
        raise UsageError("--phantom needs --width, --height and --frames")
    if args.sigma < 0:
        raise UsageError("--sigma must be >= 0")
    m = _manifest(args, argv)
    m.set("out_dir", args.out_dir)
    if args.sigma in NOISE_TAGS:
        m.set("noise_level", NOISE_TAGS[args.sigma])
    m.set("seed.masks", [args.seed, MASK_STREAM]).set("seed.noise", [args.seed, NOISE_STREAM])
    if args.phantom:
        m.set("seed.phantom", [args.seed, PHANTOM_STREAM])
        x = sio.make_phantom(args.phantom, (args.height, args.width, args.frames),
                             dict(args.phantom_param), RngSpec(args.seed, PHANTOM_STREAM)).data
    else:
        x = _load_signal(args.input)
        want = (args.height, args.width, args.frames)
        for got, w, name in zip(x.shape, want, ("--height", "--width", "--frames")):
            if w is not None and w != got:
                raise UsageError(f"{name} {w} does not match the input ({got})")
    os.makedirs(args.out_dir, exist_ok=True)
    m.write(os.path.join(args.out_dir, "manifest.txt"))  # echo settings before compute

    masks = generate_masks(x.shape, MASK_NAMES[args.mask], RngSpec(args.seed, MASK_STREAM))
    y = add_noise(forward_array(masks, x), args.sigma, RngSpec(args.seed, NOISE_STREAM)).data
    paths = {k: os.path.join(args.out_dir, f) for k, f in
             (("masks", "masks.scsm"), ("measurement", "measurement.scsy"), ("truth", "truth.scsx"))}
    sio.write_masks(paths["masks"], masks)
    sio.write_measurement(paths["measurement"], y)
    sio.write_signal(paths["truth"], x)
    for k, v in paths.items():
        m.set(f"output.{k}", v)
    m.write(os.path.join(args.out_dir, "manifest.txt"))
    n_x, n_y, B = x.shape
    print(f"n_x={n_x} n_y={n_y} B={B} sigma={args.sigma:g}")
    return 0


def _make_codec(args, shape):
    if args.codec == "toy":
        if not args.codebook:
            raise UsageError("--codec toy needs --codebook")
        C = np.load(args.codebook)
        if C.shape[1:] != tuple(shape):
            raise SnapCSError(f"codebook signal shape {C.shape[1:]} does not match masks {shape}")
        return EnumerableCodebook(C, amplitude_bound=args.rho)
    stride = args.stride
    if args.codec == "dct3d":
        return Dct3dCodec(args.block, args.block, stride, args.keep)
    return NlsCodec(args.block, args.block, stride or max(1, args.block // 2), args.group_size,
                    args.window, args.keep)


def cmd_recover(args, argv):
    if args.solver == "csp" and args.codec != "toy":
        raise UsageError("--solver csp needs --codec toy")
    if args.iters < 1:
        raise UsageError("--iters must be >= 1")
    if args.mu is not None and not args.mu > 0:
        raise UsageError("--mu must be positive")
    m = _manifest(args, argv)
    m.set("out_dir", args.out_dir).set("solver", args.solver).set("codec", args.codec)
    if args.mu is not None:
        m.set("mu", args.mu)
    for k in ("masks", "measurement", "truth", "codebook"):
        if getattr(args, k):
            m.set(f"input.{k}", getattr(args, k))
    os.makedirs(args.out_dir, exist_ok=True)
    m.write(os.path.join(args.out_dir, "manifest.txt"))
    m.check_inputs()

    masks = sio.read_masks(args.masks)
    y = sio.read_measurement(args.measurement).data
    truth = _load_signal(args.truth) if args.truth else None
    codec = _make_codec(args, masks.shape)
    trace = None
    if args.solver == "csp":
        xhat, res = csp_recover(codec, masks, y)
        m.set("result.final_residual", res)
    else:
        cfg = SolverConfig(step_mu=args.mu, max_iters=args.iters, residual_tol=args.tol,
                           step_mode="adaptive" if args.adaptive else "fixed", init_mode=args.init)
        run = cbpgd_recover if args.solver == "pgd" else cbgap_recover
        xhat, trace = run(codec, masks, y, cfg, reference=truth)
        m.set("result.final_residual", trace.final_residual)
        m.set("result.iterations", len(trace)).set("result.converged", trace.converged)
    sio.save_outputs(m, xhat, trace, truth, include_time=args.timings)
    m.write(os.path.join(args.out_dir, "manifest.txt"))
    line = f"final_residual={m.get('result.final_residual'):.6g}"
    if truth is not None:
        line += f" psnr_db={m.get('result.psnr_db')}"
    print(line)
    return 0


def cmd_evaluate(args, argv):
    recon = _load_signal(args.recon)
    truth = _load_signal(args.truth)
    if recon.shape != truth.shape:
        raise SnapCSError(f"shape mismatch: recon {recon.shape} vs truth {truth.shape}")
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    mse, psnr = sio.write_metrics_csv(args.out, recon, truth)
    m = _manifest(args, argv)
    m.set("input.recon", args.recon).set("input.truth", args.truth)
    m.set("result.mse", mse).set("result.psnr_db", sio.format_psnr(psnr))
    m.write(args.out + ".manifest.txt")
    print(f"mse={mse:.6g} psnr_db={sio.format_psnr(psnr, 2)}")
    return 0


def _verify_report(args) -> TailBoundReport:
    seed = args.seed
    exp = args.experiment
    if exp == "psi2":
        report = TailBoundReport()
        for sigma in args.sigma or [1.0]:
            psi2, check = verify_psi2_gaussian(sigma)
            dev = abs(psi2 - math.sqrt(8 / 3) * sigma)
            # deviation from the closed form, against a 1e-6 tolerance
            report.records.append(make_record(
                "psi2", {"sigma": sigma, "psi2": psi2, "check_at_bound": check}, sigma,
                0, 1, 1e-6, extra_ok=dev <= 1e-6 and abs(check - 2.0) <= 1e-9))
            print(f"psi2={psi2:.8f} check_at_bound={check:.12g}")
        return report
    if exp == "bernstein":
        n = args.n or 100
        w = np.asarray(args.weights) if args.weights else np.full(n, 1.0 / n)
        trials = args.trials or 100_000
        t = args.thresholds or default_thresholds()
        report = simulate_bernstein_tail(TailExperimentSpec(len(w), w, trials, t, RngSpec(seed, 5)))
        return report.extend(product_tail_check(1.0, 1.0, trials, np.linspace(0, 16, 9),
                                                RngSpec(seed, 6)))
    if exp == "csp-events":
        n = args.n or 64
        book = random_codebook((n, 1, args.frames), args.codewords, RngSpec(seed, CODEBOOK_STREAM))
        return simulate_csp_events(book, "gaussian", args.epsilon or (0.5, 1.0, 2.0, 16 / 3),
                                   args.trials or 10_000, RngSpec(seed, 9))
    if exp == "csp-noisy":
        n = args.n or 16
        book = build_quantized_sparse_codec(n, args.frames, 1, 10, RngSpec(seed, CODEBOOK_STREAM))
        trials = args.trials or 200
        sigmas = args.sigma or [0.01, 0.1]
        report = TailBoundReport()
        kw = {} if args.epsilon is None else {"epsilons": args.epsilon}
        for s in sigmas:
            report.extend(run_noisy_csp_experiment(book, s, trials, RngSpec(seed, 10), **kw))
        if len(sigmas) >= 2:
            inc, ratio = noise_scaling_ratio(book, sigmas, trials, RngSpec(seed, 10))
            report.extras.update(noise_increments=inc, noise_ratio=ratio)
            print(f"noise_scaling increments={inc} ratio={ratio:.4g} "
                  f"(linear: {sigmas[-1] / sigmas[0]:.4g})")
        return report
    if exp == "contraction":
        report = TailBoundReport()
        for s in args.sigma or [0.0]:
            spec = ContractionExperimentSpec(
                n_x=args.n or 8, n_y=args.n or 8, B=args.frames, rate=args.rate or 1 / 16,
                delta=(args.delta or [0.0025])[0], lam=args.lam, trials=args.trials or 500,
                solver=args.solver, rng=RngSpec(seed, 11), iters=args.iters, sigma=s)
            rate, res = run_contraction_experiment(spec)
            print(f"sigma={s:g} violation_rate={rate:.4g} tested={res.tested} "
                  f"cumulative_pass_rate={res.cumulative_pass_rate:.4g}")
            report.extend(res.report)
        return report
    # corollary-b
    return corollary_b_sweep(args.rate or 0.5, args.delta or (2.0**-4, 2.0**-8, 2.0**-12),
                             args.eta, args.trials or 200, RngSpec(seed, 12))


def cmd_verify(args, argv):
    if args.trials is not None and args.trials < 1:
        raise UsageError("--trials must be >= 1")
    m = _manifest(args, argv)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(out_dir, exist_ok=True)
    m.write(args.out + ".manifest.txt")
    report = _verify_report(args)
    report.to_csv(args.out)
    n_fail = sum(not r.passed for r in report)
    m.set("result.records", len(report)).set("result.failed", n_fail)
    m.write(args.out + ".manifest.txt")
    print(f"{args.experiment}: {len(report) - n_fail}/{len(report)} grid points pass")
    return 0 if n_fail == 0 else 1


def cmd_replay(args, argv):
    m = sio.RunManifest.read(args.manifest)
    old = list(m.get("argv") or [])
    if not old:
        raise SnapCSError(f"{args.manifest}: no argv recorded")
    new = []
    skip = False
    for i, tok in enumerate(old):
        if skip:
            skip = False
            continue
        if tok in ("--threads", "--out-dir", "--out") and getattr(args, tok[2:].replace("-", "_")) is not None:
            skip = True
            continue
        new.append(tok)
    for flag in ("--threads", "--out-dir", "--out"):
        val = getattr(args, flag[2:].replace("-", "_"))
        if val is not None:
            new += [flag, str(val)]
    return main(new)


COMMANDS = {"simulate": cmd_simulate, "recover": cmd_recover, "evaluate": cmd_evaluate,
            "verify": cmd_verify, "replay": cmd_replay}


def _thread_limits(n):
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    threads = args.threads
    if threads is not None and threads < 1:
        parser.print_usage(sys.stderr)
        print("snapcs: error: --threads must be >= 1", file=sys.stderr)
        return 2
    set_default_threads(threads or os.cpu_count() or 1)
    try:
        with _thread_limits(threads):
            return COMMANDS[args.command](args, argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"snapcs: error: {exc}", file=sys.stderr)
        return 2
    except (SnapCSError, OSError, ValueError) as exc:
        print(f"snapcs: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
