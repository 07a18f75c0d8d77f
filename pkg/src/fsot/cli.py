"""Command-line front end.

Every subcommand is deterministic under a fixed --seed: reruns (at any
--threads value) produce byte-identical output files. Output files are
written to a temporary name and renamed into place, so failed runs never
leave partial files behind.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile


from . import analysis, applications, perceptual
from .classes import PRESET_NAMES, PRESET_SUMMARIES, resolve_config
from .core import Boundary, Domain, load_points, new_random_set, save_points
from .errors import FsotError
from .optimizer import OptimizerConfig, run
from .targets import load_pgm, load_ppm, save_pgm

FLOAT = "%.17g"


def _atomic_write(path: str, writer) -> None:
    """Write via a sibling temp file and rename, so errors leave no output."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".fsot-", dir=directory)
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_text_atomic(path: str, text: str) -> None:
    def writer(tmp):
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)

    _atomic_write(path, writer)


class _Parser(argparse.ArgumentParser):
    """Argument parser with the machine-parseable 'fsot: error:' prefix."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"fsot: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _default_threads() -> int:
    env = os.environ.get("FSOT_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _add_common_opt_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="random seed (fully determines output)")
    p.add_argument("--iters", type=int, default=None, help="iteration count (default per preset)")
    p.add_argument("--proj", type=int, default=32, help="sliced steps per iteration")
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker count (FSOT_THREADS fallback); results never depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="fsot",
        description="Multi-class point-set optimization via filtered sliced transport",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="optimize a point set for a class configuration")
    p.add_argument("--config", required=True, help="preset name or JSON config path")
    p.add_argument("--n", type=int, required=True, help="point count")
    p.add_argument("--out", required=True, help="output point file")
    p.add_argument("--trace", default=None, help="optional CSV loss trace (iter,loss,eta)")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--boundary", choices=["bounded", "toroidal"], default="toroidal")
    p.add_argument("--eta", type=float, default=None, help="initial learning rate (default n/2)")
    p.add_argument("--oversample", type=int, default=4)
    p.add_argument("--axis-prob", type=float, default=0.0)
    p.add_argument("--no-gamma-correction", action="store_true")
    _add_common_opt_flags(p)

    p = sub.add_parser("stipple", help="stipple an image with optimized points")
    p.add_argument("--image", required=True, help="PGM (mono) or PPM (cmyk15) input image")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=["mono", "cmyk15"], default="mono")
    p.add_argument("--svg", default=None, help="write an SVG rendering here")
    p.add_argument("--out", default=None, help="write the raw point file here")
    p.add_argument("--gamma", type=float, default=1.0)
    _add_common_opt_flags(p)

    p = sub.add_parser("tile", help="optimize a toroidal sample tile for pixel kernels")
    p.add_argument("--size", type=int, default=64, help="tile side in pixels (power of two)")
    p.add_argument("--spp", type=int, default=1)
    p.add_argument("--pathdim", type=int, default=2)
    p.add_argument("--recon", default="box", help="reconstruction kernel: box or gaussian:SIGMA")
    p.add_argument("--percept", default="none", help="perceptual kernel: none or gaussian:SIGMA")
    p.add_argument("--out", required=True)
    p.add_argument("--error-image", default=None,
                   help="also write the perceived-error image of a test integrand as PGM")
    _add_common_opt_flags(p)

    p = sub.add_parser("analyze", help="power spectrum and radial profile of a point file")
    p.add_argument("--points", required=True)
    p.add_argument("--spectrum", default=None, help="write the power grid as a PGM here")
    p.add_argument("--radial", default=None, help="write freq_over_sqrtN,power CSV here")
    p.add_argument("--res", type=int, default=256)

    p = sub.add_parser("mc-bench", help="Monte-Carlo variance benchmark")
    p.add_argument("--sampler", choices=["fsot", "fsot-axis", "random"], default="fsot")
    p.add_argument("--integrand", choices=["disc", "step"], default="disc")
    p.add_argument("--nmax", type=int, default=4096)
    p.add_argument("--csv", required=True)
    p.add_argument("--realizations", type=int, default=10)
    p.add_argument("--variants", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count())

    p = sub.add_parser("progressive", help="optimize a progressive (prefix-stratified) sequence")
    p.add_argument("--levels", default="4", help="prefix level count, or 'ramp'")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--boundary", choices=["bounded", "toroidal"], default="toroidal")
    _add_common_opt_flags(p)

    p = sub.add_parser("presets", help="list named class-configuration presets")

    return parser


def _cmd_optimize(args) -> int:
    domain = Domain(args.dim, Boundary(args.boundary))
    config = resolve_config(args.config, args.dim, args.n)
    pset = new_random_set(domain, args.n, args.seed)
    opt = OptimizerConfig(
        iterations=args.iters,
        projections_per_iteration=args.proj,
        learning_rate=args.eta,
        oversample=args.oversample,
        axis_priority_prob=args.axis_prob,
        seed=args.seed,
        gamma_correction=not args.no_gamma_correction,
    )
    report = run(pset, config, opt)
    _atomic_write(args.out, lambda tmp: save_points(tmp, pset))
    if args.trace:
        lines = ["iter,loss,eta"]
        for i, (loss, eta) in enumerate(zip(report.loss_trace, report.eta_trace)):
            lines.append(f"{i},{FLOAT % loss},{FLOAT % eta}")
        _write_text_atomic(args.trace, "\n".join(lines) + "\n")
    return 0


def _cmd_stipple(args) -> int:
    path = args.image.lower()
    if args.mode == "cmyk15":
        image = load_ppm(args.image)
    elif path.endswith(".ppm"):
        image = load_ppm(args.image)
    else:
        grid = load_pgm(args.image)
        image = grid / max(grid.max(), 1e-12)
    job = applications.StippleJob(
        image=image,
        n=args.n,
        mode=args.mode,
        gamma=args.gamma,
        seed=args.seed,
        iterations=args.iters,
        projections=args.proj,
    )
    pset, _report, labels = applications.stipple(job)
    if args.out:
        _atomic_write(args.out, lambda tmp: save_points(tmp, pset))
    if args.svg:
        h, w = image.shape[:2]
        svg = applications.stipple_svg(pset, labels, width_px=512, aspect=h / w)
        _write_text_atomic(args.svg, svg)
    if not args.out and not args.svg:
        print("fsot: stipple finished (no --out/--svg given, nothing written)", file=sys.stderr)
    return 0


def _cmd_tile(args) -> int:
    spec = perceptual.TileSpec(
        width=args.size,
        n_spp=args.spp,
        path_dim=args.pathdim,
        recon=perceptual.parse_kernel(args.recon),
        percept=perceptual.parse_kernel(args.percept),
        jitter_seed=args.seed,
    )
    opt = OptimizerConfig(
        iterations=args.iters if args.iters is not None else perceptual.TILE_ITERATIONS_DEFAULT,
        projections_per_iteration=args.proj,
        seed=args.seed,
    )
    tile = perceptual.optimize_tile(spec, opt)
    _atomic_write(args.out, lambda tmp: save_points(tmp, tile))
    if args.error_image:
        integrand = perceptual.SeparableTileIntegrand(
            applications.GaussianBumpIntegrand(center=(0.5,) * args.pathdim, sigma=0.2),
            perceptual.cosine_image_field((1, 1), 0.5),
        )
        error, _l1, _spec = perceptual.perceived_error_image(tile, spec, integrand)
        _atomic_write(args.error_image, lambda tmp: save_pgm(tmp, error))
    return 0


def _cmd_analyze(args) -> int:
    pset = load_points(args.points)
    spec = analysis.power_spectrum(pset.points, resolution=args.res)
    if args.spectrum:
        _atomic_write(args.spectrum, lambda tmp: save_pgm(tmp, spec.power))
    if args.radial:
        lines = ["freq_over_sqrtN,power"]
        for f, p in zip(spec.freqs, spec.profile):
            lines.append(f"{FLOAT % f},{FLOAT % p}")
        _write_text_atomic(args.radial, "\n".join(lines) + "\n")
    if not args.spectrum and not args.radial:
        print(f"low_freq_power(0.5) = {analysis.low_freq_power(spec, 0.5):.6g}")
    return 0


def _cmd_mc_bench(args) -> int:
    if args.sampler == "random":
        sampler = applications.random_sampler()
    elif args.sampler == "fsot-axis":
        sampler = applications.fsot_sampler(axis_priority_prob=0.3)
    else:
        sampler = applications.fsot_sampler()
    integrand = (
        applications.DiscIntegrand() if args.integrand == "disc"
        else applications.AlignedStepIntegrand()
    )
    ns = []
    n = 16
    while n <= args.nmax:
        ns.append(n)
        n *= 4
    rows = applications.mc_convergence(
        sampler, ns, integrand, args.realizations, args.variants, args.seed
    )
    lines = ["n,variance"] + [f"{n},{FLOAT % v}" for n, v in rows]
    _write_text_atomic(args.csv, "\n".join(lines) + "\n")
    return 0


def _cmd_progressive(args) -> int:
    levels = None if args.levels == "ramp" else int(args.levels)
    config = applications.progressive_config(levels, args.n)
    domain = Domain(2, Boundary(args.boundary))
    pset = new_random_set(domain, args.n, args.seed)
    opt = OptimizerConfig(
        iterations=args.iters, projections_per_iteration=args.proj, seed=args.seed
    )
    run(pset, config, opt)
    _atomic_write(args.out, lambda tmp: save_points(tmp, pset))
    return 0


def _cmd_presets(_args) -> int:
    for name in PRESET_NAMES:
        print(f"{name:18s} {PRESET_SUMMARIES[name]}")
    return 0


_COMMANDS = {
    "optimize": _cmd_optimize,
    "stipple": _cmd_stipple,
    "tile": _cmd_tile,
    "analyze": _cmd_analyze,
    "mc-bench": _cmd_mc_bench,
    "progressive": _cmd_progressive,
    "presets": _cmd_presets,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed 'fsot: error: ...' for usage problems
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (FsotError, OSError, ValueError) as exc:
        print(f"fsot: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
