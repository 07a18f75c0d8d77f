"""Per-pixel kernel classes and perceptual sample-tile optimization.

A square sample tile assigns every pixel a class whose function is the
pixel's effective reconstruction kernel (reconstruction convolved with an
optional perceptual blur), evaluated on toroidal pixel distance and scaled to
peak at one. Image-plane positions double as the class coordinates and stay
fixed; only the path-space dimensions are optimized, each pixel pulling the
samples under its kernel toward uniformity. Tiles wrap toroidally, so they
can be repeated over an arbitrarily large image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classes import Class, ClassConfig, ClassFunction
from .core import Boundary, Domain, ExtendedPointSet
from .errors import InvalidArgumentError
from .optimizer import OptimizerConfig, run
from .targets import uniform_density
from . import analysis

TILE_ITERATIONS_DEFAULT = 2048
TILE_PROJECTIONS_DEFAULT = 64


@dataclass(frozen=True)
class Kernel:
    """A reconstruction or perceptual kernel: one-pixel box, or a Gaussian
    with a standard deviation in pixels and a truncation radius in sigmas."""

    kind: str  # "box" or "gaussian"
    sigma_px: float = 0.0
    trunc_sigmas: float = 3.0

    def __post_init__(self):
        if self.kind not in ("box", "gaussian"):
            raise InvalidArgumentError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian" and self.sigma_px <= 0.0:
            raise InvalidArgumentError("gaussian kernels need sigma_px > 0")
        if self.trunc_sigmas <= 0.0:
            raise InvalidArgumentError("truncation radius must be positive")


def parse_kernel(spec: str) -> Kernel | None:
    """Parse 'box', 'none', or 'gaussian:SIGMA' kernel descriptions."""
    spec = spec.strip().lower()
    if spec in ("none", ""):
        return None
    if spec == "box":
        return Kernel("box")
    if spec.startswith("gaussian"):
        parts = spec.split(":")
        sigma = float(parts[1]) if len(parts) > 1 else 1.0
        return Kernel("gaussian", sigma_px=sigma)
    raise InvalidArgumentError(f"cannot parse kernel spec {spec!r}")


class _EffectiveKernel:
    """The convolution of the reconstruction kernel with the perceptual one,
    evaluated on pixel-unit offsets and truncated to a finite footprint.

    Gaussian-Gaussian composes analytically; box-Gaussian uses a dense 1D
    profile table (the per-axis convolution of a unit box with a Gaussian).
    """

    def __init__(self, recon: Kernel, percept: Kernel | None):
        if recon.kind == "box" and percept is None:
            self.kind = "box"
            self.radius_px = 0.5
        elif recon.kind == "box":
            self.kind = "box_gauss"
            sg = percept.sigma_px
            self.radius_px = 0.5 + percept.trunc_sigmas * sg
            ts = np.linspace(0.0, self.radius_px, 4097)
            root2 = math.sqrt(2.0)
            erf = np.vectorize(math.erf)
            phi = 0.5 * (erf((ts + 0.5) / (root2 * sg)) - erf((ts - 0.5) / (root2 * sg)))
            self._ts, self._phi = ts, phi
        else:
            sigma = recon.sigma_px
            trunc = recon.trunc_sigmas
            if percept is not None:
                sigma = math.hypot(sigma, percept.sigma_px)
                trunc = max(trunc, percept.trunc_sigmas)
            self.kind = "gaussian"
            self.sigma = sigma
            self.radius_px = trunc * sigma
        self.peak = float(self.values_px(np.zeros(1), np.zeros(1))[0])
        self.integral_px2 = self._integral_px2()

    def values_px(self, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
        if self.kind == "box":
            # half-open pixel membership: the boxes partition the tile exactly
            return ((dx >= -0.5) & (dx < 0.5) & (dy >= -0.5) & (dy < 0.5)).astype(np.float64)
        if self.kind == "gaussian":
            r2 = dx * dx + dy * dy
            vals = np.exp(-r2 / (2.0 * self.sigma**2))
            return np.where(r2 <= self.radius_px**2, vals, 0.0)
        px = np.interp(np.abs(dx), self._ts, self._phi, right=0.0)
        py = np.interp(np.abs(dy), self._ts, self._phi, right=0.0)
        return px * py

    def _integral_px2(self) -> float:
        if self.kind == "box":
            return 1.0
        n = 512
        step = 2.0 * self.radius_px / n
        axis = -self.radius_px + (np.arange(n) + 0.5) * step
        gx, gy = np.meshgrid(axis, axis)
        return float(self.values_px(gx.ravel(), gy.ravel()).sum() * step * step)


class KernelClassFunction(ClassFunction):
    """Per-pixel class function: the effective kernel centered on one pixel,
    evaluated on toroidal tile distance and normalized to peak at one."""

    def __init__(self, kernel: _EffectiveKernel, center: np.ndarray, width: int):
        self.kernel = kernel
        self.center = np.asarray(center, dtype=np.float64)
        self.width = width
        self.arity = 2
        self.max_value = 1.0

    def eval_many(self, cs: np.ndarray) -> np.ndarray:
        delta = cs - self.center[None, :]
        delta -= np.round(delta)
        delta *= self.width
        return self.kernel.values_px(delta[:, 0], delta[:, 1]) / self.kernel.peak

    def rescaled(self, factor):
        if abs(factor - 1.0) > 1e-12:
            raise InvalidArgumentError("pixel kernel classes are already normalized")
        return self


@dataclass
class SeparableTileIntegrand:
    """An integrand on image x path space: image_field(c) * path(x).

    ``image_field`` maps tile coordinates (n, 2) -> (n,) and must be
    toroidally periodic so the tiled estimate stays consistent; ``None``
    means constant 1 (the integrand ignores the image plane). The path
    factor supplies ``evaluate`` and an exact ``integral``.
    """

    path_integrand: object
    image_field: object = None

    def evaluate_tile(self, image_xy: np.ndarray, path: np.ndarray) -> np.ndarray:
        values = np.asarray(self.path_integrand.evaluate(path), dtype=np.float64)
        if self.image_field is not None:
            values = values * np.asarray(self.image_field(image_xy), dtype=np.float64)
        return values

    def path_integral(self) -> float:
        return float(self.path_integrand.integral())


@dataclass
class TileSpec:
    """Geometry and kernels of a sample tile.

    The tile is square with a power-of-two side, holds n_spp samples per
    pixel, and optimizes path_dim dimensions per sample. ``percept=None``
    optimizes for the reconstruction kernel alone.
    """

    width: int = 64
    n_spp: int = 1
    path_dim: int = 2
    recon: Kernel = Kernel("box")
    percept: Kernel | None = None
    jitter_seed: int = 0

    def __post_init__(self):
        if self.width < 2 or (self.width & (self.width - 1)) != 0:
            raise InvalidArgumentError("tile width must be a power of two >= 2")
        if self.n_spp < 1 or self.path_dim < 1:
            raise InvalidArgumentError("need n_spp >= 1 and path_dim >= 1")

    @property
    def n_points(self) -> int:
        return self.width * self.width * self.n_spp

    def effective_kernel(self, recon: Kernel | None = None,
                         percept: Kernel | None = None) -> _EffectiveKernel:
        use_recon = recon if recon is not None else self.recon
        use_percept = percept if percept is not None else self.percept
        return _EffectiveKernel(use_recon, use_percept)


def pixel_centers(width: int) -> np.ndarray:
    """Centers of all width^2 pixels in tile coordinates, row-major, (P, 2)."""
    idx = np.arange(width * width)
    px = idx % width
    py = idx // width
    return np.column_stack([(px + 0.5) / width, (py + 0.5) / width])


def build_pixel_classes(spec: TileSpec) -> ClassConfig:
    """One class per pixel: the effective kernel as its function, the uniform
    path-space measure as its target, equal weights."""
    kernel = spec.effective_kernel()
    if 2.0 * kernel.radius_px > spec.width:
        raise InvalidArgumentError(
            f"kernel footprint radius {kernel.radius_px:.2f}px exceeds half the tile"
        )
    target = uniform_density(spec.path_dim)
    centers = pixel_centers(spec.width)
    classes = [
        Class(KernelClassFunction(kernel, c, spec.width), target, 1.0) for c in centers
    ]
    return ClassConfig(classes, arity=2)


def make_tile(spec: TileSpec, seed: int) -> ExtendedPointSet:
    """Fresh tile: one stratified jitter position per sample inside its pixel
    (fixed for the lifetime of the tile), random initial path coordinates."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=spec.jitter_seed,
                                                       spawn_key=(101,)))
    w = spec.width
    idx = np.arange(spec.n_points)
    pixel = idx // spec.n_spp
    px = pixel % w
    py = pixel // w
    jitter = rng.random((spec.n_points, 2))
    coords = np.column_stack([(px + jitter[:, 0]) / w, (py + jitter[:, 1]) / w])
    path_rng = np.random.default_rng(seed)
    points = path_rng.random((spec.n_points, spec.path_dim))
    domain = Domain(spec.path_dim, Boundary.BOUNDED)
    return ExtendedPointSet(domain, points, coords)


def default_tile_iterations(spec: TileSpec) -> int:
    """Iteration budget keeping per-pixel selection counts roughly constant."""
    return max(TILE_ITERATIONS_DEFAULT, spec.width * spec.width)


def optimize_tile(spec: TileSpec, opt: OptimizerConfig | None = None,
                  tile: ExtendedPointSet | None = None) -> ExtendedPointSet:
    """Optimize a tile's path coordinates against its per-pixel classes."""
    if opt is None or opt.iterations is None:
        base = opt if opt is not None else OptimizerConfig(
            projections_per_iteration=TILE_PROJECTIONS_DEFAULT
        )
        opt = OptimizerConfig(
            iterations=default_tile_iterations(spec),
            projections_per_iteration=base.projections_per_iteration,
            learning_rate=base.learning_rate,
            decay=base.decay,
            oversample=base.oversample,
            axis_priority_prob=base.axis_priority_prob,
            seed=base.seed,
            fixed_dims=base.fixed_dims,
            gamma_correction=base.gamma_correction,
        )
    config = build_pixel_classes(spec)
    if tile is None:
        tile = make_tile(spec, seed=opt.seed)
    run(tile, config, opt)
    return tile


def cosine_image_field(freq: tuple = (1, 1), amplitude: float = 0.5, offset: tuple = (0.0, 0.0)):
    """Smooth, toroidally periodic image factor 1 + a*cos(2 pi fx (x-ox))*cos(2 pi fy (y-oy)).

    Integer frequencies keep the field periodic over the tile, so rolled
    tiles see a consistently rolled integrand.
    """

    def field(xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64)
        return 1.0 + (
            amplitude
            * np.cos(2.0 * np.pi * freq[0] * (xy[:, 0] - offset[0]))
            * np.cos(2.0 * np.pi * freq[1] * (xy[:, 1] - offset[1]))
        )

    return field


def perceived_reference(
    spec: TileSpec,
    integrand: SeparableTileIntegrand,
    kernel: _EffectiveKernel,
    subdiv: int = 5,
) -> float | np.ndarray:
    """Perceived ground truth per pixel: kernel (x) image field, times the
    exact path integral.

    The image-plane convolution is computed by dense quadrature on a
    ``subdiv``-times refined subpixel grid (odd subdiv puts one quadrature
    node exactly on each pixel center), carried out as a circular FFT
    convolution since the tile wraps toroidally.
    """
    path_int = integrand.path_integral()
    if integrand.image_field is None:
        return path_int
    if subdiv % 2 == 0:
        raise InvalidArgumentError("subdivision must be odd to hit pixel centers")
    w = spec.width
    s = w * subdiv
    axis = (np.arange(s) + 0.5) / s
    gx, gy = np.meshgrid(axis, axis)
    field = np.asarray(
        integrand.image_field(np.column_stack([gx.ravel(), gy.ravel()]))
    ).reshape(s, s)

    # kernel footprint on the subgrid, centered at the origin subcell
    offsets = np.arange(s, dtype=np.float64)
    offsets[offsets > s / 2] -= s  # toroidal signed offsets in subcells
    off_px = offsets * (w / s)
    kx, ky = np.meshgrid(off_px, off_px)
    kvals = kernel.values_px(kx.ravel(), ky.ravel()).reshape(s, s)
    kvals /= kvals.sum()  # quadrature weights summing to 1

    smoothed = np.fft.ifft2(np.fft.fft2(field) * np.fft.fft2(kvals)).real
    # subcell at index subdiv*p + subdiv//2 is centered on pixel p
    half = subdiv // 2
    ref = smoothed[half::subdiv, half::subdiv]
    return path_int * ref


def perceived_error_image(
    tile: ExtendedPointSet,
    spec: TileSpec,
    integrand,
    reference: float | np.ndarray | None = None,
    recon: Kernel | None = None,
    percept: Kernel | None = None,
):
    """Per-pixel perceived estimates minus the perceived reference.

    ``integrand`` is either a SeparableTileIntegrand or a plain path-space
    integrand (then treated as constant over the image plane). The
    evaluation kernels default to the tile's own but can be overridden, e.g.
    to judge a box-optimized tile under a perceptual kernel. Returns
    (absolute error image, mean absolute error, spectrum of the signed
    error).
    """
    if not isinstance(integrand, SeparableTileIntegrand):
        integrand = SeparableTileIntegrand(integrand)
    w = spec.width
    spp = spec.n_spp
    kernel = spec.effective_kernel(recon, percept)
    norm = kernel.integral_px2 / (w * w)  # kernel integral in tile units

    # the window gather below indexes samples by pixel block
    pixel = np.arange(tile.size) // spp
    if not (
        np.array_equal(np.floor(tile.class_coords[:, 0] * w).astype(np.int64), pixel % w)
        and np.array_equal(np.floor(tile.class_coords[:, 1] * w).astype(np.int64), pixel // w)
    ):
        raise InvalidArgumentError("tile samples must be ordered pixel-major, one block per pixel")

    pos = tile.class_coords.reshape(w, w, spp, 2)
    f_vals = integrand.evaluate_tile(tile.class_coords, tile.points).reshape(w, w, spp)

    centers_x = ((np.arange(w) + 0.5) / w)[None, :, None]
    centers_y = ((np.arange(w) + 0.5) / w)[:, None, None]

    dmax = int(math.floor(kernel.radius_px + 0.5))
    estimate = np.zeros((w, w))
    for dy in range(-dmax, dmax + 1):
        for dx in range(-dmax, dmax + 1):
            p = np.roll(pos, shift=(-dy, -dx), axis=(0, 1))
            fv = np.roll(f_vals, shift=(-dy, -dx), axis=(0, 1))
            ddx = p[..., 0] - centers_x
            ddy = p[..., 1] - centers_y
            ddx -= np.round(ddx)
            ddy -= np.round(ddy)
            k = kernel.values_px(ddx * w, ddy * w)
            estimate += (k * fv).sum(axis=2)
    estimate /= tile.size * norm

    if reference is None:
        reference = perceived_reference(spec, integrand, kernel)
    signed = estimate - reference
    spectrum = analysis.image_power_spectrum(signed)
    return np.abs(signed), float(np.abs(signed).mean()), spectrum
