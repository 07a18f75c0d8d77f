"""Quality metrics: Fourier power spectra, radial averages, and empirical
verification of the transport-based integration-error bounds.

Spectra are normalized so an ideal white-noise input sits at power 1 at every
frequency; frequencies are reported relative to sqrt(point count), which puts
the mean point spacing at 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classes import StaircaseFunction
from .errors import (
    EqualMassViolationError,
    InvalidArgumentError,
    UnsupportedDimensionError,
)

BOUND_EPS = 1e-9


@dataclass
class SpectrumResult:
    """2D power grid plus its radially averaged profile.

    ``power`` is (resolution, resolution) with the DC bin zeroed; ``freqs``
    holds annulus frequencies divided by sqrt_n, and ``profile`` the mean
    power per annulus.
    """

    resolution: int
    power: np.ndarray
    freqs: np.ndarray
    profile: np.ndarray
    sqrt_n: float


def _radial_package(power: np.ndarray, resolution: int, sqrt_n: float) -> SpectrumResult:
    half = resolution // 2
    k = np.arange(-half, resolution - half)
    kx, ky = np.meshgrid(k, k)
    radius = np.rint(np.hypot(kx, ky)).astype(np.int64)
    n_annuli = int(np.floor(np.sqrt(2.0) * half))
    sums = np.bincount(radius.ravel(), weights=power.ravel(), minlength=n_annuli + 1)
    counts = np.bincount(radius.ravel(), minlength=n_annuli + 1)
    annuli = np.arange(1, n_annuli + 1)
    present = counts[annuli] > 0
    annuli = annuli[present]
    profile = sums[annuli] / counts[annuli]
    return SpectrumResult(
        resolution=resolution,
        power=power,
        freqs=annuli / sqrt_n,
        profile=profile,
        sqrt_n=sqrt_n,
    )


def power_spectrum(points: np.ndarray, resolution: int = 128) -> SpectrumResult:
    """Periodogram of a 2D point set on an integer frequency grid.

    P(k) = |sum_j exp(-2 pi i k.x_j)|^2 / n, evaluated for
    k in [-R/2, R/2)^2 with the DC bin set to zero. White noise averages to 1.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise UnsupportedDimensionError("power_spectrum expects (n, 2) points")
    n = pts.shape[0]
    if n < 1 or resolution < 2:
        raise InvalidArgumentError("need at least one point and resolution >= 2")
    half = resolution // 2
    k = np.arange(-half, resolution - half)
    # Separable phases keep this a pair of (R, n) tables and one matmul.
    ex = np.exp(-2j * np.pi * np.outer(k, pts[:, 0]))
    ey = np.exp(-2j * np.pi * np.outer(k, pts[:, 1]))
    field = ey @ ex.T  # rows: ky, cols: kx
    power = (field.real**2 + field.imag**2) / n
    power[half, half] = 0.0
    return _radial_package(power, resolution, np.sqrt(n))


def image_power_spectrum(image: np.ndarray) -> SpectrumResult:
    """Power spectrum of a 2D scalar image, normalized by its own variance.

    A white-noise image maps to a flat profile at 1, so the result is
    directly comparable with point-set spectra (with the pixel count playing
    the role of the point count).
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise UnsupportedDimensionError("image_power_spectrum expects a 2D array")
    h, w = img.shape
    if h != w:
        raise InvalidArgumentError("only square images are supported")
    var = img.var()
    field = np.fft.fftshift(np.fft.fft2(img - img.mean()))
    denom = img.size * var if var > 0 else 1.0
    power = (field.real**2 + field.imag**2) / denom
    power[h // 2, w // 2] = 0.0
    return _radial_package(power, w, np.sqrt(img.size))


def low_freq_power(spec: SpectrumResult, f_cut: float) -> float:
    """Mean radial-profile power over 0 < freq <= f_cut (normalized units)."""
    if f_cut <= 0.0:
        raise InvalidArgumentError("frequency cut must be positive")
    mask = spec.freqs <= f_cut
    if not np.any(mask):
        raise InvalidArgumentError(f"no annuli at or below normalized frequency {f_cut}")
    return float(spec.profile[mask].mean())


def anisotropy_ratio(
    spec: SpectrumResult,
    f_lo: float = 0.25,
    f_hi: float = 1.5,
    half_angle_deg: float = 15.0,
) -> float:
    """Mean power in axis-aligned wedges over mean power in diagonal wedges.

    Wedges are measured in the frequency band [f_lo, f_hi] (normalized units)
    within ``half_angle_deg`` of the axes and of the diagonals respectively.
    Isotropic spectra give a ratio near 1; axis-aligned point alignments push
    it up.
    """
    r = spec.resolution
    half = r // 2
    k = np.arange(-half, r - half)
    kx, ky = np.meshgrid(k, k)
    rad = np.hypot(kx, ky) / spec.sqrt_n
    band = (rad >= f_lo) & (rad <= f_hi)
    angle = np.degrees(np.arctan2(np.abs(ky), np.abs(kx)))  # in [0, 90]
    axis = band & ((angle <= half_angle_deg) | (angle >= 90.0 - half_angle_deg))
    diag = band & (np.abs(angle - 45.0) <= half_angle_deg)
    if not np.any(axis) or not np.any(diag):
        raise InvalidArgumentError("frequency band contains no wedge modes")
    return float(spec.power[axis].mean() / spec.power[diag].mean())


def w1_1d(xs, ys) -> float:
    """Exact discrete 1D 1-Wasserstein distance: (1/m) sum |x_(i) - y_(i)|."""
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if xs.size != ys.size:
        raise InvalidArgumentError(f"size mismatch: {xs.size} vs {ys.size}")
    if xs.size == 0:
        raise InvalidArgumentError("empty inputs")
    return float(np.abs(np.sort(xs) - np.sort(ys)).mean())


@dataclass
class PiecewiseLinear1D:
    """A piecewise-linear test integrand on [0,1] with a known Lipschitz constant."""

    knots_x: np.ndarray
    knots_y: np.ndarray

    def __post_init__(self):
        self.knots_x = np.asarray(self.knots_x, dtype=np.float64)
        self.knots_y = np.asarray(self.knots_y, dtype=np.float64)
        if self.knots_x.size < 2 or self.knots_x.size != self.knots_y.size:
            raise InvalidArgumentError("need matching knot arrays with >= 2 entries")
        if self.knots_x[0] != 0.0 or self.knots_x[-1] != 1.0 or np.any(np.diff(self.knots_x) <= 0):
            raise InvalidArgumentError("knot positions must increase from 0 to 1")

    def __call__(self, x):
        return np.interp(x, self.knots_x, self.knots_y)

    @property
    def lipschitz(self) -> float:
        slopes = np.diff(self.knots_y) / np.diff(self.knots_x)
        return float(np.abs(slopes).max())

    def integral(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Exact integral over [lo, hi] (trapezoid over the refined knots)."""
        xs = np.unique(np.concatenate([[lo, hi], self.knots_x[(self.knots_x > lo) & (self.knots_x < hi)]]))
        ys = self(xs)
        return float(np.trapezoid(ys, xs))


def _uniform_atoms(n_ref: int) -> np.ndarray:
    return (np.arange(n_ref) + 0.5) / n_ref


def w1_to_uniform_atoms(points: np.ndarray, n_ref: int) -> float:
    """W1 between a point set and the uniform measure discretized at n_ref atoms.

    n_ref is rounded up to a multiple of the point count so the two sides can
    be matched exactly by sorting.
    """
    pts = np.sort(np.asarray(points, dtype=np.float64).ravel())
    n = pts.size
    c = max(1, int(np.ceil(n_ref / n)))
    atoms = _uniform_atoms(c * n)
    return w1_1d(np.repeat(pts, c), atoms)


def check_error_bound_1d(
    f: PiecewiseLinear1D, points: np.ndarray, n_ref: int | None = None
) -> tuple[float, float, bool]:
    """Check |mean f(x_i) - int f| <= L_f * W1(points, uniform).

    The uniform reference is discretized at ``n_ref`` equispaced atoms
    (default 64 per point). Returns (lhs, rhs, holds).
    """
    pts = np.asarray(points, dtype=np.float64).ravel()
    if pts.size == 0:
        raise InvalidArgumentError("empty point set")
    if n_ref is None:
        n_ref = 64 * pts.size
    lhs = abs(float(np.mean(f(pts))) - f.integral())
    rhs = f.lipschitz * w1_to_uniform_atoms(pts, n_ref)
    return lhs, rhs, lhs <= rhs + BOUND_EPS


def _superlevel_intervals(w: StaircaseFunction, z: float) -> list[tuple[float, float]]:
    """Merged intervals where the staircase exceeds z."""
    raw = sorted((lo, hi) for lo, hi, level in w.pieces if level > z)
    merged: list[list[float]] = []
    for lo, hi in raw:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(lo, hi) for lo, hi in merged if hi > lo]


def _region_w1(points_in: np.ndarray, intervals: list, n_ref_per_point: int) -> float:
    """W1 between points in a region and the renormalized uniform on it.

    The region's uniform measure is discretized by pushing equispaced
    quantiles through its inverse CDF.
    """
    m = points_in.size
    c = max(1, n_ref_per_point)
    q = _uniform_atoms(c * m)
    lengths = np.array([hi - lo for lo, hi in intervals])
    cum = np.concatenate([[0.0], np.cumsum(lengths)]) / lengths.sum()
    seg = np.searchsorted(cum, q, side="right") - 1
    seg = np.clip(seg, 0, len(intervals) - 1)
    lo = np.array([iv[0] for iv in intervals])[seg]
    frac = (q - cum[seg]) / (np.diff(cum)[seg])
    atoms = lo + frac * lengths[seg]
    return w1_1d(np.repeat(np.sort(points_in), c), np.sort(atoms))


def check_filtered_bound_1d(
    w: StaircaseFunction,
    f: PiecewiseLinear1D,
    points: np.ndarray,
    n_ref: int | None = None,
) -> tuple[float, float, bool]:
    """Check the filtered form of the integration-error bound.

    lhs = |(1/n) sum w(x_i) f(x_i) - int w f|; rhs sums, over the levels of
    w, the level gap times the transport distance between the points falling
    in that superlevel region and the renormalized uniform on it, scaled by
    the region measure and L_f. Requires the equal-mass condition: at every
    level, the fraction of points inside must match the region's measure to
    within 1/n.
    """
    pts = np.asarray(points, dtype=np.float64).ravel()
    n = pts.size
    if n == 0:
        raise InvalidArgumentError("empty point set")
    c = max(1, int(np.ceil((n_ref if n_ref is not None else 64 * n) / n)))

    levels = np.concatenate([[0.0], w.levels])
    wx = w(pts)
    fx = f(pts)

    exact = sum(level * f.integral(lo, hi) for lo, hi, level in w.pieces)
    lhs = abs(float(np.mean(wx * fx)) - exact)

    rhs = 0.0
    for j in range(1, levels.size):
        z_lo, z_hi = levels[j - 1], levels[j]
        intervals = _superlevel_intervals(w, z_lo)
        measure = sum(hi - lo for lo, hi in intervals)
        inside = pts[wx > z_lo]
        if abs(inside.size / n - measure) > 1.0 / n + 1e-12:
            raise EqualMassViolationError(
                f"level {z_lo}: {inside.size}/{n} points inside a region of measure {measure:.6g}"
            )
        if inside.size == 0 or measure == 0.0:
            continue
        rhs += (z_hi - z_lo) * measure * _region_w1(inside, intervals, c)
    rhs *= f.lipschitz
    return lhs, rhs, lhs <= rhs + BOUND_EPS
