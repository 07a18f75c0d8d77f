"""Target densities: construction, point sampling, and 1D projection.

Projected target distributions are never handled analytically; each sliced
step draws a fresh batch of target samples (several per optimization point)
and reduces them to equal-mass bins. ``build_bins`` performs that reduction:
the bin means are the match points of the semi-discrete inverse CDF, while
the bin boundaries feed the bin-length correction factors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import Domain
from .errors import InvalidArgumentError


class TargetKind(enum.Enum):
    UNIFORM = "uniform"
    GRID2D = "grid2d"
    EMPIRICAL = "empirical"


@dataclass
class TargetDensity:
    """A sampleable density on the unit cube.

    Uniform: Lebesgue on [0,1]^dim.
    Grid2D: piecewise-constant on a (height, width) cell grid; ``weights[r, c]``
        covers the cell [c/W,(c+1)/W] x [r/H,(r+1)/H] (image convention, row 0
        at the top, y growing downward).
    Empirical: equal-mass atoms; sampling returns whole copies of the atom
        list whenever the requested count is a multiple of the atom count, so
        a set probed against its own atoms reproduces them exactly.
    """

    kind: TargetKind
    dim: int
    weights: np.ndarray | None = None  # Grid2D only, shape (H, W)
    atoms: np.ndarray | None = None  # Empirical only, shape (n, dim)

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidArgumentError("target dimension must be >= 1")
        if self.kind is TargetKind.GRID2D:
            if self.dim != 2:
                raise InvalidArgumentError("grid densities are two-dimensional")
            w = np.ascontiguousarray(self.weights, dtype=np.float64)
            if w.ndim != 2:
                raise InvalidArgumentError("grid weights must be a 2D array")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise InvalidArgumentError("grid weights must be finite and non-negative")
            if w.sum() <= 0.0:
                raise InvalidArgumentError("grid density has zero total mass")
            self.weights = w
        elif self.kind is TargetKind.EMPIRICAL:
            a = np.ascontiguousarray(self.atoms, dtype=np.float64)
            if a.ndim != 2 or a.shape[1] != self.dim or a.shape[0] < 1:
                raise InvalidArgumentError("empirical atoms must have shape (n, dim)")
            self.atoms = a


def uniform_density(dim: int) -> TargetDensity:
    return TargetDensity(TargetKind.UNIFORM, dim)


def grid_density(weights: np.ndarray) -> TargetDensity:
    return TargetDensity(TargetKind.GRID2D, 2, weights=weights)


def empirical_density(atoms: np.ndarray) -> TargetDensity:
    atoms = np.asarray(atoms, dtype=np.float64)
    return TargetDensity(TargetKind.EMPIRICAL, atoms.shape[1], atoms=atoms)


def sample_target(density: TargetDensity, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` i.i.d. samples from the density, shape (count, dim).

    Grid2D uses a discrete inverse CDF over cell masses, then a uniform
    position within the chosen cell. Empirical returns each atom
    ``count / n_atoms`` times when that ratio is an integer (a permutation of
    exact copies), and falls back to uniform atom picks otherwise.
    """
    if count < 1:
        raise InvalidArgumentError(f"sample count must be >= 1, got {count}")
    if density.kind is TargetKind.UNIFORM:
        return rng.random((count, density.dim))
    if density.kind is TargetKind.GRID2D:
        w = density.weights
        h, wdt = w.shape
        cum = np.cumsum(w.ravel())
        total = cum[-1]
        if total <= 0.0:
            raise InvalidArgumentError("grid density has zero total mass")
        flat = np.searchsorted(cum, rng.random(count) * total, side="right")
        flat = np.minimum(flat, w.size - 1)
        rows, cols = np.divmod(flat, wdt)
        u = rng.random((count, 2))
        x = (cols + u[:, 0]) / wdt
        y = (rows + u[:, 1]) / h
        return np.column_stack([x, y])
    atoms = density.atoms
    n = atoms.shape[0]
    if count % n == 0:
        reps = np.tile(np.arange(n), count // n)
        return atoms[reps]
    return atoms[rng.integers(0, n, size=count)]


def sample_direction(dim: int, axis_priority_prob: float, rng: np.random.Generator) -> np.ndarray:
    """Draw a unit projection axis.

    With probability ``axis_priority_prob`` the axis is a signed coordinate
    axis (chosen uniformly among the 2*dim of them); otherwise it is uniform
    on the unit sphere.
    """
    if dim < 1:
        raise InvalidArgumentError("direction dimension must be >= 1")
    if not 0.0 <= axis_priority_prob <= 1.0:
        raise InvalidArgumentError("axis priority probability must lie in [0, 1]")
    if rng.random() < axis_priority_prob:
        theta = np.zeros(dim)
        j = int(rng.integers(0, dim))
        theta[j] = 1.0 if rng.random() < 0.5 else -1.0
        return theta
    while True:
        v = rng.standard_normal(dim)
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            return v / norm


def project(
    points: np.ndarray,
    theta: np.ndarray,
    domain: Domain,
    rng: np.random.Generator | None = None,
    shift: np.ndarray | None = None,
) -> np.ndarray:
    """Project points onto the line through ``theta``.

    Bounded domains use the plain dot product. Toroidal domains first apply a
    random translation (drawn from ``rng`` unless ``shift`` is given) and wrap;
    a sliced step passes the same shift for its optimization points and its
    target samples so the transport problem is translation-invariant.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if abs(np.linalg.norm(theta) - 1.0) > 1e-9:
        raise InvalidArgumentError("projection axis must be a unit vector")
    pts = np.asarray(points, dtype=np.float64)
    if domain.is_toroidal:
        if shift is None:
            if rng is None:
                raise InvalidArgumentError("toroidal projection needs a shift or an rng")
            shift = rng.random(domain.dim)
        shifted = pts + shift
        shifted -= np.floor(shifted)
        return shifted @ theta
    return pts @ theta


def toroidal_shift(domain: Domain, rng: np.random.Generator) -> np.ndarray | None:
    """Shared per-step translation for toroidal domains, None otherwise."""
    return rng.random(domain.dim) if domain.is_toroidal else None


def build_bins(target_proj: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Reduce c*m sorted projected target samples to m equal-mass bins.

    Returns (means, boundaries): ``means[i]`` is the average of the i-th run
    of c consecutive sorted values, ``boundaries`` has m+1 entries with the
    extremes at the ends and midpoints between adjacent bins' extreme samples
    in between.
    """
    ys = np.asarray(target_proj, dtype=np.float64)
    if ys.ndim != 1 or ys.size == 0:
        raise InvalidArgumentError("projected target samples must be a non-empty 1D array")
    if m < 1 or ys.size % m != 0:
        raise InvalidArgumentError(
            f"sample count {ys.size} is not a positive multiple of bin count {m}"
        )
    if np.any(np.diff(ys) < 0):
        raise InvalidArgumentError("projected target samples must be sorted ascending")
    return _build_bins_presorted(ys, m)


def _build_bins_presorted(ys: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """build_bins without validation, for callers that sorted ``ys`` themselves."""
    c = ys.size // m
    blocks = ys.reshape(m, c)
    means = blocks.mean(axis=1)
    boundaries = np.empty(m + 1)
    boundaries[0] = ys[0]
    boundaries[m] = ys[-1]
    if m > 1:
        boundaries[1:m] = 0.5 * (blocks[:-1, -1] + blocks[1:, 0])
    return means, boundaries


def load_pgm(path, invert: bool = False) -> np.ndarray:
    """Read an 8- or 16-bit grayscale PGM (P2 or P5) as a float weight grid.

    ``invert=True`` maps each pixel value v to maxval - v, making dark input
    pixels heavy (the usual convention for stippling dark-on-light images).
    """
    with open(path, "rb") as fh:
        data = fh.read()
    magic, tokens, pixel_offset = _parse_netpbm_header(data, n_header_tokens=4)
    if magic not in (b"P2", b"P5"):
        raise InvalidArgumentError(f"not a PGM (P2/P5) file: {path}")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if width < 1 or height < 1 or maxval < 1:
        raise InvalidArgumentError("corrupt PGM header")
    n = width * height
    if magic == b"P2":
        values = np.array(data[pixel_offset:].split()[:n], dtype=np.float64)
    else:
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        values = np.frombuffer(data, dtype=dtype, count=n, offset=pixel_offset).astype(np.float64)
    if values.size != n:
        raise InvalidArgumentError("truncated PGM pixel data")
    grid = values.reshape(height, width)
    return (maxval - grid) if invert else grid


def save_pgm(path, grid: np.ndarray) -> None:
    """Write a float array as an 8-bit binary PGM, scaled to the value range."""
    g = np.asarray(grid, dtype=np.float64)
    lo, hi = float(g.min()), float(g.max())
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    img = np.round((g - lo) * scale).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def load_ppm(path) -> np.ndarray:
    """Read an 8-bit color PPM (P3 or P6) as floats in [0,1], shape (H, W, 3)."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, tokens, pixel_offset = _parse_netpbm_header(data, n_header_tokens=4)
    if magic not in (b"P3", b"P6"):
        raise InvalidArgumentError(f"not a PPM (P3/P6) file: {path}")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    n = width * height * 3
    if magic == b"P3":
        values = np.array(data[pixel_offset:].split()[:n], dtype=np.float64)
    else:
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        values = np.frombuffer(data, dtype=dtype, count=n, offset=pixel_offset).astype(np.float64)
    if values.size != n:
        raise InvalidArgumentError("truncated PPM pixel data")
    return values.reshape(height, width, 3) / maxval


def _parse_netpbm_header(data: bytes, n_header_tokens: int) -> tuple[bytes, list, int]:
    """Return (magic, header tokens, offset of binary pixel data)."""
    tokens = []
    i = 0
    while len(tokens) < n_header_tokens:
        if i >= len(data):
            raise InvalidArgumentError("truncated netpbm header")
        ch = data[i : i + 1]
        if ch == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    return tokens[0], tokens, i + 1
