"""Domain, point, and extended-point-set types shared by every other module.

An extended point set couples mutable optimization coordinates (``points``,
shape ``(n, dim)``) with immutable class coordinates (``class_coords``, shape
``(n, class_dim)``). The class coordinates exist purely for subset selection
and are never touched by the optimizer; index ``i`` identifies the same point
for the whole lifetime of a set.

Storage is struct-of-arrays (two float64 matrices) rather than a list of
point objects; all hot loops are numpy-vectorized.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError

POINTS_MAGIC = "fsot-points"
POINTS_VERSION = "v1"
# '%.17g' is the shortest fixed precision that round-trips every float64.
FLOAT_FMT = "%.17g"


class Boundary(enum.Enum):
    BOUNDED = "bounded"
    TOROIDAL = "toroidal"


@dataclass(frozen=True)
class Domain:
    """Unit-cube optimization domain of a given dimension.

    All managed coordinates live in [0, 1]^dim; ``wrap`` maps arbitrary
    coordinates back into the cube (modulo 1 for toroidal domains, clamping
    for bounded ones).
    """

    dim: int
    boundary: Boundary = Boundary.BOUNDED

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidArgumentError(f"domain dimension must be >= 1, got {self.dim}")

    @property
    def is_toroidal(self) -> bool:
        return self.boundary is Boundary.TOROIDAL


def wrap(domain: Domain, coords: np.ndarray) -> np.ndarray:
    """Map coordinates into [0,1]^d: modulo 1 if toroidal, clamp if bounded.

    Accepts a single point ``(d,)`` or a batch ``(n, d)``. Idempotent.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if not np.all(np.isfinite(coords)):
        raise InvalidArgumentError("cannot wrap non-finite coordinates")
    if domain.is_toroidal:
        out = np.mod(coords, 1.0)
        # np.mod of a tiny negative value can round up to exactly 1.0.
        out[out >= 1.0] = 0.0
        return out
    return np.clip(coords, 0.0, 1.0)


class ExtendedPoint(NamedTuple):
    """One sample: its immutable class coordinate and its spatial position."""

    class_coord: np.ndarray
    point: np.ndarray


@dataclass
class ExtendedPointSet:
    """Optimization points plus their fixed class coordinates.

    Attributes
    ----------
    domain : Domain
        Spatial domain of the ``points`` coordinates.
    points : ndarray, shape (n, domain.dim)
        Mutable optimization coordinates in [0, 1]^dim.
    class_coords : ndarray, shape (n, class_dim)
        Immutable selection coordinates in [0, 1]^class_dim.
    """

    domain: Domain
    points: np.ndarray
    class_coords: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != self.domain.dim:
            raise InvalidArgumentError(
                f"points must have shape (n, {self.domain.dim}), got {self.points.shape}"
            )
        n = self.points.shape[0]
        if n < 1:
            raise InvalidArgumentError("a point set must contain at least one point")
        if self.class_coords is None:
            self.class_coords = midpoint_class_coords(n)
        self.class_coords = np.ascontiguousarray(self.class_coords, dtype=np.float64)
        if self.class_coords.ndim == 1:
            self.class_coords = self.class_coords[:, None]
        if self.class_coords.shape[0] != n:
            raise InvalidArgumentError("class_coords and points must have equal length")
        if not np.all(np.isfinite(self.points)):
            raise InvalidArgumentError("points must be finite")
        if not np.all(np.isfinite(self.class_coords)):
            raise InvalidArgumentError("class coordinates must be finite")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def class_dim(self) -> int:
        return self.class_coords.shape[1]

    def copy(self) -> "ExtendedPointSet":
        return ExtendedPointSet(self.domain, self.points.copy(), self.class_coords.copy())

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, i: int) -> ExtendedPoint:
        return ExtendedPoint(self.class_coords[i], self.points[i])


def midpoint_class_coords(n: int) -> np.ndarray:
    """Default 1D class coordinates: cell midpoints (i + 0.5)/n, shape (n, 1)."""
    return ((np.arange(n) + 0.5) / n)[:, None]


def new_random_set(domain: Domain, n: int, seed: int) -> ExtendedPointSet:
    """Create ``n`` i.i.d. uniform points with midpoint class coordinates.

    Deterministic for a fixed seed.
    """
    if n < 1:
        raise InvalidArgumentError(f"point count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, domain.dim))
    return ExtendedPointSet(domain, pts, midpoint_class_coords(n))


def save_points(path, pset: ExtendedPointSet) -> None:
    """Write a point set as text; round-trips bit-exactly through load_points.

    Format: one header line
    ``fsot-points v1 dim=<d> classdim=<k> n=<N> boundary=<bounded|toroidal>``
    followed by N lines of ``c_1..c_k x_1..x_d``.
    """
    n, d = pset.points.shape
    k = pset.class_dim
    header = (
        f"{POINTS_MAGIC} {POINTS_VERSION} dim={d} classdim={k} n={n} "
        f"boundary={pset.domain.boundary.value}"
    )
    rows = np.hstack([pset.class_coords, pset.points])
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(" ".join(FLOAT_FMT % v for v in row) + "\n")


def load_points(path) -> ExtendedPointSet:
    """Read a point set written by ``save_points``."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 6 or header[0] != POINTS_MAGIC or header[1] != POINTS_VERSION:
            raise InvalidArgumentError(f"not a {POINTS_MAGIC} {POINTS_VERSION} file: {path}")
        fields = dict(item.split("=", 1) for item in header[2:])
        d = int(fields["dim"])
        k = int(fields["classdim"])
        n = int(fields["n"])
        boundary = Boundary(fields["boundary"])
        data = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if data.shape != (n, k + d):
        raise InvalidArgumentError(
            f"expected {n} rows of {k + d} values, got shape {data.shape}"
        )
    domain = Domain(d, boundary)
    return ExtendedPointSet(domain, data[:, k:], data[:, :k])
