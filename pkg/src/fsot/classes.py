"""Class functions, classes, and class configurations.

A class couples a function on the class dimension with a target density: the
points whose class coordinates fall inside the function's support should
follow that density. Thresholding the function at a level z extracts a
subclass (the point subset with w(c) > z), which is the atomic optimization
objective. Function shape doubles as importance: the measure of levels at
which a subset is selected is exactly its weight in the overall barycenter.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import ExtendedPointSet
from .errors import EmptySelectionError, InvalidArgumentError
from .targets import TargetDensity, grid_density, load_pgm, uniform_density

_MAX_TOL = 1e-12


class ClassFunction:
    """Base class: a function [0,1]^arity -> [0,1] with a known maximum."""

    arity: int = 1
    max_value: float = 1.0

    def eval_many(self, cs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, cs: np.ndarray) -> np.ndarray:
        cs = np.asarray(cs, dtype=np.float64)
        scalar = cs.ndim == 0 or (cs.ndim == 1 and self.arity > 1)
        if cs.ndim == 0:
            cs = cs[None, None]
        elif cs.ndim == 1:
            cs = cs[None, :] if self.arity > 1 else cs[:, None]
        if cs.shape[1] != self.arity:
            raise InvalidArgumentError(
                f"class coordinates must have arity {self.arity}, got {cs.shape[1]}"
            )
        if np.any(cs < 0.0) or np.any(cs > 1.0):
            raise InvalidArgumentError("class coordinates must lie in [0, 1]")
        out = self.eval_many(cs)
        return float(out[0]) if scalar else out

    def rescaled(self, factor: float) -> "ClassFunction":
        raise NotImplementedError


@dataclass
class BoxFunction(ClassFunction):
    """Indicator of a closed interval [lo, hi] on the unit line."""

    lo: float = 0.0
    hi: float = 1.0
    height: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.lo <= self.hi <= 1.0:
            raise InvalidArgumentError("box support must satisfy 0 <= lo <= hi <= 1")
        if not 0.0 < self.height <= 1.0:
            raise InvalidArgumentError("box height must lie in (0, 1]")
        self.arity = 1
        self.max_value = self.height

    def eval_many(self, cs):
        c = cs[:, 0]
        return np.where((c >= self.lo) & (c <= self.hi), self.height, 0.0)

    def rescaled(self, factor):
        return BoxFunction(self.lo, self.hi, self.height * factor)


@dataclass
class StaircaseFunction(ClassFunction):
    """Piecewise-constant function given as (lo, hi, level) pieces.

    Pieces are evaluated first-match with closed interval bounds, so listing
    [0, 0.5] -> 1 before (0.5, 1] -> 1/3 reproduces the conventional closed /
    half-open split. Coordinates outside every piece evaluate to 0.
    """

    pieces: tuple = ()

    def __post_init__(self):
        if not self.pieces:
            raise InvalidArgumentError("a staircase needs at least one piece")
        pieces = []
        for lo, hi, level in self.pieces:
            if not 0.0 <= lo <= hi <= 1.0:
                raise InvalidArgumentError("staircase pieces must lie inside [0, 1]")
            if not 0.0 < level <= 1.0 + _MAX_TOL:
                raise InvalidArgumentError("staircase levels must lie in (0, 1]")
            pieces.append((float(lo), float(hi), float(level)))
        self.pieces = tuple(pieces)
        self.arity = 1
        self.max_value = max(p[2] for p in self.pieces)

    @property
    def levels(self) -> np.ndarray:
        """Distinct positive levels, ascending."""
        return np.unique([p[2] for p in self.pieces])

    def eval_many(self, cs):
        c = cs[:, 0]
        out = np.zeros_like(c)
        unset = np.ones(c.shape, dtype=bool)
        for lo, hi, level in self.pieces:
            hit = unset & (c >= lo) & (c <= hi)
            out[hit] = level
            unset &= ~hit
        return out

    def rescaled(self, factor):
        return StaircaseFunction(tuple((lo, hi, lvl * factor) for lo, hi, lvl in self.pieces))


@dataclass
class PiecewiseLinearFunction(ClassFunction):
    """Linear interpolation between (c, w) knots; zero outside the knot range."""

    knots: tuple = ()

    def __post_init__(self):
        knots = [(float(c), float(w)) for c, w in self.knots]
        if len(knots) < 2:
            raise InvalidArgumentError("a piecewise-linear function needs >= 2 knots")
        cs = np.array([c for c, _ in knots])
        ws = np.array([w for _, w in knots])
        if np.any(np.diff(cs) <= 0):
            raise InvalidArgumentError("knot positions must be strictly increasing")
        if np.any(cs < 0) or np.any(cs > 1) or np.any(ws < 0) or np.any(ws > 1 + _MAX_TOL):
            raise InvalidArgumentError("knots must lie in [0, 1] x [0, 1]")
        self.knots = tuple(knots)
        self._cs = cs
        self._ws = ws
        self.arity = 1
        self.max_value = float(ws.max())

    def eval_many(self, cs):
        c = cs[:, 0]
        out = np.interp(c, self._cs, self._ws, left=0.0, right=0.0)
        # np.interp extends the end values; restore them inside the range.
        out = np.where((c >= self._cs[0]) & (c <= self._cs[-1]), out, 0.0)
        return out

    def rescaled(self, factor):
        return PiecewiseLinearFunction(tuple((c, w * factor) for c, w in self.knots))


@dataclass
class Class:
    """One optimization objective: a class function plus a target density."""

    func: ClassFunction
    target: TargetDensity
    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0.0:
            raise InvalidArgumentError("class weights must be positive")


@dataclass
class ClassConfig:
    """A weighted set of classes sharing one class-coordinate arity.

    Weights are normalized to sum to one. Functions whose maximum falls short
    of one are rescaled (with a warning) so that threshold draws on [0, max)
    carry the intended subclass weights.
    """

    classes: list = field(default_factory=list)
    arity: int = 1

    def __post_init__(self):
        if not self.classes:
            raise InvalidArgumentError("a class configuration must not be empty")
        for cl in self.classes:
            if cl.func.arity != self.arity:
                raise InvalidArgumentError(
                    f"class function arity {cl.func.arity} != config arity {self.arity}"
                )
        total = sum(cl.weight for cl in self.classes)
        rescaled = []
        for cl in self.classes:
            func = cl.func
            if func.max_value < 1.0 - 1e-9:
                warnings.warn(
                    f"class function max {func.max_value:.6g} < 1; rescaling to reach 1",
                    stacklevel=2,
                )
                func = func.rescaled(1.0 / func.max_value)
            rescaled.append(Class(func, cl.target, cl.weight / total))
        self.classes = rescaled
        self._cum_weights = np.cumsum([cl.weight for cl in self.classes])

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def weights(self) -> np.ndarray:
        return np.array([cl.weight for cl in self.classes])


def filter_points(pset: ExtendedPointSet, func: ClassFunction, z: float) -> np.ndarray:
    """Indices i with func(class_coord_i) > z, ascending; strict inequality.

    Raises EmptySelectionError when no point qualifies (including any
    z >= max over the points' actual function values); the optimizer treats
    that as a wasted draw and resamples.
    """
    if z < 0.0:
        raise InvalidArgumentError(f"threshold must be >= 0, got {z}")
    values = func(pset.class_coords)
    idx = np.nonzero(values > z)[0]
    if idx.size == 0:
        raise EmptySelectionError(f"threshold {z} selects no points")
    return idx


def select_class(config: ClassConfig, rng: np.random.Generator) -> int:
    """Draw a class index with probability proportional to its weight."""
    u = rng.random() * config._cum_weights[-1]
    return int(np.searchsorted(config._cum_weights, u, side="right").clip(0, config.n_classes - 1))


def sample_threshold(func: ClassFunction, rng: np.random.Generator) -> float:
    """Draw a threshold uniformly on [0, max_value).

    For piecewise-constant functions the induced subset distribution visits
    each level band with probability proportional to the gap below it, which
    is exactly the subclass weighting the function shape encodes.
    """
    if func.max_value <= 0.0:
        raise InvalidArgumentError("cannot threshold a function with non-positive maximum")
    return float(rng.random() * func.max_value)


# ---------------------------------------------------------------------------
# Configuration files and named presets
# ---------------------------------------------------------------------------

PRESET_NAMES = ("three-class", "seven-class-rgb", "cmyk15", "progressive", "continuous-split")

PRESET_SUMMARIES = {
    "three-class": "two mirrored staircase classes: each half plus the union",
    "seven-class-rgb": "three index thirds and all their unions (7 classes)",
    "cmyk15": "CMYK stippling classes from an image (use the stipple command)",
    "progressive": "single staircase selecting power-of-2 prefixes; progressive(k) sets levels",
    "continuous-split": "two linear ramps: every index split is an objective",
}


def three_class_config(dim: int) -> ClassConfig:
    """Two mirrored staircases on the index line (levels 1/3 and 1).

    Thresholds below 1/3 select the union, above it one half, so each half
    and the union all carry equal optimization priority.
    """
    u = uniform_density(dim)
    red = StaircaseFunction(((0.0, 0.5, 1.0), (0.5, 1.0, 1.0 / 3.0)))
    blue = StaircaseFunction(((0.0, 0.5, 1.0 / 3.0), (0.5, 1.0, 1.0)))
    return ClassConfig([Class(red, u, 0.5), Class(blue, u, 0.5)])


def seven_class_rgb_config(dim: int) -> ClassConfig:
    """Index thirds R, G, B and their four unions, seven equal-weight classes."""
    u = uniform_density(dim)
    thirds = [(0.0, 1.0 / 3.0), (1.0 / 3.0, 2.0 / 3.0), (2.0 / 3.0, 1.0)]
    subsets = [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]
    classes = []
    for subset in subsets:
        pieces = tuple((thirds[j][0], thirds[j][1], 1.0) for j in subset)
        classes.append(Class(StaircaseFunction(pieces), u, 1.0))
    return ClassConfig(classes)


def continuous_split_config(dim: int) -> ClassConfig:
    """Two opposing linear ramps: every prefix and every suffix is a subclass."""
    u = uniform_density(dim)
    down = PiecewiseLinearFunction(((0.0, 1.0), (1.0, 0.0)))
    up = PiecewiseLinearFunction(((0.0, 0.0), (1.0, 1.0)))
    return ClassConfig([Class(down, u, 0.5), Class(up, u, 0.5)])


def parse_preset(name: str, dim: int, n: int | None = None) -> ClassConfig:
    """Build a named preset configuration.

    ``progressive`` accepts an optional level count as ``progressive(k)`` or
    ``progressive:k`` (default 4); it needs the point count ``n`` to validate
    the prefix sizes.
    """
    from .applications import progressive_config  # cycle: applications uses this module

    base = name.split("(")[0].split(":")[0]
    if base == "three-class":
        return three_class_config(dim)
    if base == "seven-class-rgb":
        return seven_class_rgb_config(dim)
    if base == "continuous-split":
        return continuous_split_config(dim)
    if base == "progressive":
        k = 4
        rest = name[len(base):].strip("():")
        if rest:
            k = int(rest)
        if n is None:
            raise InvalidArgumentError("the progressive preset needs a point count")
        return progressive_config(k, n, dim)
    if base == "cmyk15":
        raise InvalidArgumentError("the cmyk15 preset needs an input image; use the stipple command")
    raise InvalidArgumentError(f"unknown preset {name!r}; known: {', '.join(PRESET_NAMES)}")


def load_config(path, dim: int, n: int | None = None) -> ClassConfig:
    """Load a JSON class configuration file.

    Schema: {"classes": [{"weight": w, "target": "uniform"|<pgm path>,
    "func": {"type": "box"|"staircase"|"ramp"|"trapezoid", ...}}]}.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    entries = doc.get("classes")
    if not entries:
        raise InvalidArgumentError(f"config {path} declares no classes")
    classes = [
        Class(_parse_func(e.get("func", {})), _parse_target(e.get("target", "uniform"), dim),
              float(e.get("weight", 1.0)))
        for e in entries
    ]
    return ClassConfig(classes)


def resolve_config(spec: str, dim: int, n: int | None = None) -> ClassConfig:
    """Accept either a preset name or a config file path."""
    base = spec.split("(")[0].split(":")[0]
    if base in PRESET_NAMES:
        return parse_preset(spec, dim, n)
    return load_config(spec, dim, n)


def _parse_target(spec, dim: int) -> TargetDensity:
    if spec == "uniform":
        return uniform_density(dim)
    if isinstance(spec, dict):
        # {"image": path, "invert": bool}; invert maps pixel v to max - v
        return grid_density(load_pgm(spec["image"], invert=bool(spec.get("invert", False))))
    # a plain string is a grayscale image path, pixel value = density weight
    return grid_density(load_pgm(spec))


def _parse_func(doc: dict) -> ClassFunction:
    kind = doc.get("type", "box")
    if kind == "box":
        return BoxFunction(float(doc.get("lo", 0.0)), float(doc.get("hi", 1.0)))
    if kind == "staircase":
        return StaircaseFunction(tuple(tuple(p) for p in doc["pieces"]))
    if kind == "ramp":
        return PiecewiseLinearFunction(tuple(tuple(k) for k in doc["knots"]))
    if kind == "trapezoid":
        lo, hi = float(doc["lo"]), float(doc["hi"])
        ramp = float(doc.get("ramp", 0.1))
        knots = ((max(lo - ramp, 0.0), 0.0), (lo, 1.0), (hi, 1.0), (min(hi + ramp, 1.0), 0.0))
        # drop duplicate positions at the domain edges
        uniq = []
        for c, w in knots:
            if not uniq or c > uniq[-1][0]:
                uniq.append((c, w))
            else:
                uniq[-1] = (c, max(uniq[-1][1], w))
        return PiecewiseLinearFunction(tuple(uniq))
    raise InvalidArgumentError(f"unknown class function type {kind!r}")
